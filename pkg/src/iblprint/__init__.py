"""Inter-broadcast-latency fingerprinting of GAEN BLE beacons."""

from .anonymity import (
    AnonymityReport,
    Histogram,
    entropy,
    fingerprinting_anonymity,
    histogram,
    max_entropy,
)
from .capture import (
    CaptureRecord,
    PipelineConfig,
    PseudonymTrack,
    build_tracks,
    read_capture,
    read_tracks,
    write_capture,
    write_tracks,
)
from .frames import (
    AdvertisementFrame,
    GaenPayload,
    MacAddress,
    classify_gaen,
    parse_advertisement,
    serialize_advertisement,
)
from .linker import LinkEvaluation, LinkHypothesis, evaluate_links, link_tracks
from .sim import DeviceProfile, GroundTruthEntry, ReceiverModel, simulate, table1_profiles
from .stats import DeviceSummary, TrackSummary, precision_epsilon, summarize_device, summarize_track

__version__ = "0.1.0"
