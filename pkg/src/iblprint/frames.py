"""BLE ``ADV_NONCONN_IND`` advertisement PDUs and the GAEN AdvData layout.

Wire layout of the PDU::

    header (2) | AdvA (6) | AdvData (0..31)

and of a GAEN AdvData block (31 bytes)::

    flags (3) | service-UUID block (4) | pseudonym (16) | trailer (8)

The service-UUID block is an AD structure ``len, type, uuid_lo, uuid_hi``;
the UUID is little-endian on the wire, so 0xFD6F appears as ``6F FD``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

GAEN_SERVICE_UUID = 0xFD6F

HEADER_LEN = 2
ADDR_LEN = 6
MAX_ADV_DATA_LEN = 31
MIN_PDU_LEN = HEADER_LEN + ADDR_LEN
MAX_PDU_LEN = MIN_PDU_LEN + MAX_ADV_DATA_LEN

FLAGS_LEN = 3
UUID_BLOCK_LEN = 4
PSEUDONYM_LEN = 16
TRAILER_LEN = 8
GAEN_ADV_DATA_LEN = FLAGS_LEN + UUID_BLOCK_LEN + PSEUDONYM_LEN + TRAILER_LEN

DEFAULT_FLAGS = bytes([0x02, 0x01, 0x1A])
DEFAULT_UUID_HEADER = bytes([0x03, 0x03])
# PDU type 0x2 (ADV_NONCONN_IND), TxAdd random; length of AdvA + AdvData
DEFAULT_HEADER = bytes([0x42, ADDR_LEN + GAEN_ADV_DATA_LEN])

_MAC_RE = re.compile(r"^[0-9A-Fa-f]{2}(:[0-9A-Fa-f]{2}){5}$")


class FrameError(ValueError):
    """Base class for advertisement parsing failures."""


class TooShort(FrameError):
    """PDU shorter than header + AdvA."""


class TooLong(FrameError):
    """AdvData exceeds 31 bytes."""


@dataclass(frozen=True, order=True)
class MacAddress:
    """48-bit device address; ``str()`` gives ``AA:BB:CC:DD:EE:FF``."""

    octets: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.octets, bytes) or len(self.octets) != ADDR_LEN:
            raise ValueError("MAC address must be exactly 6 bytes")

    @classmethod
    def parse(cls, text: str) -> MacAddress:
        if not isinstance(text, str) or not _MAC_RE.match(text):
            raise ValueError(f"not a colon-separated MAC address: {text!r}")
        return cls(bytes.fromhex(text.replace(":", "")))

    def __str__(self) -> str:
        return ":".join(f"{b:02X}" for b in self.octets)


@dataclass(frozen=True)
class AdvertisementFrame:
    header: bytes
    adv_address: MacAddress
    adv_data: bytes = b""

    def __post_init__(self) -> None:
        if len(self.header) != HEADER_LEN:
            raise ValueError("header must be exactly 2 bytes")
        if len(self.adv_data) > MAX_ADV_DATA_LEN:
            raise TooLong(f"AdvData is {len(self.adv_data)} bytes (max 31)")


@dataclass(frozen=True)
class GaenPayload:
    flags: bytes
    service_uuid: int
    pseudonym: bytes
    trailer: bytes
    uuid_header: bytes = DEFAULT_UUID_HEADER

    def __post_init__(self) -> None:
        if self.service_uuid != GAEN_SERVICE_UUID:
            raise ValueError("GAEN payloads always carry service UUID 0xFD6F")
        if len(self.flags) != FLAGS_LEN:
            raise ValueError("flags must be 3 bytes")
        if len(self.uuid_header) != 2:
            raise ValueError("uuid_header must be 2 bytes")
        if len(self.pseudonym) != PSEUDONYM_LEN:
            raise ValueError("pseudonym must be 16 bytes")
        if len(self.trailer) != TRAILER_LEN:
            raise ValueError("trailer must be 8 bytes")

    def encode(self) -> bytes:
        return (
            self.flags
            + self.uuid_header
            + self.service_uuid.to_bytes(2, "little")
            + self.pseudonym
            + self.trailer
        )


def parse_advertisement(raw: bytes) -> AdvertisementFrame:
    """Split a raw PDU at its fixed offsets.

    Raises :class:`TooShort` below 8 bytes and :class:`TooLong` when the
    AdvData part is longer than 31 bytes.
    """
    raw = bytes(raw)
    if len(raw) < MIN_PDU_LEN:
        raise TooShort(f"PDU is {len(raw)} bytes, need at least {MIN_PDU_LEN}")
    if len(raw) > MAX_PDU_LEN:
        raise TooLong(f"AdvData is {len(raw) - MIN_PDU_LEN} bytes (max 31)")
    return AdvertisementFrame(
        header=raw[:HEADER_LEN],
        adv_address=MacAddress(raw[HEADER_LEN:MIN_PDU_LEN]),
        adv_data=raw[MIN_PDU_LEN:],
    )


def serialize_advertisement(frame: AdvertisementFrame) -> bytes:
    return frame.header + frame.adv_address.octets + frame.adv_data


def classify_gaen(adv_data: bytes) -> GaenPayload | None:
    """Return the GAEN payload carried by ``adv_data``, or None for other traffic."""
    if len(adv_data) != GAEN_ADV_DATA_LEN:
        return None
    block = adv_data[FLAGS_LEN : FLAGS_LEN + UUID_BLOCK_LEN]
    if int.from_bytes(block[2:4], "little") != GAEN_SERVICE_UUID:
        return None
    start = FLAGS_LEN + UUID_BLOCK_LEN
    return GaenPayload(
        flags=bytes(adv_data[:FLAGS_LEN]),
        service_uuid=GAEN_SERVICE_UUID,
        pseudonym=bytes(adv_data[start : start + PSEUDONYM_LEN]),
        trailer=bytes(adv_data[start + PSEUDONYM_LEN :]),
        uuid_header=bytes(block[:2]),
    )


def gaen_adv_data(pseudonym: bytes, trailer: bytes = bytes(TRAILER_LEN)) -> bytes:
    """Build a 31-byte GAEN AdvData block with default flags."""
    return GaenPayload(DEFAULT_FLAGS, GAEN_SERVICE_UUID, pseudonym, trailer).encode()
