"""
Parsing a GAEN advertisement
============================

A GAEN beacon is an ADV_NONCONN_IND advertisement whose AdvData carries the
service UUID 0xFD6F and a 16-byte rolling pseudonym.
"""

from iblprint.frames import (
    AdvertisementFrame,
    MacAddress,
    classify_gaen,
    gaen_adv_data,
    parse_advertisement,
    serialize_advertisement,
)

# Build a frame: 2-byte header, random-looking address, 31-byte GAEN AdvData.
pseudonym = bytes.fromhex("00112233445566778899aabbccddeeff")
frame = AdvertisementFrame(
    header=bytes([0x42, 37]),
    adv_address=MacAddress.parse("5D:3A:91:0C:7E:22"),
    adv_data=gaen_adv_data(pseudonym),
)
raw = serialize_advertisement(frame)
print(len(raw), "bytes on air:", raw.hex())

# Parsing inverts serialization exactly.
back = parse_advertisement(raw)
assert back == frame

payload = classify_gaen(back.adv_data)
print("service UUID 0x%04X, pseudonym %s" % (payload.service_uuid, payload.pseudonym.hex()))

# Anything else (wrong length or service) is simply not GAEN.
print(classify_gaen(bytes.fromhex("0201060303" "0f18")))
