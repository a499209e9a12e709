//! iBeacon advertising payload codec.
//!
//! Beacons broadcast connection-less GAP advertising data of at most 31
//! bytes. The iBeacon layout inside that budget is fixed at 30 bytes:
//!
//! ```text
//! offset  bytes  content
//! 0..3    02 01 06      flags AD structure
//! 3..5    1A FF         manufacturer-specific AD, length 26
//! 5..7    4C 00         Apple company identifier (0x004C, little-endian)
//! 7..9    02 15         iBeacon type, remaining length 21
//! 9..25   UUID          proximity UUID, as-is
//! 25..27  major         big-endian u16
//! 27..29  minor         big-endian u16
//! 29      power         calibrated RSSI at 1 m, two's-complement dBm
//! ```
//!
//! The decoder accepts trailing bytes after offset 30, since GAP payloads
//! may pad up to the 31-byte limit.

use thiserror::Error;

/// GAP advertising data never exceeds 31 bytes.
pub const ADV_DATA_MAX_LEN: usize = 31;
/// Encoded iBeacon advertising data is always 30 bytes.
pub const IBEACON_ADV_LEN: usize = 30;

const FLAGS_AD: [u8; 3] = [0x02, 0x01, 0x06];
const MANUF_AD_LEN: u8 = 0x1A;
const MANUF_AD_TYPE: u8 = 0xFF;
const APPLE_COMPANY_ID: [u8; 2] = [0x4C, 0x00];
const BEACON_TYPE: u8 = 0x02;
const BEACON_DATA_LEN: u8 = 0x15;

const UUID_OFFSET: usize = 9;
const MAJOR_OFFSET: usize = 25;
const MINOR_OFFSET: usize = 27;
const POWER_OFFSET: usize = 29;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("advertising data is {len} bytes, GAP limit is {ADV_DATA_MAX_LEN}")]
    AdvertisementTooLong { len: usize },
    #[error("buffer too short for an iBeacon: need {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("not an iBeacon advertisement: unexpected byte {found:#04x} at offset {offset}")]
    NotIBeacon { offset: usize, found: u8 },
    #[error("inconsistent AD length field at offset {offset}: expected {expected:#04x}, got {found:#04x}")]
    BadLength {
        offset: usize,
        expected: u8,
        found: u8,
    },
    #[error("invalid UUID string: {reason}")]
    BadUuid { reason: String },
}

/// Decoded iBeacon advertising fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IBeaconPayload {
    pub proximity_uuid: [u8; 16],
    pub major: u16,
    pub minor: u16,
    /// Calibrated RSSI at one meter, in dBm.
    pub measured_power: i8,
}

/// Raw advertising bytes plus the RSSI the radio reported for the packet.
///
/// `rx_rssi` is reception metadata; it is never serialized into the
/// advertisement itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAdvertisement {
    bytes: Vec<u8>,
    pub rx_rssi: i32,
}

impl RawAdvertisement {
    pub fn new(bytes: Vec<u8>, rx_rssi: i32) -> Result<Self, CodecError> {
        if bytes.len() > ADV_DATA_MAX_LEN {
            return Err(CodecError::AdvertisementTooLong { len: bytes.len() });
        }
        Ok(Self { bytes, rx_rssi })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Encode a payload into the 30-byte advertising-data layout.
///
/// Every representable payload encodes; the output is deterministic.
pub fn encode_ibeacon(payload: &IBeaconPayload) -> [u8; IBEACON_ADV_LEN] {
    let mut out = [0u8; IBEACON_ADV_LEN];
    out[..3].copy_from_slice(&FLAGS_AD);
    out[3] = MANUF_AD_LEN;
    out[4] = MANUF_AD_TYPE;
    out[5..7].copy_from_slice(&APPLE_COMPANY_ID);
    out[7] = BEACON_TYPE;
    out[8] = BEACON_DATA_LEN;
    out[UUID_OFFSET..UUID_OFFSET + 16].copy_from_slice(&payload.proximity_uuid);
    out[MAJOR_OFFSET..MAJOR_OFFSET + 2].copy_from_slice(&payload.major.to_be_bytes());
    out[MINOR_OFFSET..MINOR_OFFSET + 2].copy_from_slice(&payload.minor.to_be_bytes());
    out[POWER_OFFSET] = payload.measured_power as u8;
    out
}

/// Decode an iBeacon payload from a received advertisement.
pub fn decode_ibeacon(adv: &RawAdvertisement) -> Result<IBeaconPayload, CodecError> {
    decode_ibeacon_bytes(adv.bytes())
}

/// Decode from raw advertising bytes.
///
/// Succeeds iff the buffer matches the layout above. Bytes beyond offset 30
/// are ignored. Length fields that disagree with the layout report
/// `BadLength`; any other fixed byte that differs reports `NotIBeacon`.
pub fn decode_ibeacon_bytes(bytes: &[u8]) -> Result<IBeaconPayload, CodecError> {
    if bytes.len() < IBEACON_ADV_LEN {
        return Err(CodecError::Truncated {
            expected: IBEACON_ADV_LEN,
            actual: bytes.len(),
        });
    }
    check_length(bytes, 0, FLAGS_AD[0])?;
    check_fixed(bytes, 1, FLAGS_AD[1])?;
    check_fixed(bytes, 2, FLAGS_AD[2])?;
    check_length(bytes, 3, MANUF_AD_LEN)?;
    check_fixed(bytes, 4, MANUF_AD_TYPE)?;
    check_fixed(bytes, 5, APPLE_COMPANY_ID[0])?;
    check_fixed(bytes, 6, APPLE_COMPANY_ID[1])?;
    check_fixed(bytes, 7, BEACON_TYPE)?;
    check_length(bytes, 8, BEACON_DATA_LEN)?;

    let mut uuid = [0u8; 16];
    uuid.copy_from_slice(&bytes[UUID_OFFSET..UUID_OFFSET + 16]);
    let major = u16::from_be_bytes([bytes[MAJOR_OFFSET], bytes[MAJOR_OFFSET + 1]]);
    let minor = u16::from_be_bytes([bytes[MINOR_OFFSET], bytes[MINOR_OFFSET + 1]]);
    Ok(IBeaconPayload {
        proximity_uuid: uuid,
        major,
        minor,
        measured_power: bytes[POWER_OFFSET] as i8,
    })
}

fn check_fixed(bytes: &[u8], offset: usize, expected: u8) -> Result<(), CodecError> {
    if bytes[offset] != expected {
        return Err(CodecError::NotIBeacon {
            offset,
            found: bytes[offset],
        });
    }
    Ok(())
}

fn check_length(bytes: &[u8], offset: usize, expected: u8) -> Result<(), CodecError> {
    if bytes[offset] != expected {
        return Err(CodecError::BadLength {
            offset,
            expected,
            found: bytes[offset],
        });
    }
    Ok(())
}

/// Format a proximity UUID in the canonical 8-4-4-4-12 form.
pub fn format_uuid(uuid: &[u8; 16]) -> String {
    let h: Vec<String> = uuid.iter().map(|b| format!("{b:02x}")).collect();
    format!(
        "{}-{}-{}-{}-{}",
        h[..4].join(""),
        h[4..6].join(""),
        h[6..8].join(""),
        h[8..10].join(""),
        h[10..].join("")
    )
}

/// Parse a UUID from hex, with or without the canonical dashes.
pub fn parse_uuid(s: &str) -> Result<[u8; 16], CodecError> {
    let hex: String = s.chars().filter(|c| *c != '-').collect();
    if hex.len() != 32 {
        return Err(CodecError::BadUuid {
            reason: format!("expected 32 hex digits, got {}", hex.len()),
        });
    }
    let mut out = [0u8; 16];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| CodecError::BadUuid {
            reason: format!("non-hex digit in {:?}", &hex[2 * i..2 * i + 2]),
        })?;
    }
    Ok(out)
}
