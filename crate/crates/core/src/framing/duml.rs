//! The 0x55-delimited envelope: `[0x55][len][body..][crc lo][crc hi]`.
//!
//! `len` counts body bytes only. The trailer is the Kermit CRC over the
//! delimiter, the length byte and the body, stored little-endian.

use super::crc::{crc16_kermit, CrcConfig};
use super::FramingError;

pub const DUML_DELIMITER: u8 = 0x55;
/// Delimiter, length byte and two CRC bytes.
pub const DUML_OVERHEAD: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumlFrame {
    pub body: Vec<u8>,
    pub crc16: u16,
}

impl DumlFrame {
    /// Wraps `body` and computes a fresh trailer.
    pub fn new(body: Vec<u8>, cfg: CrcConfig) -> Result<Self, FramingError> {
        if body.len() > u8::MAX as usize {
            return Err(FramingError::BodyTooLong(body.len()));
        }
        let mut head = vec![DUML_DELIMITER, body.len() as u8];
        head.extend_from_slice(&body);
        let crc16 = crc16_kermit(&head, cfg);
        Ok(DumlFrame { body, crc16 })
    }

    pub fn length(&self) -> u8 {
        self.body.len() as u8
    }

    pub fn wire_len(&self) -> usize {
        self.body.len() + DUML_OVERHEAD
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(DUML_DELIMITER);
        out.push(self.length());
        out.extend_from_slice(&self.body);
        out.extend_from_slice(&self.crc16.to_le_bytes());
        out
    }

    /// Parses a complete frame and verifies its trailer.
    pub fn decode(bytes: &[u8], cfg: CrcConfig) -> Result<Self, FramingError> {
        if bytes.len() < DUML_OVERHEAD {
            return Err(FramingError::BadLength {
                expected: DUML_OVERHEAD,
                actual: bytes.len(),
            });
        }
        if bytes[0] != DUML_DELIMITER {
            return Err(FramingError::BadDelimiter(bytes[0]));
        }
        let body_len = bytes[1] as usize;
        if bytes.len() != body_len + DUML_OVERHEAD {
            return Err(FramingError::BadLength {
                expected: body_len + DUML_OVERHEAD,
                actual: bytes.len(),
            });
        }
        let split = bytes.len() - 2;
        let stored = u16::from_le_bytes([bytes[split], bytes[split + 1]]);
        let computed = crc16_kermit(&bytes[..split], cfg);
        if stored != computed {
            return Err(FramingError::CrcMismatch { stored, computed });
        }
        Ok(DumlFrame {
            body: bytes[2..split].to_vec(),
            crc16: stored,
        })
    }
}

/// True when `bytes` is a well-formed envelope under `cfg`.
pub fn is_valid_duml(bytes: &[u8], cfg: CrcConfig) -> bool {
    DumlFrame::decode(bytes, cfg).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode() {
        let cfg = CrcConfig::default();
        let frame = DumlFrame::new(vec![1, 2, 3, 4, 5], cfg).unwrap();
        let wire = frame.encode();
        assert_eq!(wire[0], 0x55);
        assert_eq!(wire[1], 5);
        assert_eq!(wire.len(), 9);
        assert_eq!(DumlFrame::decode(&wire, cfg).unwrap(), frame);
    }

    #[test]
    fn wrong_seed_is_rejected() {
        let frame = DumlFrame::new(vec![9; 20], CrcConfig::default()).unwrap();
        let err = DumlFrame::decode(&frame.encode(), CrcConfig::kermit(0)).unwrap_err();
        assert!(matches!(err, FramingError::CrcMismatch { .. }));
    }

    #[test]
    fn length_byte_must_match() {
        let cfg = CrcConfig::default();
        let mut wire = DumlFrame::new(vec![0; 8], cfg).unwrap().encode();
        wire[1] = 9;
        assert!(matches!(
            DumlFrame::decode(&wire, cfg),
            Err(FramingError::BadLength { .. })
        ));
        wire[0] = 0x54;
        assert!(matches!(
            DumlFrame::decode(&wire, cfg),
            Err(FramingError::BadDelimiter(0x54))
        ));
    }
}
