//! The 60-byte (0x3C) control packet.
//!
//! ```text
//!  0        45 46     51 52     57 58  59
//! +-----------+---------+---------+------+
//! |  prefix   | movement| unknown | CRC  |
//! +-----------+---------+---------+------+
//! ```
//!
//! The CRC covers bytes 0..58 and is stored little-endian.

use super::crc::{crc16_kermit, CrcConfig};
use super::movement::MovementField;
use super::FramingError;

pub const CONTROL_LEN: usize = 0x3C;
pub const PREFIX_LEN: usize = 46;
pub const UNKNOWN_LEN: usize = 6;
pub const MOVEMENT_OFFSET: usize = 46;
pub const UNKNOWN_OFFSET: usize = 52;
pub const CRC_OFFSET: usize = 58;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlPacket {
    pub prefix: [u8; PREFIX_LEN],
    pub movement: MovementField,
    pub unknown: [u8; UNKNOWN_LEN],
    pub crc: u16,
}

pub fn encode_control(
    movement: MovementField,
    prefix: &[u8; PREFIX_LEN],
    unknown: &[u8; UNKNOWN_LEN],
    cfg: CrcConfig,
) -> [u8; CONTROL_LEN] {
    let mut out = [0u8; CONTROL_LEN];
    out[..PREFIX_LEN].copy_from_slice(prefix);
    out[MOVEMENT_OFFSET..UNKNOWN_OFFSET].copy_from_slice(&movement.to_bytes());
    out[UNKNOWN_OFFSET..CRC_OFFSET].copy_from_slice(unknown);
    let crc = crc16_kermit(&out[..CRC_OFFSET], cfg);
    out[CRC_OFFSET..].copy_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_control(pkt: &[u8], cfg: CrcConfig) -> Result<ControlPacket, FramingError> {
    if pkt.len() != CONTROL_LEN {
        return Err(FramingError::BadLength {
            expected: CONTROL_LEN,
            actual: pkt.len(),
        });
    }
    let stored = u16::from_le_bytes([pkt[CRC_OFFSET], pkt[CRC_OFFSET + 1]]);
    let computed = crc16_kermit(&pkt[..CRC_OFFSET], cfg);
    if stored != computed {
        return Err(FramingError::CrcMismatch { stored, computed });
    }
    Ok(ControlPacket {
        prefix: pkt[..PREFIX_LEN].try_into().expect("sliced to length"),
        movement: movement_bytes(pkt),
        unknown: pkt[UNKNOWN_OFFSET..CRC_OFFSET].try_into().expect("sliced to length"),
        crc: stored,
    })
}

/// Reads the movement field without checking the CRC. Callers that only
/// hold plaintext captures (no seed) use this.
pub fn movement_bytes(pkt: &[u8]) -> MovementField {
    let mut m = [0u8; 6];
    m.copy_from_slice(&pkt[MOVEMENT_OFFSET..UNKNOWN_OFFSET]);
    MovementField::from_bytes(m)
}

impl ControlPacket {
    pub fn encode(&self, cfg: CrcConfig) -> [u8; CONTROL_LEN] {
        encode_control(self.movement, &self.prefix, &self.unknown, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::movement::{classify_movement, movement_for, CommandId};
    use crate::framing::templates::reference_templates;
    use proptest::prelude::*;

    #[test]
    fn idle_layout() {
        let t = reference_templates();
        let pkt = encode_control(
            movement_for(CommandId::Idle),
            &t.control_prefix,
            &t.control_unknown,
            CrcConfig::default(),
        );
        assert_eq!(pkt.len(), 60);
        assert_eq!(&pkt[..46], &t.control_prefix[..]);
        assert_eq!(&pkt[46..52], &[0x00, 0x04, 0x20, 0x00, 0x01, 0x08]);
        assert_eq!(&pkt[52..58], &t.control_unknown[..]);
    }

    #[test]
    fn full_up_differs_from_idle_at_four_bits() {
        let t = reference_templates();
        let cfg = CrcConfig::default();
        let idle = encode_control(
            movement_for(CommandId::Idle),
            &t.control_prefix,
            &t.control_unknown,
            cfg,
        );
        let up = encode_control(
            movement_for(CommandId::FullUp),
            &t.control_prefix,
            &t.control_unknown,
            cfg,
        );
        let a = MovementField::from_bytes(idle[46..52].try_into().unwrap());
        let b = MovementField::from_bytes(up[46..52].try_into().unwrap());
        assert_eq!(
            MovementField::from_raw(a.raw() ^ b.raw()).unwrap().set_bits(),
            vec![23, 21, 18, 16]
        );
    }

    #[test]
    fn decode_classifies_and_rejects() {
        let t = reference_templates();
        let cfg = CrcConfig::default();
        let pkt = encode_control(
            movement_for(CommandId::FullRotateRight),
            &t.control_prefix,
            &t.control_unknown,
            cfg,
        );
        let decoded = decode_control(&pkt, cfg).unwrap();
        assert_eq!(classify_movement(decoded.movement), Some(CommandId::FullRotateRight));
        assert_eq!(decoded.encode(cfg), pkt);

        assert!(matches!(
            decode_control(&pkt[..59], cfg),
            Err(FramingError::BadLength {
                expected: 60,
                actual: 59
            })
        ));
        let mut bad = pkt;
        bad[59] ^= 0xff;
        assert!(matches!(
            decode_control(&bad, cfg),
            Err(FramingError::CrcMismatch { .. })
        ));
    }

    #[test]
    fn every_single_bit_corruption_detected() {
        let t = reference_templates();
        let cfg = CrcConfig::default();
        let pkt = encode_control(
            movement_for(CommandId::FullFlyLeft),
            &t.control_prefix,
            &t.control_unknown,
            cfg,
        );
        for bit in 0..CONTROL_LEN * 8 {
            let mut bad = pkt;
            bad[bit / 8] ^= 1 << (bit % 8);
            assert!(decode_control(&bad, cfg).is_err(), "bit {bit}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(idx in 0usize..10, prefix in proptest::array::uniform32(any::<u8>()),
                      tail in proptest::array::uniform14(any::<u8>()),
                      unknown in proptest::array::uniform6(any::<u8>()), seed in any::<u16>()) {
            let mut p = [0u8; PREFIX_LEN];
            p[..32].copy_from_slice(&prefix);
            p[32..].copy_from_slice(&tail);
            let cfg = CrcConfig::kermit(seed);
            let m = movement_for(CommandId::ALL[idx]);
            let pkt = encode_control(m, &p, &unknown, cfg);
            let back = decode_control(&pkt, cfg).unwrap();
            prop_assert_eq!(back.movement, m);
            prop_assert_eq!(back.prefix, p);
            prop_assert_eq!(back.unknown, unknown);
        }
    }
}
