//! The 48-bit movement field carried at offsets 46..52 of a control packet.
//!
//! Bit 47 is the most significant bit of the first byte; the six bytes are
//! serialized big-endian.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FramingError;

/// Columns that stay zero for every observed command.
pub const STATIC_ZERO_BITS: [u8; 12] = [41, 40, 36, 35, 31, 30, 10, 9, 7, 6, 5, 4];

/// Bits set while the sticks rest at neutral and cleared by a negative deflection.
pub const ACTIVE_LOW_BITS: [u8; 4] = [34, 29, 8, 3];

const MASK_48: u64 = (1 << 48) - 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MovementField(u64);

impl MovementField {
    pub const LEN: usize = 6;

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = 0u64;
        for &b in bits {
            assert!(b < 48, "movement bit index {b} out of range");
            v |= 1 << b;
        }
        MovementField(v)
    }

    pub fn from_raw(raw: u64) -> Result<Self, FramingError> {
        if raw & !MASK_48 != 0 {
            return Err(FramingError::MovementOutOfRange(raw));
        }
        Ok(MovementField(raw))
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn bit(self, index: u8) -> bool {
        index < 48 && (self.0 >> index) & 1 == 1
    }

    /// Set bit indices, highest first.
    pub fn set_bits(self) -> Vec<u8> {
        (0..48u8).rev().filter(|&i| self.bit(i)).collect()
    }

    pub fn from_bytes(bytes: [u8; 6]) -> Self {
        let mut v = 0u64;
        for b in bytes {
            v = (v << 8) | b as u64;
        }
        MovementField(v)
    }

    pub fn to_bytes(self) -> [u8; 6] {
        let mut out = [0u8; 6];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (self.0 >> (8 * (5 - i))) as u8;
        }
        out
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, FramingError> {
        let bytes = hex::decode(s).map_err(|_| FramingError::BadHex(s.to_string()))?;
        let arr: [u8; 6] = bytes.try_into().map_err(|_| FramingError::BadHex(s.to_string()))?;
        Ok(MovementField::from_bytes(arr))
    }
}

impl fmt::Debug for MovementField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MovementField({})", self.to_hex())
    }
}

impl Serialize for MovementField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for MovementField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MovementField::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CommandId {
    Idle,
    FullRotateRight,
    FullRotateLeft,
    FullDown,
    FullUp,
    FullForward,
    FullBackward,
    FullFlyRight,
    FullFlyLeft,
    Ready,
}

impl CommandId {
    pub const ALL: [CommandId; 10] = [
        CommandId::Idle,
        CommandId::FullRotateRight,
        CommandId::FullRotateLeft,
        CommandId::FullDown,
        CommandId::FullUp,
        CommandId::FullForward,
        CommandId::FullBackward,
        CommandId::FullFlyRight,
        CommandId::FullFlyLeft,
        CommandId::Ready,
    ];

    /// Row label used in the command table fixture.
    pub fn short_label(self) -> &'static str {
        match self {
            CommandId::Idle => "I",
            CommandId::FullRotateRight => "FRR",
            CommandId::FullRotateLeft => "FRL",
            CommandId::FullDown => "FD",
            CommandId::FullUp => "FU",
            CommandId::FullForward => "FFW",
            CommandId::FullBackward => "FB",
            CommandId::FullFlyRight => "FFR",
            CommandId::FullFlyLeft => "FFL",
            CommandId::Ready => "RDY",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CommandId::Idle => "Idle",
            CommandId::FullRotateRight => "FullRotateRight",
            CommandId::FullRotateLeft => "FullRotateLeft",
            CommandId::FullDown => "FullDown",
            CommandId::FullUp => "FullUp",
            CommandId::FullForward => "FullForward",
            CommandId::FullBackward => "FullBackward",
            CommandId::FullFlyRight => "FullFlyRight",
            CommandId::FullFlyLeft => "FullFlyLeft",
            CommandId::Ready => "Ready",
        }
    }

    fn set_bits(self) -> &'static [u8] {
        match self {
            CommandId::Idle => &[34, 29, 8, 3],
            CommandId::FullRotateRight => &[34, 29, 13, 11, 8, 3, 2, 0],
            CommandId::FullRotateLeft => &[34, 29, 15, 14, 12, 11, 8, 1],
            CommandId::FullDown => &[34, 29, 22, 20, 19, 17, 16, 3],
            CommandId::FullUp => &[34, 29, 23, 21, 18, 16, 8, 3],
            CommandId::FullForward => &[39, 37, 34, 29, 28, 26, 8, 3],
            CommandId::FullBackward => &[38, 37, 34, 27, 25, 24, 8, 3],
            CommandId::FullFlyRight => &[47, 44, 42, 34, 33, 29, 8, 3],
            CommandId::FullFlyLeft => &[46, 45, 43, 42, 32, 29, 8, 3],
            CommandId::Ready => &[
                46, 45, 43, 42, 38, 37, 32, 27, 25, 24, 22, 20, 19, 17, 16, 13, 11, 3, 2, 0,
            ],
        }
    }
}

impl fmt::Display for CommandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommandId {
    type Err = FramingError;

    /// Accepts the long name, the table label, or a kebab/snake spelling.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        CommandId::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == norm || c.short_label().to_ascii_lowercase() == norm)
            .ok_or_else(|| FramingError::UnknownCommand(s.to_string()))
    }
}

/// The canonical movement pattern for `cmd`.
pub fn movement_for(cmd: CommandId) -> MovementField {
    MovementField::from_bits(cmd.set_bits())
}

/// Exact match against the ten canonical patterns; `None` for anything else.
pub fn classify_movement(m: MovementField) -> Option<CommandId> {
    CommandId::ALL.into_iter().find(|&c| movement_for(c) == m)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlteredBits {
    pub changed: BTreeSet<u8>,
    pub active_low: BTreeSet<u8>,
}

/// Bits that differ from `baseline`; `active_low` are those set in the
/// baseline and cleared in `m`.
pub fn altered_bits(m: MovementField, baseline: MovementField) -> AlteredBits {
    let diff = m.raw() ^ baseline.raw();
    let low = baseline.raw() & !m.raw();
    let collect = |v: u64| (0..48u8).filter(|&i| (v >> i) & 1 == 1).collect();
    AlteredBits {
        changed: collect(diff),
        active_low: collect(low),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(bits: &[u8]) -> BTreeSet<u8> {
        bits.iter().copied().collect()
    }

    #[test]
    fn idle_row() {
        assert_eq!(movement_for(CommandId::Idle).set_bits(), vec![34, 29, 8, 3]);
    }

    #[test]
    fn forward_adds_four_bits_to_idle() {
        let d = altered_bits(movement_for(CommandId::FullForward), movement_for(CommandId::Idle));
        assert_eq!(d.changed, set(&[39, 37, 28, 26]));
        assert!(d.active_low.is_empty());
    }

    #[test]
    fn ready_row() {
        assert_eq!(
            movement_for(CommandId::Ready).set_bits(),
            vec![46, 45, 43, 42, 38, 37, 32, 27, 25, 24, 22, 20, 19, 17, 16, 13, 11, 3, 2, 0]
        );
        let d = altered_bits(movement_for(CommandId::Ready), movement_for(CommandId::Idle));
        assert_eq!(d.changed.len(), 22);
        assert_eq!(d.active_low, set(&[34, 29, 8]));
    }

    #[test]
    fn down_and_backward_diffs() {
        let idle = movement_for(CommandId::Idle);
        let down = altered_bits(movement_for(CommandId::FullDown), idle);
        assert_eq!(down.changed, set(&[22, 20, 19, 17, 16, 8]));
        assert_eq!(down.active_low, set(&[8]));
        let back = altered_bits(movement_for(CommandId::FullBackward), idle);
        assert_eq!(back.changed, set(&[38, 37, 29, 27, 25, 24]));
        assert_eq!(back.active_low, set(&[29]));
        assert_eq!(altered_bits(idle, idle), AlteredBits::default());
    }

    #[test]
    fn classify_is_inverse_and_exact() {
        for c in CommandId::ALL {
            assert_eq!(classify_movement(movement_for(c)), Some(c));
        }
        assert_eq!(classify_movement(MovementField::default()), None);
        let near_idle = MovementField::from_bits(&[34, 29, 8]);
        assert_eq!(classify_movement(near_idle), None);
        let ffl = MovementField::from_bits(&[46, 45, 43, 42, 32, 29, 8, 3]);
        assert_eq!(classify_movement(ffl), Some(CommandId::FullFlyLeft));
    }

    #[test]
    fn static_zero_columns_never_set() {
        for c in CommandId::ALL {
            let m = movement_for(c);
            for b in STATIC_ZERO_BITS {
                assert!(!m.bit(b), "{c} sets static bit {b}");
            }
        }
    }

    #[test]
    fn altered_bit_counts() {
        let idle = movement_for(CommandId::Idle);
        for c in CommandId::ALL {
            if matches!(c, CommandId::Idle | CommandId::Ready) {
                continue;
            }
            let d = altered_bits(movement_for(c), idle);
            match d.active_low.len() {
                0 => assert_eq!(d.changed.len(), 4, "{c}"),
                1 => assert_eq!(d.changed.len(), 6, "{c}"),
                n => panic!("{c} has {n} active-low bits"),
            }
        }
    }

    #[test]
    fn byte_order_is_big_endian() {
        let m = MovementField::from_bits(&[47, 0]);
        assert_eq!(m.to_bytes(), [0x80, 0, 0, 0, 0, 0x01]);
        assert_eq!(MovementField::from_bytes(m.to_bytes()), m);
        assert_eq!(movement_for(CommandId::Idle).to_hex(), "000420000108");
    }

    #[test]
    fn parse_command_names() {
        assert_eq!("FullUp".parse::<CommandId>().unwrap(), CommandId::FullUp);
        assert_eq!("full-fly-left".parse::<CommandId>().unwrap(), CommandId::FullFlyLeft);
        assert_eq!("RDY".parse::<CommandId>().unwrap(), CommandId::Ready);
        assert!("sideways".parse::<CommandId>().is_err());
    }
}
