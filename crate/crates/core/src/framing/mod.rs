//! Bit-exact encoding of the DUML envelope and the 0x3C control packet.

mod control;
mod crc;
mod duml;
mod movement;
mod templates;

pub use control::{
    decode_control, encode_control, movement_bytes, ControlPacket, CONTROL_LEN, CRC_OFFSET, MOVEMENT_OFFSET,
    PREFIX_LEN, UNKNOWN_LEN, UNKNOWN_OFFSET,
};
pub use crc::{crc16_kermit, CrcConfig, DUML_SEED, KERMIT_POLY};
pub use duml::{is_valid_duml, DumlFrame, DUML_DELIMITER, DUML_OVERHEAD};
pub use movement::{
    altered_bits, classify_movement, movement_for, AlteredBits, CommandId, MovementField, ACTIVE_LOW_BITS,
    STATIC_ZERO_BITS,
};
pub use templates::{reference_templates, SessionTemplates, COMMAND_TABLE_CSV};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FramingError {
    #[error("bad length: expected {expected} bytes, got {actual}")]
    BadLength { expected: usize, actual: usize },
    #[error("crc mismatch: stored {stored:#06x}, computed {computed:#06x}")]
    CrcMismatch { stored: u16, computed: u16 },
    #[error("expected 0x55 delimiter, found {0:#04x}")]
    BadDelimiter(u8),
    #[error("envelope body of {0} bytes does not fit a one-byte length")]
    BodyTooLong(usize),
    #[error("movement value {0:#x} exceeds 48 bits")]
    MovementOutOfRange(u64),
    #[error("not a 6-byte hex movement: {0:?}")]
    BadHex(String),
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
}
