//! Opaque constants lifted from the reference session. The prefix and the
//! trailing "unknown" region of a control packet are never decoded, only
//! carried; the connection initiator is replayed byte for byte.

use std::sync::LazyLock;

use serde::Deserialize;

use super::control::{PREFIX_LEN, UNKNOWN_LEN};

const REFERENCE_JSON: &str = include_str!("../../assets/reference_templates.json");

/// Command table fixture, one row per command: `command,bit47..bit0`.
pub const COMMAND_TABLE_CSV: &str = include_str!("../../assets/command_table.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionTemplates {
    pub control_prefix: [u8; PREFIX_LEN],
    pub control_unknown: [u8; UNKNOWN_LEN],
    pub initiator: Vec<u8>,
    pub telemetry_header: Vec<u8>,
}

#[derive(Deserialize)]
struct RawTemplates {
    control_prefix: String,
    control_unknown: String,
    initiator: String,
    telemetry_header: String,
}

static REFERENCE: LazyLock<SessionTemplates> = LazyLock::new(|| {
    let raw: RawTemplates = serde_json::from_str(REFERENCE_JSON).expect("bundled templates are valid JSON");
    let dec = |s: &str| hex::decode(s).expect("bundled templates are valid hex");
    SessionTemplates {
        control_prefix: dec(&raw.control_prefix).try_into().expect("prefix is 46 bytes"),
        control_unknown: dec(&raw.control_unknown).try_into().expect("unknown region is 6 bytes"),
        initiator: dec(&raw.initiator),
        telemetry_header: dec(&raw.telemetry_header),
    }
});

pub fn reference_templates() -> &'static SessionTemplates {
    &REFERENCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::{is_valid_duml, CrcConfig};

    #[test]
    fn bundled_initiator_is_a_valid_envelope() {
        let t = reference_templates();
        assert_eq!(t.initiator.len(), 0x40);
        assert!(is_valid_duml(&t.initiator, CrcConfig::default()));
        assert_eq!(t.control_prefix[0], 0x55);
    }
}
