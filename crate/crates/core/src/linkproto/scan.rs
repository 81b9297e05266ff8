//! Beacon sweep: channel hopping does not hide a drone that keeps
//! beaconing on whatever channel it picked.

use super::dot11::{parse_dot11, Dot11Frame};
use super::LinkError;

/// Two default beacon intervals, so at least one beacon fits in a dwell.
pub const MIN_DWELL_MS: u64 = 200;

/// Something that can listen on a channel for a while.
pub trait ChannelScanner {
    fn listen(&mut self, channel: u8, dwell_ms: u64) -> Vec<Vec<u8>>;
}

/// Drone beacons are IBSS beacons with a hidden SSID, sent by the BSSID
/// owner.
pub fn is_drone_beacon(raw: &[u8]) -> bool {
    matches!(parse_dot11(raw), Dot11Frame::Beacon(b) if b.is_ibss() && b.is_hidden() && b.src == b.bssid)
}

pub fn detect_beacon_channel(
    scanner: &mut dyn ChannelScanner,
    channels: &[u8],
    dwell_ms: u64,
) -> Result<u8, LinkError> {
    if dwell_ms < MIN_DWELL_MS {
        return Err(LinkError::DwellTooShort(dwell_ms));
    }
    for &ch in channels {
        if scanner.listen(ch, dwell_ms).iter().any(|f| is_drone_beacon(f)) {
            return Ok(ch);
        }
    }
    Err(LinkError::NotFound)
}
