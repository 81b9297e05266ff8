use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::{LinkError, MacAddr};
use crate::wepcrypt::WepKey;

/// Channels the radio can tune: 2.4 GHz 1–14 and the 5 GHz UNII set.
pub const VALID_CHANNELS: [u8; 39] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 36, 40, 44, 48, 52, 56, 60, 64, 100, 104, 108, 112, 116, 120, 124,
    128, 132, 136, 140, 144, 149, 153, 157, 161, 165,
];

pub fn is_valid_channel(ch: u8) -> bool {
    VALID_CHANNELS.contains(&ch)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub channel: u8,
    pub width_mhz: u8,
    pub drone_ip: Ipv4Addr,
    pub rc_ip: Ipv4Addr,
    pub drone_mac: MacAddr,
    pub rc_mac: MacAddr,
    pub wep_key: WepKey,
    pub beacon_interval_ms: u64,
    pub peer_timeout_ms: u64,
    pub ssid_hidden: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            channel: 149,
            width_mhz: 5,
            drone_ip: Ipv4Addr::new(192, 168, 2, 1),
            rc_ip: Ipv4Addr::new(192, 168, 2, 2),
            drone_mac: MacAddr([0x60, 0x60, 0x1f, 0xaa, 0xbb, 0x01]),
            rc_mac: MacAddr([0x60, 0x60, 0x1f, 0xaa, 0xbb, 0x02]),
            wep_key: WepKey::new(&[0x1a, 0x2b, 0x3c, 0x4d, 0x5e]).expect("5-byte key"),
            beacon_interval_ms: 100,
            peer_timeout_ms: 1000,
            ssid_hidden: true,
        }
    }
}

impl LinkConfig {
    /// The drone starts the ad hoc network, so its address is the BSSID.
    pub fn bssid(&self) -> MacAddr {
        self.drone_mac
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: &str| Err(LinkError::InvalidConfig(m.to_string()));
        if !is_valid_channel(self.channel) {
            return bad(&format!("channel {} does not exist", self.channel));
        }
        if self.beacon_interval_ms == 0 || self.beacon_interval_ms >= self.peer_timeout_ms {
            return bad("beacon interval must be positive and shorter than the peer timeout");
        }
        if self.drone_ip == self.rc_ip {
            return bad("drone and controller share an IP address");
        }
        if self.drone_mac == self.rc_mac {
            return bad("drone and controller share a MAC address");
        }
        Ok(())
    }
}
