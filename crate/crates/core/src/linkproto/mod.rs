//! Drone and remote-controller link state machines, plus the 802.11 and
//! IP/UDP/ARP framing they speak.

mod config;
mod dot11;
mod drone;
mod frame;
mod mac;
mod payload;
mod rc;
mod scan;
mod station;
mod telemetry;

pub use config::{is_valid_channel, LinkConfig, VALID_CHANNELS};
pub use dot11::{
    encode_ack, encode_beacon, encode_data, ibss_capability, parse_dot11, Beacon, DataHeader, Dot11Frame,
    DOT11_DATA_HEADER_LEN,
};
pub use drone::{
    DeliveredControl, DroneLinkState, DroneOutput, DroneStatus, LedColor, PeerSession, PeerState, MAX_PEERS,
};
pub use frame::{classify_frame, FrameKind, LinkFrame, INITIATOR_LEN};
pub use mac::MacAddr;
pub use payload::{
    arp_msdu, build_ipv4_udp, parse_arp, parse_msdu, ArpOp, ArpPacket, Msdu, ARP_MSDU_LEN, CONTROL_PORT, ETHERTYPE_ARP,
    ETHERTYPE_IPV4, LLC_SNAP_LEN, UDP_MSDU_OVERHEAD,
};
pub use rc::{RcLinkState, RcPhase};
pub use scan::{detect_beacon_channel, is_drone_beacon, ChannelScanner, MIN_DWELL_MS};
pub use station::{IvSource, Station};
pub use telemetry::{filler_payload, Telemetry, TELEMETRY_LEN};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("invalid link config: {0}")]
    InvalidConfig(String),
    #[error("no drone beacon found on any scanned channel")]
    NotFound,
    #[error("dwell of {0} ms is shorter than two beacon intervals")]
    DwellTooShort(u64),
    #[error("bad MAC address {0:?}")]
    BadMac(String),
}

/// Events fed to the link state machines.
#[derive(Debug, Clone, Copy)]
pub enum LinkEvent<'a> {
    Tick,
    /// A raw 802.11 frame heard on the node's channel.
    Frame(&'a [u8]),
}
