//! Frame classification: what a monitor (with or without the key) can
//! tell about a raw 802.11 frame.

use serde::{Deserialize, Serialize};

use super::dot11::{parse_dot11, Dot11Frame};
use super::payload::{parse_msdu, ArpOp, Msdu, ARP_MSDU_LEN, UDP_MSDU_OVERHEAD};
use super::MacAddr;
use crate::framing::{decode_control, is_valid_duml, CrcConfig, CONTROL_LEN};
use crate::wepcrypt::{wep_decrypt, Iv, WepFrame, WepKey, ICV_LEN, WEP_HEADER_LEN};

pub const INITIATOR_LEN: usize = 0x40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    Beacon,
    ArpRequest,
    ArpResponse,
    ConnectionInitiator,
    Control,
    Ack,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkFrame {
    pub kind: FrameKind,
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub bssid: MacAddr,
    pub channel: u8,
    /// UDP payload length carried by a data frame; 0 for ARP and
    /// management/control frames.
    pub wire_length: usize,
    /// WEP IV when the frame is still encrypted.
    pub iv: Option<Iv>,
    /// Plaintext MSDU when known (decrypted capture or key supplied).
    pub msdu: Option<Vec<u8>>,
    /// The 802.11 frame body as it appeared.
    pub body: Vec<u8>,
}

impl LinkFrame {
    /// UDP payload when the plaintext is known.
    pub fn udp_payload(&self) -> Option<Vec<u8>> {
        match parse_msdu(self.msdu.as_deref()?) {
            Msdu::Udp { payload, .. } => Some(payload),
            _ => None,
        }
    }
}

fn wire_length_of_msdu(len: usize) -> usize {
    len.saturating_sub(UDP_MSDU_OVERHEAD)
}

/// Classifies a raw frame. `decrypted` says the body is already plaintext
/// (IV and ICV stripped); otherwise `key`, when given, is used to decrypt.
/// Without plaintext, encrypted frames are classified by size alone.
pub fn classify_frame(raw: &[u8], channel: u8, key: Option<&WepKey>, decrypted: bool) -> Option<LinkFrame> {
    let mut f = LinkFrame {
        kind: FrameKind::Other,
        src_mac: MacAddr::ZERO,
        dst_mac: MacAddr::ZERO,
        bssid: MacAddr::ZERO,
        channel,
        wire_length: 0,
        iv: None,
        msdu: None,
        body: Vec::new(),
    };
    match parse_dot11(raw) {
        Dot11Frame::Beacon(b) => {
            f.kind = FrameKind::Beacon;
            f.src_mac = b.src;
            f.dst_mac = MacAddr::BROADCAST;
            f.bssid = b.bssid;
        }
        Dot11Frame::Ack { ra } => {
            f.kind = FrameKind::Ack;
            f.dst_mac = ra;
        }
        Dot11Frame::Data { header, body } => {
            f.src_mac = header.src;
            f.dst_mac = header.dst;
            f.bssid = header.bssid;
            if decrypted || !header.protected {
                f.msdu = Some(body.clone());
            } else {
                let wf = WepFrame::from_bytes(&body).ok()?;
                f.iv = Some(wf.iv);
                if let Some(k) = key {
                    f.msdu = wep_decrypt(k, &wf).ok();
                }
            }
            let msdu_len = match &f.msdu {
                Some(m) => m.len(),
                None => body.len().saturating_sub(WEP_HEADER_LEN + ICV_LEN),
            };
            f.body = body;
            f.kind = match &f.msdu {
                Some(m) => kind_from_plaintext(m),
                None => kind_from_size(msdu_len, f.dst_mac),
            };
            if f.kind != FrameKind::ArpRequest && f.kind != FrameKind::ArpResponse {
                f.wire_length = wire_length_of_msdu(msdu_len);
            }
        }
        Dot11Frame::Other => return None,
    }
    Some(f)
}

fn kind_from_plaintext(msdu: &[u8]) -> FrameKind {
    match parse_msdu(msdu) {
        Msdu::Arp(a) => match a.op {
            ArpOp::Request => FrameKind::ArpRequest,
            ArpOp::Reply => FrameKind::ArpResponse,
        },
        Msdu::Udp { payload, .. } => match payload.len() {
            CONTROL_LEN if decode_control(&payload, CrcConfig::default()).is_ok() => FrameKind::Control,
            INITIATOR_LEN if is_valid_duml(&payload, CrcConfig::default()) => FrameKind::ConnectionInitiator,
            _ => FrameKind::Other,
        },
        Msdu::Other => FrameKind::Other,
    }
}

fn kind_from_size(msdu_len: usize, dst: MacAddr) -> FrameKind {
    if msdu_len == ARP_MSDU_LEN {
        return if dst.is_broadcast() {
            FrameKind::ArpRequest
        } else {
            FrameKind::ArpResponse
        };
    }
    match wire_length_of_msdu(msdu_len) {
        CONTROL_LEN => FrameKind::Control,
        INITIATOR_LEN => FrameKind::ConnectionInitiator,
        _ => FrameKind::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::{encode_control, movement_for, reference_templates, CommandId};
    use crate::linkproto::{IvSource, Station};
    use std::net::Ipv4Addr;

    fn station() -> Station {
        Station::new(
            MacAddr([2, 0, 0, 0, 0, 2]),
            Ipv4Addr::new(192, 168, 2, 2),
            MacAddr([2, 0, 0, 0, 0, 1]),
            WepKey::new(&[1, 2, 3, 4, 5]).unwrap(),
            IvSource::Sequential(0),
        )
    }

    #[test]
    fn size_and_plaintext_classification_agree() {
        let mut s = station();
        let t = reference_templates();
        let ctl = encode_control(
            movement_for(CommandId::Idle),
            &t.control_prefix,
            &t.control_unknown,
            CrcConfig::default(),
        );
        let frames = [
            (
                s.udp(MacAddr([2, 0, 0, 0, 0, 1]), Ipv4Addr::new(192, 168, 2, 1), &ctl),
                FrameKind::Control,
                0x3c,
            ),
            (
                s.udp(MacAddr([2, 0, 0, 0, 0, 1]), Ipv4Addr::new(192, 168, 2, 1), &t.initiator),
                FrameKind::ConnectionInitiator,
                0x40,
            ),
        ];
        let key = s.key().clone();
        for (raw, kind, len) in frames {
            let blind = classify_frame(&raw, 149, None, false).unwrap();
            let keyed = classify_frame(&raw, 149, Some(&key), false).unwrap();
            assert_eq!((blind.kind, blind.wire_length), (kind, len));
            assert_eq!((keyed.kind, keyed.wire_length), (kind, len));
            assert!(keyed.msdu.is_some() && blind.msdu.is_none());
        }
    }

    #[test]
    fn beacon_kind() {
        let raw = station().beacon(0, 100, 149);
        let f = classify_frame(&raw, 149, None, false).unwrap();
        assert_eq!(f.kind, FrameKind::Beacon);
        assert_eq!(f.wire_length, 0);
    }
}
