//! Verbatim re-transmission of recorded frames. Nothing on the drone
//! detects duplicates, so an old handshake works as well as a new one.

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::captureio::CaptureRecord;
use crate::linkproto::{classify_frame, FrameKind, MacAddr};
use crate::simworld::{NodeId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub channel: u8,
    pub sent: usize,
    pub first_us: u64,
    pub last_us: u64,
}

/// Schedules every record of `segment` on `radio`, keeping the recorded
/// spacing, with the first frame at `start_us`. The radio transmits on
/// whatever channel it is tuned to. The caller runs the world.
pub fn replay(
    world: &mut World,
    radio: NodeId,
    segment: &[CaptureRecord],
    start_us: u64,
) -> Result<ReplayResult, AttackError> {
    let first = segment.first().ok_or(AttackError::EmptySegment)?;
    if segment.iter().any(|r| r.is_decrypted()) {
        return Err(AttackError::InvalidSegment(
            "decrypted records cannot go back on air".into(),
        ));
    }
    let t0 = first.ts_us;
    let start = start_us.max(world.now_us());
    let mut last = start;
    for r in segment {
        let at = start + r.ts_us.saturating_sub(t0);
        world.transmit_at(radio, at, r.frame.clone());
        last = last.max(at);
    }
    Ok(ReplayResult {
        channel: world.radio_channel(radio),
        sent: segment.len(),
        first_us: start,
        last_us: last,
    })
}

/// Frames sent by `src`, from its first ARP request onwards, for `span_us`.
/// Identification is by size and addresses only, no key needed.
pub fn handshake_segment(
    capture: &[CaptureRecord],
    src: MacAddr,
    span_us: u64,
) -> Result<Vec<CaptureRecord>, AttackError> {
    let from_src: Vec<&CaptureRecord> = capture
        .iter()
        .filter(|r| classify_frame(&r.frame, r.channel, None, r.is_decrypted()).is_some_and(|f| f.src_mac == src))
        .collect();
    let start = from_src
        .iter()
        .find(|r| {
            classify_frame(&r.frame, r.channel, None, r.is_decrypted()).is_some_and(|f| f.kind == FrameKind::ArpRequest)
        })
        .map(|r| r.ts_us)
        .ok_or(AttackError::EmptySegment)?;
    Ok(from_src
        .into_iter()
        .filter(|r| r.ts_us >= start && r.ts_us < start + span_us)
        .cloned()
        .collect())
}
