use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::captureio::CaptureRecord;
use crate::linkproto::classify_frame;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLengthHistogram {
    /// wire_length -> occurrences
    pub counts: BTreeMap<usize, usize>,
}

impl FrameLengthHistogram {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Lengths by decreasing count (ties: smaller length first).
    pub fn ranked(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.counts.iter().map(|(&l, &c)| (l, c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }
}

/// Counts UDP data frames by payload length. Works on raw captures (length
/// inferred from frame size) and on decrypted ones alike.
pub fn length_histogram(capture: &[CaptureRecord]) -> FrameLengthHistogram {
    let mut h = FrameLengthHistogram::default();
    for r in capture {
        if let Some(f) = classify_frame(&r.frame, r.channel, None, r.is_decrypted()) {
            if f.wire_length > 0 {
                *h.counts.entry(f.wire_length).or_default() += 1;
            }
        }
    }
    h
}

/// Most frequent length; ties go to the smaller length.
pub fn dominant_length(hist: &FrameLengthHistogram) -> Result<usize, AnalysisError> {
    hist.ranked().first().map(|x| x.0).ok_or(AnalysisError::EmptyHistogram)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(pairs: &[(usize, usize)]) -> FrameLengthHistogram {
        FrameLengthHistogram {
            counts: pairs.iter().copied().collect(),
        }
    }

    #[test]
    fn table_counts_pick_0x3c() {
        let h = hist(&[
            (0x40, 4),
            (0x3c, 1047),
            (0x56, 299),
            (0x5d, 1),
            (0x22, 31),
            (0xa4, 3),
            (0x70, 3),
            (0x3d, 6),
            (0x57, 1),
        ]);
        assert_eq!(dominant_length(&h).unwrap(), 0x3c);
        assert_eq!(h.ranked()[1].0, 0x56);
    }

    #[test]
    fn tie_and_empty() {
        assert_eq!(dominant_length(&hist(&[(60, 5), (86, 5)])).unwrap(), 60);
        assert_eq!(dominant_length(&hist(&[(7, 1)])).unwrap(), 7);
        assert_eq!(dominant_length(&hist(&[])), Err(AnalysisError::EmptyHistogram));
        assert_eq!(length_histogram(&[]).total(), 0);
    }
}
