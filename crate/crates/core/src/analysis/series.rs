use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::captureio::CaptureRecord;
use crate::framing::{MovementField, MOVEMENT_OFFSET};
use crate::linkproto::classify_frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesConfig {
    pub bucket_s: f64,
    /// Payloads seen fewer times than this are dropped as noise.
    pub noise_floor: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            bucket_s: 0.5,
            noise_floor: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadSeries {
    pub payload: MovementField,
    /// (t seconds, cumulative count of frames sent before t)
    pub points: Vec<(f64, u64)>,
}

impl PayloadSeries {
    pub fn total(&self) -> u64 {
        self.points.last().map_or(0, |p| p.1)
    }

    /// Cumulative count at the last bucket edge not after `t`.
    pub fn count_at(&self, t: f64) -> u64 {
        self.points
            .iter()
            .take_while(|p| p.0 <= t + 1e-9)
            .last()
            .map_or(0, |p| p.1)
    }
}

/// One cumulative-count series per distinct movement value among decrypted
/// UDP payloads of `length` bytes, sampled at every bucket edge from 0
/// through the first edge past the last frame.
pub fn build_series(
    capture: &[CaptureRecord],
    length: usize,
    cfg: &SeriesConfig,
) -> Result<Vec<PayloadSeries>, AnalysisError> {
    let mut hits: BTreeMap<MovementField, Vec<u64>> = BTreeMap::new();
    let mut first_seen: BTreeMap<MovementField, u64> = BTreeMap::new();
    let mut last_ts = 0u64;
    if length < MOVEMENT_OFFSET + MovementField::LEN {
        return Err(AnalysisError::NoMatchingFrames(length));
    }
    for r in capture.iter().filter(|r| r.is_decrypted()) {
        let Some(f) = classify_frame(&r.frame, r.channel, None, true) else {
            continue;
        };
        if f.wire_length != length {
            continue;
        }
        let Some(p) = f.udp_payload().filter(|p| p.len() >= MOVEMENT_OFFSET + 6) else {
            continue;
        };
        let bytes: [u8; 6] = p[MOVEMENT_OFFSET..MOVEMENT_OFFSET + 6].try_into().expect("6 bytes");
        let m = MovementField::from_bytes(bytes);
        hits.entry(m).or_default().push(r.ts_us);
        first_seen.entry(m).or_insert(r.ts_us);
        last_ts = last_ts.max(r.ts_us);
    }
    if hits.is_empty() {
        return Err(AnalysisError::NoMatchingFrames(length));
    }
    let bucket_us = (cfg.bucket_s * 1e6).round().max(1.0) as u64;
    let edges = last_ts / bucket_us + 2;
    let mut out: Vec<PayloadSeries> = hits
        .into_iter()
        .filter(|(_, ts)| ts.len() >= cfg.noise_floor)
        .map(|(payload, ts)| {
            let mut points = Vec::with_capacity(edges as usize);
            let mut i = 0;
            for k in 0..edges {
                let edge = k * bucket_us;
                while i < ts.len() && ts[i] < edge {
                    i += 1;
                }
                points.push((edge as f64 / 1e6, i as u64));
            }
            PayloadSeries { payload, points }
        })
        .collect();
    out.sort_by_key(|s| (first_seen[&s.payload], s.payload));
    Ok(out)
}

/// `t,<payload>,<payload>...` rows, one per bucket edge, for plotting.
pub fn series_csv(series: &[PayloadSeries]) -> String {
    let mut s = String::from("t");
    for p in series {
        s.push(',');
        s.push_str(&p.payload.to_hex());
    }
    s.push('\n');
    let rows = series.iter().map(|p| p.points.len()).max().unwrap_or(0);
    for i in 0..rows {
        let t = series
            .iter()
            .find_map(|p| p.points.get(i).map(|x| x.0))
            .unwrap_or_default();
        s.push_str(&format!("{t}"));
        for p in series {
            s.push(',');
            if let Some(x) = p.points.get(i) {
                s.push_str(&x.1.to_string());
            }
        }
        s.push('\n');
    }
    s
}
