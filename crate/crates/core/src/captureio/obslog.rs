//! Observation logs: one `{"t": seconds, "maneuver": label}` object per line.

use std::path::Path;

use super::{write_atomic, CaptureError};
use crate::simworld::ObservationEvent;

pub fn render_observations(events: &[ObservationEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("observation serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_observations(text: &str) -> Result<Vec<ObservationEvent>, CaptureError> {
    let mut events: Vec<ObservationEvent> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: ObservationEvent = serde_json::from_str(line).map_err(|err| CaptureError::BadObservation {
            line: i + 1,
            msg: err.to_string(),
        })?;
        if events.last().is_some_and(|p| p.t > e.t) {
            return Err(CaptureError::BadObservation {
                line: i + 1,
                msg: "timestamps go backwards".into(),
            });
        }
        events.push(e);
    }
    Ok(events)
}

pub fn write_observations(path: impl AsRef<Path>, events: &[ObservationEvent]) -> Result<usize, CaptureError> {
    write_atomic(path.as_ref(), render_observations(events).as_bytes())?;
    Ok(events.len())
}

pub fn read_observations(path: impl AsRef<Path>) -> Result<Vec<ObservationEvent>, CaptureError> {
    parse_observations(&std::fs::read_to_string(path)?)
}
