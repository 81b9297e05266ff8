//! The passive attacker pipeline: decrypt, filter by length, correlate
//! payload counts with observed maneuvers, and diff bits against Idle.

mod bits;
mod correlate;
mod decrypt;
mod histogram;
mod series;

pub use bits::{derive_bit_table, maneuver_command, BitDiffEntry, BitDiffReport};
pub use correlate::{associate, pearson, pearson_points, Association, AssociationConfig, CorrelationReport};
pub use decrypt::{decrypt_capture, DecryptStats};
pub use histogram::{dominant_length, length_histogram, FrameLengthHistogram};
pub use series::{build_series, series_csv, PayloadSeries, SeriesConfig};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("no decrypted frames of length {0:#x}")]
    NoMatchingFrames(usize),
    #[error("correlation undefined: zero variance or fewer than two points")]
    DegenerateVariance,
    #[error("no payload correlates with any observed maneuver above the threshold")]
    NoConfidentAssociation,
    #[error("no Idle payload among the associations")]
    MissingIdleBaseline,
}
