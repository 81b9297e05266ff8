use serde::{Deserialize, Serialize};

use super::series::PayloadSeries;
use super::AnalysisError;
use crate::framing::MovementField;
use crate::simworld::{Maneuver, ObservationEvent};

/// Pearson correlation between time and cumulative count:
///
/// ```text
/// r = sum (t_i - t̄)(c_i - c̄) / sqrt( sum (t_i - t̄)^2 * sum (c_i - c̄)^2 )
/// ```
pub fn pearson_points(points: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::DegenerateVariance);
    }
    let n = points.len() as f64;
    let t_bar = points.iter().map(|p| p.0).sum::<f64>() / n;
    let c_bar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stc, mut stt, mut scc) = (0.0, 0.0, 0.0);
    for &(t, c) in points {
        let (dt, dc) = (t - t_bar, c - c_bar);
        stc += dt * dc;
        stt += dt * dt;
        scc += dc * dc;
    }
    if stt == 0.0 || scc == 0.0 {
        return Err(AnalysisError::DegenerateVariance);
    }
    Ok((stc / (stt * scc).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation over the series points with `t` in `[window.0, window.1]`.
pub fn pearson(series: &PayloadSeries, window: (f64, f64)) -> Result<f64, AnalysisError> {
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|p| p.0 >= window.0 - 1e-9 && p.0 <= window.1 + 1e-9)
        .map(|p| (p.0, p.1 as f64))
        .collect();
    pearson_points(&pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    /// Padding added on both sides of the growth window.
    pub pad_s: f64,
    pub threshold: f64,
    /// How far before a maneuver the "before" growth rate is measured.
    pub baseline_s: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        AssociationConfig {
            pad_s: 0.5,
            threshold: 0.9,
            baseline_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub maneuver: Maneuver,
    pub payload: MovementField,
    pub r: f64,
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub associations: Vec<Association>,
    /// Payload most often associated with hovering.
    pub idle_payload: Option<MovementField>,
}

impl CorrelationReport {
    /// Best-supported payload per maneuver: most associations, then
    /// highest mean r.
    pub fn payload_for(&self, maneuver: Maneuver) -> Option<MovementField> {
        let mut tally: Vec<(MovementField, usize, f64)> = Vec::new();
        for a in self.associations.iter().filter(|a| a.maneuver == maneuver) {
            match tally.iter_mut().find(|t| t.0 == a.payload) {
                Some(t) => {
                    t.1 += 1;
                    t.2 += a.r;
                }
                None => tally.push((a.payload, 1, a.r)),
            }
        }
        tally
            .into_iter()
            .max_by(|a, b| {
                a.1.cmp(&b.1)
                    .then((a.2 / a.1 as f64).total_cmp(&(b.2 / b.1 as f64)))
                    .then(b.0.cmp(&a.0))
            })
            .map(|t| t.0)
    }
}

fn growth(s: &PayloadSeries, from: f64, to: f64) -> u64 {
    s.count_at(to) - s.count_at(from)
}

/// For every observed maneuver interval, picks the payload whose counts
/// start growing faster there than just before it and whose growth is most
/// linear over the (padded) interval.
pub fn associate(
    series: &[PayloadSeries],
    observations: &[ObservationEvent],
    cfg: &AssociationConfig,
) -> Result<CorrelationReport, AnalysisError> {
    let end = series
        .iter()
        .filter_map(|s| s.points.last().map(|p| p.0))
        .fold(0.0, f64::max);
    let mut associations = Vec::new();
    for (i, ob) in observations.iter().enumerate() {
        let start = ob.t;
        let stop = observations.get(i + 1).map_or(end, |n| n.t);
        if stop - start <= 0.0 {
            continue;
        }
        let mut best: Option<(f64, MovementField)> = None;
        for s in series {
            let inside = growth(s, start, stop);
            if inside == 0 {
                continue;
            }
            let rate_in = inside as f64 / (stop - start);
            let rate_before = growth(s, start - cfg.baseline_s, start) as f64 / cfg.baseline_s;
            if rate_in <= rate_before {
                continue;
            }
            // end the window at the last bucket edge where the count moved
            let last_growth = s
                .points
                .windows(2)
                .filter(|w| w[1].0 > start && w[1].0 <= stop + cfg.pad_s && w[1].1 > w[0].1)
                .map(|w| w[1].0)
                .fold(start, f64::max);
            let Ok(r) = pearson(s, (start - cfg.pad_s, last_growth + cfg.pad_s)) else {
                continue;
            };
            if r >= cfg.threshold && best.is_none_or(|b| r > b.0) {
                best = Some((r, s.payload));
            }
        }
        if let Some((r, payload)) = best {
            associations.push(Association {
                maneuver: ob.maneuver,
                payload,
                r,
                onset: start,
            });
        }
    }
    if associations.is_empty() {
        return Err(AnalysisError::NoConfidentAssociation);
    }
    let mut report = CorrelationReport {
        associations,
        idle_payload: None,
    };
    report.idle_payload = report.payload_for(Maneuver::Hover);
    Ok(report)
}
