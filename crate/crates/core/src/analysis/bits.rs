use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::correlate::CorrelationReport;
use super::AnalysisError;
use crate::framing::{altered_bits, AlteredBits, CommandId, MovementField};
use crate::simworld::Maneuver;

/// The stick command an observed maneuver implies. Hover means neutral sticks.
pub fn maneuver_command(m: Maneuver) -> CommandId {
    match m {
        Maneuver::PropellerOn => CommandId::Ready,
        Maneuver::TakeOff | Maneuver::Up => CommandId::FullUp,
        Maneuver::Landing | Maneuver::Down => CommandId::FullDown,
        Maneuver::Forward => CommandId::FullForward,
        Maneuver::Backward => CommandId::FullBackward,
        Maneuver::Left => CommandId::FullFlyLeft,
        Maneuver::Right => CommandId::FullFlyRight,
        Maneuver::RotateLeft => CommandId::FullRotateLeft,
        Maneuver::RotateRight => CommandId::FullRotateRight,
        Maneuver::Hover => CommandId::Idle,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitDiffEntry {
    pub payload: MovementField,
    #[serde(flatten)]
    pub bits: AlteredBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitDiffReport {
    pub baseline: MovementField,
    pub commands: BTreeMap<CommandId, BitDiffEntry>,
}

impl BitDiffReport {
    pub fn get(&self, cmd: CommandId) -> Option<&AlteredBits> {
        self.commands.get(&cmd).map(|e| &e.bits)
    }

    /// Bits cleared relative to the baseline by at least one command.
    pub fn active_low_union(&self) -> Vec<u8> {
        let mut all: Vec<u8> = self
            .commands
            .values()
            .flat_map(|e| e.bits.active_low.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Diffs every associated payload against the idle baseline. The baseline is
/// `idle` when given, otherwise the report's own idle payload.
pub fn derive_bit_table(
    report: &CorrelationReport,
    idle: Option<MovementField>,
) -> Result<BitDiffReport, AnalysisError> {
    let baseline = idle.or(report.idle_payload).ok_or(AnalysisError::MissingIdleBaseline)?;
    let mut commands = BTreeMap::new();
    let mut seen: Vec<Maneuver> = Vec::new();
    for a in &report.associations {
        if seen.contains(&a.maneuver) {
            continue;
        }
        seen.push(a.maneuver);
        let payload = if a.maneuver == Maneuver::Hover {
            baseline
        } else {
            match report.payload_for(a.maneuver) {
                Some(p) => p,
                None => continue,
            }
        };
        let cmd = maneuver_command(a.maneuver);
        // TakeOff and Up (likewise Landing and Down) name the same command
        commands.entry(cmd).or_insert(BitDiffEntry {
            payload,
            bits: altered_bits(payload, baseline),
        });
    }
    Ok(BitDiffReport { baseline, commands })
}
