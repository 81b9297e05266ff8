//! Deterministic virtual radio medium, drone flight model, maneuver
//! observation and scripted scenarios.

mod kinematics;
mod observe;
mod scenario;
mod world;

pub use kinematics::{kinematics_step, DroneBody, CLIMB_RATE, HORIZONTAL_SPEED, YAW_RATE};
pub use observe::{Maneuver, MotionTracker, ObservationEvent};
pub use scenario::{
    run_scenario, secs_to_us, ArpReplayConfig, LossConfig, ScenarioOutput, ScenarioScript, TimelineStep, AUTO_CHANNELS,
};
pub use world::{
    NodeId, StickTimeline, TapId, World, WorldConfig, WorldScanner, DRONE, INJECT_PHASE_US, RC, RESPONSE_DELAY_US,
    TICK_US,
};

use thiserror::Error;

use crate::linkproto::LinkError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScript(String),
    #[error("no such channel: {0}")]
    NoSuchChannel(u8),
    #[error(transparent)]
    Link(#[from] LinkError),
}
