//! The active attacker: forging, hijacking, replaying, and the TCP
//! injection relay.

mod forge;
mod hijack;
mod link;
mod relay;
mod replay;
mod target;

pub use forge::{forge_session, ForgedFrames, FrameFactory, Heard, DEFAULT_ATTACKER_IP, DEFAULT_ATTACKER_MAC};
pub use hijack::{
    hijack, scan_order, Delta, HijackConfig, HijackPlan, HijackReport, PlanStep, StepReport, TakeoverMode,
};
pub use link::{AttackLink, DirectLink, LinkScanner};
pub use relay::{
    read_envelope, relay_send, write_envelope, RelayLink, RelayServer, RelayStats, IDLE_TIMEOUT, MAX_ENVELOPE,
};
pub use replay::{handshake_segment, replay, ReplayResult};
pub use target::{hijack_world, prepare_target, TargetConfig};

use thiserror::Error;

use crate::linkproto::LinkError;
use crate::simworld::SimError;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("could not connect to the drone: {0}")]
    ConnectFailed(String),
    #[error("step {0} had no verified effect")]
    StepUnverified(usize),
    #[error("relay connection lost")]
    ConnectionLost,
    #[error("malformed relay envelope: {0}")]
    MalformedEnvelope(String),
    #[error("replay segment is empty")]
    EmptySegment,
    #[error("invalid replay segment: {0}")]
    InvalidSegment(String),
    #[error("invalid hijack plan: {0}")]
    InvalidPlan(String),
    #[error("capture has no {0}")]
    MissingTemplate(&'static str),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
