//! Scripted sessions: the controller follows a stick timeline while a
//! monitor tap records the channel.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::DroneBody;
use super::observe::ObservationEvent;
use super::world::{StickTimeline, World, WorldConfig, TICK_US};
use super::SimError;
use crate::captureio::CaptureRecord;
use crate::framing::CommandId;
use crate::linkproto::{parse_dot11, Dot11Frame, LinkConfig, ARP_MSDU_LEN};
use crate::wepcrypt::{ICV_LEN, WEP_HEADER_LEN};

/// Channels a drone with automatic channel selection may pick per session.
pub const AUTO_CHANNELS: [u8; 5] = [149, 153, 157, 161, 165];

const REFERENCE_SCRIPT: &str = include_str!("../../assets/reference_scenario.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineStep {
    pub t: f64,
    pub command: CommandId,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Between drone, controller and attacker radios.
    pub link: f64,
    /// Into the monitor tap.
    pub tap: f64,
}

/// An attacker radio re-sends the first ARP request it overhears, so the
/// drone keeps answering with freshly encrypted replies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArpReplayConfig {
    pub start: f64,
    pub rate_hz: f64,
    #[serde(default)]
    pub stop: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub link: LinkConfig,
    /// Pick the session channel at random from `AUTO_CHANNELS`.
    #[serde(default)]
    pub auto_channel: bool,
    #[serde(default)]
    pub loss: LossConfig,
    /// Seconds; defaults to two seconds past the last timeline step.
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub timeline: Vec<TimelineStep>,
    #[serde(default = "yes")]
    pub tap: bool,
    #[serde(default)]
    pub rc_off_at: Option<f64>,
    #[serde(default)]
    pub arp_replay: Option<ArpReplayConfig>,
}

impl ScenarioScript {
    pub fn empty(seed: u64) -> Self {
        ScenarioScript {
            seed,
            link: LinkConfig::default(),
            auto_channel: false,
            loss: LossConfig::default(),
            duration: None,
            timeline: Vec::new(),
            tap: true,
            rc_off_at: None,
            arp_replay: None,
        }
    }

    /// The bundled take-off / backward / forward / landing session.
    pub fn reference() -> Self {
        serde_json::from_str(REFERENCE_SCRIPT).expect("bundled scenario parses")
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let s: ScenarioScript = serde_json::from_str(text).map_err(|e| SimError::InvalidScript(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::InvalidScript(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScript(m));
        self.link.validate().map_err(SimError::Link)?;
        let mut last = f64::NEG_INFINITY;
        for (i, s) in self.timeline.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0) {
                return bad(format!("step {i}: start must be a non-negative time"));
            }
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return bad(format!("step {i}: duration must be positive"));
            }
            if s.t < last {
                return bad(format!("step {i}: timeline not sorted"));
            }
            last = s.t;
        }
        for p in [self.loss.link, self.loss.tap] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("loss probability {p} outside [0, 1]"));
            }
        }
        if let Some(d) = self.duration {
            if !(d.is_finite() && d > 0.0) {
                return bad("duration must be positive".into());
            }
        }
        if let Some(r) = self.arp_replay {
            if !(r.rate_hz > 0.0 && r.rate_hz <= 10_000.0 && r.start >= 0.0) {
                return bad("arp_replay needs 0 < rate_hz <= 10000 and a non-negative start".into());
            }
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.duration
            .unwrap_or_else(|| self.timeline.iter().map(|s| s.t + s.duration).fold(0.0, f64::max) + 2.0)
    }

    /// Link config with the session channel resolved.
    pub fn session_link(&self) -> LinkConfig {
        let mut link = self.link.clone();
        if self.auto_channel {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0xc4a7_7e15);
            link.channel = *AUTO_CHANNELS.choose(&mut rng).expect("non-empty");
        }
        link
    }

    pub fn sticks(&self) -> StickTimeline {
        StickTimeline {
            spans: self
                .timeline
                .iter()
                .map(|s| (secs_to_us(s.t), secs_to_us(s.t + s.duration), s.command))
                .collect(),
        }
    }

    pub fn world_config(&self) -> WorldConfig {
        let mut cfg = WorldConfig::new(self.seed, self.session_link());
        cfg.link_loss = self.loss.link;
        cfg.tap_loss = self.loss.tap;
        cfg
    }
}

pub fn secs_to_us(s: f64) -> u64 {
    (s * 1e6).round() as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub channel: u8,
    pub capture: Vec<CaptureRecord>,
    pub observations: Vec<ObservationEvent>,
    pub final_body: DroneBody,
}

fn is_arp_request(raw: &[u8]) -> bool {
    matches!(parse_dot11(raw), Dot11Frame::Data { header, body }
        if header.protected && header.dst.is_broadcast() && body.len() == WEP_HEADER_LEN + ARP_MSDU_LEN + ICV_LEN)
}

pub fn run_scenario(script: &ScenarioScript) -> Result<ScenarioOutput, SimError> {
    script.validate()?;
    let mut world = World::new(script.world_config())?;
    world.set_sticks(script.sticks());
    let channel = world.link().channel;
    let tap = script.tap.then(|| world.attach_tap(channel)).transpose()?;
    let replay = match script.arp_replay {
        Some(cfg) => Some((world.add_radio(channel)?, cfg)),
        None => None,
    };
    let mut captured_arp: Option<Vec<u8>> = None;
    let mut replay_next_us = 0u64;

    let end = secs_to_us(script.duration_s());
    let rc_off = script.rc_off_at.map(secs_to_us);
    while world.now_us() < end {
        let now = world.now_us();
        if rc_off.is_some_and(|t| now >= t) && world.rc_link().is_some() {
            world.power_off_rc();
        }
        if let Some((radio, cfg)) = replay {
            if captured_arp.is_none() {
                captured_arp = world
                    .take_heard(radio)
                    .into_iter()
                    .map(|(_, f)| f)
                    .find(|f| is_arp_request(f));
            } else {
                world.take_heard(radio);
            }
            let start = secs_to_us(cfg.start);
            let stop = cfg.stop.map_or(u64::MAX, secs_to_us);
            if let Some(frame) = &captured_arp {
                let period = (1e6 / cfg.rate_hz).max(1.0);
                replay_next_us = replay_next_us.max(start);
                while (replay_next_us as f64) < (now + TICK_US) as f64 && replay_next_us < stop {
                    if replay_next_us >= now {
                        world.transmit_at(radio, replay_next_us, frame.clone());
                    }
                    replay_next_us = (replay_next_us as f64 + period).round() as u64;
                }
            }
        }
        world.run_tick();
    }
    Ok(ScenarioOutput {
        channel,
        capture: tap.map(|t| world.take_tap(t)).unwrap_or_default(),
        observations: world.observations().to_vec(),
        final_body: *world.body(),
    })
}
