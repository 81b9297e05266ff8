//! The event loop: one virtual clock, one radio medium, the drone, an
//! optional remote controller, attacker radios and passive taps.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kinematics::{kinematics_step, DroneBody};
use super::observe::{MotionTracker, ObservationEvent};
use super::SimError;
use crate::captureio::CaptureRecord;
use crate::framing::{classify_movement, CommandId, MovementField};
use crate::linkproto::{
    is_valid_channel, ChannelScanner, DeliveredControl, DroneLinkState, DroneStatus, LinkConfig, LinkEvent, RcLinkState,
};

pub const TICK_US: u64 = 20_000;
/// How long a node takes to answer a frame it just received.
pub const RESPONSE_DELAY_US: u64 = 500;
/// Attacker frames queued for a tick go out this far into it, after the
/// controller's frame for the same tick.
pub const INJECT_PHASE_US: u64 = 10_000;
const FRAME_GAP_US: u64 = 100;
const RC_TICK_OFFSET_US: u64 = 100;
const DRONE_TICK_OFFSET_US: u64 = 200;

pub type NodeId = usize;
pub const DRONE: NodeId = 0;
pub const RC: NodeId = 1;
const FIRST_RADIO: NodeId = 2;
const TAP_SEED_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TapId(usize);

/// Which command the remote controller's sticks hold over time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StickTimeline {
    /// (start_us, end_us, command), sorted by start.
    pub spans: Vec<(u64, u64, CommandId)>,
}

impl StickTimeline {
    pub fn at(&self, t_us: u64) -> CommandId {
        self.spans
            .iter()
            .rev()
            .find(|(s, e, _)| *s <= t_us && t_us < *e)
            .map_or(CommandId::Idle, |s| s.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub seed: u64,
    pub link: LinkConfig,
    /// Drop probability between radios (drone, controller, attacker).
    pub link_loss: f64,
    /// Drop probability from any transmitter into a passive tap.
    pub tap_loss: f64,
    /// Per (transmitter, receiver) overrides of `link_loss`.
    pub path_loss: BTreeMap<(NodeId, NodeId), f64>,
    pub rc_enabled: bool,
}

impl WorldConfig {
    pub fn new(seed: u64, link: LinkConfig) -> Self {
        WorldConfig {
            seed,
            link,
            link_loss: 0.0,
            tap_loss: 0.0,
            path_loss: BTreeMap::new(),
            rc_enabled: true,
        }
    }
}

#[derive(Debug)]
enum Event {
    Tick,
    Tx { from: NodeId, channel: u8, frame: Vec<u8> },
}

#[derive(Debug)]
struct Queued {
    at: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        (self.at, self.seq) == (o.at, o.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(o.at, o.seq))
    }
}

#[derive(Debug)]
struct Radio {
    channel: u8,
    heard: Vec<(u64, Vec<u8>)>,
    rng: ChaCha8Rng,
    sent: u64,
}

#[derive(Debug)]
struct Tap {
    channel: u8,
    records: Vec<CaptureRecord>,
    rng: ChaCha8Rng,
}

#[derive(Debug)]
struct RcNode {
    link: RcLinkState,
    sticks: StickTimeline,
    rng: ChaCha8Rng,
}

pub struct World {
    cfg: WorldConfig,
    now_us: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Queued>>,
    drone: DroneLinkState,
    drone_rng: ChaCha8Rng,
    body: DroneBody,
    command: CommandId,
    latest_control: Option<MovementField>,
    delivered: Vec<DeliveredControl>,
    tracker: MotionTracker,
    rc: Option<RcNode>,
    radios: Vec<Radio>,
    taps: Vec<Tap>,
}

fn node_rng(seed: u64, node: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node);
    rng
}

impl World {
    pub fn new(cfg: WorldConfig) -> Result<World, SimError> {
        cfg.link.validate().map_err(SimError::Link)?;
        for p in [cfg.link_loss, cfg.tap_loss].iter().chain(cfg.path_loss.values()) {
            if !(0.0..=1.0).contains(p) {
                return Err(SimError::InvalidScript(format!("loss probability {p} outside [0, 1]")));
            }
        }
        // IV generators get their own streams, separate from loss draws.
        let iv_seed = |n: u64| node_rng(cfg.seed ^ 0x05ee_d1e5, n).gen::<u64>();
        let drone = DroneLinkState::new(&cfg.link, iv_seed(DRONE as u64));
        let rc = cfg.rc_enabled.then(|| RcNode {
            link: RcLinkState::new(&cfg.link, iv_seed(RC as u64)),
            sticks: StickTimeline::default(),
            rng: node_rng(cfg.seed, RC as u64),
        });
        let mut w = World {
            drone_rng: node_rng(cfg.seed, DRONE as u64),
            cfg,
            now_us: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            drone,
            body: DroneBody::default(),
            command: CommandId::Idle,
            latest_control: None,
            delivered: Vec::new(),
            tracker: MotionTracker::default(),
            rc,
            radios: Vec::new(),
            taps: Vec::new(),
        };
        w.push(0, Event::Tick);
        Ok(w)
    }

    fn push(&mut self, at: u64, event: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Queued {
            at,
            seq: self.seq,
            event,
        }));
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn link(&self) -> &LinkConfig {
        &self.cfg.link
    }

    /// Start of the next tick not yet simulated.
    pub fn now_us(&self) -> u64 {
        self.now_us
    }

    pub fn body(&self) -> &DroneBody {
        &self.body
    }

    pub fn drone_link(&self) -> &DroneLinkState {
        &self.drone
    }

    pub fn rc_link(&self) -> Option<&RcLinkState> {
        self.rc.as_ref().map(|r| &r.link)
    }

    pub fn delivered(&self) -> &[DeliveredControl] {
        &self.delivered
    }

    pub fn observations(&self) -> &[ObservationEvent] {
        self.tracker.events()
    }

    pub fn set_sticks(&mut self, sticks: StickTimeline) {
        if let Some(rc) = &mut self.rc {
            rc.sticks = sticks;
        }
    }

    /// The controller stops transmitting and receiving for good.
    pub fn power_off_rc(&mut self) {
        self.rc = None;
    }

    pub fn add_radio(&mut self, channel: u8) -> Result<NodeId, SimError> {
        if !is_valid_channel(channel) {
            return Err(SimError::NoSuchChannel(channel));
        }
        let id = FIRST_RADIO + self.radios.len();
        self.radios.push(Radio {
            channel,
            heard: Vec::new(),
            rng: node_rng(self.cfg.seed, id as u64),
            sent: 0,
        });
        Ok(id)
    }

    pub fn tune_radio(&mut self, radio: NodeId, channel: u8) -> Result<(), SimError> {
        if !is_valid_channel(channel) {
            return Err(SimError::NoSuchChannel(channel));
        }
        self.radios[radio - FIRST_RADIO].channel = channel;
        Ok(())
    }

    pub fn radio_channel(&self, radio: NodeId) -> u8 {
        self.radios[radio - FIRST_RADIO].channel
    }

    pub fn radio_sent(&self, radio: NodeId) -> u64 {
        self.radios[radio - FIRST_RADIO].sent
    }

    /// Frames the radio heard since the last call, with receive times.
    pub fn take_heard(&mut self, radio: NodeId) -> Vec<(u64, Vec<u8>)> {
        std::mem::take(&mut self.radios[radio - FIRST_RADIO].heard)
    }

    /// Transmit from an attacker radio at an absolute time, not earlier
    /// than the next unsimulated tick.
    pub fn transmit_at(&mut self, radio: NodeId, at_us: u64, frame: Vec<u8>) {
        let at = at_us.max(self.now_us);
        let channel = self.radios[radio - FIRST_RADIO].channel;
        self.push(
            at,
            Event::Tx {
                from: radio,
                channel,
                frame,
            },
        );
    }

    /// Queue frames for the coming tick, spread over its second half.
    pub fn inject(&mut self, radio: NodeId, frames: Vec<Vec<u8>>) {
        let n = frames.len() as u64;
        let gap = INJECT_PHASE_US.checked_div(n).map_or(0, |g| g.min(500));
        let base = self.now_us + INJECT_PHASE_US;
        for (k, f) in frames.into_iter().enumerate() {
            self.transmit_at(radio, base + k as u64 * gap, f);
        }
    }

    pub fn attach_tap(&mut self, channel: u8) -> Result<TapId, SimError> {
        if !is_valid_channel(channel) {
            return Err(SimError::NoSuchChannel(channel));
        }
        let id = self.taps.len();
        self.taps.push(Tap {
            channel,
            records: Vec::new(),
            rng: node_rng(self.cfg.seed, TAP_SEED_BASE + id as u64),
        });
        Ok(TapId(id))
    }

    pub fn tap_records(&self, tap: TapId) -> &[CaptureRecord] {
        &self.taps[tap.0].records
    }

    pub fn take_tap(&mut self, tap: TapId) -> Vec<CaptureRecord> {
        std::mem::take(&mut self.taps[tap.0].records)
    }

    /// Simulates one tick: everything in [now, now + TICK).
    pub fn run_tick(&mut self) {
        let end = self.now_us + TICK_US;
        while let Some(Reverse(q)) = self.queue.peek() {
            if q.at >= end {
                break;
            }
            let Reverse(q) = self.queue.pop().expect("peeked");
            match q.event {
                Event::Tick => self.on_tick(q.at),
                Event::Tx { from, channel, frame } => self.on_tx(q.at, from, channel, frame),
            }
        }
        self.now_us = end;
    }

    pub fn run_until(&mut self, t_us: u64) {
        while self.now_us < t_us {
            self.run_tick();
        }
    }

    fn on_tick(&mut self, t: u64) {
        let link = self.cfg.link.clone();
        // Drone: link upkeep first so expired peers stop steering.
        let status = DroneStatus {
            x: self.body.x,
            y: self.body.y,
            z: self.body.z,
            heading: self.body.heading,
            props_on: self.body.props_on,
            airborne: self.body.airborne,
        };
        let out = self.drone.step(LinkEvent::Tick, t, &link, &status);
        self.schedule(DRONE, t + DRONE_TICK_OFFSET_US, out.frames);

        // Flight controller samples the newest control once per tick and
        // holds it; with nobody connected it falls back to hover.
        if let Some(m) = self.latest_control.take() {
            if let Some(c) = classify_movement(m) {
                self.command = c;
            }
        }
        if !self.drone.is_connected() {
            self.command = CommandId::Idle;
        }
        self.body = kinematics_step(self.body, self.command, TICK_US as f64 / 1e6);
        self.tracker.update(t as f64 / 1e6, &self.body);

        if let Some(rc) = &mut self.rc {
            rc.link.command = crate::framing::movement_for(rc.sticks.at(t));
            let frames = rc.link.step(LinkEvent::Tick, t, &link);
            self.schedule(RC, t + RC_TICK_OFFSET_US, frames);
        }
        self.push(t + TICK_US, Event::Tick);
    }

    fn schedule(&mut self, from: NodeId, start: u64, frames: Vec<Vec<u8>>) {
        let channel = self.cfg.link.channel;
        for (k, frame) in frames.into_iter().enumerate() {
            self.push(start + k as u64 * FRAME_GAP_US, Event::Tx { from, channel, frame });
        }
    }

    fn loss(&self, from: NodeId, to: NodeId) -> f64 {
        *self.cfg.path_loss.get(&(from, to)).unwrap_or(&self.cfg.link_loss)
    }

    fn on_tx(&mut self, t: u64, from: NodeId, channel: u8, frame: Vec<u8>) {
        if from >= FIRST_RADIO {
            self.radios[from - FIRST_RADIO].sent += 1;
        }
        // Controller may have been switched off after scheduling.
        if from == RC && self.rc.is_none() {
            return;
        }
        let link = self.cfg.link.clone();
        let tap_loss = self.cfg.tap_loss;
        for tap in self.taps.iter_mut().filter(|tp| tp.channel == channel) {
            if tap.rng.gen::<f64>() >= tap_loss {
                tap.records.push(CaptureRecord::new(t, channel, frame.clone()));
            }
        }
        for i in 0..self.radios.len() {
            let id = FIRST_RADIO + i;
            if id == from || self.radios[i].channel != channel {
                continue;
            }
            let p = self.loss(from, id);
            let r = &mut self.radios[i];
            if r.rng.gen::<f64>() >= p {
                r.heard.push((t, frame.clone()));
            }
        }
        if channel != link.channel {
            return;
        }
        if from != DRONE {
            let p = self.loss(from, DRONE);
            if self.drone_rng.gen::<f64>() >= p {
                let status = DroneStatus::default();
                let out = self.drone.step(LinkEvent::Frame(&frame), t, &link, &status);
                if let Some(last) = out.delivered.last() {
                    self.latest_control = Some(last.movement);
                }
                self.delivered.extend(out.delivered);
                self.schedule(DRONE, t + RESPONSE_DELAY_US, out.frames);
            }
        }
        if from != RC {
            let p = self.loss(from, RC);
            if let Some(rc) = &mut self.rc {
                if rc.rng.gen::<f64>() >= p {
                    let frames = rc.link.step(LinkEvent::Frame(&frame), t, &link);
                    self.schedule(RC, t + RESPONSE_DELAY_US, frames);
                }
            }
        }
    }
}

/// Scans by parking an attacker radio on each channel in turn.
pub struct WorldScanner<'a> {
    pub world: &'a mut World,
    pub radio: NodeId,
}

impl ChannelScanner for WorldScanner<'_> {
    fn listen(&mut self, channel: u8, dwell_ms: u64) -> Vec<Vec<u8>> {
        if self.world.tune_radio(self.radio, channel).is_err() {
            return Vec::new();
        }
        self.world.take_heard(self.radio);
        let until = self.world.now_us() + dwell_ms * 1000;
        self.world.run_until(until);
        self.world.take_heard(self.radio).into_iter().map(|(_, f)| f).collect()
    }
}
