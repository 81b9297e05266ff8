//! What an onlooker sees: changes in the drone's motion, labelled as
//! maneuvers. Derived from the body state only, never from packets.

use serde::{Deserialize, Serialize};

use super::DroneBody;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Maneuver {
    PropellerOn,
    TakeOff,
    Forward,
    Backward,
    Left,
    Right,
    Up,
    Down,
    RotateLeft,
    RotateRight,
    Landing,
    Hover,
}

impl Maneuver {
    pub const ALL: [Maneuver; 12] = [
        Maneuver::PropellerOn,
        Maneuver::TakeOff,
        Maneuver::Forward,
        Maneuver::Backward,
        Maneuver::Left,
        Maneuver::Right,
        Maneuver::Up,
        Maneuver::Down,
        Maneuver::RotateLeft,
        Maneuver::RotateRight,
        Maneuver::Landing,
        Maneuver::Hover,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationEvent {
    pub t: f64,
    pub maneuver: Maneuver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Motion {
    Off,
    Grounded,
    Hover,
    Up,
    Down,
    Forward,
    Backward,
    Left,
    Right,
    RotateLeft,
    RotateRight,
}

fn motion_of(b: &DroneBody) -> Motion {
    if !b.props_on {
        return Motion::Off;
    }
    let h = b.heading.to_radians();
    let fwd = b.vx * h.sin() + b.vy * h.cos();
    let right = b.vx * h.cos() - b.vy * h.sin();
    if b.vz > 0.0 {
        Motion::Up
    } else if b.vz < 0.0 {
        Motion::Down
    } else if b.yaw_rate > 0.0 {
        Motion::RotateRight
    } else if b.yaw_rate < 0.0 {
        Motion::RotateLeft
    } else if fwd > 1e-9 {
        Motion::Forward
    } else if fwd < -1e-9 {
        Motion::Backward
    } else if right > 1e-9 {
        Motion::Right
    } else if right < -1e-9 {
        Motion::Left
    } else if b.airborne {
        Motion::Hover
    } else {
        Motion::Grounded
    }
}

/// Turns a per-tick stream of body states into maneuver observations.
#[derive(Debug, Clone)]
pub struct MotionTracker {
    last: Motion,
    // Index of the open descent, relabelled as Landing if it ends on the ground.
    open_descent: Option<usize>,
    events: Vec<ObservationEvent>,
}

impl Default for MotionTracker {
    fn default() -> Self {
        MotionTracker {
            last: Motion::Off,
            open_descent: None,
            events: Vec::new(),
        }
    }
}

impl MotionTracker {
    pub fn update(&mut self, t: f64, body: &DroneBody) {
        let now = motion_of(body);
        let prev = self.last;
        if now == prev {
            return;
        }
        self.last = now;
        if prev == Motion::Down {
            if let Some(i) = self.open_descent.take() {
                if !body.airborne {
                    self.events[i].maneuver = Maneuver::Landing;
                }
            }
        }
        let label = match now {
            Motion::Off => return,
            Motion::Grounded if prev == Motion::Off => Maneuver::PropellerOn,
            Motion::Grounded | Motion::Hover => Maneuver::Hover,
            Motion::Up if matches!(prev, Motion::Off | Motion::Grounded) => Maneuver::TakeOff,
            Motion::Up => Maneuver::Up,
            Motion::Down => {
                self.open_descent = Some(self.events.len());
                Maneuver::Down
            }
            Motion::Forward => Maneuver::Forward,
            Motion::Backward => Maneuver::Backward,
            Motion::Left => Maneuver::Left,
            Motion::Right => Maneuver::Right,
            Motion::RotateLeft => Maneuver::RotateLeft,
            Motion::RotateRight => Maneuver::RotateRight,
        };
        self.events.push(ObservationEvent { t, maneuver: label });
    }

    pub fn events(&self) -> &[ObservationEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<ObservationEvent> {
        self.events
    }
}
