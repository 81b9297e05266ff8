//! Point-mass flight model: full stick deflection maps to a fixed rate.

use serde::{Deserialize, Serialize};

use crate::framing::CommandId;

pub const CLIMB_RATE: f64 = 2.0;
pub const HORIZONTAL_SPEED: f64 = 5.0;
pub const YAW_RATE: f64 = 45.0;
// Below this altitude the body counts as on the ground.
const GROUND_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DroneBody {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Compass degrees in [0, 360); 0 faces +y, 90 faces +x.
    pub heading: f64,
    pub vz: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub props_on: bool,
    pub airborne: bool,
}

impl DroneBody {
    pub fn horizontal_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Applies `cmd` as the body's new setpoint and integrates for `dt` seconds.
/// Horizontal and yaw commands only take effect in the air; vertical ones
/// need spinning propellers; Idle stops all motion at once.
pub fn kinematics_step(body: DroneBody, cmd: CommandId, dt: f64) -> DroneBody {
    let mut b = body;
    b.vx = 0.0;
    b.vy = 0.0;
    b.vz = 0.0;
    b.yaw_rate = 0.0;
    let h = b.heading.to_radians();
    let (fwd_x, fwd_y) = (h.sin(), h.cos());
    let (right_x, right_y) = (h.cos(), -h.sin());
    match cmd {
        CommandId::Idle => {}
        CommandId::Ready => {
            if !b.airborne {
                b.props_on = true;
            }
        }
        CommandId::FullUp if b.props_on => b.vz = CLIMB_RATE,
        CommandId::FullDown if b.airborne => b.vz = -CLIMB_RATE,
        CommandId::FullForward if b.airborne => (b.vx, b.vy) = (HORIZONTAL_SPEED * fwd_x, HORIZONTAL_SPEED * fwd_y),
        CommandId::FullBackward if b.airborne => (b.vx, b.vy) = (-HORIZONTAL_SPEED * fwd_x, -HORIZONTAL_SPEED * fwd_y),
        CommandId::FullFlyRight if b.airborne => {
            (b.vx, b.vy) = (HORIZONTAL_SPEED * right_x, HORIZONTAL_SPEED * right_y)
        }
        CommandId::FullFlyLeft if b.airborne => {
            (b.vx, b.vy) = (-HORIZONTAL_SPEED * right_x, -HORIZONTAL_SPEED * right_y)
        }
        CommandId::FullRotateRight if b.airborne => b.yaw_rate = YAW_RATE,
        CommandId::FullRotateLeft if b.airborne => b.yaw_rate = -YAW_RATE,
        _ => {}
    }
    b.x += b.vx * dt;
    b.y += b.vy * dt;
    b.z += b.vz * dt;
    b.heading = (b.heading + b.yaw_rate * dt).rem_euclid(360.0);
    if b.z < GROUND_EPS {
        b.z = 0.0;
        if b.vz < 0.0 {
            b.vz = 0.0;
        }
    }
    b.airborne = b.z > 0.0;
    b
}
