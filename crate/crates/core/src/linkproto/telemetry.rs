//! Drone status broadcasts (0x56 frames) and the assorted housekeeping
//! frames both ends emit.

use serde::{Deserialize, Serialize};

use crate::framing::{is_valid_duml, reference_templates, CrcConfig, DumlFrame};

pub const TELEMETRY_LEN: usize = 0x56;
const HEADER_LEN: usize = 16;

const FLAG_PROPS: u8 = 0x01;
const FLAG_AIRBORNE: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub heading: f32,
    pub props_on: bool,
    pub airborne: bool,
    pub uptime_ms: u32,
    pub seq: u16,
}

impl Telemetry {
    pub fn encode(&self) -> Vec<u8> {
        let header = &reference_templates().telemetry_header;
        let mut body = Vec::with_capacity(TELEMETRY_LEN - 4);
        body.extend_from_slice(header);
        for v in [self.x, self.y, self.z, self.heading] {
            body.extend_from_slice(&v.to_le_bytes());
        }
        let mut flags = 0;
        if self.props_on {
            flags |= FLAG_PROPS;
        }
        if self.airborne {
            flags |= FLAG_AIRBORNE;
        }
        body.push(flags);
        body.extend_from_slice(&self.uptime_ms.to_le_bytes());
        body.extend_from_slice(&self.seq.to_le_bytes());
        body.resize(TELEMETRY_LEN - 4, 0);
        DumlFrame::new(body, CrcConfig::default())
            .expect("fixed-size body")
            .encode()
    }

    pub fn parse(payload: &[u8]) -> Option<Telemetry> {
        if payload.len() != TELEMETRY_LEN || !is_valid_duml(payload, CrcConfig::default()) {
            return None;
        }
        let body = &payload[2..TELEMETRY_LEN - 2];
        if body[..HEADER_LEN] != reference_templates().telemetry_header[..] {
            return None;
        }
        let f = |o: usize| f32::from_le_bytes(body[o..o + 4].try_into().unwrap());
        let o = HEADER_LEN;
        let flags = body[o + 16];
        Some(Telemetry {
            x: f(o),
            y: f(o + 4),
            z: f(o + 8),
            heading: f(o + 12),
            props_on: flags & FLAG_PROPS != 0,
            airborne: flags & FLAG_AIRBORNE != 0,
            uptime_ms: u32::from_le_bytes(body[o + 17..o + 21].try_into().unwrap()),
            seq: u16::from_le_bytes([body[o + 21], body[o + 22]]),
        })
    }
}

/// A well-formed DUML frame of exactly `len` bytes (4..=259) whose body is
/// a counter-stamped pattern; stands in for traffic the simulator doesn't
/// model in detail.
pub fn filler_payload(len: usize, counter: u32) -> Vec<u8> {
    assert!((4..=259).contains(&len), "filler length {len} out of range");
    let mut body: Vec<u8> = (0..len - 4).map(|i| (i as u8).wrapping_mul(7) ^ (len as u8)).collect();
    for (b, c) in body.iter_mut().zip(counter.to_le_bytes()) {
        *b = c;
    }
    DumlFrame::new(body, CrcConfig::default()).expect("body fits").encode()
}
