//! Drone side of the link: beacons, ARP, peer admission and control
//! delivery. Never sends or expects Acks, and keeps no replay state.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::dot11::{parse_dot11, Dot11Frame};
use super::frame::INITIATOR_LEN;
use super::payload::{parse_msdu, ArpOp, ArpPacket, Msdu, CONTROL_PORT};
use super::station::{IvSource, Station};
use super::telemetry::{filler_payload, Telemetry};
use super::{LinkConfig, LinkEvent, MacAddr};
use crate::framing::{decode_control, is_valid_duml, CrcConfig, MovementField, CONTROL_LEN};

pub const MAX_PEERS: usize = 8;
const TELEMETRY_PERIOD_US: u64 = 80_000;
const HOUSEKEEPING_PERIOD_US: u64 = 4_000_000;
const HOUSEKEEPING_LEN: usize = 0x3d;
const CONNECT_BURST: [usize; 6] = [0xa4, 0xa4, 0xa4, 0x70, 0x70, 0x70];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LedColor {
    Red,
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeerState {
    /// Resolved the drone over ARP but has not sent a connection initiator.
    Pending,
    Connected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerSession {
    pub mac: MacAddr,
    pub ip: Ipv4Addr,
    pub state: PeerState,
    pub since_us: u64,
    pub last_control_us: u64,
    pub last_beacon_us: u64,
}

impl PeerSession {
    fn last_activity(&self) -> u64 {
        self.last_control_us.max(self.last_beacon_us)
    }
}

/// What the flight controller needs to fill a telemetry frame.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DroneStatus {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading: f64,
    pub props_on: bool,
    pub airborne: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveredControl {
    pub at_us: u64,
    pub from: MacAddr,
    pub movement: MovementField,
}

#[derive(Debug, Default)]
pub struct DroneOutput {
    pub frames: Vec<Vec<u8>>,
    pub delivered: Vec<DeliveredControl>,
}

#[derive(Debug, Clone)]
pub struct DroneLinkState {
    station: Station,
    peers: Vec<PeerSession>,
    next_beacon_us: u64,
    next_telemetry_us: u64,
    next_housekeeping_us: u64,
    telemetry_seq: u16,
    filler_counter: u32,
}

impl DroneLinkState {
    pub fn new(cfg: &LinkConfig, iv_seed: u64) -> Self {
        DroneLinkState {
            station: Station::new(
                cfg.drone_mac,
                cfg.drone_ip,
                cfg.bssid(),
                cfg.wep_key.clone(),
                IvSource::random(iv_seed),
            ),
            peers: Vec::new(),
            next_beacon_us: 0,
            next_telemetry_us: 0,
            next_housekeeping_us: 0,
            telemetry_seq: 0,
            filler_counter: 0,
        }
    }

    pub fn peers(&self) -> &[PeerSession] {
        &self.peers
    }

    pub fn connected(&self) -> impl Iterator<Item = &PeerSession> {
        self.peers.iter().filter(|p| p.state == PeerState::Connected)
    }

    pub fn is_connected(&self) -> bool {
        self.connected().next().is_some()
    }

    pub fn led(&self) -> LedColor {
        if self.is_connected() {
            LedColor::Green
        } else {
            LedColor::Red
        }
    }

    pub fn step(&mut self, ev: LinkEvent<'_>, now_us: u64, cfg: &LinkConfig, status: &DroneStatus) -> DroneOutput {
        let mut out = DroneOutput::default();
        self.expire(now_us, cfg);
        match ev {
            LinkEvent::Tick => self.on_tick(now_us, cfg, status, &mut out),
            LinkEvent::Frame(raw) => self.on_frame(raw, now_us, cfg, &mut out),
        }
        out
    }

    fn expire(&mut self, now_us: u64, cfg: &LinkConfig) {
        let timeout = cfg.peer_timeout_ms * 1000;
        self.peers
            .retain(|p| now_us.saturating_sub(p.last_activity()) <= timeout);
    }

    fn on_tick(&mut self, now: u64, cfg: &LinkConfig, status: &DroneStatus, out: &mut DroneOutput) {
        if now >= self.next_beacon_us {
            out.frames
                .push(self.station.beacon(now, cfg.beacon_interval_ms, cfg.channel));
            self.next_beacon_us = now + cfg.beacon_interval_ms * 1000;
        }
        if !self.is_connected() {
            return;
        }
        let bcast_ip = broadcast_ip(cfg.drone_ip);
        if now >= self.next_telemetry_us {
            let t = Telemetry {
                x: status.x as f32,
                y: status.y as f32,
                z: status.z as f32,
                heading: status.heading as f32,
                props_on: status.props_on,
                airborne: status.airborne,
                uptime_ms: (now / 1000) as u32,
                seq: self.telemetry_seq,
            };
            self.telemetry_seq = self.telemetry_seq.wrapping_add(1);
            out.frames
                .push(self.station.udp(MacAddr::BROADCAST, bcast_ip, &t.encode()));
            self.next_telemetry_us = now + TELEMETRY_PERIOD_US;
        }
        if now >= self.next_housekeeping_us {
            let p = filler_payload(HOUSEKEEPING_LEN, self.bump_filler());
            out.frames.push(self.station.udp(MacAddr::BROADCAST, bcast_ip, &p));
            self.next_housekeeping_us = now + HOUSEKEEPING_PERIOD_US;
        }
    }

    fn bump_filler(&mut self) -> u32 {
        self.filler_counter += 1;
        self.filler_counter
    }

    fn on_frame(&mut self, raw: &[u8], now: u64, cfg: &LinkConfig, out: &mut DroneOutput) {
        if let Dot11Frame::Beacon(b) = parse_dot11(raw) {
            if b.bssid == cfg.bssid() {
                if let Some(p) = self
                    .peers
                    .iter_mut()
                    .find(|p| p.mac == b.src && p.state == PeerState::Connected)
                {
                    p.last_beacon_us = now;
                }
            }
            return;
        }
        let Some((header, msdu)) = self.station.open(raw) else {
            return;
        };
        if header.src == self.station.mac {
            return;
        }
        match parse_msdu(&msdu) {
            Msdu::Arp(a) if a.op == ArpOp::Request && a.target_ip == cfg.drone_ip => {
                self.on_arp_request(header.src, a, now, cfg, out)
            }
            Msdu::Udp {
                src_ip,
                dst_ip,
                dst_port: CONTROL_PORT,
                payload,
                ..
            } if dst_ip == cfg.drone_ip => {
                if payload.len() == INITIATOR_LEN && is_valid_duml(&payload, CrcConfig::default()) {
                    self.on_initiator(header.src, src_ip, now, out);
                } else if payload.len() == CONTROL_LEN {
                    if let Ok(pkt) = decode_control(&payload, CrcConfig::default()) {
                        if let Some(p) = self
                            .peers
                            .iter_mut()
                            .find(|p| p.mac == header.src && p.state == PeerState::Connected)
                        {
                            p.last_control_us = now;
                            out.delivered.push(DeliveredControl {
                                at_us: now,
                                from: header.src,
                                movement: pkt.movement,
                            });
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn on_arp_request(&mut self, from: MacAddr, a: ArpPacket, now: u64, cfg: &LinkConfig, out: &mut DroneOutput) {
        let reply = ArpPacket {
            op: ArpOp::Reply,
            sender_mac: self.station.mac,
            sender_ip: cfg.drone_ip,
            target_mac: a.sender_mac,
            target_ip: a.sender_ip,
        };
        out.frames.push(self.station.arp(from, &reply));
        let full = self.peers.len() >= MAX_PEERS;
        match self.peers.iter_mut().find(|p| p.mac == from) {
            // an ARP never downgrades a connected peer
            Some(p) if p.state == PeerState::Connected => {}
            Some(p) => {
                p.since_us = now;
                p.last_control_us = now;
                p.ip = a.sender_ip;
            }
            None if !full => self.peers.push(PeerSession {
                mac: from,
                ip: a.sender_ip,
                state: PeerState::Pending,
                since_us: now,
                last_control_us: now,
                last_beacon_us: 0,
            }),
            None => {}
        }
    }

    fn on_initiator(&mut self, from: MacAddr, src_ip: Ipv4Addr, now: u64, out: &mut DroneOutput) {
        let Some(idx) = self.peers.iter().position(|p| p.mac == from) else {
            return;
        };
        let p = &mut self.peers[idx];
        p.last_control_us = now;
        if p.state == PeerState::Connected {
            return;
        }
        p.state = PeerState::Connected;
        p.since_us = now;
        p.last_beacon_us = now;
        if self.next_telemetry_us < now {
            self.next_telemetry_us = now;
        }
        for len in CONNECT_BURST {
            let payload = filler_payload(len, self.bump_filler());
            out.frames.push(self.station.udp(from, src_ip, &payload));
        }
    }
}

fn broadcast_ip(ip: Ipv4Addr) -> Ipv4Addr {
    let [a, b, c, _] = ip.octets();
    Ipv4Addr::new(a, b, c, 255)
}
