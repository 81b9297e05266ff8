//! Remote-controller side: beacon, resolve the drone over ARP, send the
//! connection initiator once, then stream control frames every tick.

use serde::{Deserialize, Serialize};

use super::payload::{parse_msdu, ArpOp, ArpPacket, Msdu, CONTROL_PORT};
use super::station::{IvSource, Station};
use super::telemetry::{filler_payload, Telemetry};
use super::{LinkConfig, LinkEvent, MacAddr};
use crate::framing::{encode_control, movement_for, reference_templates, CommandId, CrcConfig, MovementField};

const ARP_RETRY_US: u64 = 500_000;
const STATUS_PERIOD_US: u64 = 1_000_000;
const STATUS_LEN: usize = 0x22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RcPhase {
    Resolving,
    Connected,
}

#[derive(Debug, Clone)]
pub struct RcLinkState {
    station: Station,
    phase: RcPhase,
    drone_mac: Option<MacAddr>,
    next_beacon_us: u64,
    next_arp_us: u64,
    next_status_us: u64,
    last_heard_us: u64,
    status_counter: u32,
    /// Movement sent in every control frame; Idle when sticks are neutral.
    pub command: MovementField,
}

impl RcLinkState {
    pub fn new(cfg: &LinkConfig, iv_seed: u64) -> Self {
        RcLinkState {
            station: Station::new(
                cfg.rc_mac,
                cfg.rc_ip,
                cfg.bssid(),
                cfg.wep_key.clone(),
                IvSource::random(iv_seed),
            ),
            phase: RcPhase::Resolving,
            drone_mac: None,
            next_beacon_us: 0,
            next_arp_us: 0,
            next_status_us: 0,
            last_heard_us: 0,
            status_counter: 0,
            command: movement_for(CommandId::Idle),
        }
    }

    pub fn phase(&self) -> RcPhase {
        self.phase
    }

    pub fn drone_mac(&self) -> Option<MacAddr> {
        self.drone_mac
    }

    pub fn step(&mut self, ev: LinkEvent<'_>, now: u64, cfg: &LinkConfig) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        match ev {
            LinkEvent::Tick => self.on_tick(now, cfg, &mut out),
            LinkEvent::Frame(raw) => self.on_frame(raw, now, cfg, &mut out),
        }
        out
    }

    fn on_tick(&mut self, now: u64, cfg: &LinkConfig, out: &mut Vec<Vec<u8>>) {
        if now >= self.next_beacon_us {
            out.push(self.station.beacon(now, cfg.beacon_interval_ms, cfg.channel));
            self.next_beacon_us = now + cfg.beacon_interval_ms * 1000;
        }
        // Drone went quiet (e.g. it expired us): start over.
        if self.phase == RcPhase::Connected && now.saturating_sub(self.last_heard_us) > cfg.peer_timeout_ms * 1000 {
            self.phase = RcPhase::Resolving;
            self.next_arp_us = now;
        }
        match self.phase {
            RcPhase::Resolving => {
                if now >= self.next_arp_us {
                    let req = ArpPacket {
                        op: ArpOp::Request,
                        sender_mac: self.station.mac,
                        sender_ip: cfg.rc_ip,
                        target_mac: MacAddr::ZERO,
                        target_ip: cfg.drone_ip,
                    };
                    out.push(self.station.arp(MacAddr::BROADCAST, &req));
                    self.next_arp_us = now + ARP_RETRY_US;
                }
            }
            RcPhase::Connected => {
                let drone = self.drone_mac.expect("connected implies resolved");
                let t = reference_templates();
                let ctl = encode_control(
                    self.command,
                    &t.control_prefix,
                    &t.control_unknown,
                    CrcConfig::default(),
                );
                out.push(self.station.udp(drone, cfg.drone_ip, &ctl));
                if now >= self.next_status_us {
                    self.status_counter += 1;
                    let p = filler_payload(STATUS_LEN, self.status_counter);
                    out.push(self.station.udp(drone, cfg.drone_ip, &p));
                    self.next_status_us = now + STATUS_PERIOD_US;
                }
            }
        }
    }

    fn on_frame(&mut self, raw: &[u8], now: u64, cfg: &LinkConfig, out: &mut Vec<Vec<u8>>) {
        let Some((header, msdu)) = self.station.open(raw) else {
            return;
        };
        match parse_msdu(&msdu) {
            Msdu::Arp(a)
                if a.op == ArpOp::Reply
                    && a.sender_ip == cfg.drone_ip
                    && a.target_mac == self.station.mac
                    && self.phase == RcPhase::Resolving =>
            {
                self.drone_mac = Some(a.sender_mac);
                self.phase = RcPhase::Connected;
                self.last_heard_us = now;
                let init = &reference_templates().initiator;
                out.push(self.station.udp(a.sender_mac, cfg.drone_ip, init));
            }
            Msdu::Udp {
                src_port: CONTROL_PORT,
                payload,
                ..
            } if Some(header.src) == self.drone_mac && Telemetry::parse(&payload).is_some() => {
                self.last_heard_us = now;
            }
            _ => {}
        }
    }
}
