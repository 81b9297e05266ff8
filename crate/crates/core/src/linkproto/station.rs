//! Per-node frame encoder: sequence numbers, IP ids and WEP IVs.

use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dot11::{encode_beacon, encode_data, ibss_capability, parse_dot11, Beacon, DataHeader, Dot11Frame};
use super::payload::{arp_msdu, build_ipv4_udp, ArpPacket, CONTROL_PORT};
use super::MacAddr;
use crate::wepcrypt::{wep_decrypt, wep_encrypt, Iv, WepFrame, WepKey};

#[derive(Debug, Clone)]
pub enum IvSource {
    Random(Box<ChaCha8Rng>),
    /// Counts up from the given value, wrapping at 2^24.
    Sequential(u32),
}

impl IvSource {
    pub fn random(seed: u64) -> Self {
        IvSource::Random(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn next_iv(&mut self) -> Iv {
        match self {
            IvSource::Random(rng) => Iv(rng.gen()),
            IvSource::Sequential(n) => {
                let iv = Iv::from_u32(*n);
                *n = (*n + 1) & 0x00ff_ffff;
                iv
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Station {
    pub mac: MacAddr,
    pub ip: Ipv4Addr,
    pub bssid: MacAddr,
    key: WepKey,
    ivs: IvSource,
    seq: u16,
    ip_id: u16,
}

impl Station {
    pub fn new(mac: MacAddr, ip: Ipv4Addr, bssid: MacAddr, key: WepKey, ivs: IvSource) -> Self {
        Station {
            mac,
            ip,
            bssid,
            key,
            ivs,
            seq: 0,
            ip_id: 0,
        }
    }

    pub fn key(&self) -> &WepKey {
        &self.key
    }

    fn next_seq(&mut self) -> u16 {
        let s = self.seq;
        self.seq = (self.seq + 1) & 0x0fff;
        s
    }

    pub fn beacon(&mut self, now_us: u64, interval_ms: u64, channel: u8) -> Vec<u8> {
        let seq = self.next_seq();
        encode_beacon(&Beacon {
            src: self.mac,
            bssid: self.bssid,
            seq,
            timestamp_us: now_us,
            interval_tu: (interval_ms * 1000 / 1024) as u16,
            capability: ibss_capability(true),
            ssid: Vec::new(),
            channel: Some(channel),
        })
    }

    /// WEP-encrypts `msdu` into a protected data frame addressed to `dst`.
    pub fn encrypted(&mut self, dst: MacAddr, msdu: &[u8]) -> Vec<u8> {
        let iv = self.ivs.next_iv();
        let body = wep_encrypt(&self.key, iv, msdu).to_bytes();
        let seq = self.next_seq();
        encode_data(
            &DataHeader {
                dst,
                src: self.mac,
                bssid: self.bssid,
                seq,
                protected: true,
            },
            &body,
        )
    }

    pub fn udp(&mut self, dst_mac: MacAddr, dst_ip: Ipv4Addr, payload: &[u8]) -> Vec<u8> {
        let id = self.ip_id;
        self.ip_id = self.ip_id.wrapping_add(1);
        let msdu = build_ipv4_udp(self.ip, dst_ip, CONTROL_PORT, CONTROL_PORT, id, payload);
        self.encrypted(dst_mac, &msdu)
    }

    pub fn arp(&mut self, dst_mac: MacAddr, p: &ArpPacket) -> Vec<u8> {
        self.encrypted(dst_mac, &arp_msdu(p))
    }

    /// Decrypts a protected data frame in this station's BSS.
    pub fn open(&self, raw: &[u8]) -> Option<(DataHeader, Vec<u8>)> {
        match parse_dot11(raw) {
            Dot11Frame::Data { header, body } if header.protected && header.bssid == self.bssid => {
                let frame = WepFrame::from_bytes(&body).ok()?;
                let msdu = wep_decrypt(&self.key, &frame).ok()?;
                Some((header, msdu))
            }
            _ => None,
        }
    }
}
