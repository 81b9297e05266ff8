//! The slice of IEEE 802.11 the link uses: IBSS beacons, data frames
//! (optionally WEP-protected) and Acks. No FCS is carried.

use super::MacAddr;

pub const DOT11_DATA_HEADER_LEN: usize = 24;
const BEACON_FIXED_LEN: usize = 24 + 12;

const FC_BEACON: u8 = 0x80;
const FC_DATA: u8 = 0x08;
const FC_ACK: u8 = 0xd4;
const FLAG_PROTECTED: u8 = 0x40;

const CAP_IBSS: u16 = 0x0002;
const CAP_PRIVACY: u16 = 0x0010;

const IE_SSID: u8 = 0;
const IE_RATES: u8 = 1;
const IE_DS_PARAM: u8 = 3;
const IE_IBSS_PARAM: u8 = 6;
// 6, 9, 12, 18, 24, 36, 48, 54 Mb/s; basic rates flagged.
const OFDM_RATES: [u8; 8] = [0x8c, 0x12, 0x98, 0x24, 0xb0, 0x48, 0x60, 0x6c];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Beacon {
    pub src: MacAddr,
    pub bssid: MacAddr,
    pub seq: u16,
    pub timestamp_us: u64,
    pub interval_tu: u16,
    pub capability: u16,
    pub ssid: Vec<u8>,
    pub channel: Option<u8>,
}

impl Beacon {
    pub fn is_ibss(&self) -> bool {
        self.capability & CAP_IBSS != 0
    }

    pub fn is_hidden(&self) -> bool {
        self.ssid.iter().all(|&b| b == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataHeader {
    pub dst: MacAddr,
    pub src: MacAddr,
    pub bssid: MacAddr,
    pub seq: u16,
    pub protected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dot11Frame {
    Beacon(Beacon),
    Data { header: DataHeader, body: Vec<u8> },
    Ack { ra: MacAddr },
    Other,
}

/// An IBSS beacon with a zero-length (hidden) SSID element.
pub fn encode_beacon(b: &Beacon) -> Vec<u8> {
    let mut out = Vec::with_capacity(BEACON_FIXED_LEN + 20);
    out.extend_from_slice(&[FC_BEACON, 0x00, 0x00, 0x00]);
    out.extend_from_slice(&MacAddr::BROADCAST.0);
    out.extend_from_slice(&b.src.0);
    out.extend_from_slice(&b.bssid.0);
    out.extend_from_slice(&(b.seq << 4).to_le_bytes());
    out.extend_from_slice(&b.timestamp_us.to_le_bytes());
    out.extend_from_slice(&b.interval_tu.to_le_bytes());
    out.extend_from_slice(&b.capability.to_le_bytes());
    out.push(IE_SSID);
    out.push(b.ssid.len() as u8);
    out.extend_from_slice(&b.ssid);
    out.push(IE_RATES);
    out.push(OFDM_RATES.len() as u8);
    out.extend_from_slice(&OFDM_RATES);
    if let Some(ch) = b.channel {
        out.extend_from_slice(&[IE_DS_PARAM, 1, ch]);
    }
    out.extend_from_slice(&[IE_IBSS_PARAM, 2, 0, 0]);
    out
}

pub fn ibss_capability(privacy: bool) -> u16 {
    CAP_IBSS | if privacy { CAP_PRIVACY } else { 0 }
}

pub fn encode_data(h: &DataHeader, body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(DOT11_DATA_HEADER_LEN + body.len());
    out.push(FC_DATA);
    out.push(if h.protected { FLAG_PROTECTED } else { 0 });
    out.extend_from_slice(&[0x00, 0x00]);
    out.extend_from_slice(&h.dst.0);
    out.extend_from_slice(&h.src.0);
    out.extend_from_slice(&h.bssid.0);
    out.extend_from_slice(&(h.seq << 4).to_le_bytes());
    out.extend_from_slice(body);
    out
}

pub fn encode_ack(ra: MacAddr) -> Vec<u8> {
    let mut out = vec![FC_ACK, 0x00, 0x00, 0x00];
    out.extend_from_slice(&ra.0);
    out
}

/// Anything malformed or outside the subset above parses as `Other`.
pub fn parse_dot11(raw: &[u8]) -> Dot11Frame {
    if raw.len() < 10 {
        return Dot11Frame::Other;
    }
    match raw[0] {
        FC_ACK => Dot11Frame::Ack {
            ra: MacAddr::from_slice(&raw[4..10]),
        },
        FC_BEACON => parse_beacon(raw).map_or(Dot11Frame::Other, Dot11Frame::Beacon),
        FC_DATA if raw.len() >= DOT11_DATA_HEADER_LEN && raw[1] & 0x03 == 0 => Dot11Frame::Data {
            header: DataHeader {
                dst: MacAddr::from_slice(&raw[4..10]),
                src: MacAddr::from_slice(&raw[10..16]),
                bssid: MacAddr::from_slice(&raw[16..22]),
                seq: u16::from_le_bytes([raw[22], raw[23]]) >> 4,
                protected: raw[1] & FLAG_PROTECTED != 0,
            },
            body: raw[DOT11_DATA_HEADER_LEN..].to_vec(),
        },
        _ => Dot11Frame::Other,
    }
}

fn parse_beacon(raw: &[u8]) -> Option<Beacon> {
    if raw.len() < BEACON_FIXED_LEN {
        return None;
    }
    let mut b = Beacon {
        src: MacAddr::from_slice(&raw[10..16]),
        bssid: MacAddr::from_slice(&raw[16..22]),
        seq: u16::from_le_bytes([raw[22], raw[23]]) >> 4,
        timestamp_us: u64::from_le_bytes(raw[24..32].try_into().ok()?),
        interval_tu: u16::from_le_bytes([raw[32], raw[33]]),
        capability: u16::from_le_bytes([raw[34], raw[35]]),
        ssid: Vec::new(),
        channel: None,
    };
    let mut ies = &raw[BEACON_FIXED_LEN..];
    let mut saw_ssid = false;
    while ies.len() >= 2 {
        let (id, len) = (ies[0], ies[1] as usize);
        let val = ies.get(2..2 + len)?;
        match id {
            IE_SSID => {
                b.ssid = val.to_vec();
                saw_ssid = true;
            }
            IE_DS_PARAM if len == 1 => b.channel = Some(val[0]),
            _ => {}
        }
        ies = &ies[2 + len..];
    }
    if !ies.is_empty() || !saw_ssid {
        return None;
    }
    Some(b)
}
