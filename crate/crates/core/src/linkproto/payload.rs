//! MSDU contents: LLC/SNAP encapsulated IPv4/UDP datagrams and ARP.

use std::net::Ipv4Addr;

use super::MacAddr;

pub const LLC_SNAP_LEN: usize = 8;
pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_ARP: u16 = 0x0806;
const LLC_SNAP_PREFIX: [u8; 6] = [0xaa, 0xaa, 0x03, 0x00, 0x00, 0x00];

const IPV4_HEADER_LEN: usize = 20;
const UDP_HEADER_LEN: usize = 8;
/// LLC/SNAP + IPv4 + UDP headers in front of every datagram payload.
pub const UDP_MSDU_OVERHEAD: usize = LLC_SNAP_LEN + IPV4_HEADER_LEN + UDP_HEADER_LEN;

const ARP_LEN: usize = 28;
pub const ARP_MSDU_LEN: usize = LLC_SNAP_LEN + ARP_LEN;

/// UDP port both ends of the link use for flight control traffic.
pub const CONTROL_PORT: u16 = 9003;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArpOp {
    Request,
    Reply,
}

impl ArpOp {
    fn code(self) -> u16 {
        match self {
            ArpOp::Request => 1,
            ArpOp::Reply => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArpPacket {
    pub op: ArpOp,
    pub sender_mac: MacAddr,
    pub sender_ip: Ipv4Addr,
    pub target_mac: MacAddr,
    pub target_ip: Ipv4Addr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Msdu {
    Arp(ArpPacket),
    Udp {
        src_ip: Ipv4Addr,
        dst_ip: Ipv4Addr,
        src_port: u16,
        dst_port: u16,
        payload: Vec<u8>,
    },
    Other,
}

fn llc_snap(ethertype: u16) -> [u8; LLC_SNAP_LEN] {
    let mut h = [0u8; LLC_SNAP_LEN];
    h[..6].copy_from_slice(&LLC_SNAP_PREFIX);
    h[6..].copy_from_slice(&ethertype.to_be_bytes());
    h
}

pub fn arp_msdu(p: &ArpPacket) -> Vec<u8> {
    let mut out = Vec::with_capacity(ARP_MSDU_LEN);
    out.extend_from_slice(&llc_snap(ETHERTYPE_ARP));
    out.extend_from_slice(&[0x00, 0x01, 0x08, 0x00, 0x06, 0x04]);
    out.extend_from_slice(&p.op.code().to_be_bytes());
    out.extend_from_slice(&p.sender_mac.0);
    out.extend_from_slice(&p.sender_ip.octets());
    out.extend_from_slice(&p.target_mac.0);
    out.extend_from_slice(&p.target_ip.octets());
    out
}

pub fn parse_arp(arp: &[u8]) -> Option<ArpPacket> {
    if arp.len() != ARP_LEN || arp[..6] != [0x00, 0x01, 0x08, 0x00, 0x06, 0x04] {
        return None;
    }
    let op = match u16::from_be_bytes([arp[6], arp[7]]) {
        1 => ArpOp::Request,
        2 => ArpOp::Reply,
        _ => return None,
    };
    let ip = |o: usize| Ipv4Addr::new(arp[o], arp[o + 1], arp[o + 2], arp[o + 3]);
    Some(ArpPacket {
        op,
        sender_mac: MacAddr::from_slice(&arp[8..14]),
        sender_ip: ip(14),
        target_mac: MacAddr::from_slice(&arp[18..24]),
        target_ip: ip(24),
    })
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum: u32 = header.chunks(2).map(|w| u16::from_be_bytes([w[0], w[1]]) as u32).sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// LLC/SNAP + IPv4 (DF, TTL 64) + UDP (checksum disabled) around `payload`.
pub fn build_ipv4_udp(
    src_ip: Ipv4Addr,
    dst_ip: Ipv4Addr,
    src_port: u16,
    dst_port: u16,
    ip_id: u16,
    payload: &[u8],
) -> Vec<u8> {
    let udp_len = (UDP_HEADER_LEN + payload.len()) as u16;
    let total = IPV4_HEADER_LEN as u16 + udp_len;
    let mut ip = [0u8; IPV4_HEADER_LEN];
    ip[0] = 0x45;
    ip[2..4].copy_from_slice(&total.to_be_bytes());
    ip[4..6].copy_from_slice(&ip_id.to_be_bytes());
    ip[6] = 0x40;
    ip[8] = 64;
    ip[9] = 17;
    ip[12..16].copy_from_slice(&src_ip.octets());
    ip[16..20].copy_from_slice(&dst_ip.octets());
    let csum = ipv4_checksum(&ip);
    ip[10..12].copy_from_slice(&csum.to_be_bytes());

    let mut out = Vec::with_capacity(UDP_MSDU_OVERHEAD + payload.len());
    out.extend_from_slice(&llc_snap(ETHERTYPE_IPV4));
    out.extend_from_slice(&ip);
    out.extend_from_slice(&src_port.to_be_bytes());
    out.extend_from_slice(&dst_port.to_be_bytes());
    out.extend_from_slice(&udp_len.to_be_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(payload);
    out
}

pub fn parse_msdu(msdu: &[u8]) -> Msdu {
    if msdu.len() < LLC_SNAP_LEN || msdu[..6] != LLC_SNAP_PREFIX {
        return Msdu::Other;
    }
    let rest = &msdu[LLC_SNAP_LEN..];
    match u16::from_be_bytes([msdu[6], msdu[7]]) {
        ETHERTYPE_ARP => parse_arp(rest).map_or(Msdu::Other, Msdu::Arp),
        ETHERTYPE_IPV4 => parse_udp(rest).unwrap_or(Msdu::Other),
        _ => Msdu::Other,
    }
}

fn parse_udp(ip: &[u8]) -> Option<Msdu> {
    if ip.len() < IPV4_HEADER_LEN + UDP_HEADER_LEN || ip[0] != 0x45 || ip[9] != 17 {
        return None;
    }
    if ipv4_checksum(&ip[..IPV4_HEADER_LEN]) != 0 {
        return None;
    }
    let total = u16::from_be_bytes([ip[2], ip[3]]) as usize;
    if total != ip.len() {
        return None;
    }
    let udp = &ip[IPV4_HEADER_LEN..];
    let udp_len = u16::from_be_bytes([udp[4], udp[5]]) as usize;
    if udp_len != udp.len() {
        return None;
    }
    Some(Msdu::Udp {
        src_ip: Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]),
        dst_ip: Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]),
        src_port: u16::from_be_bytes([udp[0], udp[1]]),
        dst_port: u16::from_be_bytes([udp[2], udp[3]]),
        payload: udp[UDP_HEADER_LEN..].to_vec(),
    })
}
