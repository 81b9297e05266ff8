//! Classic libpcap export so captures open in standard dissectors.

use std::path::Path;

use super::{write_atomic, CaptureError, CaptureRecord};

pub const LINKTYPE_IEEE802_11: u32 = 105;
const PCAP_MAGIC_US: u32 = 0xa1b2_c3d4;
const SNAPLEN: u32 = 65_535;

pub fn encode_pcap(records: &[CaptureRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + records.iter().map(|r| 16 + r.frame.len()).sum::<usize>());
    out.extend_from_slice(&PCAP_MAGIC_US.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes()); // thiszone
    out.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
    out.extend_from_slice(&SNAPLEN.to_le_bytes());
    out.extend_from_slice(&LINKTYPE_IEEE802_11.to_le_bytes());
    for r in records {
        let len = r.frame.len() as u32;
        out.extend_from_slice(&((r.ts_us / 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&((r.ts_us % 1_000_000) as u32).to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&r.frame);
    }
    out
}

pub fn export_pcap(records: &[CaptureRecord], path: impl AsRef<Path>) -> Result<usize, CaptureError> {
    write_atomic(path.as_ref(), &encode_pcap(records))?;
    Ok(records.len())
}
