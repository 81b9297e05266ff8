use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, CaptureError};

pub const MAGIC: [u8; 4] = *b"DWCP";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 8;
const RECORD_HEADER_LEN: usize = 12;

/// Frame body was decrypted before storage (IV and ICV stripped).
pub const FLAG_DECRYPTED: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRecord {
    pub ts_us: u64,
    pub channel: u8,
    pub flags: u8,
    #[serde(with = "hex")]
    pub frame: Vec<u8>,
}

impl CaptureRecord {
    pub fn new(ts_us: u64, channel: u8, frame: Vec<u8>) -> Self {
        CaptureRecord {
            ts_us,
            channel,
            flags: 0,
            frame,
        }
    }

    pub fn is_decrypted(&self) -> bool {
        self.flags & FLAG_DECRYPTED != 0
    }

    pub fn ts_secs(&self) -> f64 {
        self.ts_us as f64 / 1e6
    }
}

pub fn encode_capture(records: &[CaptureRecord]) -> Result<Vec<u8>, CaptureError> {
    let body: usize = records.iter().map(|r| RECORD_HEADER_LEN + r.frame.len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + body);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    let mut last = 0u64;
    for (index, r) in records.iter().enumerate() {
        if r.ts_us < last {
            return Err(CaptureError::UnorderedRecords { index });
        }
        last = r.ts_us;
        let len = u16::try_from(r.frame.len()).map_err(|_| CaptureError::FrameTooLong(r.frame.len()))?;
        out.extend_from_slice(&r.ts_us.to_le_bytes());
        out.push(r.channel);
        out.push(r.flags);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&r.frame);
    }
    Ok(out)
}

pub fn decode_capture(bytes: &[u8]) -> Result<Vec<CaptureRecord>, CaptureError> {
    if bytes.len() < HEADER_LEN {
        return Err(if bytes.len() >= 4 && bytes[..4] != MAGIC {
            CaptureError::BadMagic
        } else {
            CaptureError::Truncated(bytes.len())
        });
    }
    if bytes[..4] != MAGIC {
        return Err(CaptureError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CaptureError::UnsupportedVersion(version));
    }
    let mut records = Vec::new();
    let mut pos = HEADER_LEN;
    let mut last = 0u64;
    while pos < bytes.len() {
        if bytes.len() - pos < RECORD_HEADER_LEN {
            return Err(CaptureError::Truncated(pos));
        }
        let h = &bytes[pos..pos + RECORD_HEADER_LEN];
        let ts_us = u64::from_le_bytes(h[..8].try_into().unwrap());
        let channel = h[8];
        let flags = h[9];
        let len = u16::from_le_bytes([h[10], h[11]]) as usize;
        let start = pos + RECORD_HEADER_LEN;
        if bytes.len() - start < len {
            return Err(CaptureError::Truncated(pos));
        }
        if ts_us < last {
            return Err(CaptureError::UnorderedRecords { index: records.len() });
        }
        last = ts_us;
        records.push(CaptureRecord {
            ts_us,
            channel,
            flags,
            frame: bytes[start..start + len].to_vec(),
        });
        pos = start + len;
    }
    Ok(records)
}

/// Writes `records` atomically; returns the number written.
pub fn write_capture(path: impl AsRef<Path>, records: &[CaptureRecord]) -> Result<usize, CaptureError> {
    let bytes = encode_capture(records)?;
    write_atomic(path.as_ref(), &bytes)?;
    Ok(records.len())
}

pub fn read_capture(path: impl AsRef<Path>) -> Result<Vec<CaptureRecord>, CaptureError> {
    decode_capture(&std::fs::read(path)?)
}
