//! Capture persistence: the native `DWCP` record file, pcap export and
//! JSON-lines observation logs.

mod dwcp;
mod obslog;
mod pcap;

pub use dwcp::{
    decode_capture, encode_capture, read_capture, write_capture, CaptureRecord, FLAG_DECRYPTED, HEADER_LEN, MAGIC,
    VERSION,
};
pub use obslog::{parse_observations, read_observations, render_observations, write_observations};
pub use pcap::{encode_pcap, export_pcap, LINKTYPE_IEEE802_11};

use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a capture file (bad magic)")]
    BadMagic,
    #[error("unsupported capture version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated capture at byte {0}")]
    Truncated(usize),
    #[error("record {index} is older than its predecessor")]
    UnorderedRecords { index: usize },
    #[error("frame of {0} bytes exceeds the 16-bit length field")]
    FrameTooLong(usize),
    #[error("observation log line {line}: {msg}")]
    BadObservation { line: usize, msg: String },
}

// Write to a sibling temp file and rename over the target so readers never
// see a half-written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CaptureError> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CaptureError::Io(e.error))?;
    Ok(())
}
