use serde::Serialize;

use crate::captureio::{CaptureRecord, FLAG_DECRYPTED};
use crate::linkproto::{encode_data, parse_dot11, DataHeader, Dot11Frame};
use crate::wepcrypt::{wep_decrypt, WepFrame, WepKey};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DecryptStats {
    pub decrypted: usize,
    pub passed_through: usize,
    /// Protected frames that failed the ICV check; left out of the output.
    pub dropped: usize,
}

/// Produces a new capture where every protected data frame that decrypts
/// under `key` carries its plaintext MSDU (protected bit cleared, record
/// flag set). Unprotected frames are copied unchanged.
pub fn decrypt_capture(capture: &[CaptureRecord], key: &WepKey) -> (Vec<CaptureRecord>, DecryptStats) {
    let mut stats = DecryptStats::default();
    let mut out = Vec::with_capacity(capture.len());
    for r in capture {
        if r.is_decrypted() {
            stats.passed_through += 1;
            out.push(r.clone());
            continue;
        }
        match parse_dot11(&r.frame) {
            Dot11Frame::Data { header, body } if header.protected => {
                let plain = WepFrame::from_bytes(&body).ok().and_then(|f| wep_decrypt(key, &f).ok());
                match plain {
                    Some(msdu) => {
                        let h = DataHeader {
                            protected: false,
                            ..header
                        };
                        out.push(CaptureRecord {
                            ts_us: r.ts_us,
                            channel: r.channel,
                            flags: r.flags | FLAG_DECRYPTED,
                            frame: encode_data(&h, &msdu),
                        });
                        stats.decrypted += 1;
                    }
                    None => stats.dropped += 1,
                }
            }
            _ => {
                stats.passed_through += 1;
                out.push(r.clone());
            }
        }
    }
    (out, stats)
}
