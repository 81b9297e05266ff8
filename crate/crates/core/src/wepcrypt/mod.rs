//! WEP encryption and key recovery.

mod ptw;
mod rc4;
mod session;
mod wep;

pub use ptw::{ptw_crack, verify_key, KeyVoteTable, PtwSample, SearchBudget, KEYSTREAM_SAMPLE_LEN};
pub use rc4::{rc4_keystream, Rc4};
pub use session::{arp_known_plaintext, crack_session, extract_samples, CrackReport};
pub use wep::{icv, recover_keystream, wep_decrypt, wep_encrypt, Iv, WepFrame, WepKey, ICV_LEN, WEP_HEADER_LEN};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WepError {
    #[error("rc4 seed must be 1..=256 bytes, got {0}")]
    BadSeedLength(usize),
    #[error("WEP key must be 5 or 13 bytes, got {0}")]
    BadKeyLength(usize),
    #[error("not a hex WEP key: {0:?}")]
    BadKeyHex(String),
    #[error("WEP body too short ({0} bytes)")]
    FrameTooShort(usize),
    #[error("ICV mismatch after decryption")]
    IcvMismatch,
    #[error("known plaintext ({known} bytes) longer than ciphertext ({available} bytes)")]
    PlaintextTooLong { known: usize, available: usize },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("no ARP-shaped frames in capture")]
    NoArpTemplateMatch,
    #[error("key not found within search budget ({tried} candidates tried)")]
    NotFoundWithinBudget { tried: usize },
}
