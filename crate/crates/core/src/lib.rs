//! Simulated Enhanced Wi-Fi drone link and the attacker toolchain that
//! breaks it: capture, WEP key recovery, correlation analysis of control
//! payloads, packet forging, replay and control hijack.

pub mod analysis;
pub mod attack;
pub mod captureio;
pub mod framing;
pub mod linkproto;
pub mod simworld;
pub mod wepcrypt;
