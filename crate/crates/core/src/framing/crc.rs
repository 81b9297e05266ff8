//! Reflected CRC-16 of the Kermit family with a configurable seed.

use serde::{Deserialize, Serialize};

/// Reflected form of the CCITT generator 0x1021.
pub const KERMIT_POLY: u16 = 0x8408;

/// Seed used by the DUML envelope checksum.
pub const DUML_SEED: u16 = 0x3692;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CrcConfig {
    pub poly: u16,
    pub seed: u16,
}

impl CrcConfig {
    pub const fn kermit(seed: u16) -> Self {
        CrcConfig {
            poly: KERMIT_POLY,
            seed,
        }
    }
}

impl Default for CrcConfig {
    fn default() -> Self {
        CrcConfig::kermit(DUML_SEED)
    }
}

const fn build_table(poly: u16) -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u16;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ poly } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static KERMIT_TABLE: [u16; 256] = build_table(KERMIT_POLY);

/// CRC-16/KERMIT with the seed taken from `cfg`. No final xor, the register
/// is returned as is, so an empty input yields the seed.
pub fn crc16_kermit(data: &[u8], cfg: CrcConfig) -> u16 {
    if cfg.poly == KERMIT_POLY {
        data.iter().fold(cfg.seed, |crc, &b| {
            (crc >> 8) ^ KERMIT_TABLE[((crc ^ b as u16) & 0xff) as usize]
        })
    } else {
        let table = build_table(cfg.poly);
        data.iter().fold(cfg.seed, |crc, &b| {
            (crc >> 8) ^ table[((crc ^ b as u16) & 0xff) as usize]
        })
    }
}
