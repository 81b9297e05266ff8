use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rc4::Rc4;
use super::WepError;

pub const ICV_LEN: usize = 4;
/// IV (3 bytes) plus the key-index byte.
pub const WEP_HEADER_LEN: usize = 4;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct WepKey(Vec<u8>);

impl WepKey {
    pub const LEN_40: usize = 5;
    pub const LEN_104: usize = 13;

    pub fn new(bytes: &[u8]) -> Result<Self, WepError> {
        match bytes.len() {
            5 | 13 => Ok(WepKey(bytes.to_vec())),
            n => Err(WepError::BadKeyLength(n)),
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    /// Per-frame RC4 seed: IV followed by the key.
    pub fn seed_for(&self, iv: Iv) -> Vec<u8> {
        let mut seed = Vec::with_capacity(3 + self.0.len());
        seed.extend_from_slice(&iv.0);
        seed.extend_from_slice(&self.0);
        seed
    }
}

impl fmt::Debug for WepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WepKey({})", self.to_hex())
    }
}

impl fmt::Display for WepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for WepKey {
    type Err = WepError;

    /// Hex, optionally colon separated.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s.chars().filter(|c| *c != ':').collect();
        let bytes = hex::decode(&cleaned).map_err(|_| WepError::BadKeyHex(s.to_string()))?;
        WepKey::new(&bytes)
    }
}

impl Serialize for WepKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for WepKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Iv(pub [u8; 3]);

impl Iv {
    pub fn from_u32(v: u32) -> Self {
        Iv([(v >> 16) as u8, (v >> 8) as u8, v as u8])
    }

    pub fn as_u32(self) -> u32 {
        (self.0[0] as u32) << 16 | (self.0[1] as u32) << 8 | self.0[2] as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WepFrame {
    pub iv: Iv,
    pub key_index: u8,
    /// Encrypted payload followed by the encrypted ICV.
    pub ciphertext: Vec<u8>,
}

impl WepFrame {
    /// `[iv0 iv1 iv2][keyid << 6][ciphertext..]`, the layout inside an
    /// 802.11 data frame body.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(WEP_HEADER_LEN + self.ciphertext.len());
        out.extend_from_slice(&self.iv.0);
        out.push((self.key_index & 0x03) << 6);
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(body: &[u8]) -> Result<Self, WepError> {
        if body.len() < WEP_HEADER_LEN + ICV_LEN {
            return Err(WepError::FrameTooShort(body.len()));
        }
        Ok(WepFrame {
            iv: Iv([body[0], body[1], body[2]]),
            key_index: body[3] >> 6,
            ciphertext: body[WEP_HEADER_LEN..].to_vec(),
        })
    }
}

pub fn icv(plaintext: &[u8]) -> [u8; ICV_LEN] {
    crc32fast::hash(plaintext).to_le_bytes()
}

pub fn wep_encrypt(key: &WepKey, iv: Iv, plaintext: &[u8]) -> WepFrame {
    let mut buf = Vec::with_capacity(plaintext.len() + ICV_LEN);
    buf.extend_from_slice(plaintext);
    buf.extend_from_slice(&icv(plaintext));
    Rc4::new(&key.seed_for(iv))
        .expect("iv plus key is at most 16 bytes")
        .apply(&mut buf);
    WepFrame {
        iv,
        key_index: 0,
        ciphertext: buf,
    }
}

pub fn wep_decrypt(key: &WepKey, frame: &WepFrame) -> Result<Vec<u8>, WepError> {
    if frame.ciphertext.len() < ICV_LEN {
        return Err(WepError::FrameTooShort(frame.ciphertext.len()));
    }
    let mut buf = frame.ciphertext.clone();
    Rc4::new(&key.seed_for(frame.iv))
        .expect("iv plus key is at most 16 bytes")
        .apply(&mut buf);
    let split = buf.len() - ICV_LEN;
    if buf[split..] != icv(&buf[..split]) {
        return Err(WepError::IcvMismatch);
    }
    buf.truncate(split);
    Ok(buf)
}

/// Keystream prefix exposed by a known plaintext.
pub fn recover_keystream(frame: &WepFrame, known_plaintext: &[u8]) -> Result<Vec<u8>, WepError> {
    if known_plaintext.len() > frame.ciphertext.len() {
        return Err(WepError::PlaintextTooLong {
            known: known_plaintext.len(),
            available: frame.ciphertext.len(),
        });
    }
    Ok(frame
        .ciphertext
        .iter()
        .zip(known_plaintext)
        .map(|(c, p)| c ^ p)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wepcrypt::rc4::rc4_keystream;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Bitwise reflected CRC-32 (poly 0xEDB88320, init and xorout all ones).
    fn crc32_oracle(data: &[u8]) -> u32 {
        let mut crc = 0xffff_ffffu32;
        for &b in data {
            crc ^= b as u32;
            for _ in 0..8 {
                crc = if crc & 1 != 0 {
                    (crc >> 1) ^ 0xEDB8_8320
                } else {
                    crc >> 1
                };
            }
        }
        !crc
    }

    fn key40() -> WepKey {
        WepKey::new(&[0x1f, 0x2e, 0x3d, 0x4c, 0x5b]).unwrap()
    }

    #[test]
    fn icv_matches_oracle() {
        assert_eq!(crc32_oracle(b"123456789"), 0xCBF4_3926);
        for n in [0usize, 1, 17, 64, 300] {
            let data: Vec<u8> = (0..n).map(|i| (i * 7) as u8).collect();
            assert_eq!(icv(&data), crc32_oracle(&data).to_le_bytes());
        }
    }

    #[test]
    fn empty_plaintext_gives_icv_only() {
        let f = wep_encrypt(&key40(), Iv([1, 2, 3]), &[]);
        assert_eq!(f.ciphertext.len(), 4);
        assert_eq!(wep_decrypt(&key40(), &f).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn same_iv_reuses_keystream() {
        let k = key40();
        let iv = Iv([9, 9, 9]);
        let p1 = b"first message!".to_vec();
        let p2 = b"other payload.".to_vec();
        let c1 = wep_encrypt(&k, iv, &p1);
        let c2 = wep_encrypt(&k, iv, &p2);
        let mut p1x = p1.clone();
        p1x.extend_from_slice(&icv(&p1));
        let mut p2x = p2.clone();
        p2x.extend_from_slice(&icv(&p2));
        for i in 0..c1.ciphertext.len() {
            assert_eq!(c1.ciphertext[i] ^ c2.ciphertext[i], p1x[i] ^ p2x[i]);
        }
    }

    #[test]
    fn wrong_keys_fail_icv() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = key40();
        let frame = wep_encrypt(&k, Iv([4, 5, 6]), b"some plaintext payload of moderate size");
        let mut accepted = 0;
        for _ in 0..2000 {
            let mut wrong = [0u8; 5];
            rng.fill(&mut wrong);
            if wrong == [0x1f, 0x2e, 0x3d, 0x4c, 0x5b] {
                continue;
            }
            if wep_decrypt(&WepKey::new(&wrong).unwrap(), &frame).is_ok() {
                accepted += 1;
            }
        }
        assert_eq!(accepted, 0);
    }

    // CRC-32 is affine: crc(a ^ d) = crc(a) ^ crc(d) ^ crc(0..0). Flipping
    // ciphertext bits and patching the encrypted ICV accordingly is accepted.
    #[test]
    fn bit_flip_with_icv_fixup_is_accepted() {
        let k = key40();
        let plain = b"ARP says hello to 192.168.2.1".to_vec();
        let mut frame = wep_encrypt(&k, Iv([7, 7, 7]), &plain);
        let mut delta = vec![0u8; plain.len()];
        delta[3] = 0x20;
        delta[10] = 0x01;
        let zeros = vec![0u8; plain.len()];
        let fix = crc32_oracle(&delta) ^ crc32_oracle(&zeros);
        for (c, d) in frame.ciphertext.iter_mut().zip(&delta) {
            *c ^= d;
        }
        let n = plain.len();
        for (i, b) in fix.to_le_bytes().iter().enumerate() {
            frame.ciphertext[n + i] ^= b;
        }
        let got = wep_decrypt(&k, &frame).unwrap();
        let want: Vec<u8> = plain.iter().zip(&delta).map(|(p, d)| p ^ d).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn recovered_keystream_decrypts_same_iv_frame() {
        let k = WepKey::new(&[0xAB; 13]).unwrap();
        let iv = Iv([0, 0xff, 0x10]);
        let known = vec![0xAA, 0xAA, 0x03, 0, 0, 0, 0x08, 0x06, 0, 1, 8, 0, 6, 4, 0, 1];
        let f1 = wep_encrypt(&k, iv, &known);
        let ks = recover_keystream(&f1, &known).unwrap();
        assert_eq!(ks, rc4_keystream(&k.seed_for(iv), 16).unwrap());
        let re: Vec<u8> = known.iter().zip(&ks).map(|(p, k)| p ^ k).collect();
        assert_eq!(&re[..], &f1.ciphertext[..16]);

        let secret = b"0123456789abcdef".to_vec();
        let f2 = wep_encrypt(&k, iv, &secret);
        let plain: Vec<u8> = f2.ciphertext.iter().zip(&ks).map(|(c, k)| c ^ k).collect();
        assert_eq!(plain, secret);

        let zero = vec![0u8; 10];
        assert_eq!(recover_keystream(&f1, &zero).unwrap(), f1.ciphertext[..10].to_vec());
        assert!(recover_keystream(&f1, &[0u8; 40]).is_err());
    }

    #[test]
    fn key_parsing() {
        assert_eq!("1f:2e:3d:4c:5b".parse::<WepKey>().unwrap(), key40());
        assert_eq!(key40().to_string(), "1f2e3d4c5b");
        assert_eq!(WepKey::new(&[0; 6]).unwrap_err(), WepError::BadKeyLength(6));
    }

    proptest! {
        #[test]
        fn encrypt_decrypt_inverse(key in proptest::collection::vec(any::<u8>(), 13),
                                   iv in any::<[u8; 3]>(),
                                   plain in proptest::collection::vec(any::<u8>(), 0..200)) {
            let k = WepKey::new(&key).unwrap();
            let f = wep_encrypt(&k, Iv(iv), &plain);
            prop_assert_eq!(f.ciphertext.len(), plain.len() + 4);
            let parsed = WepFrame::from_bytes(&f.to_bytes()).unwrap();
            prop_assert_eq!(wep_decrypt(&k, &parsed).unwrap(), plain);
        }
    }
}
