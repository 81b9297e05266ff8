use super::WepError;

/// Plain RC4: key scheduling followed by the output generator.
#[derive(Clone)]
pub struct Rc4 {
    s: [u8; 256],
    i: u8,
    j: u8,
}

impl Rc4 {
    pub fn new(seed: &[u8]) -> Result<Self, WepError> {
        if seed.is_empty() || seed.len() > 256 {
            return Err(WepError::BadSeedLength(seed.len()));
        }
        let mut s = [0u8; 256];
        for (i, v) in s.iter_mut().enumerate() {
            *v = i as u8;
        }
        let mut j = 0u8;
        for i in 0..256 {
            j = j.wrapping_add(s[i]).wrapping_add(seed[i % seed.len()]);
            s.swap(i, j as usize);
        }
        Ok(Rc4 { s, i: 0, j: 0 })
    }

    #[inline]
    pub fn next_byte(&mut self) -> u8 {
        self.i = self.i.wrapping_add(1);
        self.j = self.j.wrapping_add(self.s[self.i as usize]);
        self.s.swap(self.i as usize, self.j as usize);
        let idx = self.s[self.i as usize].wrapping_add(self.s[self.j as usize]);
        self.s[idx as usize]
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.next_byte();
        }
    }

    pub fn apply(&mut self, data: &mut [u8]) {
        for b in data {
            *b ^= self.next_byte();
        }
    }
}

pub fn rc4_keystream(seed: &[u8], n: usize) -> Result<Vec<u8>, WepError> {
    let mut rc4 = Rc4::new(seed)?;
    let mut out = vec![0u8; n];
    rc4.fill(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Straight transcription of the cipher description, kept separate from
    // the struct above.
    fn oracle(key: &[u8], n: usize) -> Vec<u8> {
        let mut s: Vec<usize> = (0..256).collect();
        let mut j = 0usize;
        for i in 0..256 {
            j = (j + s[i] + key[i % key.len()] as usize) % 256;
            s.swap(i, j);
        }
        let (mut i, mut j) = (0usize, 0usize);
        (0..n)
            .map(|_| {
                i = (i + 1) % 256;
                j = (j + s[i]) % 256;
                s.swap(i, j);
                s[(s[i] + s[j]) % 256] as u8
            })
            .collect()
    }

    #[test]
    fn known_vector() {
        let ks = rc4_keystream(b"Key", 9).unwrap();
        assert_eq!(ks, oracle(b"Key", 9));
        let ct: Vec<u8> = b"Plaintext".iter().zip(&ks).map(|(p, k)| p ^ k).collect();
        assert_eq!(ct, [0xBB, 0xF3, 0x16, 0xE8, 0xD9, 0x40, 0xAF, 0x0A, 0xD3]);
    }

    #[test]
    fn agrees_with_oracle_on_many_seeds() {
        for len in [1usize, 3, 8, 16, 200, 256] {
            let seed: Vec<u8> = (0..len).map(|i| (i * 131 + len) as u8).collect();
            assert_eq!(rc4_keystream(&seed, 300).unwrap(), oracle(&seed, 300));
        }
    }

    #[test]
    fn deterministic_and_involutive() {
        let a = rc4_keystream(b"Secret", 64).unwrap();
        assert_eq!(a, rc4_keystream(b"Secret", 64).unwrap());
        let mut data = b"attack at dawn".to_vec();
        Rc4::new(b"Secret").unwrap().apply(&mut data);
        Rc4::new(b"Secret").unwrap().apply(&mut data);
        assert_eq!(data, b"attack at dawn");
    }

    #[test]
    fn seed_length_bounds() {
        assert_eq!(rc4_keystream(&[], 1).unwrap_err(), WepError::BadSeedLength(0));
        assert!(rc4_keystream(&[0u8; 257], 1).is_err());
        assert!(rc4_keystream(&[0u8; 256], 1).is_ok());
    }
}
