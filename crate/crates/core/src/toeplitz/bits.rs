use std::fmt;

/// Packed bit string. Bit `i` lives in word `i / 64` at position `i % 64`,
/// which makes the little-endian byte image put bit 0 in the least
/// significant bit of byte 0. Bits past `len` are always zero.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = Self::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    /// Reads `len` bits from a little-endian byte image. Missing trailing
    /// bytes read as zero; bits past `len` are dropped.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        let mut words = vec![0u64; words_for(len)];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_le_bytes(buf);
        }
        let mut v = Self { len, words };
        v.clear_padding();
        v
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Sixty-four bits starting at `offset`; positions outside `[0, len)` read as zero.
    pub fn word_at(&self, offset: i64) -> u64 {
        if offset >= self.len as i64 || offset <= -64 {
            return 0;
        }
        if offset < 0 {
            return self.word_at(0) << (-offset) as u32;
        }
        let i = (offset / 64) as usize;
        let r = (offset % 64) as u32;
        let mut w = self.words[i] >> r;
        if r > 0 && i + 1 < self.words.len() {
            w |= self.words[i + 1] << (64 - r);
        }
        w
    }

    /// Copy of bits `[start, start + len)`, zero-filled outside the vector.
    pub fn window(&self, start: i64, len: usize) -> BitVector {
        let mut out = BitVector {
            len,
            words: (0..words_for(len))
                .map(|k| self.word_at(start + 64 * k as i64))
                .collect(),
        };
        out.clear_padding();
        out
    }

    /// Bit-reversed copy: `out[k] = self[len − 1 − k]`.
    pub fn reversed(&self) -> BitVector {
        let mut out = BitVector::zeros(self.len);
        for i in 0..self.len {
            if self.get(i) {
                out.set(self.len - 1 - i, true);
            }
        }
        out
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a ^= b;
        }
    }

    /// XORs `other` into `self` starting at bit `offset`, which must be a
    /// multiple of 64.
    pub fn xor_at(&mut self, offset: usize, other: &BitVector) {
        assert!(offset % 64 == 0, "unaligned xor offset {offset}");
        assert!(offset + other.len <= self.len, "xor past end");
        let base = offset / 64;
        for (k, w) in other.words.iter().enumerate() {
            self.words[base + k] ^= w;
        }
    }

    fn clear_padding(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[{}](", self.len)?;
        for b in self.iter().take(128) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 128 {
            f.write_str("…")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_image_is_lsb_first() {
        let v = BitVector::from_bools([true, false, false, false, false, false, false, false, false, true]);
        assert_eq!(v.to_bytes(), vec![0b0000_0001, 0b0000_0010]);
        let back = BitVector::from_bytes(&[0xFF, 0xFF], 10);
        assert_eq!(back.count_ones(), 10);
        assert_eq!(back.to_bytes(), vec![0xFF, 0b11]);
    }

    #[test]
    fn window_zero_fills() {
        let v = BitVector::from_bools([true, true, true]);
        let w = v.window(-2, 6);
        assert_eq!(w.iter().collect::<Vec<_>>(), [false, false, true, true, true, false]);
    }

    proptest! {
        #[test]
        fn window_matches_bitwise(bits in proptest::collection::vec(any::<bool>(), 0..300),
                                  start in -100i64..400, len in 0usize..300) {
            let v = BitVector::from_bools(bits.clone());
            let w = v.window(start, len);
            for k in 0..len {
                let idx = start + k as i64;
                let expect = idx >= 0 && (idx as usize) < bits.len() && bits[idx as usize];
                prop_assert_eq!(w.get(k), expect);
            }
        }

        #[test]
        fn bytes_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let v = BitVector::from_bools(bits.clone());
            prop_assert_eq!(BitVector::from_bytes(&v.to_bytes(), bits.len()), v);
        }
    }
}
