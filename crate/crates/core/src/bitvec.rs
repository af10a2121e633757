//! Packed bit containers and bit-file IO.
//!
//! Every bit sequence in this crate follows one ordering rule: index 0 is the
//! bit that was transmitted earliest, index `len - 1` the latest. Wire
//! pictures that are drawn right-to-left are restated in this order before
//! they reach code.
//!
//! Bits are packed into `u64` limbs, bit `i` living at bit `i % 64` of limb
//! `i / 64`. Limb bits past `len` are always zero, which lets equality,
//! hashing and popcounts work on whole limbs.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::RngCore;

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitVec {
    limbs: Vec<u64>,
    len: usize,
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl BitVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            limbs: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            limbs: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            limbs: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        v.clear_tail();
        v
    }

    /// Uniformly random bits drawn from `rng`, 64 at a time.
    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self {
            limbs: (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect(),
            len,
        };
        v.clear_tail();
        v
    }

    /// Builds a vector from `0`/`1` values. Any nonzero byte counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        bits.iter().map(|&b| b != 0).collect()
    }

    /// Parses a string of `'0'`/`'1'` characters. Whitespace is skipped; the
    /// first bit character becomes index 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut v = Self::with_capacity(text.len());
        for (position, c) in text.chars().enumerate() {
            match c {
                '0' => v.push(false),
                '1' => v.push(true),
                c if c.is_whitespace() => {}
                found => return Err(Error::InvalidBitChar { position, found }),
            }
        }
        Ok(v)
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.limbs[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i & 63);
        if bit {
            self.limbs[i >> 6] |= mask;
        } else {
            self.limbs[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.limbs[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn push(&mut self, bit: bool) {
        self.push_bits(bit as u64, 1);
    }

    /// Appends the low `n` bits of `value` (bit 0 first).
    #[inline]
    pub fn push_bits(&mut self, value: u64, n: usize) {
        debug_assert!(n <= 64);
        if n == 0 {
            return;
        }
        let value = value & low_mask(n);
        let r = self.len & 63;
        if r == 0 {
            self.limbs.push(value);
        } else {
            *self.limbs.last_mut().expect("nonempty when r > 0") |= value << r;
            if r + n > 64 {
                self.limbs.push(value >> (64 - r));
            }
        }
        self.len += n;
    }

    /// The 64 bits starting at `pos`; positions at or past `len` read as 0.
    #[inline]
    pub fn bits_at(&self, pos: usize) -> u64 {
        let q = pos >> 6;
        let r = pos & 63;
        let lo = self.limbs.get(q).copied().unwrap_or(0) >> r;
        if r == 0 {
            lo
        } else {
            lo | (self.limbs.get(q + 1).copied().unwrap_or(0) << (64 - r))
        }
    }

    pub fn extend_from(&mut self, other: &BitVec) {
        self.extend_from_range(other, 0, other.len);
    }

    /// Appends `other[start .. start + len]`.
    pub fn extend_from_range(&mut self, other: &BitVec, start: usize, len: usize) {
        assert!(
            start + len <= other.len,
            "range {start}..{} out of bounds for length {}",
            start + len,
            other.len
        );
        self.limbs
            .reserve((self.len + len).div_ceil(64) - self.limbs.len());
        let mut done = 0;
        while done < len {
            let n = (len - done).min(64);
            self.push_bits(other.bits_at(start + done), n);
            done += n;
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        let mut out = BitVec::with_capacity(len);
        out.extend_from_range(self, start, len);
        out
    }

    /// Overwrites `self` with `src[start .. start + len]`, reusing the allocation.
    pub fn copy_range_from(&mut self, src: &BitVec, start: usize, len: usize) {
        self.limbs.clear();
        self.len = 0;
        self.extend_from_range(src, start, len);
    }

    pub fn concat(parts: &[&BitVec]) -> BitVec {
        let mut out = BitVec::with_capacity(parts.iter().map(|p| p.len).sum());
        for p in parts {
            out.extend_from(p);
        }
        out
    }

    pub fn not(&self) -> BitVec {
        let mut out = Self {
            limbs: self.limbs.iter().map(|l| !l).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    pub fn count_ones(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| (self.limbs[i >> 6] >> (i & 63)) & 1 == 1)
    }

    /// Splits the stream into `word_size`-bit words; a short tail is
    /// zero-padded and the padding recorded.
    pub fn to_words(&self, word_size: usize) -> WordStream {
        assert!(word_size >= 1, "word size must be positive");
        let count = self.len.div_ceil(word_size);
        let words = (0..count)
            .map(|i| {
                let start = i * word_size;
                let take = word_size.min(self.len - start);
                let mut w = self.slice(start, take);
                if take < word_size {
                    w.extend_from(&BitVec::zeros(word_size - take));
                }
                w
            })
            .collect();
        WordStream {
            word_size,
            words,
            padding: count * word_size - self.len,
        }
    }

    fn clear_tail(&mut self) {
        let r = self.len & 63;
        if r != 0 {
            if let Some(last) = self.limbs.last_mut() {
                *last &= low_mask(r);
            }
        }
    }

    /// Packed encoding: 8-byte little-endian bit count, then `ceil(len / 8)`
    /// bytes with index 0 in the least significant bit of the first byte.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(8 + nbytes);
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend(self.limbs.iter().flat_map(|l| l.to_le_bytes()).take(nbytes));
        out
    }

    pub fn from_packed_bytes(bytes: &[u8]) -> Result<Self> {
        let header: [u8; 8] = bytes
            .get(..8)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| Error::MalformedPacked("missing 8-byte length prefix".into()))?;
        let len = usize::try_from(u64::from_le_bytes(header))
            .map_err(|_| Error::MalformedPacked("bit count does not fit in memory".into()))?;
        let body = &bytes[8..];
        if body.len() != len.div_ceil(8) {
            return Err(Error::MalformedPacked(format!(
                "{len} bits need {} payload bytes, found {}",
                len.div_ceil(8),
                body.len()
            )));
        }
        let mut v = Self {
            limbs: body
                .chunks(8)
                .map(|c| {
                    let mut b = [0u8; 8];
                    b[..c.len()].copy_from_slice(c);
                    u64::from_le_bytes(b)
                })
                .collect(),
            len,
        };
        let before = v.limbs.clone();
        v.clear_tail();
        if before != v.limbs {
            return Err(Error::MalformedPacked(
                "nonzero bits past the stated length".into(),
            ));
        }
        Ok(v)
    }
}

/// Number of positions where `a` and `b` agree: the XNOR-and-sum of the two
/// vectors, i.e. `len - hamming_distance`.
///
/// Panics if the lengths differ.
pub fn hamming_same(a: &BitVec, b: &BitVec) -> usize {
    a.len - hamming_distance(a, b)
}

/// Panics if the lengths differ.
pub fn hamming_distance(a: &BitVec, b: &BitVec) -> usize {
    assert_eq!(a.len, b.len, "hamming comparison of unequal lengths");
    a.limbs
        .iter()
        .zip(&b.limbs)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

impl FromIterator<bool> for BitVec {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut v = BitVec::new();
        for b in iter {
            v.push(b);
        }
        v
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec[{}; {}]", self.len, self.to_text())
    }
}

/// A serial stream cut into parallel words of `word_size` bits.
///
/// With a serial bit rate `f`, words arrive at `f / word_size`; the rate is
/// a property of the link and is not stored here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordStream {
    pub word_size: usize,
    pub words: Vec<BitVec>,
    /// Zero bits appended to the last word. Nonzero means the tail was short.
    pub padding: usize,
}

impl WordStream {
    pub fn is_padded(&self) -> bool {
        self.padding > 0
    }

    /// The original serial stream, padding removed.
    pub fn concat(&self) -> BitVec {
        let mut out = BitVec::with_capacity(self.words.len() * self.word_size);
        for w in &self.words {
            out.extend_from(w);
        }
        out.slice(0, out.len() - self.padding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitFormat {
    Text,
    Packed,
}

impl BitFormat {
    /// `.bin` and `.bits` files are packed, everything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("bits") => BitFormat::Packed,
            _ => BitFormat::Text,
        }
    }
}

pub fn read_bit_file(path: &Path) -> Result<BitVec> {
    match BitFormat::from_path(path) {
        BitFormat::Packed => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            BitVec::from_packed_bytes(&bytes)
        }
        BitFormat::Text => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            BitVec::from_text(&text)
        }
    }
}

pub fn write_bit_file(path: &Path, bits: &BitVec) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let res = match BitFormat::from_path(path) {
        BitFormat::Packed => f.write_all(&bits.to_packed_bytes()),
        BitFormat::Text => writeln!(f, "{bits}"),
    };
    res.map_err(|e| Error::io(path, e))
}
