//! Hash families for privacy amplification and error verification.

use rand::Rng;

use super::transcript::BitString;
use crate::quantum::Bit;

/// Toeplitz hashing from `input_len` bits to `output_len` bits.
///
/// The matrix is `T[i][j] = seed[i - j + input_len - 1]`, fully determined by
/// `input_len + output_len - 1` seed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    input_len: usize,
    output_len: usize,
    seed: BitString,
}

fn pack(bits: &[Bit]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64) + 1];
    for (i, b) in bits.iter().enumerate() {
        if *b == Bit::One {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// 64 bits of `words` starting at bit `offset` (zero-padded past the end).
#[inline]
fn word_at(words: &[u64], offset: usize) -> u64 {
    let (w, s) = (offset / 64, offset % 64);
    let lo = words.get(w).copied().unwrap_or(0) >> s;
    if s == 0 {
        lo
    } else {
        lo | (words.get(w + 1).copied().unwrap_or(0) << (64 - s))
    }
}

impl ToeplitzHash {
    pub fn new(input_len: usize, output_len: usize, seed: BitString) -> Self {
        assert!(output_len <= input_len, "Toeplitz output longer than input");
        assert_eq!(seed.len(), (input_len + output_len).saturating_sub(1), "Toeplitz seed length");
        Self { input_len, output_len, seed }
    }

    pub fn random<R: Rng + ?Sized>(input_len: usize, output_len: usize, rng: &mut R) -> Self {
        let n = (input_len + output_len).saturating_sub(1);
        let seed = (0..n).map(|_| Bit::from_bool(rng.random())).collect();
        Self::new(input_len, output_len, seed)
    }

    pub fn seed(&self) -> &BitString {
        &self.seed
    }

    pub fn apply(&self, input: &BitString) -> BitString {
        assert_eq!(input.len(), self.input_len, "Toeplitz input length");
        let (n, l) = (self.input_len, self.output_len);
        if l == 0 {
            return BitString::new();
        }
        // With r = reversed seed, row i of T is r[l-1-i .. l-1-i+n].
        let reversed: Vec<Bit> = self.seed.bits().iter().rev().copied().collect();
        let r = pack(&reversed);
        let x = pack(input.bits());
        let full_words = n / 64;
        let tail_mask = if n % 64 == 0 { 0 } else { (1u64 << (n % 64)) - 1 };
        (0..l)
            .map(|i| {
                let offset = l - 1 - i;
                let mut acc = 0u64;
                for w in 0..full_words {
                    acc ^= word_at(&r, offset + 64 * w) & x[w];
                }
                if tail_mask != 0 {
                    acc ^= word_at(&r, offset + 64 * full_words) & x[full_words] & tail_mask;
                }
                Bit::from_bool(acc.count_ones() % 2 == 1)
            })
            .collect()
    }
}

/// Tag length `⌈log2(2/ε_c)⌉` consumed from the pre-shared key.
pub fn tag_bits(eps_c: f64) -> u32 {
    (2.0 / eps_c).log2().ceil() as u32
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Polynomial evaluation hash over a random 61-bit prime field, truncated to
/// `tag_bits` and one-time padded with pre-shared bits.
///
/// The message is split into 32-bit blocks `m_1..m_k`, prefixed by its bit
/// length `m_0`; the hash is `Σ m_i · r^(i+1) mod p`. For distinct messages of
/// `k` blocks the untruncated collision probability is at most `(k+1)/p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolynomialHash {
    pub modulus: u64,
    pub point: u64,
    pub tag_bits: u32,
    pub pad: u64,
}

impl PolynomialHash {
    pub fn random<R: Rng + ?Sized>(tag_bits: u32, rng: &mut R) -> Self {
        assert!((1..=60).contains(&tag_bits), "tag length {tag_bits} outside 1..=60");
        let modulus = loop {
            let candidate = rng.random_range((1u64 << 60)..(1u64 << 61)) | 1;
            if is_prime(candidate) {
                break candidate;
            }
        };
        let point = rng.random_range(1..modulus);
        let pad = rng.random::<u64>() & ((1u64 << tag_bits) - 1);
        Self { modulus, point, tag_bits, pad }
    }

    pub fn tag(&self, message: &BitString) -> u64 {
        let mut blocks = vec![message.len() as u64];
        blocks.extend(message.bits().chunks(32).map(|chunk| {
            chunk.iter().fold(0u64, |acc, b| (acc << 1) | *b as u64)
        }));
        let mut acc = 0u64;
        // Horner from the highest power down: Σ m_i r^(i+1).
        for block in blocks.iter().rev() {
            acc = mul_mod((acc + block) % self.modulus, self.point, self.modulus);
        }
        (acc & ((1u64 << self.tag_bits) - 1)) ^ self.pad
    }
}
