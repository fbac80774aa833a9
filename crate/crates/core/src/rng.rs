//! Client-side randomness.
//!
//! Every protocol invocation draws from its own ChaCha stream keyed by
//! `(seed, protocol label, invocation counter)`, so a run is reproducible from
//! its seed and the order of protocol calls alone.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Deterministic source of per-invocation random streams.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    constant: Option<u64>,
    counters: Vec<(&'static str, u64)>,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            constant: None,
            counters: Vec::new(),
        }
    }

    /// A rigged source whose every stream returns the same word forever.
    /// Only useful as a negative control for the statistical audits.
    pub fn constant(word: u64) -> Self {
        Self {
            seed: 0,
            constant: Some(word),
            counters: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    /// Opens the next stream for `protocol`.
    pub fn stream(&mut self, protocol: &'static str) -> Stream {
        if let Some(word) = self.constant {
            return Stream(Inner::Constant(word));
        }
        let counter = match self.counters.iter_mut().find(|(p, _)| *p == protocol) {
            Some((_, c)) => {
                *c += 1;
                *c
            }
            None => {
                self.counters.push((protocol, 0));
                0
            }
        };
        let mut state = self.seed
            ^ fnv1a(protocol.as_bytes()).rotate_left(17)
            ^ counter.wrapping_mul(0xA24B_AED4_963E_E407);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Stream(Inner::Chacha(Box::new(ChaCha12Rng::from_seed(key))))
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Chacha(Box<ChaCha12Rng>),
    Constant(u64),
}

/// One protocol invocation's random stream.
#[derive(Debug, Clone)]
pub struct Stream(Inner);

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        match &mut self.0 {
            Inner::Chacha(r) => r.next_u32(),
            Inner::Constant(w) => *w as u32,
        }
    }

    fn next_u64(&mut self) -> u64 {
        match &mut self.0 {
            Inner::Chacha(r) => r.next_u64(),
            Inner::Constant(w) => *w,
        }
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        match &mut self.0 {
            Inner::Chacha(r) => r.fill_bytes(dst),
            Inner::Constant(w) => dst.fill(*w as u8),
        }
    }
}

/// Uniform integer in `0..bound` (Lemire's multiply-and-reject).
///
/// With the all-ones constant stream this returns `bound - 1` without looping.
pub fn uniform_below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = (rng.next_u64() as u128) * (bound as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RandomSource::new(7);
        let mut b = RandomSource::new(7);
        let (x1, x2) = (a.stream("p").next_u64(), a.stream("p").next_u64());
        assert_eq!(x1, b.stream("p").next_u64());
        assert_ne!(x1, x2);
        assert_ne!(x1, RandomSource::new(8).stream("p").next_u64());
        assert_ne!(x1, RandomSource::new(7).stream("q").next_u64());
    }

    #[test]
    fn uniform_below_stays_in_range() {
        let mut s = RandomSource::new(1).stream("t");
        for bound in 1..200u64 {
            assert!(uniform_below(&mut s, bound) < bound);
        }
        let mut c = RandomSource::constant(u64::MAX).stream("t");
        assert_eq!(uniform_below(&mut c, 10), 9);
    }
}
