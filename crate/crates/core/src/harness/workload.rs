//! Request sequences for replay, audits and benchmarks.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::recursive::Request;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Workload {
    /// Uniform addresses, reads and writes with equal odds.
    Uniform,
    /// One address over and over, alternating writes and reads.
    AdversarialRepeat,
    /// Writes to `0, 1, ..., N-1, 0, ...`.
    SequentialScan,
}

/// `ops` requests over `capacity` addresses with `payload_len`-byte writes.
pub fn generate(
    kind: Workload,
    capacity: u64,
    ops: usize,
    payload_len: usize,
    seed: u64,
) -> Vec<Request> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..ops)
        .map(|t| match kind {
            Workload::Uniform => {
                let addr = rng.random_range(0..capacity);
                if rng.random_bool(0.5) {
                    Request::Write(addr, random_payload(&mut rng, payload_len))
                } else {
                    Request::Read(addr)
                }
            }
            Workload::AdversarialRepeat if t % 2 == 0 => {
                Request::Write(0, random_payload(&mut rng, payload_len))
            }
            Workload::AdversarialRepeat => Request::Read(0),
            Workload::SequentialScan => {
                Request::Write(t as u64 % capacity, random_payload(&mut rng, payload_len))
            }
        })
        .collect()
}

pub fn random_payload(rng: &mut impl RngCore, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

/// Pairs of equal-length request sequences that must produce the same
/// communication pattern. Each pair is named for reports.
pub fn pattern_pairs(
    capacity: u64,
    ops: usize,
    payload_len: usize,
    seed: u64,
) -> Vec<(String, Vec<Request>, Vec<Request>)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let last = capacity - 1;
    let reads =
        |f: &dyn Fn(usize) -> u64| (0..ops).map(|t| Request::Read(f(t))).collect::<Vec<_>>();
    let mut writes = |f: &dyn Fn(usize) -> u64| {
        (0..ops)
            .map(|t| Request::Write(f(t), random_payload(&mut rng, payload_len)))
            .collect::<Vec<_>>()
    };
    let same_write_last = writes(&|_| last);
    let scan_writes = writes(&|t| t as u64 % capacity);
    let uniform_a = generate(Workload::Uniform, capacity, ops, payload_len, seed ^ 0xa);
    let uniform_b = generate(Workload::Uniform, capacity, ops, payload_len, seed ^ 0xb);
    let repeat = generate(
        Workload::AdversarialRepeat,
        capacity,
        ops,
        payload_len,
        seed,
    );
    let mut pairs = vec![
        (
            "same-address-reads/uniform".to_string(),
            reads(&|_| 0),
            uniform_a.clone(),
        ),
        (
            "same-address-writes/uniform-reads".to_string(),
            same_write_last.clone(),
            reads(&|t| (t as u64 * 2_654_435_761) % capacity),
        ),
        (
            "scan/reverse-scan".to_string(),
            reads(&|t| t as u64 % capacity),
            reads(&|t| last - t as u64 % capacity),
        ),
        ("uniform/uniform".to_string(), uniform_a.clone(), uniform_b),
        (
            "repeat-first/repeat-last".to_string(),
            reads(&|_| 0),
            reads(&|_| last),
        ),
        (
            "two-addresses/uniform".to_string(),
            reads(&|t| (t as u64 % 2) * last),
            uniform_a.clone(),
        ),
        (
            "reads/writes-same-addresses".to_string(),
            reads(&|t| t as u64 % capacity),
            scan_writes.clone(),
        ),
        (
            "stride-two/scan-writes".to_string(),
            reads(&|t| (2 * t as u64) % capacity),
            scan_writes,
        ),
        ("adversarial-repeat/uniform".to_string(), repeat, uniform_a),
        (
            "same-address-writes/same-address-reads".to_string(),
            same_write_last,
            reads(&|_| last),
        ),
    ];
    pairs.push((
        "single-read/single-write".to_string(),
        vec![Request::Read(0)],
        vec![Request::Write(last, random_payload(&mut rng, payload_len))],
    ));
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_have_requested_shape() {
        let u = generate(Workload::Uniform, 16, 200, 7, 1);
        assert_eq!(u.len(), 200);
        assert!(u.iter().all(|r| r.addr() < 16));
        assert!(u
            .iter()
            .any(|r| matches!(r, Request::Write(_, d) if d.len() == 7)));
        let r = generate(Workload::AdversarialRepeat, 16, 10, 7, 1);
        assert!(r.iter().all(|r| r.addr() == 0));
        let s = generate(Workload::SequentialScan, 4, 6, 7, 1);
        assert_eq!(
            s.iter().map(Request::addr).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 0, 1]
        );
        assert!(generate(Workload::Uniform, 16, 0, 7, 1).is_empty());
    }

    #[test]
    fn pattern_pairs_have_equal_lengths() {
        let pairs = pattern_pairs(16, 20, 7, 3);
        assert!(pairs.len() >= 10);
        for (name, a, b) in &pairs {
            assert_eq!(a.len(), b.len(), "{name}");
            assert!(a.iter().chain(b).all(|r| r.addr() < 16));
        }
    }
}
