//! Oracle replay, pattern equality and index-uniformity audits.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::stats::{arrangement_rank, arrangements, chi_square_uniform};
use super::workload::{generate, Workload};
use super::ExperimentConfig;
use crate::block::{decode_label_payload, Entry, DEFAULT_DATA_WIDTH};
use crate::error::{OramError, Result};
use crate::obliv::{merge, stable_compact};
use crate::otm::{self, Probe};
use crate::recursive::{OramConfig, OramSystem, Request};
use crate::rng::RandomSource;
use crate::sharing::{peek_entries, Layout};
use crate::simnet::{extract_view, write_jsonl, Net, ServerId, TraceMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub n: u64,
    pub ops: usize,
    pub seed: u64,
    pub workload: Workload,
    pub mismatches: u64,
    /// Whether a read-once or truncation guard aborted the run.
    pub guard_fired: bool,
    pub violations: Vec<String>,
    pub setup_blocks: u64,
    pub blocks_per_access: f64,
    pub bytes_per_access: f64,
    pub elapsed_ms: u64,
}

/// Runs the workload against the ORAM and a plain array side by side.
/// Mismatches and guard failures are reported, not returned as errors.
pub fn run_oracle_replay(cfg: &ExperimentConfig) -> ReplayReport {
    let start = Instant::now();
    let mut report = ReplayReport {
        n: cfg.n,
        ops: cfg.ops,
        seed: cfg.seed,
        workload: cfg.workload,
        mismatches: 0,
        guard_fired: false,
        violations: Vec::new(),
        setup_blocks: 0,
        blocks_per_access: 0.0,
        bytes_per_access: 0.0,
        elapsed_ms: 0,
    };
    let oram_cfg = OramConfig {
        instrumented: true,
        ..cfg.oram_config()
    };
    let mut oram = match OramSystem::new(oram_cfg, cfg.seed) {
        Ok(o) => o,
        Err(e) => {
            report.violations.push(format!("setup: {e}"));
            return report;
        }
    };
    report.setup_blocks = oram.setup_blocks();
    let reqs = generate(cfg.workload, cfg.n, cfg.ops, oram.payload_len(), cfg.seed);
    let mut plain = vec![vec![0u8; oram.payload_len()]; cfg.n as usize];
    for (t, req) in reqs.iter().enumerate() {
        let got = match oram.access(req) {
            Ok(v) => v,
            Err(e) => {
                report.guard_fired |=
                    matches!(e, OramError::NonRecurrence { .. } | OramError::Invariant(_));
                report.violations.push(format!("access {t}: {e}"));
                break;
            }
        };
        let slot = &mut plain[req.addr() as usize];
        if got != *slot {
            report.mismatches += 1;
            if report.violations.len() < 16 {
                report.violations.push(format!(
                    "access {t} to {}: value differs from the plain array",
                    req.addr()
                ));
            }
        }
        if let Request::Write(_, data) = req {
            slot.fill(0);
            slot[..data.len()].copy_from_slice(data);
        }
    }
    if oram.accesses() > 0 {
        let meter = oram.net().meter();
        let t = oram.accesses() as f64;
        report.blocks_per_access = (meter.total_blocks() - oram.setup_blocks()) as f64 / t;
        report.bytes_per_access = (meter.total_bytes() - oram.setup_bytes()) as f64 / t;
    }
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    report
}

/// Runs setup plus `reqs` and returns the digest of the content- and
/// index-stripped trace with its event count.
pub fn pattern_digest(
    n: u64,
    data_width: usize,
    reqs: &[Request],
    seed: u64,
) -> Result<(String, u64)> {
    let cfg = OramConfig {
        trace: TraceMode::Digest,
        data_width,
        ..OramConfig::new(n)
    };
    let mut oram = OramSystem::new(cfg, seed)?;
    for r in reqs {
        oram.access(r)?;
    }
    Ok(oram.net().pattern_digest().expect("digest mode"))
}

/// The stripped trace itself, as JSON lines. Memory grows with the run, so
/// this is meant for small cases.
pub fn stripped_trace(n: u64, data_width: usize, reqs: &[Request], seed: u64) -> Result<Vec<u8>> {
    let cfg = OramConfig {
        trace: TraceMode::Full { contents: false },
        data_width,
        ..OramConfig::new(n)
    };
    let mut oram = OramSystem::new(cfg, seed)?;
    for r in reqs {
        oram.access(r)?;
    }
    let mut out = Vec::new();
    write_jsonl(oram.net().events(), true, &mut out).expect("writing to memory");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternPairResult {
    pub name: String,
    pub len: usize,
    pub digest_a: String,
    pub digest_b: String,
    pub events: u64,
    pub equal: bool,
    /// Both sequences kept the same pattern across all extra seeds.
    pub seed_invariant: bool,
}

/// Compares the patterns of two equal-length sequences under one seed, then
/// re-runs each under `extra_seeds` more seeds.
pub fn run_pattern_audit(
    name: &str,
    n: u64,
    data_width: usize,
    a: &[Request],
    b: &[Request],
    seed: u64,
    extra_seeds: u64,
) -> Result<PatternPairResult> {
    if a.len() != b.len() {
        return Err(OramError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (digest_a, events) = pattern_digest(n, data_width, a, seed)?;
    let (digest_b, events_b) = pattern_digest(n, data_width, b, seed)?;
    let mut seed_invariant = true;
    for s in 1..=extra_seeds {
        let other = seed.wrapping_add(s.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        seed_invariant &= pattern_digest(n, data_width, a, other)?.0 == digest_a;
        seed_invariant &= pattern_digest(n, data_width, b, other)?.0 == digest_b;
    }
    Ok(PatternPairResult {
        name: name.to_string(),
        len: a.len(),
        equal: digest_a == digest_b && events == events_b,
        digest_a,
        digest_b,
        events,
        seed_invariant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Otm,
    Compact,
    Merge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityResult {
    pub protocol: Protocol,
    pub corrupt_server: u8,
    pub n: usize,
    /// Indices observed per trial.
    pub observed: usize,
    pub trials: usize,
    pub cells: u64,
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    pub constant_rng: bool,
}

/// Physical read indices each server sees in the phase of `protocol` that is
/// meant to look uniformly random: OTM lookups (`lookups` of them, real and
/// dummy alternating), or the list walk of compaction or merging.
pub fn observe_indices(
    protocol: Protocol,
    n: usize,
    lookups: usize,
    rs: &mut RandomSource,
) -> Result<[Vec<u64>; 3]> {
    let mut net = Net::new(TraceMode::Full { contents: false });
    let entries: Vec<Entry> = (0..n as u64)
        .map(|k| {
            // Dummies sprinkled in so the lists have both kinds.
            if k % 3 == 1 {
                Entry::Dummy
            } else {
                Entry::real(k, &[k as u8])
            }
        })
        .collect();
    let prefix = match protocol {
        Protocol::Otm => {
            let reals: Vec<Entry> = (0..n as u64).map(|k| Entry::real(k, &[k as u8])).collect();
            let input = Layout::load(&mut net, rs, "audit", DEFAULT_DATA_WIDTH, &reals)?;
            let (mut otm, keymap) = otm::build(&mut net, rs, input, 0)?;
            let labels = peek_entries(&net, &keymap)?
                .iter()
                .map(|e| decode_label_payload(e.payload().expect("every key is real")))
                .collect::<Result<Vec<_>>>()?;
            net.take_events();
            for t in 0..lookups {
                let probe = if t % 2 == 0 {
                    Probe::Real(labels[n - 1 - t / 2].tuple)
                } else {
                    Probe::Dummy
                };
                otm.lookup(&mut net, rs, probe)?;
            }
            "otm.T#"
        }
        Protocol::Compact => {
            let input = Layout::load(&mut net, rs, "audit", DEFAULT_DATA_WIDTH, &entries)?;
            stable_compact(&mut net, rs, input)?;
            "compact.L#"
        }
        Protocol::Merge => {
            let mut sorted = entries.clone();
            sorted.sort_by_key(|e| e.key().unwrap_or(u64::MAX));
            let a = Layout::load(&mut net, rs, "audit", DEFAULT_DATA_WIDTH, &sorted)?;
            let b = Layout::load(&mut net, rs, "audit", DEFAULT_DATA_WIDTH, &sorted)?;
            merge(&mut net, rs, a, b)?;
            "merge.L#"
        }
    };
    let events = net.take_events();
    Ok(std::array::from_fn(|b| {
        let suffix = format!("/T{b}");
        extract_view(&events, ServerId::new(b))
            .read_indices(|name| name.starts_with(prefix) && name.ends_with(&suffix))
    }))
}

/// Repeats `protocol` over `trials` fresh seeds (or a constant source) and
/// tests, for each corrupt server, the joint distribution of its observed
/// index tuple against uniform sampling without replacement.
pub fn run_index_uniformity(
    protocol: Protocol,
    n: usize,
    lookups: usize,
    trials: usize,
    seed: u64,
    constant_rng: bool,
) -> Result<Vec<UniformityResult>> {
    if trials == 0 {
        return Ok(Vec::new());
    }
    let (range, observed) = match protocol {
        Protocol::Otm => (2 * n as u64, lookups),
        Protocol::Compact => (n as u64, n),
        Protocol::Merge => (2 * n as u64, 2 * n),
    };
    if protocol == Protocol::Otm && lookups > n {
        return Err(OramError::CapacityExhausted { capacity: n });
    }
    let cells = arrangements(range, observed as u64);
    let views: Vec<[Vec<u64>; 3]> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rs = if constant_rng {
                RandomSource::constant(u64::MAX)
            } else {
                let salt = (protocol as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
                RandomSource::new((seed ^ salt).wrapping_add(t.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            };
            observe_indices(protocol, n, lookups, &mut rs)
        })
        .collect::<Result<_>>()?;
    (0..3)
        .map(|b| {
            let mut counts = vec![0u64; cells as usize];
            for v in &views {
                let rank = arrangement_rank(&v[b], range)
                    .filter(|_| v[b].len() == observed)
                    .ok_or_else(|| {
                        OramError::Invariant(format!("server {b} saw indices {:?}", v[b]))
                    })?;
                counts[rank as usize] += 1;
            }
            let fit = chi_square_uniform(&counts).expect("at least one trial and two cells");
            Ok(UniformityResult {
                protocol,
                corrupt_server: b as u8,
                n,
                observed,
                trials,
                cells,
                statistic: fit.statistic,
                dof: fit.dof,
                p_value: fit.p_value,
                constant_rng,
            })
        })
        .collect()
}

/// SHA-256 of arbitrary bytes, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
