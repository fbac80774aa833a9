//! Verification harness: oracle replay, obliviousness audits, statistical
//! tests and bandwidth fits.

pub mod audit;
pub mod bench;
pub mod stats;
pub mod workload;

use serde::Serialize;

use crate::block::DEFAULT_DATA_WIDTH;
use crate::recursive::OramConfig;
use audit::{PatternPairResult, UniformityResult};
use bench::BandwidthRow;
use workload::Workload;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentConfig {
    pub n: u64,
    pub data_width: usize,
    pub ops: usize,
    pub seed: u64,
    pub workload: Workload,
}

impl ExperimentConfig {
    pub fn new(n: u64, ops: usize, seed: u64) -> Self {
        ExperimentConfig {
            n,
            data_width: DEFAULT_DATA_WIDTH,
            ops,
            seed,
            workload: Workload::Uniform,
        }
    }

    pub fn oram_config(&self) -> OramConfig {
        OramConfig {
            data_width: self.data_width,
            ..OramConfig::new(self.n)
        }
    }
}

/// Everything `audit` finds, as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub n: u64,
    pub ops: usize,
    pub seed: u64,
    pub pattern_equal: bool,
    pub patterns: Vec<PatternPairResult>,
    pub chi_square_p: Vec<UniformityResult>,
    /// Constant-RNG runs; these are expected to fail.
    pub negative_controls: Vec<UniformityResult>,
    /// Per-test threshold after Bonferroni correction over `chi_square_p`.
    pub p_threshold: f64,
    pub bandwidth_table: Vec<BandwidthRow>,
    pub fitted_exponent: Option<f64>,
    pub violations: Vec<String>,
}

/// Family-wise significance level for the uniformity tests of one report.
pub const FAMILY_ALPHA: f64 = 0.001;

/// Runs the pattern audit over the standard sequence pairs, the uniformity
/// tests for all three protocols with their negative controls, and reports
/// the cost of this configuration.
pub fn run_audit(n: u64, ops: usize, trials: usize, seed: u64) -> crate::Result<AuditReport> {
    let width = DEFAULT_DATA_WIDTH;
    let payload = width - crate::block::ENTRY_HEADER;
    let mut violations = Vec::new();
    let mut patterns = Vec::new();
    if ops > 0 {
        for (name, a, b) in workload::pattern_pairs(n, ops, payload, seed) {
            let r = audit::run_pattern_audit(&name, n, width, &a, &b, seed, 10)?;
            if !r.equal {
                violations.push(format!("pattern pair {name} differs"));
            }
            if !r.seed_invariant {
                violations.push(format!("pattern pair {name} depends on the seed"));
            }
            patterns.push(r);
        }
    }

    let cases = [
        (audit::Protocol::Otm, 4, 4),
        (audit::Protocol::Compact, 4, 4),
        (audit::Protocol::Merge, 2, 4),
    ];
    let mut chi_square_p = Vec::new();
    let mut negative_controls = Vec::new();
    for (protocol, size, lookups) in cases {
        chi_square_p.extend(audit::run_index_uniformity(
            protocol, size, lookups, trials, seed, false,
        )?);
        negative_controls.extend(audit::run_index_uniformity(
            protocol, size, lookups, trials, seed, true,
        )?);
    }
    let p_threshold = FAMILY_ALPHA / chi_square_p.len().max(1) as f64;
    for r in &chi_square_p {
        if r.p_value <= p_threshold {
            violations.push(format!(
                "{:?} indices seen by S{} fail uniformity (p = {:.3e})",
                r.protocol, r.corrupt_server, r.p_value
            ));
        }
    }
    for r in &negative_controls {
        if r.p_value > p_threshold {
            violations.push(format!(
                "negative control for {:?} at S{} passed (p = {:.3e})",
                r.protocol, r.corrupt_server, r.p_value
            ));
        }
    }

    let cfg = ExperimentConfig::new(n, ops, seed);
    let replay = audit::run_oracle_replay(&cfg);
    violations.extend(replay.violations.iter().cloned());
    let bandwidth_table = vec![BandwidthRow {
        n,
        log_n: n.trailing_zeros(),
        data_width: width,
        accesses: ops as u64,
        setup_blocks: replay.setup_blocks,
        blocks_per_access: replay.blocks_per_access,
        bytes_per_access: replay.bytes_per_access,
        blowup: replay.bytes_per_access / width as f64,
    }];

    Ok(AuditReport {
        n,
        ops,
        seed,
        pattern_equal: patterns.iter().all(|p| p.equal && p.seed_invariant),
        patterns,
        chi_square_p,
        negative_controls,
        p_threshold,
        bandwidth_table,
        // One size gives no slope.
        fitted_exponent: None,
        violations,
    })
}
