//! Bandwidth sweeps and scaling fits.

use rayon::prelude::*;
use serde::Serialize;

use super::stats::{power_law_exponent, ratios};
use super::workload::{generate, Workload};
use crate::block::{Entry, DEFAULT_DATA_WIDTH};
use crate::error::Result;
use crate::obliv::{merge, stable_compact};
use crate::recursive::{OramConfig, OramSystem};
use crate::rng::RandomSource;
use crate::sharing::Layout;
use crate::simnet::Net;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthRow {
    pub n: u64,
    pub log_n: u32,
    pub data_width: usize,
    pub accesses: u64,
    pub setup_blocks: u64,
    pub blocks_per_access: f64,
    pub bytes_per_access: f64,
    /// Bytes moved per byte of data block requested.
    pub blowup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthReport {
    pub big_blocks: bool,
    pub rows: Vec<BandwidthRow>,
    /// Fitted `k` in blocks/access ~ (log N)^k.
    pub block_exponent: Option<f64>,
    /// Fitted `k` in blowup ~ (log N)^k.
    pub blowup_exponent: Option<f64>,
}

/// Mean cost over `4 N` uniform accesses after setup.
pub fn measure_oram(n: u64, big_blocks: bool, seed: u64) -> Result<BandwidthRow> {
    let data_width = if big_blocks {
        OramConfig::big_block_width(n)
    } else {
        DEFAULT_DATA_WIDTH
    };
    let cfg = OramConfig {
        data_width,
        ..OramConfig::new(n)
    };
    let mut oram = OramSystem::new(cfg, seed)?;
    let accesses = 4 * n;
    for req in generate(
        Workload::Uniform,
        n,
        accesses as usize,
        oram.payload_len(),
        seed,
    ) {
        oram.access(&req)?;
    }
    let meter = oram.net().meter();
    let blocks = (meter.total_blocks() - oram.setup_blocks()) as f64 / accesses as f64;
    let bytes = (meter.total_bytes() - oram.setup_bytes()) as f64 / accesses as f64;
    Ok(BandwidthRow {
        n,
        log_n: n.trailing_zeros(),
        data_width,
        accesses,
        setup_blocks: oram.setup_blocks(),
        blocks_per_access: blocks,
        bytes_per_access: bytes,
        blowup: bytes / data_width as f64,
    })
}

pub fn run_bandwidth_suite(sizes: &[u64], big_blocks: bool, seed: u64) -> Result<BandwidthReport> {
    let rows = sizes
        .par_iter()
        .map(|&n| measure_oram(n, big_blocks, seed))
        .collect::<Result<Vec<_>>>()?;
    let logs: Vec<f64> = rows.iter().map(|r| f64::from(r.log_n)).collect();
    let blocks: Vec<f64> = rows.iter().map(|r| r.blocks_per_access).collect();
    let blowups: Vec<f64> = rows.iter().map(|r| r.blowup).collect();
    Ok(BandwidthReport {
        big_blocks,
        block_exponent: power_law_exponent(&logs, &blocks),
        blowup_exponent: power_law_exponent(&logs, &blowups),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRow {
    pub n: usize,
    pub compact_blocks: u64,
    /// Merging two inputs of length `n` each.
    pub merge_blocks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearReport {
    pub rows: Vec<LinearRow>,
    pub compact_exponent: Option<f64>,
    pub merge_exponent: Option<f64>,
    pub compact_doubling: Vec<f64>,
    pub merge_doubling: Vec<f64>,
}

/// Metered cost of one compaction and one merge at length `n`.
pub fn measure_linear(n: usize, seed: u64) -> Result<LinearRow> {
    let mut net = Net::default();
    let mut rs = RandomSource::new(seed);
    let entries: Vec<Entry> = (0..n as u64)
        .map(|k| {
            if k % 2 == 0 {
                Entry::real(k, &[1])
            } else {
                Entry::Dummy
            }
        })
        .collect();
    let input = Layout::load(&mut net, &mut rs, "bench", DEFAULT_DATA_WIDTH, &entries)?;
    let a = Layout::load(&mut net, &mut rs, "bench", DEFAULT_DATA_WIDTH, &entries)?;
    let b = Layout::load(&mut net, &mut rs, "bench", DEFAULT_DATA_WIDTH, &entries)?;
    let before = net.meter().total_blocks();
    stable_compact(&mut net, &mut rs, input)?.free(&mut net);
    let mid = net.meter().total_blocks();
    merge(&mut net, &mut rs, a, b)?.free(&mut net);
    Ok(LinearRow {
        n,
        compact_blocks: mid - before,
        merge_blocks: net.meter().total_blocks() - mid,
    })
}

pub fn run_linear_suite(sizes: &[usize], seed: u64) -> Result<LinearReport> {
    let rows = sizes
        .par_iter()
        .map(|&n| measure_linear(n, seed))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let compact: Vec<f64> = rows.iter().map(|r| r.compact_blocks as f64).collect();
    let merged: Vec<f64> = rows.iter().map(|r| r.merge_blocks as f64).collect();
    Ok(LinearReport {
        compact_exponent: power_law_exponent(&ns, &compact),
        merge_exponent: power_law_exponent(&ns, &merged),
        compact_doubling: ratios(&compact),
        merge_doubling: ratios(&merged),
        rows,
    })
}
