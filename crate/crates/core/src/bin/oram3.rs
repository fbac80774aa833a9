use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oram3::harness::workload::{generate, Workload};
use oram3::harness::{audit, bench, run_audit, ExperimentConfig};
use oram3::simnet::{write_jsonl, TraceMode};
use oram3::{OramConfig, OramSystem};

#[derive(Parser)]
#[command(
    name = "oram3",
    version,
    about = "Three-server ORAM simulator and audit harness"
)]
struct Cli {
    /// Seed for all client randomness and generated workloads.
    #[arg(long, global = true, env = "ORAM3_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a workload against the ORAM and a plain array.
    Verify {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        ops: usize,
        #[arg(long, value_enum, default_value_t = Workload::Uniform)]
        workload: Workload,
    },
    /// Pattern-equality and index-uniformity audits; JSON report on stdout.
    Audit {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        ops: usize,
        #[arg(long, default_value_t = 4000)]
        trials: usize,
    },
    /// Amortized bandwidth per access for each size; JSON on stdout.
    Bench {
        /// Comma-separated capacities, each a power of two.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u64>,
        /// Data blocks of 8 (log N)^2 bytes instead of the default width.
        #[arg(long)]
        big_blocks: bool,
        /// Also sweep compaction and merging over these lengths.
        #[arg(long, value_delimiter = ',')]
        linear: Vec<usize>,
    },
    /// Dump the message trace of setup plus a uniform workload as JSON lines.
    Trace {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        ops: usize,
        #[arg(long)]
        out: PathBuf,
        /// Null out physical indices, leaving only the pattern.
        #[arg(long)]
        strip: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let seed = cli.seed;
    match cli.cmd {
        Cmd::Verify { n, ops, workload } => {
            let cfg = ExperimentConfig {
                workload,
                ..ExperimentConfig::new(n, ops, seed)
            };
            cfg.oram_config().validate()?;
            let report = audit::run_oracle_replay(&cfg);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::Audit { n, ops, trials } => {
            let report = run_audit(n, ops, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::Bench {
            sizes,
            big_blocks,
            linear,
        } => {
            let oram = bench::run_bandwidth_suite(&sizes, big_blocks, seed)?;
            let linear = if linear.is_empty() {
                None
            } else {
                Some(bench::run_linear_suite(&linear, seed)?)
            };
            let out = serde_json::json!({ "oram": oram, "linear": linear });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Trace { n, ops, out, strip } => {
            let cfg = OramConfig {
                trace: TraceMode::Full { contents: false },
                ..OramConfig::new(n)
            };
            let mut oram = OramSystem::new(cfg, seed)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_jsonl(&oram.net_mut().take_events(), strip, &mut w)?;
            for req in generate(Workload::Uniform, n, ops, oram.payload_len(), seed) {
                oram.access(&req)?;
                write_jsonl(&oram.net_mut().take_events(), strip, &mut w)?;
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
