//! Command-line front end for the antex texture-analysis toolkit.

mod benchmark;
mod config;
mod decompose;
mod features;
mod info;
mod outio;
mod parse;
mod synth;

use clap::{Parser, Subcommand};

const AFTER_HELP: &str = "Exit codes: 0 success, 1 validation error, 2 I/O error, 3 partial failure.

CSV formats:
  features:  sample_id,label,source_tag,E11,...  (energies scale-major)
  benchmark: see `antex benchmark --help`";

#[derive(Parser)]
#[command(
    name = "antex",
    version,
    about = "Cartoon/texture decomposition, Gabor energy features, and KNN texture benchmarks",
    after_help = AFTER_HELP
)]
struct Cli {
    /// Worker threads for the process-wide pool (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an image into cartoon (u) and texture (v) at given scales.
    Decompose(decompose::DecomposeArgs),
    /// Extract Gabor energy features from a dataset component.
    Features(features::FeaturesArgs),
    /// Run the full decomposer/scale/component/k benchmark grid.
    Benchmark(benchmark::BenchmarkArgs),
    /// Generate a deterministic synthetic texture dataset.
    Synth(synth::SynthArgs),
    /// Print statistics for an image or float sidecar.
    Info(info::InfoArgs),
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<antex::Error>() {
        return match e {
            antex::Error::FileNotFound(_)
            | antex::Error::Io { .. }
            | antex::Error::CorruptData { .. }
            | antex::Error::UnsupportedFormat(_)
            | antex::Error::IngestFailures(_) => 2,
            _ => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    1
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if cli.threads > 0 {
        // Ignore the error if a pool already exists (e.g. repeated init in
        // tests); the run stays correct either way.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Decompose(args) => decompose::run(args),
        Command::Features(args) => features::run(args),
        Command::Benchmark(args) => benchmark::run(args),
        Command::Synth(args) => synth::run(args),
        Command::Info(args) => info::run(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}
