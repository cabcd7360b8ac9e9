//! `antex features`: featurize one dataset component into a CSV table.
//!
//! CSV columns: `sample_id,label,source_tag,E11,...,E<scales><orientations>`
//! with energies scale-major and printed as shortest round-trip decimals.
//! A `<out>.run.json` provenance manifest is written next to the table.

use std::path::PathBuf;

use antex::datasets::{ingest, Manifest};
use antex::diffusion::{ConductionKind, DiffusionParams, DEFAULT_KAPPA, DEFAULT_LAMBDA};
use antex::gabor::{BankParams, Component};
use antex::operators::{OperatorKind, DEFAULT_GAUSSIAN_SIGMA, DEFAULT_LOG_SIGMA};
use antex::pipeline::{featurize_dataset, Decomposer, PipelineConfig};
use anyhow::Context;
use clap::Args;
use serde::Serialize;

use crate::outio::{unix_now, write_atomic};
use crate::parse::{self, DecomposerName};

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Dataset manifest (v1 text format).
    #[arg(long, short = 'm')]
    pub manifest: PathBuf,

    /// Directory the manifest paths are relative to (default: the
    /// manifest's own directory).
    #[arg(long)]
    pub root: Option<PathBuf>,

    /// Output CSV path.
    #[arg(long, short = 'o')]
    pub out: PathBuf,

    /// Component to featurize: f (original), u (cartoon) or v (texture).
    #[arg(long, short = 'c', value_parser = parse::component, default_value = "v")]
    pub component: Component,

    /// Decomposer: perona_malik | gaussian | laplacian | log.
    #[arg(long, value_parser = parse::decomposer, default_value = "perona_malik")]
    pub decomposer: DecomposerName,

    /// Decomposition scale (iteration count).
    #[arg(long, short = 't', default_value_t = 40)]
    pub t: usize,

    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,

    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,

    /// Conduction function: exponential | rational.
    #[arg(long, value_parser = parse::conduction, default_value = "exponential")]
    pub conduction: ConductionKind,

    #[arg(long, default_value_t = DEFAULT_GAUSSIAN_SIGMA)]
    pub gaussian_sigma: f64,

    #[arg(long, default_value_t = DEFAULT_LOG_SIGMA)]
    pub log_sigma: f64,

    /// Gabor bank scales.
    #[arg(long, default_value_t = 5)]
    pub scales: usize,

    /// Gabor bank orientations.
    #[arg(long, default_value_t = 8)]
    pub orientations: usize,

    #[arg(long, default_value_t = 0.05)]
    pub low_freq: f64,

    #[arg(long, default_value_t = 0.4)]
    pub high_freq: f64,

    /// Seed recorded in the run manifest (featurization itself is
    /// deterministic).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn build_decomposer(
    name: DecomposerName,
    t: usize,
    lambda: f64,
    kappa: f64,
    conduction: ConductionKind,
    gaussian_sigma: f64,
    log_sigma: f64,
) -> anyhow::Result<Decomposer> {
    Ok(match name {
        DecomposerName::PeronaMalik => {
            Decomposer::PeronaMalik(DiffusionParams::new(lambda, kappa, conduction, t)?)
        }
        DecomposerName::Gaussian => Decomposer::Operator {
            kind: OperatorKind::Gaussian {
                sigma: gaussian_sigma,
            },
            iterations: t,
        },
        DecomposerName::Laplacian => Decomposer::Operator {
            kind: OperatorKind::Laplacian,
            iterations: t,
        },
        DecomposerName::Log => Decomposer::Operator {
            kind: OperatorKind::LoG { sigma: log_sigma },
            iterations: t,
        },
    })
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    created_unix: u64,
    seed: u64,
    manifest: String,
    root: String,
    samples: usize,
    component: String,
    decomposer: &'a str,
    t: usize,
    lambda: f64,
    kappa: f64,
    conduction: &'a str,
    gaussian_sigma: f64,
    log_sigma: f64,
    bank: BankEcho,
}

#[derive(Serialize)]
pub struct BankEcho {
    pub scales: usize,
    pub orientations: usize,
    pub low_freq: f64,
    pub high_freq: f64,
}

impl From<&BankParams> for BankEcho {
    fn from(b: &BankParams) -> Self {
        BankEcho {
            scales: b.scales,
            orientations: b.orientations,
            low_freq: b.low_freq,
            high_freq: b.high_freq,
        }
    }
}

pub fn conduction_name(kind: ConductionKind) -> &'static str {
    match kind {
        ConductionKind::Exponential => "exponential",
        ConductionKind::Rational => "rational",
    }
}

pub fn run(args: FeaturesArgs) -> anyhow::Result<i32> {
    let manifest = Manifest::load(&args.manifest)?;
    let root = args
        .root
        .clone()
        .or_else(|| args.manifest.parent().map(|p| p.to_path_buf()))
        .unwrap_or_else(|| PathBuf::from("."));
    let dataset = ingest(&manifest, &root)?;

    let bank = BankParams {
        scales: args.scales,
        orientations: args.orientations,
        low_freq: args.low_freq,
        high_freq: args.high_freq,
    };
    let decomposer = build_decomposer(
        args.decomposer,
        args.t,
        args.lambda,
        args.kappa,
        args.conduction,
        args.gaussian_sigma,
        args.log_sigma,
    )?;
    let cfg = PipelineConfig {
        component: args.component,
        decomposer,
        bank,
    };
    let table = featurize_dataset(&dataset, &cfg)?;

    let mut csv = Vec::new();
    table.write_csv(bank.scales, bank.orientations, &mut csv)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    write_atomic(&args.out, &csv)?;

    let run = RunManifest {
        command: "features",
        created_unix: unix_now(),
        seed: args.seed,
        manifest: args.manifest.display().to_string(),
        root: root.display().to_string(),
        samples: dataset.len(),
        component: args.component.to_string(),
        decomposer: args.decomposer.as_str(),
        t: args.t,
        lambda: args.lambda,
        kappa: args.kappa,
        conduction: conduction_name(args.conduction),
        gaussian_sigma: args.gaussian_sigma,
        log_sigma: args.log_sigma,
        bank: (&bank).into(),
    };
    let json_path = args.out.with_extension("run.json");
    write_atomic(&json_path, &serde_json::to_vec_pretty(&run)?)?;

    println!(
        "featurized {} samples ({} component) -> {}",
        dataset.len(),
        args.component,
        args.out.display()
    );
    Ok(0)
}
