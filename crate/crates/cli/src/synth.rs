//! `antex synth`: write a deterministic synthetic texture dataset (PGM
//! tiles plus a v1 manifest) for hermetic benchmarking.

use std::path::PathBuf;

use antex::datasets::{synth_dataset, Manifest, ManifestEntry, SynthSpec};
use antex::img;
use anyhow::Context;
use clap::Args;
use serde::Serialize;

use crate::outio::{unix_now, write_atomic};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 5)]
    pub classes: usize,

    #[arg(long, default_value_t = 20)]
    pub per_class: usize,

    /// Square sample size in pixels.
    #[arg(long, default_value_t = 128)]
    pub size: usize,

    /// Illumination ramp amplitude (intensity units across the sample).
    #[arg(long, default_value_t = 50.0)]
    pub ramp: f64,

    /// Gaussian pixel-noise sigma.
    #[arg(long, default_value_t = 8.0)]
    pub noise: f64,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    created_unix: u64,
    seed: u64,
    classes: usize,
    per_class: usize,
    size: usize,
    ramp_amplitude: f64,
    noise_sigma: f64,
    manifest: String,
}

pub fn run(args: SynthArgs) -> anyhow::Result<i32> {
    let spec = SynthSpec::new(
        args.classes,
        args.per_class,
        args.size,
        args.ramp,
        args.noise,
        args.seed,
    );
    let dataset = synth_dataset(&spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut entries = Vec::with_capacity(dataset.len());
    for sample in &dataset.samples {
        let rel = PathBuf::from(format!("{}.pgm", sample.sample_id));
        let path = args.out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        img::save_image(&sample.image, &path)?;
        entries.push(ManifestEntry {
            class_name: sample.label.clone(),
            path: rel,
            split: None,
        });
    }
    let manifest = Manifest {
        format_version: antex::datasets::MANIFEST_VERSION.into(),
        entries,
    };
    let manifest_path = args.out_dir.join("dataset.manifest");
    write_atomic(&manifest_path, manifest.to_text().as_bytes())?;

    let run = RunManifest {
        command: "synth",
        created_unix: unix_now(),
        seed: args.seed,
        classes: args.classes,
        per_class: args.per_class,
        size: args.size,
        ramp_amplitude: args.ramp,
        noise_sigma: args.noise,
        manifest: manifest_path.display().to_string(),
    };
    write_atomic(
        &args.out_dir.join("synth.run.json"),
        &serde_json::to_vec_pretty(&run)?,
    )?;

    println!(
        "wrote {} samples ({} classes x {}) and {}",
        dataset.len(),
        args.classes,
        args.per_class,
        manifest_path.display()
    );
    Ok(0)
}
