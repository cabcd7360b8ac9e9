//! `antex decompose`: split one image into cartoon and texture at the
//! requested scales.

use std::path::PathBuf;

use antex::diffusion::{diffuse_step, ConductionKind, DiffusionParams, DEFAULT_KAPPA, DEFAULT_LAMBDA};
use antex::img::{self, GrayImage};
use anyhow::Context;
use clap::Args;

use crate::parse;

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Input image (.pgm or .png).
    #[arg(long, short = 'i')]
    pub input: PathBuf,

    /// Output directory (created if missing).
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,

    /// Iteration counts, e.g. "40", "10,20,40" or "10..200:10".
    #[arg(long, short = 't', default_value = "40")]
    pub t: String,

    /// Diffusion step weight in [0, 1].
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,

    /// Conduction threshold K on the [0, 255] intensity scale.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,

    /// Conduction function: exponential | rational.
    #[arg(long, value_parser = parse::conduction, default_value = "exponential")]
    pub conduction: ConductionKind,
}

/// Texture values visualized for 8-bit storage: offset by +128 and clamped.
/// The sidecar stays the lossless ground truth.
fn texture_visualization(texture: &GrayImage) -> GrayImage {
    GrayImage::from_fn(texture.width(), texture.height(), |x, y| {
        texture.get(x, y) + 128.0
    })
}

pub fn run(args: DecomposeArgs) -> anyhow::Result<i32> {
    let mut t_values = parse::usize_list(&args.t).map_err(anyhow::Error::msg)?;
    t_values.sort_unstable();
    t_values.dedup();

    let image = img::load_image(&args.input)?;
    let params = DiffusionParams::new(args.lambda, args.kappa, args.conduction, 0)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let stem = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());

    // March the diffusion once through the sorted scales; identical to
    // restarting from scratch for each t.
    let mut cartoon = image.clone();
    let mut done = 0usize;
    for &t in &t_values {
        for _ in done..t {
            cartoon = diffuse_step(&cartoon, &params);
        }
        done = t;
        let texture = image.sub(&cartoon);
        let u_path = args.out_dir.join(format!("{stem}_u_t{t}.pgm"));
        let v_path = args.out_dir.join(format!("{stem}_v_t{t}.atxf"));
        let vis_path = args.out_dir.join(format!("{stem}_v_t{t}.pgm"));
        img::save_image(&cartoon, &u_path)?;
        img::save_sidecar(&texture, &v_path)?;
        img::save_image(&texture_visualization(&texture), &vis_path)?;
        println!(
            "t={t}: wrote {}, {}, {}",
            u_path.display(),
            v_path.display(),
            vis_path.display()
        );
    }
    Ok(0)
}
