//! `antex info`: print basic statistics for an image or float sidecar.

use std::path::PathBuf;

use antex::img;
use clap::Args;

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// A .pgm, .png or .atxf file.
    #[arg(long, short = 'i')]
    pub input: PathBuf,
}

pub fn run(args: InfoArgs) -> anyhow::Result<i32> {
    let is_sidecar = args
        .input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("atxf"))
        .unwrap_or(false);
    let (kind, image) = if is_sidecar {
        ("float sidecar (ATXF1)", img::load_sidecar(&args.input)?)
    } else {
        ("8-bit raster", img::load_image(&args.input)?)
    };
    let (min, max) = image.min_max();
    let sum: f64 = image.pixels().iter().sum();
    println!("{}", args.input.display());
    println!("  kind:   {kind}");
    println!("  size:   {}x{}", image.width(), image.height());
    println!("  min:    {min}");
    println!("  max:    {max}");
    println!("  mean:   {}", image.mean());
    println!("  sum:    {sum}");
    Ok(0)
}
