//! Discrete Perona-Malik anisotropic diffusion and the cartoon/texture split.
//!
//! One step updates every pixel `s` as
//!
//! ```text
//! I'[s] = I[s] + (lambda / 4) * sum over in-bounds 4-neighbors p of
//!         g(I[p] - I[s]) * (I[p] - I[s])
//! ```
//!
//! The neighbor count is always taken as 4, so border pixels simply receive
//! zero flux from their missing neighbors (zero-flux boundary). For
//! `lambda <= 1` the update is a convex combination of the pixel and its
//! neighbors, which gives the maximum principle and unconditional stability.
//! Steps are Jacobi-style: each iteration reads only the previous buffer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::img::GrayImage;

/// The two Perona-Malik conduction functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConductionKind {
    /// `exp(-(|grad| / kappa)^2)`; favours high-contrast edges.
    Exponential,
    /// `1 / (1 + (|grad| / kappa)^2)`; favours wide regions.
    Rational,
}

impl ConductionKind {
    /// Unchecked conduction coefficient; `kappa` must be positive.
    #[inline]
    pub(crate) fn coefficient(self, grad: f64, kappa: f64) -> f64 {
        let r = grad / kappa;
        let r2 = r * r;
        match self {
            ConductionKind::Exponential => (-r2).exp(),
            ConductionKind::Rational => 1.0 / (1.0 + r2),
        }
    }
}

/// Conduction coefficient `g(grad)` in (0, 1].
///
/// Returns 1 at zero gradient and decreases monotonically in `|grad|`.
pub fn conduction(grad: f64, kappa: f64, kind: ConductionKind) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::NonPositiveKappa(kappa));
    }
    Ok(kind.coefficient(grad, kappa))
}

pub const DEFAULT_LAMBDA: f64 = 0.25;
pub const DEFAULT_KAPPA: f64 = 15.0;

/// Validated diffusion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams {
    lambda: f64,
    kappa: f64,
    kind: ConductionKind,
    iterations: usize,
}

impl DiffusionParams {
    /// `lambda` is the step weight in [0, 1], `kappa` the conduction
    /// threshold on the [0, 255] intensity scale, `iterations` the scale `t`.
    pub fn new(
        lambda: f64,
        kappa: f64,
        kind: ConductionKind,
        iterations: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            return Err(Error::InvalidLambda(lambda));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::NonPositiveKappa(kappa));
        }
        Ok(DiffusionParams {
            lambda,
            kappa,
            kind,
            iterations,
        })
    }

    /// Conventional settings: lambda 0.25, kappa 15, exponential conduction.
    pub fn conventional(iterations: usize) -> Self {
        DiffusionParams::new(DEFAULT_LAMBDA, DEFAULT_KAPPA, ConductionKind::Exponential, iterations)
            .unwrap()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kind(&self) -> ConductionKind {
        self.kind
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }
}

/// One explicit diffusion step over the whole image.
pub fn diffuse_step(img: &GrayImage, params: &DiffusionParams) -> GrayImage {
    let (width, height) = img.dimensions();
    let src = img.pixels();
    let weight = params.lambda / 4.0;
    let kappa = params.kappa;
    let kind = params.kind;

    let mut out = vec![0.0; src.len()];
    // Each output row depends only on the immutable source, so row-parallel
    // execution is bit-identical to the sequential order.
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let center = src[y * width + x];
            let mut flux = 0.0;
            if y > 0 {
                let g = src[(y - 1) * width + x] - center;
                flux += kind.coefficient(g, kappa) * g;
            }
            if y + 1 < height {
                let g = src[(y + 1) * width + x] - center;
                flux += kind.coefficient(g, kappa) * g;
            }
            if x > 0 {
                let g = src[y * width + x - 1] - center;
                flux += kind.coefficient(g, kappa) * g;
            }
            if x + 1 < width {
                let g = src[y * width + x + 1] - center;
                flux += kind.coefficient(g, kappa) * g;
            }
            *slot = center + weight * flux;
        }
    });
    GrayImage::new(width, height, out)
}

/// Applies [`diffuse_step`] `params.iterations()` times (the cartoon `u`).
pub fn diffuse(img: &GrayImage, params: &DiffusionParams) -> GrayImage {
    let mut current = img.clone();
    for _ in 0..params.iterations() {
        current = diffuse_step(&current, params);
    }
    current
}

/// Splits `img` into `(cartoon, texture)` with `texture = img - cartoon`,
/// pixelwise at full precision, never clamped.
pub fn decompose(img: &GrayImage, params: &DiffusionParams) -> (GrayImage, GrayImage) {
    let cartoon = diffuse(img, params);
    let texture = img.sub(&cartoon);
    (cartoon, texture)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.gen_range(0.0..=255.0))
    }

    /// Unoptimized per-pixel scalar-loop reference, kept deliberately
    /// independent of the production kernel (offset table, inline g).
    fn diffuse_step_oracle(img: &GrayImage, params: &DiffusionParams) -> GrayImage {
        let (w, h) = img.dimensions();
        let mut out = GrayImage::constant(w, h, 0.0);
        for y in 0..h as isize {
            for x in 0..w as isize {
                let center = img.get(x as usize, y as usize);
                let mut acc = 0.0;
                for (dx, dy) in [(0isize, -1isize), (0, 1), (-1, 0), (1, 0)] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let grad = img.get(nx as usize, ny as usize) - center;
                    let scaled = (grad / params.kappa()).powi(2);
                    let g = match params.kind() {
                        ConductionKind::Exponential => (-scaled).exp(),
                        ConductionKind::Rational => 1.0 / (1.0 + scaled),
                    };
                    acc += g * grad;
                }
                out.set(
                    x as usize,
                    y as usize,
                    center + params.lambda() / 4.0 * acc,
                );
            }
        }
        out
    }

    #[test]
    fn conduction_values() {
        // g(0) = 1 from both formulas
        assert_eq!(
            conduction(0.0, 3.0, ConductionKind::Exponential).unwrap(),
            1.0
        );
        assert_eq!(conduction(0.0, 3.0, ConductionKind::Rational).unwrap(), 1.0);
        // grad = kappa
        assert_eq!(
            conduction(21.0, 21.0, ConductionKind::Rational).unwrap(),
            0.5
        );
        let e = conduction(21.0, 21.0, ConductionKind::Exponential).unwrap();
        assert!((e - (-1.0f64).exp()).abs() < 1e-12);
        assert!((e - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn conduction_rejects_bad_kappa() {
        assert!(matches!(
            conduction(1.0, 0.0, ConductionKind::Rational),
            Err(Error::NonPositiveKappa(_))
        ));
        assert!(matches!(
            conduction(1.0, -2.0, ConductionKind::Exponential),
            Err(Error::NonPositiveKappa(_))
        ));
    }

    #[test]
    fn conduction_monotone_and_ordered() {
        for kind in [ConductionKind::Exponential, ConductionKind::Rational] {
            let mut prev = 1.0;
            for i in 1..200 {
                let g = conduction(i as f64 * 0.5, 10.0, kind).unwrap();
                assert!(g < prev, "not strictly decreasing at {i} for {kind:?}");
                assert!(g > 0.0 && g <= 1.0);
                prev = g;
            }
        }
        // exp(-x^2) <= 1/(1+x^2) pointwise
        for i in 0..500 {
            let grad = i as f64 * 0.1;
            let e = conduction(grad, 7.0, ConductionKind::Exponential).unwrap();
            let r = conduction(grad, 7.0, ConductionKind::Rational).unwrap();
            assert!(e <= r + 1e-15);
        }
    }

    #[test]
    fn params_validation() {
        assert!(DiffusionParams::new(1.5, 10.0, ConductionKind::Rational, 1).is_err());
        assert!(DiffusionParams::new(-0.1, 10.0, ConductionKind::Rational, 1).is_err());
        assert!(DiffusionParams::new(0.5, 0.0, ConductionKind::Rational, 1).is_err());
        assert!(DiffusionParams::new(1.0, 10.0, ConductionKind::Rational, 0).is_ok());
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let img = GrayImage::constant(9, 7, 42.5);
        let params = DiffusionParams::new(0.8, 5.0, ConductionKind::Exponential, 1).unwrap();
        assert_eq!(diffuse_step(&img, &params), img);
    }

    #[test]
    fn zero_lambda_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = random_image(&mut rng, 8, 8);
        let params = DiffusionParams::new(0.0, 5.0, ConductionKind::Rational, 1).unwrap();
        assert_eq!(diffuse_step(&img, &params), img);
    }

    #[test]
    fn two_pixel_step_hand_value() {
        // single neighbor, g = 1/(1+1) = 0.5, flux = (1/4) * 0.5 * 100 = 12.5
        let img = GrayImage::new(2, 1, vec![0.0, 100.0]);
        let params = DiffusionParams::new(1.0, 100.0, ConductionKind::Rational, 1).unwrap();
        let out = diffuse_step(&img, &params);
        assert_eq!(out.pixels(), &[12.5, 87.5]);
        let oracle = diffuse_step_oracle(&img, &params);
        assert_eq!(out.pixels(), oracle.pixels());
    }

    #[test]
    fn step_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [ConductionKind::Exponential, ConductionKind::Rational] {
            for _ in 0..25 {
                let img = random_image(&mut rng, 8, 8);
                let params = DiffusionParams::new(
                    rng.gen_range(0.0..=1.0),
                    rng.gen_range(1.0..60.0),
                    kind,
                    1,
                )
                .unwrap();
                let fast = diffuse_step(&img, &params);
                let slow = diffuse_step_oracle(&img, &params);
                for (a, b) in fast.pixels().iter().zip(slow.pixels()) {
                    assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn iterations_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = random_image(&mut rng, 6, 5);
        let p0 = DiffusionParams::new(0.25, 15.0, ConductionKind::Exponential, 0).unwrap();
        assert_eq!(diffuse(&img, &p0), img);
        let p1 = p0.with_iterations(1);
        assert_eq!(diffuse(&img, &p1), diffuse_step(&img, &p0));
        let p3 = p0.with_iterations(3);
        let manual = diffuse_step(&diffuse_step(&diffuse_step(&img, &p0), &p0), &p0);
        assert_eq!(diffuse(&img, &p3), manual);
    }

    #[test]
    fn long_run_converges_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(&mut rng, 16, 16);
        let mean = img.mean();
        let params = DiffusionParams::new(1.0, 1e9, ConductionKind::Rational, 10_000).unwrap();
        let out = diffuse(&img, &params);
        for &v in out.pixels() {
            assert!((v - mean).abs() < 1e-6, "{v} vs mean {mean}");
        }
    }

    #[test]
    fn mass_and_range_are_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let img = random_image(&mut rng, 12, 9);
            let params = DiffusionParams::new(
                rng.gen_range(0.0..=1.0),
                rng.gen_range(0.5..80.0),
                if rng.gen() {
                    ConductionKind::Exponential
                } else {
                    ConductionKind::Rational
                },
                1,
            )
            .unwrap();
            let (min, max) = img.min_max();
            let sum: f64 = img.pixels().iter().sum();
            let out = diffuse_step(&img, &params);
            let out_sum: f64 = out.pixels().iter().sum();
            assert!(((out_sum - sum) / sum).abs() <= 1e-9);
            for &v in out.pixels() {
                assert!(v >= min - 1e-12 && v <= max + 1e-12);
            }
            let (omin, omax) = out.min_max();
            assert!(omax - omin <= max - min + 1e-12);
        }
    }

    #[test]
    fn decompose_identity_and_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let img = random_image(&mut rng, 10, 10);

        // t = 0: cartoon = img, texture = 0
        let p0 = DiffusionParams::new(0.25, 15.0, ConductionKind::Exponential, 0).unwrap();
        let (u0, v0) = decompose(&img, &p0);
        assert_eq!(u0, img);
        assert!(v0.pixels().iter().all(|&v| v == 0.0));

        // constant image: texture all zeros at any t
        let flat = GrayImage::constant(7, 7, 99.0);
        let p = DiffusionParams::new(0.5, 10.0, ConductionKind::Rational, 25).unwrap();
        let (_, v) = decompose(&flat, &p);
        assert!(v.pixels().iter().all(|&x| x == 0.0));

        // texture is bitwise the defining subtraction, and zero-sum
        let (u, v) = decompose(&img, &p);
        for i in 0..img.pixels().len() {
            let expect = img.pixels()[i] - u.pixels()[i];
            assert_eq!(v.pixels()[i].to_bits(), expect.to_bits());
        }
        let vsum: f64 = v.pixels().iter().sum();
        let isum: f64 = img.pixels().iter().sum();
        assert!((vsum / isum).abs() <= 1e-9);
    }
}
