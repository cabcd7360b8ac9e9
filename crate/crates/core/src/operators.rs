//! Linear smoothing and edge operators used as baselines against the
//! anisotropic decomposition, exposed through the same smooth/residual
//! protocol.

use crate::error::{Error, Result};
use crate::img::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// Normalized 2D Gaussian blur, kernel radius `ceil(3 sigma)`.
    Gaussian { sigma: f64 },
    /// 4-connected Laplacian stencil [[0,1,0],[1,-4,1],[0,1,0]].
    Laplacian,
    /// Sampled Laplacian-of-Gaussian, shifted to zero mean.
    LoG { sigma: f64 },
}

pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 1.0;
pub const DEFAULT_LOG_SIGMA: f64 = 2.0;

impl OperatorKind {
    fn validate(&self) -> Result<()> {
        match *self {
            OperatorKind::Gaussian { sigma } | OperatorKind::LoG { sigma } => {
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSigma(sigma))
                }
            }
            OperatorKind::Laplacian => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Gaussian { .. } => "gaussian",
            OperatorKind::Laplacian => "laplacian",
            OperatorKind::LoG { .. } => "log",
        }
    }
}

/// A small real-valued square kernel with odd side length.
struct Kernel {
    radius: usize,
    weights: Vec<f64>, // (2r+1)^2, row-major
}

impl Kernel {
    fn gaussian(sigma: f64) -> Kernel {
        let radius = (3.0 * sigma).ceil() as usize;
        let side = 2 * radius + 1;
        let mut weights = Vec::with_capacity(side * side);
        let inv = 1.0 / (2.0 * sigma * sigma);
        for dy in -(radius as isize)..=radius as isize {
            for dx in -(radius as isize)..=radius as isize {
                let r2 = (dx * dx + dy * dy) as f64;
                weights.push((-r2 * inv).exp());
            }
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Kernel { radius, weights }
    }

    fn laplacian() -> Kernel {
        Kernel {
            radius: 1,
            weights: vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0],
        }
    }

    fn log(sigma: f64) -> Kernel {
        let radius = (3.0 * sigma).ceil() as usize;
        let side = 2 * radius + 1;
        let mut weights = Vec::with_capacity(side * side);
        let s2 = sigma * sigma;
        for dy in -(radius as isize)..=radius as isize {
            for dx in -(radius as isize)..=radius as isize {
                let r2 = (dx * dx + dy * dy) as f64;
                // Laplacian of the unit-mass Gaussian.
                let g = (-r2 / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2);
                weights.push(g * (r2 - 2.0 * s2) / (s2 * s2));
            }
        }
        let mean: f64 = weights.iter().sum::<f64>() / weights.len() as f64;
        for w in &mut weights {
            *w -= mean;
        }
        Kernel { radius, weights }
    }

    /// Direct correlation with symmetric reflection at the borders. All
    /// kernels here are centrally symmetric, so this equals convolution.
    fn apply(&self, img: &GrayImage) -> GrayImage {
        let (w, h) = img.dimensions();
        let r = self.radius as isize;
        let side = 2 * self.radius + 1;
        GrayImage::from_fn(w, h, |x, y| {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let k = self.weights[(dy + r) as usize * side + (dx + r) as usize];
                    if k != 0.0 {
                        acc += k * img.get_reflect(x as isize + dx, y as isize + dy);
                    }
                }
            }
            acc
        })
    }
}

fn kernel_for(kind: OperatorKind) -> Result<Kernel> {
    kind.validate()?;
    Ok(match kind {
        OperatorKind::Gaussian { sigma } => Kernel::gaussian(sigma),
        OperatorKind::Laplacian => Kernel::laplacian(),
        OperatorKind::LoG { sigma } => Kernel::log(sigma),
    })
}

/// Convolves the image once with the operator's kernel (reflect borders).
pub fn apply_operator(img: &GrayImage, kind: OperatorKind) -> Result<GrayImage> {
    Ok(kernel_for(kind)?.apply(img))
}

/// Produces a `(smooth, residual)` pair mirroring the diffusion protocol,
/// with `smooth + residual = img` by construction.
///
/// Gaussian is applied `iterations` times and the residual is what it
/// removed. Laplacian and LoG are already high-pass, so their single
/// response plays the role of the residual directly; `iterations = 0` is
/// the identity for every kind.
pub fn operator_decompose(
    img: &GrayImage,
    kind: OperatorKind,
    iterations: usize,
) -> Result<(GrayImage, GrayImage)> {
    kind.validate()?;
    if iterations == 0 {
        let zero = GrayImage::constant(img.width(), img.height(), 0.0);
        return Ok((img.clone(), zero));
    }
    match kind {
        OperatorKind::Gaussian { .. } => {
            let kernel = kernel_for(kind)?;
            let mut smooth = kernel.apply(img);
            for _ in 1..iterations {
                smooth = kernel.apply(&smooth);
            }
            let residual = img.sub(&smooth);
            Ok((smooth, residual))
        }
        OperatorKind::Laplacian | OperatorKind::LoG { .. } => {
            let residual = apply_operator(img, kind)?;
            let smooth = img.sub(&residual);
            Ok((smooth, residual))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.gen_range(0.0..=255.0))
    }

    #[test]
    fn sigma_validation() {
        assert!(matches!(
            apply_operator(
                &GrayImage::constant(4, 4, 0.0),
                OperatorKind::Gaussian { sigma: 0.0 }
            ),
            Err(Error::InvalidSigma(_))
        ));
        assert!(matches!(
            apply_operator(
                &GrayImage::constant(4, 4, 0.0),
                OperatorKind::LoG { sigma: -1.0 }
            ),
            Err(Error::InvalidSigma(_))
        ));
    }

    #[test]
    fn kernel_sums() {
        let g = Kernel::gaussian(1.7);
        let sum: f64 = g.weights.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);

        let log = Kernel::log(2.0);
        let sum: f64 = log.weights.iter().sum();
        assert!(sum.abs() <= 1e-12);

        let lap = Kernel::laplacian();
        assert_eq!(lap.weights.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn constant_image_responses() {
        let img = GrayImage::constant(8, 6, 123.0);
        let blurred = apply_operator(&img, OperatorKind::Gaussian { sigma: 1.0 }).unwrap();
        for &v in blurred.pixels() {
            assert!((v - 123.0).abs() < 1e-10);
        }
        let edges = apply_operator(&img, OperatorKind::Laplacian).unwrap();
        for &v in edges.pixels() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn laplacian_reflect_hand_value() {
        // 1x3 image [0, 100, 0]: reflected vertical neighbors duplicate the
        // row, so the stencil yields [100, -200, 100].
        let img = GrayImage::new(3, 1, vec![0.0, 100.0, 0.0]);
        let out = apply_operator(&img, OperatorKind::Laplacian).unwrap();
        assert_eq!(out.pixels(), &[100.0, -200.0, 100.0]);
    }

    #[test]
    fn gaussian_commutes_with_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let img = random_image(&mut rng, 17, 17);
        let kind = OperatorKind::Gaussian { sigma: 1.4 };
        let a = apply_operator(&img.transpose(), kind).unwrap();
        let b = apply_operator(&img, kind).unwrap().transpose();
        for (x, y) in a.pixels().iter().zip(b.pixels()) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn decompose_identity_per_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = random_image(&mut rng, 11, 13);
        for kind in [
            OperatorKind::Gaussian { sigma: 1.0 },
            OperatorKind::Laplacian,
            OperatorKind::LoG { sigma: 2.0 },
        ] {
            for iterations in [0, 1, 3] {
                let (smooth, residual) = operator_decompose(&img, kind, iterations).unwrap();
                // the pair is bitwise the defining subtraction
                for i in 0..img.pixels().len() {
                    let s = smooth.pixels()[i];
                    let r = residual.pixels()[i];
                    let orig = img.pixels()[i];
                    match kind {
                        OperatorKind::Gaussian { .. } if iterations > 0 => {
                            assert_eq!(r.to_bits(), (orig - s).to_bits())
                        }
                        _ => assert_eq!(s.to_bits(), (orig - r).to_bits()),
                    }
                }
            }
        }
    }

    #[test]
    fn zero_iterations_is_identity() {
        let img = GrayImage::from_fn(5, 5, |x, y| (x + 10 * y) as f64);
        let (smooth, residual) =
            operator_decompose(&img, OperatorKind::Gaussian { sigma: 2.0 }, 0).unwrap();
        assert_eq!(smooth, img);
        assert!(residual.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_iterations_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img = random_image(&mut rng, 9, 9);
        let kind = OperatorKind::Gaussian { sigma: 0.8 };
        let once = apply_operator(&img, kind).unwrap();
        let twice = apply_operator(&once, kind).unwrap();
        let (smooth, _) = operator_decompose(&img, kind, 2).unwrap();
        assert_eq!(smooth, twice);
    }
}
