//! Gabor filter-bank construction, 2D convolution (direct and FFT-based),
//! and energy feature extraction.
//!
//! The bank follows the standard dyadic texture-retrieval design: a complex
//! mother Gabor centered at `high_freq` is dilated so the center frequencies
//! span geometrically down to `low_freq`, and rotated over uniformly spaced
//! orientations in [0, pi). Gaussian spreads are chosen so adjacent filters'
//! half-magnitude contours touch, and every kernel is DC-corrected so its
//! real part sums to zero.

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft2d::{fft_2d, next_fast_len};
use crate::img::GrayImage;

/// Which image component a feature vector was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Original,
    Cartoon,
    Texture,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::Original => "f",
            Component::Cartoon => "u",
            Component::Texture => "v",
        }
    }
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bank shape and frequency coverage. Frequencies are in cycles/pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankParams {
    pub scales: usize,
    pub orientations: usize,
    pub low_freq: f64,
    pub high_freq: f64,
}

impl Default for BankParams {
    fn default() -> Self {
        BankParams {
            scales: 5,
            orientations: 8,
            low_freq: 0.05,
            high_freq: 0.4,
        }
    }
}

impl BankParams {
    fn validate(&self) -> Result<()> {
        if self.scales == 0 || self.orientations == 0 {
            return Err(Error::InvalidBankParams(
                "scales and orientations must be >= 1".into(),
            ));
        }
        let (lo, hi) = (self.low_freq, self.high_freq);
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi && hi < 0.5) {
            return Err(Error::InvalidBankParams(format!(
                "need 0 < low_freq < high_freq < 0.5, got {lo} and {hi}"
            )));
        }
        Ok(())
    }
}

/// One complex Gabor kernel. `scale_index` and `orientation_index` are
/// 1-based; kernels are square with odd side length.
#[derive(Debug, Clone)]
pub struct GaborFilter {
    pub scale_index: usize,
    pub orientation_index: usize,
    pub center_frequency: f64,
    pub orientation: f64,
    side: usize,
    kernel: Vec<Complex64>,
}

impl GaborFilter {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn radius(&self) -> usize {
        self.side / 2
    }

    pub fn kernel(&self) -> &[Complex64] {
        &self.kernel
    }
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    filters: Vec<GaborFilter>,
    params: BankParams,
}

impl FilterBank {
    /// Filters in scale-major, orientation-minor order.
    pub fn filters(&self) -> &[GaborFilter] {
        &self.filters
    }

    pub fn params(&self) -> &BankParams {
        self.params_ref()
    }

    fn params_ref(&self) -> &BankParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// Builds the scale-major bank described by `params`.
pub fn build_filter_bank(params: &BankParams) -> Result<FilterBank> {
    params.validate()?;
    let (ul, uh) = (params.low_freq, params.high_freq);
    let scales = params.scales;
    let orients = params.orientations;

    // Dilation ratio between adjacent scales; one octave when there is a
    // single scale.
    let a = if scales > 1 {
        (uh / ul).powf(1.0 / (scales - 1) as f64)
    } else {
        2.0
    };
    let ln2x2 = 2.0 * std::f64::consts::LN_2;
    let sigma_u = (a - 1.0) * uh / ((a + 1.0) * ln2x2.sqrt());
    let sigma_v = if orients > 1 {
        let t = (std::f64::consts::PI / (2.0 * orients as f64)).tan();
        let num = uh - ln2x2 * sigma_u * sigma_u / uh;
        let den = ln2x2 - ln2x2 * ln2x2 * sigma_u * sigma_u / (uh * uh);
        if num <= 0.0 || den <= 0.0 {
            return Err(Error::InvalidBankParams(format!(
                "frequency range too wide for half-peak-touching design \
                 (low {ul}, high {uh}, {scales} scales)"
            )));
        }
        t * num / den.sqrt()
    } else {
        sigma_u
    };
    if !(sigma_u > 0.0 && sigma_u.is_finite() && sigma_v > 0.0 && sigma_v.is_finite()) {
        return Err(Error::InvalidBankParams(format!(
            "degenerate Gaussian spreads ({sigma_u}, {sigma_v})"
        )));
    }
    // Space-domain spreads of the mother filter.
    let sigma_x = 1.0 / (2.0 * std::f64::consts::PI * sigma_u);
    let sigma_y = 1.0 / (2.0 * std::f64::consts::PI * sigma_v);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_x * sigma_y);

    let mut filters = Vec::with_capacity(scales * orients);
    for m in 0..scales {
        let shrink = a.powi(-(m as i32)); // a^-m
        let radius = (3.0 * sigma_x.max(sigma_y) / shrink).ceil() as usize;
        let side = 2 * radius + 1;
        for n in 0..orients {
            let theta = std::f64::consts::PI * n as f64 / orients as f64;
            let (sin_t, cos_t) = theta.sin_cos();
            let mut kernel = Vec::with_capacity(side * side);
            let mut envelope = Vec::with_capacity(side * side);
            for py in -(radius as isize)..=radius as isize {
                for px in -(radius as isize)..=radius as isize {
                    let (x, y) = (px as f64, py as f64);
                    let xr = shrink * (x * cos_t + y * sin_t);
                    let yr = shrink * (-x * sin_t + y * cos_t);
                    let env = shrink
                        * norm
                        * (-0.5 * (xr * xr / (sigma_x * sigma_x) + yr * yr / (sigma_y * sigma_y)))
                            .exp();
                    let phase = 2.0 * std::f64::consts::PI * uh * xr;
                    kernel.push(Complex64::new(env * phase.cos(), env * phase.sin()));
                    envelope.push(env);
                }
            }
            // DC correction: remove the envelope-shaped mean so the real
            // part sums to zero.
            let re_sum: f64 = kernel.iter().map(|c| c.re).sum();
            let env_sum: f64 = envelope.iter().sum();
            let c = re_sum / env_sum;
            for (k, &e) in kernel.iter_mut().zip(&envelope) {
                k.re -= c * e;
            }
            filters.push(GaborFilter {
                scale_index: m + 1,
                orientation_index: n + 1,
                center_frequency: uh * shrink,
                orientation: theta,
                side,
                kernel,
            });
        }
    }
    Ok(FilterBank {
        filters,
        params: *params,
    })
}

/// A complex-valued filter response over the input extent.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), width * height);
        ComplexImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.data
    }
}

/// Total response energy: the sum of squared magnitudes.
pub fn energy(response: &ComplexImage) -> f64 {
    response.data.iter().map(|c| c.norm_sqr()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMethod {
    /// Direct spatial sum; the always-available reference path.
    Direct,
    /// Reflect-pad then zero-padded FFT linear convolution; same output.
    Fft,
}

impl ConvMethod {
    /// FFT wins once images reach 64 pixels on both sides.
    pub fn auto_for(width: usize, height: usize) -> ConvMethod {
        if width.min(height) >= 64 {
            ConvMethod::Fft
        } else {
            ConvMethod::Direct
        }
    }
}

fn check_kernel_fits(img: &GrayImage, filter: &GaborFilter) -> Result<()> {
    let (w, h) = img.dimensions();
    if filter.side > w || filter.side > h {
        return Err(Error::KernelTooLarge {
            kernel: filter.side,
            width: w,
            height: h,
        });
    }
    Ok(())
}

/// Convolution `I * g` evaluated at every pixel of the input extent, with
/// symmetric reflection past the borders. Both methods produce the same
/// field up to FFT rounding.
pub fn convolve(img: &GrayImage, filter: &GaborFilter, method: ConvMethod) -> Result<ComplexImage> {
    check_kernel_fits(img, filter)?;
    Ok(match method {
        ConvMethod::Direct => convolve_direct(img, filter),
        ConvMethod::Fft => {
            let plan = ScalePlan::new(img.width(), img.height(), filter.radius());
            let spectrum = plan.kernel_spectrum(filter);
            plan.convolve(img, &spectrum)
        }
    })
}

fn convolve_direct(img: &GrayImage, filter: &GaborFilter) -> ComplexImage {
    let (w, h) = img.dimensions();
    let r = filter.radius() as isize;
    let side = filter.side;
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = Complex64::default();
            for dy in -r..=r {
                for dx in -r..=r {
                    let k = filter.kernel[((dy + r) * side as isize + dx + r) as usize];
                    acc += k * img.get_reflect(x - dx, y - dy);
                }
            }
            data.push(acc);
        }
    }
    ComplexImage::new(w, h, data)
}

/// FFT geometry for one kernel radius at a fixed image size.
struct ScalePlan {
    width: usize,
    height: usize,
    radius: usize,
    nw: usize,
    nh: usize,
}

impl ScalePlan {
    fn new(width: usize, height: usize, radius: usize) -> ScalePlan {
        // Reflect padding adds r per border and linear convolution needs
        // another kernel-side worth of headroom: n >= dim + 4r.
        ScalePlan {
            width,
            height,
            radius,
            nw: next_fast_len(width + 4 * radius),
            nh: next_fast_len(height + 4 * radius),
        }
    }

    fn kernel_spectrum(&self, filter: &GaborFilter) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.nw * self.nh];
        for row in 0..filter.side {
            let src = &filter.kernel[row * filter.side..(row + 1) * filter.side];
            buf[row * self.nw..row * self.nw + filter.side].copy_from_slice(src);
        }
        fft_2d(&mut buf, self.nw, self.nh, FftDirection::Forward);
        buf
    }

    fn image_spectrum(&self, img: &GrayImage) -> Vec<Complex64> {
        let r = self.radius as isize;
        let mut buf = vec![Complex64::default(); self.nw * self.nh];
        let padded_w = self.width + 2 * self.radius;
        let padded_h = self.height + 2 * self.radius;
        for py in 0..padded_h {
            for px in 0..padded_w {
                let v = img.get_reflect(px as isize - r, py as isize - r);
                buf[py * self.nw + px] = Complex64::new(v, 0.0);
            }
        }
        fft_2d(&mut buf, self.nw, self.nh, FftDirection::Forward);
        buf
    }

    fn convolve(&self, img: &GrayImage, kernel_spectrum: &[Complex64]) -> ComplexImage {
        let spectrum = self.image_spectrum(img);
        self.convolve_spectrum(&spectrum, kernel_spectrum)
    }

    fn convolve_spectrum(
        &self,
        image_spectrum: &[Complex64],
        kernel_spectrum: &[Complex64],
    ) -> ComplexImage {
        let mut buf: Vec<Complex64> = image_spectrum
            .iter()
            .zip(kernel_spectrum)
            .map(|(a, b)| a * b)
            .collect();
        fft_2d(&mut buf, self.nw, self.nh, FftDirection::Inverse);
        let scale = 1.0 / (self.nw * self.nh) as f64;
        let off = 2 * self.radius;
        let mut data = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                data.push(buf[(y + off) * self.nw + (x + off)] * scale);
            }
        }
        ComplexImage::new(self.width, self.height, data)
    }
}

/// Ordered Gabor energies plus the component tag they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub energies: Vec<f64>,
    pub source_tag: Component,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn tagged(mut self, tag: Component) -> FeatureVector {
        self.source_tag = tag;
        self
    }
}

/// Energy of every bank filter applied to `img`, scale-major. The tag
/// defaults to [`Component::Original`].
pub fn extract_features(
    img: &GrayImage,
    bank: &FilterBank,
    method: ConvMethod,
) -> Result<FeatureVector> {
    match method {
        ConvMethod::Direct => {
            let mut energies = Vec::with_capacity(bank.len());
            for filter in bank.filters() {
                check_kernel_fits(img, filter)?;
                energies.push(energy(&convolve_direct(img, filter)));
            }
            Ok(FeatureVector {
                energies,
                source_tag: Component::Original,
            })
        }
        ConvMethod::Fft => PreparedBank::new(bank, img.width(), img.height())?.extract(img),
    }
}

/// A bank with kernel spectra precomputed for one image size, so a whole
/// dataset can be featurized without re-transforming the kernels.
pub struct PreparedBank<'a> {
    bank: &'a FilterBank,
    width: usize,
    height: usize,
    // One plan per scale (all orientations of a scale share a radius),
    // holding the spectra of that scale's filters in orientation order.
    plans: Vec<(ScalePlan, Vec<Vec<Complex64>>)>,
}

impl<'a> PreparedBank<'a> {
    pub fn new(bank: &'a FilterBank, width: usize, height: usize) -> Result<PreparedBank<'a>> {
        let orients = bank.params_ref().orientations;
        let mut plans = Vec::with_capacity(bank.params_ref().scales);
        for chunk in bank.filters().chunks(orients) {
            let radius = chunk[0].radius();
            let side = 2 * radius + 1;
            if side > width || side > height {
                return Err(Error::KernelTooLarge {
                    kernel: side,
                    width,
                    height,
                });
            }
            let plan = ScalePlan::new(width, height, radius);
            let spectra = chunk.iter().map(|f| plan.kernel_spectrum(f)).collect();
            plans.push((plan, spectra));
        }
        Ok(PreparedBank {
            bank,
            width,
            height,
            plans,
        })
    }

    pub fn extract(&self, img: &GrayImage) -> Result<FeatureVector> {
        if img.dimensions() != (self.width, self.height) {
            return Err(Error::SizeMismatch(format!(
                "prepared for {}x{}, got {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        let mut energies = Vec::with_capacity(self.bank.len());
        for (plan, spectra) in &self.plans {
            let image_spectrum = plan.image_spectrum(img);
            for kernel_spectrum in spectra {
                let response = plan.convolve_spectrum(&image_spectrum, kernel_spectrum);
                energies.push(energy(&response));
            }
        }
        Ok(FeatureVector {
            energies,
            source_tag: Component::Original,
        })
    }
}
