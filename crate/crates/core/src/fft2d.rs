//! Small 2D FFT helpers on top of rustfft, with per-thread plan caching.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// In-place unnormalized 2D FFT of a row-major `height` x `width` buffer.
pub(crate) fn fft_2d(data: &mut [Complex64], width: usize, height: usize, dir: FftDirection) {
    assert_eq!(data.len(), width * height);
    let row_fft = plan(width, dir);
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut cols = transpose(data, width, height);
    let col_fft = plan(height, dir);
    for col in cols.chunks_exact_mut(height) {
        col_fft.process(col);
    }
    let back = transpose(&cols, height, width);
    data.copy_from_slice(&back);
}

fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = data[y * width + x];
        }
    }
    out
}

/// Smallest n' >= n whose prime factors are all in {2, 3, 5}, so the FFT
/// stays on fast radix paths.
pub(crate) fn next_fast_len(n: usize) -> usize {
    fn is_smooth(mut n: usize) -> bool {
        for f in [2, 3, 5] {
            while n % f == 0 {
                n /= f;
            }
        }
        n == 1
    }
    let mut m = n.max(1);
    while !is_smooth(m) {
        m += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_fast_len(1), 1);
        assert_eq!(next_fast_len(243), 243);
        assert_eq!(next_fast_len(364), 375);
        assert_eq!(next_fast_len(129), 135);
    }

    #[test]
    fn forward_inverse_round_trip() {
        let (w, h) = (12, 10);
        let orig: Vec<Complex64> = (0..w * h)
            .map(|i| Complex64::new(i as f64 * 0.37, (i % 7) as f64))
            .collect();
        let mut buf = orig.clone();
        fft_2d(&mut buf, w, h, FftDirection::Forward);
        fft_2d(&mut buf, w, h, FftDirection::Inverse);
        let scale = 1.0 / (w * h) as f64;
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a * scale - b).norm() < 1e-10);
        }
    }
}
