//! Pluggable one-dimensional FFT kernels.
//!
//! The core never links an FFT library itself. A [`FftPlanner`] hands out
//! batched 1-D kernels; multi-dimensional transforms are assembled from them
//! in [`crate::grid`]. [`NaiveDft`] is an O(n²) reference planner that works
//! everywhere and doubles as an oracle for faster backends.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

/// Sign convention of a transform.
///
/// `Forward` computes `X_k = Σ_j x_j e^{-2πi jk/n}`, `Inverse` uses the
/// opposite sign. Neither direction normalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Inverse,
}

/// An in-place 1-D transform of fixed length.
pub trait FftKernel: Send + Sync {
    fn len(&self) -> usize;

    /// Transforms every consecutive chunk of `len()` values in `data`.
    /// `data.len()` must be a multiple of `len()`.
    fn process(&self, data: &mut [Complex64]);
}

pub trait FftPlanner: Send + Sync {
    fn plan(&self, len: usize, direction: Direction) -> Arc<dyn FftKernel>;
}

/// Direct evaluation of the DFT sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct NaiveDft;

struct NaiveKernel {
    twiddles: Vec<Complex64>,
}

impl FftKernel for NaiveKernel {
    fn len(&self) -> usize {
        self.twiddles.len()
    }

    fn process(&self, data: &mut [Complex64]) {
        let n = self.twiddles.len();
        assert!(
            n > 0 && data.len().is_multiple_of(n),
            "buffer is not a multiple of the kernel length"
        );
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); n];
        for chunk in data.chunks_exact_mut(n) {
            for (k, slot) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, x) in chunk.iter().enumerate() {
                    acc += x * self.twiddles[(j * k) % n];
                }
                *slot = acc;
            }
            chunk.copy_from_slice(&out);
        }
    }
}

impl FftPlanner for NaiveDft {
    fn plan(&self, len: usize, direction: Direction) -> Arc<dyn FftKernel> {
        let sign = match direction {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        let twiddles = (0..len)
            .map(|j| {
                let theta = sign * 2.0 * PI * j as f64 / len as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Arc::new(NaiveKernel { twiddles })
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_round_trip() {
        let planner = NaiveDft;
        let fwd = planner.plan(6, Direction::Forward);
        let inv = planner.plan(6, Direction::Inverse);
        let orig: Vec<Complex64> = (0..12)
            .map(|j| Complex64::new(j as f64, (j * j) as f64 * 0.1))
            .collect();
        let mut buf = orig.clone();
        fwd.process(&mut buf);
        inv.process(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / 6.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn naive_single_frequency() {
        let n = 8;
        let kernel = NaiveDft.plan(n, Direction::Forward);
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * j as f64 / n as f64))
            .collect();
        kernel.process(&mut buf);
        for (k, v) in buf.iter().enumerate() {
            let expect = if k == 3 { n as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(7), 8);
        assert_eq!(next_smooth(11), 12);
        assert_eq!(next_smooth(260), 270);
        assert_eq!(next_smooth(1), 1);
    }
}
