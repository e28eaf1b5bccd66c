//! rustfft-backed planner for the core transforms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use fdnls_core::{Direction, FftKernel, FftPlanner};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection};

struct RustFftKernel {
    fft: Arc<dyn Fft<f64>>,
}

impl FftKernel for RustFftKernel {
    fn len(&self) -> usize {
        self.fft.len()
    }

    fn process(&self, data: &mut [Complex64]) {
        self.fft.process(data);
    }
}

/// Caches one plan per `(len, direction)`.
pub struct RustFftPlanner {
    inner: Mutex<rustfft::FftPlanner<f64>>,
    cache: Mutex<HashMap<(usize, Direction), Arc<dyn FftKernel>>>,
}

impl RustFftPlanner {
    pub fn new() -> Self {
        Self {
            inner: Mutex::new(rustfft::FftPlanner::new()),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl Default for RustFftPlanner {
    fn default() -> Self {
        Self::new()
    }
}

impl FftPlanner for RustFftPlanner {
    fn plan(&self, len: usize, direction: Direction) -> Arc<dyn FftKernel> {
        let mut cache = self.cache.lock().expect("planner cache poisoned");
        cache
            .entry((len, direction))
            .or_insert_with(|| {
                let dir = match direction {
                    Direction::Forward => FftDirection::Forward,
                    Direction::Inverse => FftDirection::Inverse,
                };
                let fft = self.inner.lock().expect("planner poisoned").plan_fft(len, dir);
                Arc::new(RustFftKernel { fft })
            })
            .clone()
    }
}
