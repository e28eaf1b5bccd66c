//! Small estimators shared by the Monte Carlo diagnostics.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean and standard error for independent samples.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchEstimate {
    pub mean: f64,
    pub se: f64,
    pub batches: usize,
    /// Lag-1 autocorrelation of the batch means.
    pub lag1: f64,
    /// Raised when batch means are still correlated or the variance
    /// estimate is degenerate while the batches disagree.
    pub warning: bool,
}

/// Batch-means estimate for a correlated series (time averages along one path).
pub fn batch_means(xs: &[f64], batches: usize) -> Result<BatchEstimate> {
    let batches = batches.max(2);
    if xs.len() < batches {
        return Err(Error::TooFew {
            what: "samples for batch means",
            need: batches,
            have: xs.len(),
        });
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    let m = mean(&xs[..size * batches]);
    let var = variance(&means);
    let se = (var / batches as f64).sqrt();
    let lag1 = autocorrelation(&means, 1);
    let spread = means.iter().fold(0.0f64, |acc, x| acc.max((x - m).abs()));
    let degenerate = se == 0.0 && spread > 0.0;
    Ok(BatchEstimate {
        mean: m,
        se,
        batches,
        lag1,
        warning: degenerate || lag1 > 0.5,
    })
}

/// Sample autocorrelation at `lag`; zero when the variance vanishes.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if n <= lag + 1 {
        return 0.0;
    }
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum();
    num / denom
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value `c(α) √((n+m)/(nm))`.
pub fn ks_critical(n: usize, m: usize, level: f64) -> f64 {
    let c = (-0.5 * (level / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Least-squares fit `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::TooFew {
            what: "points for a linear fit",
            need: 2,
            have: x.len().min(y.len()),
        });
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFew {
            what: "distinct abscissae",
            need: 2,
            have: 1,
        });
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log y` against `log x` over the points with `x, y > 0`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    Ok(linear_fit(&lx, &ly)?.0)
}

/// z-score of the difference of two batch-means estimates.
pub fn two_sample_z(a: &BatchEstimate, b: &BatchEstimate) -> f64 {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    if se == 0.0 {
        if a.mean == b.mean {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.mean - b.mean) / se
    }
}

/// Two-sided normal quantile for level 0.01.
pub const Z_99: f64 = 2.575_829_303_548_901;
