//! Empirical stationary measures by ergodic time averaging, and the moment
//! checks run against them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;
use rand_core::RngCore;

use crate::error::{invalid, Error, Result};
use crate::field::SpectralField;
use crate::stats::{batch_means, ks_statistic, loglog_slope, two_sample_z, BatchEstimate, Z_99};
use crate::stochastic::{sample_path, series, NoiseProfile, ObserveSpec, SdeIntegrator, TrajectorySample};

/// Default number of batches for batch-means errors.
pub const BATCHES: usize = 32;
/// Fewest samples accepted by [`EmpiricalMeasure::moment`].
pub const MIN_SAMPLES: usize = 20;

/// Time-thinned samples of one long path after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub fields: Vec<SpectralField>,
    pub burn_in: f64,
    pub thin: f64,
}

impl EmpiricalMeasure {
    /// Keeps the records of `path` at times `>= burn_in`.
    pub fn from_path(path: &TrajectorySample, burn_in: f64, thin: f64) -> Self {
        let start = path
            .times
            .iter()
            .position(|&t| t >= burn_in)
            .unwrap_or(path.times.len());
        let series = path
            .series
            .iter()
            .filter(|(name, _)| !name.starts_with("int_") && name.as_str() != series::MARTINGALE)
            .map(|(name, v)| (name.clone(), v[start..].to_vec()))
            .collect();
        let fields = if path.snapshots.len() == path.times.len() {
            path.snapshots[start..].to_vec()
        } else {
            Vec::new()
        };
        Self {
            times: path.times[start..].to_vec(),
            series,
            fields,
            burn_in,
            thin,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        self.series
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| invalid("observable", alloc::format!("`{name}` was not recorded")))
    }

    /// Batch-means mean and error of recorded values.
    pub fn moment(&self, values: &[f64]) -> Result<BatchEstimate> {
        if values.len() < MIN_SAMPLES {
            return Err(Error::TooFew {
                what: "samples",
                need: MIN_SAMPLES,
                have: values.len(),
            });
        }
        batch_means(values, BATCHES.min(values.len() / 2))
    }

    pub fn moment_of(&self, name: &str) -> Result<BatchEstimate> {
        self.moment(self.values(name)?)
    }

    /// Splits the samples into two halves and compares their means.
    pub fn two_window(&self, name: &str) -> Result<WindowTest> {
        let v = self.values(name)?;
        let half = v.len() / 2;
        let a = self.moment(&v[..half])?;
        let b = self.moment(&v[half..2 * half])?;
        let z = two_sample_z(&a, &b);
        Ok(WindowTest {
            first: a,
            second: b,
            z,
            pass: z.abs() <= Z_99,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowTest {
    pub first: BatchEstimate,
    pub second: BatchEstimate,
    pub z: f64,
    pub pass: bool,
}

/// Runs the SDE from `0` for `horizon`, recording every `thin` time units,
/// and keeps the records after `burn_in`.
pub fn kb_sample<R: RngCore + ?Sized>(
    sde: &SdeIntegrator,
    horizon: f64,
    burn_in: f64,
    thin: f64,
    spec: &ObserveSpec,
    rng: &mut R,
    path_id: u64,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    if !(thin > 0.0) || !(burn_in >= 0.0) || horizon < burn_in + 10.0 * thin {
        return Err(invalid("horizon", "must exceed burn_in + 10 * thin"));
    }
    let dt = sde.config().flow.dt;
    let every = ((thin / dt).round() as usize).max(1);
    let spec = ObserveSpec { every, ..spec.clone() };
    let u0 = SpectralField::zeros(sde.lattice().clone());
    let (path, _) = sample_path(sde, &u0, horizon, &spec, rng, path_id, seed)?;
    Ok(EmpiricalMeasure::from_path(&path, burn_in, thin))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub z: f64,
    pub pass: bool,
    pub warning: bool,
}

/// `∫𝓜 dμ = A⁰/2`, judged by `|z| <= 3`.
pub fn check_stationary_identity(mu: &EmpiricalMeasure, noise: &NoiseProfile) -> Result<IdentityReport> {
    let est = mu.moment_of(series::MASS_RATE)?;
    let target = 0.5 * noise.a_sum(0.0);
    let diff = est.mean - target;
    let z = if est.se > 0.0 {
        diff / est.se
    } else if diff.abs() <= 1e-14 * (1.0 + target.abs()) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(IdentityReport {
        estimate: est.mean,
        se: est.se,
        target,
        z,
        pass: z.abs() <= 3.0,
        warning: est.warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedFamily {
    pub max: f64,
    pub median: f64,
    pub pass: bool,
}

/// Uniformity surrogate: `max <= 2 · median` over a grid of estimates.
pub fn check_energy_moment(estimates: &[f64]) -> Result<BoundedFamily> {
    if estimates.is_empty() {
        return Err(Error::TooFew {
            what: "grid estimates",
            need: 1,
            have: 0,
        });
    }
    let mut v = estimates.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let max = v[n - 1];
    Ok(BoundedFamily {
        max,
        median,
        pass: max <= 2.0 * median,
    })
}

/// Smooth cutoff `χ_R(x) = χ(x/R)`: `χ = 1` on `[0,1]`, `0` on `[2,∞)`,
/// glued with `e^{-1/t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub radius: f64,
}

impl CutoffSpec {
    pub fn profile(x: f64) -> f64 {
        fn psi(t: f64) -> f64 {
            if t > 0.0 {
                (-1.0 / t).exp()
            } else {
                0.0
            }
        }
        if x <= 1.0 {
            1.0
        } else if x >= 2.0 {
            0.0
        } else {
            let a = psi(2.0 - x);
            a / (a + psi(x - 1.0))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        Self::profile(x / self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// Log-log slope over the nonzero values, when at least two exist.
    pub slope: Option<f64>,
    /// True when fewer than two radii carry a nonzero tail.
    pub floor: bool,
    pub monotone: bool,
    pub pass: bool,
}

/// `∫ 𝓜(u)(1 - χ_R(‖u‖²_{L²})) dμ` for each `R`.
pub fn tail_moment(mu: &EmpiricalMeasure, radii: &[f64]) -> Result<TailCurve> {
    let rates = mu.values(series::MASS_RATE)?;
    let masses = mu.values(series::MASS)?;
    let mut values = Vec::with_capacity(radii.len());
    let mut se = Vec::with_capacity(radii.len());
    let mut sample_monotone = true;
    let mut prev: Option<Vec<f64>> = None;
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &r in &sorted {
        let cut = CutoffSpec { radius: r };
        let w: Vec<f64> = rates
            .iter()
            .zip(masses)
            .map(|(m, mass)| m * (1.0 - cut.eval(2.0 * mass)))
            .collect();
        if let Some(p) = &prev {
            sample_monotone &= w.iter().zip(p).all(|(a, b)| a <= b);
        }
        let est = mu.moment(&w)?;
        values.push(est.mean);
        se.push(est.se);
        prev = Some(w);
    }
    let nonzero = values.iter().filter(|v| **v > 0.0).count();
    let floor = nonzero < 2;
    let slope = if floor {
        None
    } else {
        Some(loglog_slope(&sorted, &values)?)
    };
    let pass = sample_monotone && (floor || slope.is_some_and(|s| s <= -1.0 + 0.3));
    Ok(TailCurve {
        radii: sorted,
        values,
        se,
        slope,
        floor,
        monotone: sample_monotone,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InviscidTable {
    /// Couplings in decreasing order.
    pub alphas: Vec<f64>,
    /// KS distance between consecutive couplings.
    pub distances: Vec<f64>,
    /// True when the distances shrink as `α` decreases.
    pub cauchy: bool,
}

/// Kolmogorov–Smirnov distances of one scalar observable across couplings.
pub fn inviscid_compare(samples: &[(f64, Vec<f64>)]) -> Result<InviscidTable> {
    if samples.len() < 3 {
        return Err(Error::TooFew {
            what: "couplings",
            need: 3,
            have: samples.len(),
        });
    }
    let mut sorted: Vec<&(f64, Vec<f64>)> = samples.iter().collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let distances: Vec<f64> = sorted.windows(2).map(|w| ks_statistic(&w[0].1, &w[1].1)).collect();
    let cauchy = distances.windows(2).all(|w| w[1] <= w[0]);
    Ok(InviscidTable {
        alphas: sorted.iter().map(|s| s.0).collect(),
        distances,
        cauchy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub max_fraction: f64,
    pub atom: bool,
}

/// Histogram of `values`; an atom is flagged when one bin holds more than
/// 20% of the mass (meaningful once `bins >= 50`), or when all values coincide.
pub fn l2_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() || bins == 0 {
        return Err(Error::TooFew {
            what: "histogram samples",
            need: 1,
            have: values.len(),
        });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0usize; bins];
    for &v in values {
        let b = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let max_fraction = *counts.iter().max().unwrap_or(&0) as f64 / values.len() as f64;
    Ok(Histogram {
        edges,
        counts,
        max_fraction,
        atom: width == 0.0 || max_fraction > 0.2,
    })
}

/// `‖u‖_{L²}` for every recorded sample.
pub fn l2_norms(mu: &EmpiricalMeasure) -> Result<Vec<f64>> {
    Ok(mu.values(series::MASS)?.iter().map(|m| (2.0 * m).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::DissipationParams;
    use crate::fft::NaiveDft;
    use crate::flow::FlowConfig;
    use crate::lattice::Lattice;
    use crate::stochastic::{path_rng, SdeConfig};
    use alloc::sync::Arc;
    use proptest::prelude::*;

    fn linear_sde(alpha: f64, noise_scale: f64) -> SdeIntegrator {
        let l = Arc::new(Lattice::new(1, 4.0).unwrap());
        let mut coeffs = NoiseProfile::standard(&l).scaled(noise_scale).coeffs().to_vec();
        coeffs[0] = 0.0;
        let noise = NoiseProfile::from_coeffs(&l, coeffs).unwrap();
        let mut dissipation = DissipationParams::new(1, 1, 2.0);
        dissipation.c_ds = 0.0;
        let mut flow = FlowConfig::new(1, 0.05);
        flow.nonlinear = false;
        let cfg = SdeConfig {
            alpha,
            dissipation,
            noise,
            flow,
        };
        SdeIntegrator::new(l, cfg, &NaiveDft).unwrap()
    }

    fn spec() -> ObserveSpec {
        ObserveSpec {
            energy: false,
            ..Default::default()
        }
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(CutoffSpec::profile(0.5), 1.0);
        assert_eq!(CutoffSpec::profile(2.0), 0.0);
        let mut prev = 1.0;
        for i in 1..100 {
            let v = CutoffSpec::profile(1.0 + i as f64 / 100.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!((CutoffSpec::profile(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quiet_dynamics_give_dirac_measure() {
        let sde = linear_sde(0.2, 0.0);
        let mu = kb_sample(&sde, 50.0, 5.0, 0.5, &spec(), &mut path_rng(0, 0), 0, 0).unwrap();
        let m = mu.moment_of(series::MASS).unwrap();
        assert_eq!((m.mean, m.se), (0.0, 0.0));
        let ones = alloc::vec![1.0; mu.len()];
        let e = mu.moment(&ones).unwrap();
        assert_eq!((e.mean, e.se), (1.0, 0.0));
        let r = check_stationary_identity(&mu, &sde.config().noise).unwrap();
        assert!(r.pass && r.target == 0.0);
        let t = tail_moment(&mu, &[1.0, 2.0, 4.0]).unwrap();
        assert!(t.floor && t.pass);
        let h = l2_histogram(&l2_norms(&mu).unwrap(), 50).unwrap();
        assert!(h.atom);
        assert!(kb_sample(&sde, 5.0, 4.0, 0.5, &spec(), &mut path_rng(0, 0), 0, 0).is_err());
    }

    #[test]
    fn linear_dynamics_hit_ou_stationary_law() {
        let sde = linear_sde(0.5, 1.0);
        let noise = sde.config().noise.clone();
        let mu = kb_sample(&sde, 4000.0, 20.0, 1.0, &spec(), &mut path_rng(11, 0), 0, 11).unwrap();
        let r = check_stationary_identity(&mu, &noise).unwrap();
        assert!(r.pass, "{r:?}");
        let h = l2_histogram(&l2_norms(&mu).unwrap(), 50).unwrap();
        assert!(!h.atom);
        assert!(mu.two_window(series::MASS).unwrap().pass);
    }

    #[test]
    fn bounded_family() {
        assert!(check_energy_moment(&[1.0, 1.2, 1.9]).unwrap().pass);
        assert!(!check_energy_moment(&[1.0, 1.0, 3.0]).unwrap().pass);
        assert!(check_energy_moment(&[0.0, 0.0]).unwrap().pass);
    }

    #[test]
    fn inviscid_table_orders_couplings() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| i as f64 + 30.0).collect();
        let c: Vec<f64> = (0..100).map(|i| i as f64 + 40.0).collect();
        let t = inviscid_compare(&[(0.05, c), (0.2, a), (0.1, b)]).unwrap();
        assert_eq!(t.alphas, [0.2, 0.1, 0.05]);
        assert!(t.cauchy);
        assert!(inviscid_compare(&[]).is_err());
    }

    proptest! {
        #[test]
        fn moments_ignore_order(mut xs in proptest::collection::vec(0.0f64..10.0, 64..65)) {
            let mu = EmpiricalMeasure {
                times: (0..xs.len()).map(|i| i as f64).collect(),
                series: BTreeMap::new(),
                fields: Vec::new(),
                burn_in: 0.0,
                thin: 1.0,
            };
            let a = mu.moment(&xs).unwrap().mean;
            xs.reverse();
            let b = mu.moment(&xs).unwrap().mean;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
