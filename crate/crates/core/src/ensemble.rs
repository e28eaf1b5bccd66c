//! Ball-filtered ensembles of initial data: membership by forward orbit
//! checkpointing, complement decay, and the polynomial growth envelope.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::field::SpectralField;
use crate::flow::{increment_time, schedule, LwpParams, Propagator};
use crate::stats::loglog_slope;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub j_max: usize,
    pub s_prime: f64,
    /// L² floor: only samples with `‖u‖_{L²} > a_floor` are counted.
    pub a_floor: f64,
    pub k_tilde: f64,
    pub gamma: f64,
    pub q: u32,
    /// Prefactor of `T₀(i,j) = c_t (ij)^{-2q/γ}`.
    pub c_t: f64,
    pub c_env: f64,
    /// Largest number of flow steps one orbit may take.
    pub max_steps: u64,
}

impl EnsembleSpec {
    /// `j_max = 8`, `k̃ = 2`, `a = 1e-3`; `c_t` is the increment time at
    /// radius 1 and `C_env = 2c₀`.
    pub fn standard(q: u32, dim: usize, s_prime: f64) -> Result<Self> {
        let lwp = LwpParams::standard(q, dim);
        Ok(Self {
            j_max: 8,
            s_prime,
            a_floor: 1e-3,
            k_tilde: 2.0,
            gamma: lwp.gamma,
            q,
            c_t: increment_time(1.0, &lwp, q)?,
            c_env: 2.0 * lwp.c0,
            max_steps: 10_000_000,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_max == 0 {
            return Err(invalid("j_max", "must be at least 1"));
        }
        if !(self.k_tilde > 0.0) {
            return Err(invalid("k_tilde", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", "must lie in (0, 1)"));
        }
        if !(self.a_floor > 0.0) {
            return Err(invalid("a_floor", "must be positive"));
        }
        if !(self.c_t > 0.0) || !self.c_t.is_finite() {
            return Err(invalid("c_t", "must be positive and finite"));
        }
        if !(self.c_env > 0.0) {
            return Err(invalid("c_env", "must be positive"));
        }
        if !self.s_prime.is_finite() {
            return Err(invalid("s_prime", "must be finite"));
        }
        Ok(())
    }

    pub fn t0(&self, i: usize, j: usize) -> f64 {
        self.c_t * ((i * j) as f64).powf(-2.0 * self.q as f64 / self.gamma)
    }

    /// `⌊j^k̃ / T₀⌋`.
    pub fn last_checkpoint(&self, i: usize, j: usize) -> f64 {
        ((j as f64).powf(self.k_tilde) / self.t0(i, j)).floor()
    }

    /// Time of the last checkpoint, `T₀ ⌊j^k̃ / T₀⌋`.
    pub fn horizon(&self, i: usize, j: usize) -> f64 {
        self.t0(i, j) * self.last_checkpoint(i, j)
    }

    /// Time needed to decide membership at every `j <= j_max`.
    pub fn full_horizon(&self) -> f64 {
        (self.j_max as f64).powf(self.k_tilde)
    }
}

/// `‖φ^t u₀‖_{H^{s'}}` at every step of one forward orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitProfile {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// `‖u₀‖_{L²}`, used by the a-floor.
    pub l2_norm: f64,
    pub step: f64,
}

impl OrbitProfile {
    pub fn compute(u0: &SpectralField, prop: &Propagator, s_prime: f64, horizon: f64, max_steps: u64) -> Result<Self> {
        let (n, h) = schedule(horizon, prop.config().dt);
        if n as u64 > max_steps {
            return Err(Error::BudgetExceeded {
                required: n as u64,
                budget: max_steps,
            });
        }
        let mut times = Vec::with_capacity(n + 1);
        let mut norms = Vec::with_capacity(n + 1);
        if u0.is_zero() {
            times.extend((0..=n).map(|k| k as f64 * h));
            norms.resize(n + 1, 0.0);
        } else {
            prop.flow(u0, horizon, |t, u| {
                times.push(t);
                norms.push(u.sobolev_norm(s_prime));
                Ok(())
            })?;
        }
        Ok(Self {
            times,
            norms,
            l2_norm: u0.l2_norm(),
            step: h,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Checkpoint index `l`.
    pub l: f64,
    pub time: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub violation: Option<Violation>,
}

/// Checks `‖φ^{lT₀}u₀‖_{H^{s'}} <= ij` for `l = 0..⌊j^k̃/T₀⌋` on a profile.
/// When `T₀` is below the step the checkpoints are dense at step resolution
/// and every step up to the horizon is checked.
pub fn membership_ij(profile: &OrbitProfile, spec: &EnsembleSpec, i: usize, j: usize) -> Result<Membership> {
    let bound = (i * j) as f64;
    let t0 = spec.t0(i, j);
    let horizon = spec.horizon(i, j);
    if horizon > profile.horizon() * (1.0 + 1e-12) + 1e-12 {
        return Err(invalid("profile", "orbit is shorter than the checkpoint horizon"));
    }
    let h = profile.step;
    let fail = |idx: usize, l: f64| Membership {
        member: false,
        violation: Some(Violation {
            l,
            time: profile.times[idx],
            norm: profile.norms[idx],
        }),
    };
    if t0 <= h {
        for (idx, (&t, &norm)) in profile.times.iter().zip(&profile.norms).enumerate() {
            if t > horizon * (1.0 + 1e-12) {
                break;
            }
            if norm > bound {
                return Ok(fail(idx, (t / t0).floor()));
            }
        }
    } else {
        let last = spec.last_checkpoint(i, j) as usize;
        for l in 0..=last {
            let idx = ((l as f64 * t0 / h).round() as usize).min(profile.norms.len() - 1);
            if profile.norms[idx] > bound {
                return Ok(fail(idx, l as f64));
            }
        }
    }
    Ok(Membership {
        member: true,
        violation: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMembership {
    pub member: bool,
    /// First failing `j`, or for members the `j` with the least relative slack.
    pub binding_j: usize,
    pub violation: Option<Violation>,
}

/// Conjunction of [`membership_ij`] over `j = 1..=j_max`.
pub fn membership_i(profile: &OrbitProfile, spec: &EnsembleSpec, i: usize) -> Result<LevelMembership> {
    let mut binding = (1, f64::INFINITY);
    for j in 1..=spec.j_max {
        let m = membership_ij(profile, spec, i, j)?;
        if !m.member {
            return Ok(LevelMembership {
                member: false,
                binding_j: j,
                violation: m.violation,
            });
        }
        let horizon = spec.horizon(i, j) * (1.0 + 1e-12);
        let sup = profile
            .times
            .iter()
            .zip(&profile.norms)
            .take_while(|(t, _)| **t <= horizon)
            .fold(0.0f64, |acc, (_, n)| acc.max(*n));
        let slack = 1.0 - sup / (i * j) as f64;
        if slack < binding.1 {
            binding = (j, slack);
        }
    }
    Ok(LevelMembership {
        member: true,
        binding_j: binding.0,
        violation: None,
    })
}

fn level_profile(u0: &SpectralField, spec: &EnsembleSpec, prop: &Propagator, horizon: f64) -> Result<OrbitProfile> {
    spec.validate()?;
    OrbitProfile::compute(u0, prop, spec.s_prime, horizon, spec.max_steps)
}

/// `u₀ ∈ Σ^{i,j}`: the forward orbit stays in the ball of radius `ij`
/// at every checkpoint.
pub fn member_sigma_ij(
    u0: &SpectralField,
    spec: &EnsembleSpec,
    i: usize,
    j: usize,
    prop: &Propagator,
) -> Result<Membership> {
    let norm0 = u0.sobolev_norm(spec.s_prime);
    if norm0 > (i * j) as f64 {
        return Ok(Membership {
            member: false,
            violation: Some(Violation {
                l: 0.0,
                time: 0.0,
                norm: norm0,
            }),
        });
    }
    let profile = level_profile(u0, spec, prop, spec.horizon(i, j))?;
    membership_ij(&profile, spec, i, j)
}

/// `u₀ ∈ Σ^i`, the intersection over `j <= j_max`.
pub fn member_sigma_i(u0: &SpectralField, spec: &EnsembleSpec, i: usize, prop: &Propagator) -> Result<LevelMembership> {
    let norm0 = u0.sobolev_norm(spec.s_prime);
    if norm0 > i as f64 {
        return Ok(LevelMembership {
            member: false,
            binding_j: 1,
            violation: Some(Violation {
                l: 0.0,
                time: 0.0,
                norm: norm0,
            }),
        });
    }
    let horizon = (1..=spec.j_max).map(|j| spec.horizon(i, j)).fold(0.0, f64::max);
    let profile = level_profile(u0, spec, prop, horizon)?;
    membership_i(&profile, spec, i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementTable {
    pub levels: Vec<usize>,
    /// Samples above the a-floor.
    pub samples: usize,
    pub failures: Vec<usize>,
    pub fractions: Vec<f64>,
    /// Smallest `C` with `fraction <= C i^{-2k̃}` at every level.
    pub c_bound: f64,
    pub slope: Option<f64>,
    /// Upper bound on the slope when the fit is at the floor: the last
    /// nonzero fraction against the rule-of-three bound `3/n` at the next
    /// level with no failures.
    pub slope_bound: Option<f64>,
    pub floor: bool,
    pub monotone: bool,
    pub pass: bool,
}

impl ComplementTable {
    /// Fitted slope, or the floor bound when the fit is unavailable.
    pub fn effective_slope(&self) -> Option<f64> {
        self.slope.or(self.slope_bound)
    }

    pub fn bound(&self, i: usize, k_tilde: f64) -> f64 {
        self.c_bound * (i as f64).powf(-2.0 * k_tilde)
    }
}

pub const MIN_ABOVE_FLOOR: usize = 50;

/// Empirical `μ(E^a ∖ Σ^i)` per level from precomputed orbit profiles.
pub fn complement_measure(profiles: &[OrbitProfile], spec: &EnsembleSpec, levels: &[usize]) -> Result<ComplementTable> {
    spec.validate()?;
    let levels = sorted_levels(levels);
    let mut members = Vec::with_capacity(profiles.len());
    for p in profiles {
        let mut row = Vec::with_capacity(levels.len());
        for &i in &levels {
            row.push(membership_i(p, spec, i)?.member);
        }
        members.push(row);
    }
    let l2: Vec<f64> = profiles.iter().map(|p| p.l2_norm).collect();
    complement_table(&l2, &members, spec, &levels)
}

pub fn sorted_levels(levels: &[usize]) -> Vec<usize> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    levels
}

/// Complement table from precomputed membership flags: `members[p][n]` is
/// the membership of sample `p` at `levels[n]` (sorted, distinct) and
/// `l2_norms[p]` its L² norm.
pub fn complement_table(
    l2_norms: &[f64],
    members: &[Vec<bool>],
    spec: &EnsembleSpec,
    levels: &[usize],
) -> Result<ComplementTable> {
    spec.validate()?;
    if l2_norms.len() != members.len() || members.iter().any(|m| m.len() != levels.len()) {
        return Err(invalid("members", "shape does not match the samples and levels"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("levels", "must be sorted and distinct"));
    }
    let kept: Vec<&Vec<bool>> = members
        .iter()
        .zip(l2_norms)
        .filter(|(_, n)| **n > spec.a_floor)
        .map(|(m, _)| m)
        .collect();
    if kept.len() < MIN_ABOVE_FLOOR {
        return Err(Error::TooFew {
            what: "samples above the L2 floor",
            need: MIN_ABOVE_FLOOR,
            have: kept.len(),
        });
    }
    let failures: Vec<usize> = (0..levels.len())
        .map(|n| kept.iter().filter(|m| !m[n]).count())
        .collect();
    let n = kept.len() as f64;
    let fractions: Vec<f64> = failures.iter().map(|&f| f as f64 / n).collect();
    let k2 = 2.0 * spec.k_tilde;
    let c_bound = levels
        .iter()
        .zip(&fractions)
        .map(|(&i, f)| f * (i as f64).powf(k2))
        .fold(0.0, f64::max);
    let monotone = fractions.windows(2).all(|w| w[1] <= w[0]);
    let nonzero = fractions.iter().filter(|f| **f > 0.0).count();
    let floor = nonzero < 2;
    let xs: Vec<f64> = levels.iter().map(|&i| i as f64).collect();
    let slope = if floor {
        None
    } else {
        Some(loglog_slope(&xs, &fractions)?)
    };
    let slope_bound = if floor {
        fractions.iter().rposition(|f| *f > 0.0).and_then(|a| {
            let b = a + 1;
            (b < levels.len()).then(|| ((3.0 / n) / fractions[a]).ln() / (xs[b] / xs[a]).ln())
        })
    } else {
        None
    };
    let limit = -k2 + 1.0;
    let pass = monotone
        && match slope.or(slope_bound) {
            Some(s) => s <= limit,
            None => floor,
        };
    Ok(ComplementTable {
        levels: levels.to_vec(),
        samples: kept.len(),
        failures,
        fractions,
        c_bound,
        slope,
        slope_bound,
        floor,
        monotone,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// `‖φ^t u₀‖_{H^{s'}} / (C_env i (1+t)^{1/k̃})`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub pass: bool,
}

pub fn envelope_ratios(profile: &OrbitProfile, i: usize, c_env: f64, k_tilde: f64) -> EnvelopeReport {
    let ratios: Vec<f64> = profile
        .times
        .iter()
        .zip(&profile.norms)
        .map(|(t, n)| n / (c_env * i as f64 * (1.0 + t.abs()).powf(1.0 / k_tilde)))
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    EnvelopeReport {
        times: profile.times.clone(),
        norms: profile.norms.clone(),
        ratios,
        max_ratio,
        pass: max_ratio <= 1.0,
    }
}

/// Tracks `‖φ^t u₀‖_{H^{s'}}` on `[0, t]` against `C_env i (1+t)^{1/k̃}`.
pub fn growth_envelope(
    u0: &SpectralField,
    spec: &EnsembleSpec,
    i: usize,
    t: f64,
    prop: &Propagator,
) -> Result<EnvelopeReport> {
    let profile = level_profile(u0, spec, prop, t)?;
    Ok(envelope_ratios(&profile, i, spec.c_env, spec.k_tilde))
}

/// Smallest `C_env` under which every `(level, profile)` pair stays inside
/// the envelope.
pub fn calibrate_c_env(members: &[(usize, &OrbitProfile)], k_tilde: f64) -> f64 {
    members
        .iter()
        .map(|(i, p)| envelope_ratios(p, *i, 1.0, k_tilde).max_ratio)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitProbe {
    pub cutoffs: Vec<f64>,
    pub members: Vec<bool>,
    /// True when the two finest cutoffs agree.
    pub stabilized: bool,
}

/// Membership of `P_Λ u₀` at level `i` for each propagator's lattice,
/// ordered by increasing cutoff.
pub fn ensemble_limit_probe(
    u0: &SpectralField,
    spec: &EnsembleSpec,
    i: usize,
    props: &[&Propagator],
) -> Result<LimitProbe> {
    let mut props = props.to_vec();
    props.sort_by(|a, b| a.lattice().cutoff().total_cmp(&b.lattice().cutoff()));
    if let Some(finest) = props.last() {
        if u0.lattice().cutoff() > finest.lattice().cutoff() {
            let projected = u0.project(finest.lattice().cutoff())?;
            if projected.max_abs_diff(u0)? > 0.0 {
                return Err(invalid("u0", "carries modes beyond the finest cutoff"));
            }
        }
    }
    let mut cutoffs = Vec::with_capacity(props.len());
    let mut members = Vec::with_capacity(props.len());
    for prop in props {
        let v = u0.transfer(prop.lattice().clone())?;
        cutoffs.push(prop.lattice().cutoff());
        members.push(member_sigma_i(&v, spec, i, prop)?.member);
    }
    let stabilized = members.len() < 2 || members[members.len() - 1] == members[members.len() - 2];
    Ok(LimitProbe {
        cutoffs,
        members,
        stabilized,
    })
}

/// Level multiplier `i₁ = ⌈(j^k̃ + t)^{1/k̃} / j⌉` carrying `Σ^i` into
/// `Σ^{i·i₁}` after time `t`.
pub fn invariance_level(j: usize, t: f64, k_tilde: f64) -> usize {
    let j = j as f64;
    ((j.powf(k_tilde) + t.abs()).powf(1.0 / k_tilde) / j).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::NaiveDft;
    use crate::flow::FlowConfig;
    use crate::lattice::Lattice;
    use alloc::sync::Arc;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(dt: f64) -> (Arc<Lattice>, Propagator, EnsembleSpec) {
        let l = Arc::new(Lattice::new(1, 9.0).unwrap());
        let prop = Propagator::new(l.clone(), FlowConfig::new(1, dt), &NaiveDft).unwrap();
        let mut spec = EnsembleSpec::standard(1, 1, 1.9).unwrap();
        spec.j_max = 3;
        (l, prop, spec)
    }

    #[test]
    fn standard_clock() {
        let spec = EnsembleSpec::standard(1, 1, 1.9).unwrap();
        assert_eq!(spec.gamma, 0.5);
        assert!((spec.c_t - 2f64.powi(-8)).abs() < 1e-18);
        assert!((spec.t0(2, 1) - 2f64.powi(-12)).abs() < 1e-20);
        assert!(spec.t0(2, 3) < spec.t0(2, 2) && spec.t0(3, 2) < spec.t0(2, 2));
        assert_eq!(invariance_level(1, 3.0, 2.0), 2);
        assert_eq!(invariance_level(4, 0.0, 2.0), 1);
    }

    #[test]
    fn zero_field_is_member_everywhere() {
        let (l, prop, spec) = setup(0.01);
        let z = SpectralField::zeros(l);
        for i in 1..3 {
            assert!(member_sigma_i(&z, &spec, i, &prop).unwrap().member);
            assert!(member_sigma_ij(&z, &spec, i, 2, &prop).unwrap().member);
        }
        let env = growth_envelope(&z, &spec, 1, 10.0, &prop).unwrap();
        assert_eq!(env.max_ratio, 0.0);
    }

    #[test]
    fn large_field_fails_at_start() {
        let (l, prop, spec) = setup(0.01);
        let u = SpectralField::plane_wave(l, [1, 0, 0], Complex64::new(3.0, 0.0)).unwrap();
        let m = member_sigma_ij(&u, &spec, 1, 1, &prop).unwrap();
        assert!(!m.member);
        assert_eq!(m.violation.unwrap().l, 0.0);
        assert_eq!(member_sigma_i(&u, &spec, 1, &prop).unwrap().binding_j, 1);
    }

    #[test]
    fn plane_wave_orbit_is_member_and_envelope_decreases() {
        let (l, prop, spec) = setup(0.01);
        let raw = SpectralField::plane_wave(l, [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let u = raw.scaled(1.0 / raw.sobolev_norm(1.9));
        assert!((u.sobolev_norm(1.9) - 1.0).abs() < 1e-12);
        assert!(member_sigma_ij(&u, &spec, 1, 2, &prop).unwrap().member);
        let env = growth_envelope(&u, &spec, 1, 10.0, &prop).unwrap();
        assert!(env.ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(env.pass);
    }

    #[test]
    fn membership_nests_in_level() {
        let (l, prop, mut spec) = setup(0.02);
        spec.j_max = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let u = SpectralField::random(l.clone(), 2.0, 1.5, false, &mut rng);
            let profile = OrbitProfile::compute(&u, &prop, spec.s_prime, spec.full_horizon(), spec.max_steps).unwrap();
            let mut prev = false;
            for i in 1..6 {
                let m = membership_i(&profile, &spec, i).unwrap().member;
                assert!(!prev || m);
                prev = m;
                let all_j = (1..=spec.j_max).all(|j| membership_ij(&profile, &spec, i, j).unwrap().member);
                assert_eq!(all_j, m);
            }
        }
    }

    #[test]
    fn budget_guard_refuses() {
        let (l, prop, mut spec) = setup(0.01);
        spec.max_steps = 10;
        let u = SpectralField::plane_wave(l, [1, 0, 0], Complex64::new(0.01, 0.0)).unwrap();
        match member_sigma_i(&u, &spec, 1, &prop) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(budget, 10);
                assert_eq!(required, 900);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complement_table_edges() {
        let (l, prop, mut spec) = setup(0.05);
        spec.j_max = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut profiles = Vec::new();
        for _ in 0..50 {
            let u = SpectralField::random(l.clone(), 2.0, 1.0, false, &mut rng);
            let u = u.scaled(2.0 / u.sobolev_norm(spec.s_prime));
            profiles.push(OrbitProfile::compute(&u, &prop, spec.s_prime, 1.0, spec.max_steps).unwrap());
        }
        let t = complement_measure(&profiles, &spec, &[1, 1000]).unwrap();
        assert_eq!(t.fractions, [1.0, 0.0]);
        assert!(t.floor);
        // 3/50 at i = 1000 against 1 at i = 1 is far too shallow
        let bound = (3.0f64 / 50.0).ln() / 1000f64.ln();
        assert!((t.slope_bound.unwrap() - bound).abs() < 1e-12);
        assert!(!t.pass);
        assert!(complement_measure(&profiles[..49], &spec, &[1]).is_err());
    }

    #[test]
    fn floor_bound_from_flags() {
        let (_, _, spec) = setup(0.05);
        let n = 200;
        let l2 = alloc::vec![1.0; n];
        let members: Vec<Vec<bool>> = (0..n).map(|p| alloc::vec![p >= 105, true, true]).collect();
        let t = complement_table(&l2, &members, &spec, &[1, 2, 4]).unwrap();
        assert_eq!(t.failures, [105, 0, 0]);
        let bound = (0.015f64 / 0.525).ln() / 2f64.ln();
        assert!((t.slope_bound.unwrap() - bound).abs() < 1e-12);
        assert_eq!(t.effective_slope(), t.slope_bound);
        assert!(t.pass);

        let none: Vec<Vec<bool>> = (0..n).map(|_| alloc::vec![true, true, true]).collect();
        let t = complement_table(&l2, &none, &spec, &[1, 2, 4]).unwrap();
        assert!(t.floor && t.slope_bound.is_none() && t.pass);
        assert!(complement_table(&l2, &none, &spec, &[2, 1, 4]).is_err());
    }

    #[test]
    fn invariance_shadow() {
        let (l, prop, mut spec) = setup(0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = SpectralField::random(l, 2.0, 0.5, false, &mut rng);
        let t = 2.0;
        let i1 = invariance_level(1, t, spec.k_tilde);
        spec.j_max = 2;
        let long = EnsembleSpec { j_max: 2 * i1, ..spec };
        let profile = OrbitProfile::compute(&u, &prop, spec.s_prime, long.full_horizon(), long.max_steps).unwrap();
        let i = (1..50)
            .find(|&i| membership_i(&profile, &long, i).unwrap().member)
            .unwrap();
        let ut = prop.flow(&u, t, |_, _| Ok(())).unwrap();
        let shifted = OrbitProfile::compute(&ut, &prop, 1.5, spec.full_horizon(), spec.max_steps).unwrap();
        let shifted_spec = EnsembleSpec { s_prime: 1.5, ..spec };
        assert!(membership_i(&shifted, &shifted_spec, i * i1).unwrap().member);
    }

    #[test]
    fn limit_probe_trivial() {
        let (_, _, mut spec) = setup(0.05);
        spec.j_max = 1;
        let props: Vec<Propagator> = [4.0, 9.0]
            .iter()
            .map(|&c| {
                Propagator::new(
                    Arc::new(Lattice::new(1, c).unwrap()),
                    FlowConfig::new(1, 0.05),
                    &NaiveDft,
                )
                .unwrap()
            })
            .collect();
        let refs: Vec<&Propagator> = props.iter().collect();
        let z = SpectralField::zeros(props[1].lattice().clone());
        let p = ensemble_limit_probe(&z, &spec, 1, &refs).unwrap();
        assert_eq!(p.members, [true, true]);
        let big = SpectralField::plane_wave(props[1].lattice().clone(), [1, 0, 0], Complex64::new(50.0, 0.0)).unwrap();
        let p = ensemble_limit_probe(&big, &spec, 1, &refs).unwrap();
        assert_eq!(p.members, [false, false]);
        assert!(p.stabilized);
    }
}
