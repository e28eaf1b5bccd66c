//! Galerkin-truncated defocusing NLS `∂_t u = iΔu - i P_N(|u|^{2q} u)`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fft::FftPlanner;
use crate::field::SpectralField;
use crate::grid::{dealiased_points, default_dealias_factor, Transform};
use crate::lattice::{Lattice, Wavevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Strang,
    Lie,
}

/// How the pure nonlinear sub-flow `u' = -i P_N(|u|^{2q}u)` is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearSubstep {
    /// Two-stage Gauss–Legendre collocation of the projected ODE. Conserves
    /// the L² norm up to the stage-solver tolerance.
    #[default]
    Collocation,
    /// Pointwise phase `u e^{-i|u|^{2q}h}` on the padded grid, then projection.
    /// Cheaper, but the projection leaks mass above the cutoff.
    PhaseProject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub q: u32,
    pub dt: f64,
    pub scheme: Scheme,
    /// Padding factor of the nonlinear grid; `None` means `q + 1`.
    pub dealias_factor: Option<usize>,
    /// Set to `false` to drop the `|u|^{2q}u` term entirely.
    pub nonlinear: bool,
    pub substep: NonlinearSubstep,
}

impl FlowConfig {
    pub fn new(q: u32, dt: f64) -> Self {
        Self {
            q,
            dt,
            scheme: Scheme::Strang,
            dealias_factor: None,
            nonlinear: true,
            substep: NonlinearSubstep::Collocation,
        }
    }

    pub fn dealias(&self) -> usize {
        self.dealias_factor.unwrap_or_else(|| default_dealias_factor(self.q))
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(invalid("q", "nonlinearity power must be >= 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "time step must be positive and finite"));
        }
        if self.dealias_factor == Some(0) {
            return Err(invalid("dealias_factor", "must be >= 1"));
        }
        Ok(())
    }
}

/// `e^{(-damping - iλ) h}`, the exact per-mode factor of the linear part.
#[inline]
pub fn linear_factor(lambda: f64, damping: f64, h: f64) -> Complex64 {
    Complex64::new(-damping * h, -lambda * h).exp()
}

/// Number of steps and the step actually used to cover `|t|` with steps of
/// at most `dt`.
pub fn schedule(t: f64, dt: f64) -> (usize, f64) {
    let t = t.abs();
    if t == 0.0 {
        return (0, dt);
    }
    let ratio = t / dt;
    let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio {
        ratio.round()
    } else {
        ratio.ceil()
    };
    let n = (n as usize).max(1);
    (n, t / n as f64)
}

// Gauss–Legendre order-4 tableau.
const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const GL_A: [[f64; 2]; 2] = [[0.25, 0.25 - SQRT3_6], [0.25 + SQRT3_6, 0.25]];
const MAX_STAGE_ITERATIONS: usize = 80;

/// Splitting integrator for the Galerkin NLS on one lattice.
#[derive(Clone, Debug)]
pub struct Propagator {
    lattice: Arc<Lattice>,
    cfg: FlowConfig,
    transform: Transform,
}

impl Propagator {
    pub fn new(lattice: Arc<Lattice>, cfg: FlowConfig, planner: &dyn FftPlanner) -> Result<Self> {
        cfg.validate()?;
        let points = dealiased_points(&lattice, cfg.dealias());
        let transform = Transform::new(lattice.clone(), points, planner)?;
        Ok(Self {
            lattice,
            cfg,
            transform,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn config(&self) -> &FlowConfig {
        &self.cfg
    }

    /// The padded grid used for the nonlinearity and for `L^p` quadrature.
    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn q(&self) -> u32 {
        self.cfg.q
    }

    /// `P_N(|u|^{2q} u)`, exact on the padded grid.
    pub fn nonlinear_term(&self, u: &SpectralField) -> Result<SpectralField> {
        u.check_lattice(&self.lattice)?;
        let coeffs = self.nonlinear_coeffs(u.coeffs())?;
        SpectralField::from_coeffs(self.lattice.clone(), coeffs)
    }

    fn nonlinear_coeffs(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let field = SpectralField::from_coeffs(self.lattice.clone(), coeffs.to_vec())?;
        let mut grid = self.transform.to_physical(&field)?;
        let q = self.cfg.q as i32;
        let mut peak = 0.0f64;
        for v in grid.values_mut() {
            let m2 = v.norm_sqr();
            peak = peak.max(m2);
            *v *= m2.powi(q);
        }
        if grid.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Overflow {
                what: "|u|^{2q}u",
                norm: peak.sqrt(),
            });
        }
        Ok(self.transform.to_spectral(&grid)?.into_coeffs())
    }

    /// Exact linear sub-flow `u_k ← e^{-iλ_k h} u_k`.
    pub fn linear_substep(&self, u: &mut SpectralField, h: f64) {
        for (c, &l) in u.coeffs_mut().iter_mut().zip(self.lattice.eigenvalues()) {
            *c *= linear_factor(l, 0.0, h);
        }
    }

    /// Advances `u' = -i P_N(|u|^{2q}u)` by `h`.
    pub fn nonlinear_substep(&self, u: &mut SpectralField, h: f64) -> Result<()> {
        if !self.cfg.nonlinear || h == 0.0 {
            return Ok(());
        }
        u.check_lattice(&self.lattice)?;
        match self.cfg.substep {
            NonlinearSubstep::Collocation => self.collocation(u.coeffs_mut(), h),
            NonlinearSubstep::PhaseProject => self.phase_project(u, h),
        }
    }

    /// Gauss–Legendre collocation in the rotating frame `v = e^{iρt}u`, with
    /// `ρ = (u, N(u)) / ‖u‖²` frozen over the step. Plane waves become fixed
    /// points of the transformed equation, so their orbit is exact.
    fn collocation(&self, u: &mut [Complex64], h: f64) -> Result<()> {
        let scale = u.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(());
        }
        let n0 = self.nonlinear_coeffs(u)?;
        let norm2: f64 = u.iter().map(|c| c.norm_sqr()).sum();
        let rho = u.iter().zip(&n0).map(|(a, b)| a.re * b.re + a.im * b.im).sum::<f64>() / norm2;
        // N(e^{iθ}v) = e^{iθ}N(v), so the rotating-frame field is autonomous.
        let frame = |v: &[Complex64]| -> Result<Vec<Complex64>> {
            let mut n = self.nonlinear_coeffs(v)?;
            for (c, vi) in n.iter_mut().zip(v) {
                let r = *c - vi * rho;
                *c = Complex64::new(r.im, -r.re);
            }
            Ok(n)
        };
        let mut f0 = n0;
        for (c, ui) in f0.iter_mut().zip(u.iter()) {
            let r = *c - ui * rho;
            *c = Complex64::new(r.im, -r.re);
        }
        let mut k = [f0.clone(), f0];
        let mut stage = [u.to_vec(), u.to_vec()];
        let mut prev = f64::INFINITY;
        let mut converged = false;
        let mut diff = f64::INFINITY;
        for iter in 0..MAX_STAGE_ITERATIONS {
            for (i, row) in GL_A.iter().enumerate() {
                for (n, s) in stage[i].iter_mut().enumerate() {
                    *s = u[n] + (k[0][n] * row[0] + k[1][n] * row[1]) * h;
                }
            }
            let next = [frame(&stage[0])?, frame(&stage[1])?];
            diff = 0.0;
            for i in 0..2 {
                for (a, b) in next[i].iter().zip(&k[i]) {
                    diff = diff.max((a - b).norm() * h);
                }
            }
            k = next;
            if diff <= 1e-15 * scale || (iter > 2 && diff >= prev && diff <= 1e-11 * scale) {
                converged = true;
                break;
            }
            prev = diff;
        }
        if !converged {
            return Err(Error::NonlinearSolve {
                residual: diff / scale,
                iterations: MAX_STAGE_ITERATIONS,
            });
        }
        let rot = Complex64::new(0.0, -rho * h).exp();
        for (n, c) in u.iter_mut().enumerate() {
            *c = (*c + (k[0][n] + k[1][n]) * (0.5 * h)) * rot;
        }
        Ok(())
    }

    fn phase_project(&self, u: &mut SpectralField, h: f64) -> Result<()> {
        let mut grid = self.transform.to_physical(u)?;
        let q = self.cfg.q as i32;
        for v in grid.values_mut() {
            let theta = -v.norm_sqr().powi(q) * h;
            if !theta.is_finite() {
                return Err(Error::Overflow {
                    what: "nonlinear phase",
                    norm: v.norm(),
                });
            }
            *v *= Complex64::new(theta.cos(), theta.sin());
        }
        *u = self.transform.to_spectral(&grid)?;
        Ok(())
    }

    /// One step of size `h` with the configured scheme.
    pub fn step_by(&self, u: &SpectralField, h: f64) -> Result<SpectralField> {
        let mut out = u.clone();
        match self.cfg.scheme {
            Scheme::Strang => {
                self.nonlinear_substep(&mut out, 0.5 * h)?;
                self.linear_substep(&mut out, h);
                self.nonlinear_substep(&mut out, 0.5 * h)?;
            }
            Scheme::Lie => {
                self.linear_substep(&mut out, h);
                self.nonlinear_substep(&mut out, h)?;
            }
        }
        Ok(out)
    }

    pub fn step(&self, u: &SpectralField) -> Result<SpectralField> {
        self.step_by(u, self.cfg.dt)
    }

    /// `φ^t_N u₀`. The observer sees `(t, u(t))` at time 0 and after every
    /// step; negative `t` runs `conj ∘ φ^{|t|} ∘ conj`.
    pub fn flow<F>(&self, u0: &SpectralField, t: f64, mut observer: F) -> Result<SpectralField>
    where
        F: FnMut(f64, &SpectralField) -> Result<()>,
    {
        u0.check_lattice(&self.lattice)?;
        let backward = t < 0.0;
        let sign = if backward { -1.0 } else { 1.0 };
        let (n, h) = schedule(t, self.cfg.dt);
        let mut u = if backward { u0.conj() } else { u0.clone() };
        observer(0.0, u0)?;
        for i in 1..=n {
            u = self.step_by(&u, h)?;
            let time = if i == n { t } else { sign * h * i as f64 };
            if backward {
                observer(time, &u.conj())?;
            } else {
                observer(time, &u)?;
            }
        }
        Ok(if backward { u.conj() } else { u })
    }

    /// `∫ |u|^p dx` on the padded grid.
    pub fn lp_power(&self, u: &SpectralField, p: f64) -> Result<f64> {
        let grid = self.transform.to_physical(u)?;
        Ok(if p == 2.0 {
            grid.integrate(|v| v.norm_sqr())
        } else {
            grid.integrate(|v| v.norm().powf(p))
        })
    }

    /// `∫ |u|^{2q+2} dx`.
    pub fn potential(&self, u: &SpectralField) -> Result<f64> {
        let grid = self.transform.to_physical(u)?;
        let q1 = self.cfg.q as i32 + 1;
        Ok(grid.integrate(|v| v.norm_sqr().powi(q1)))
    }

    /// `E(u) = ½ Σ λ_k |u_k|² + ∫|u|^{2q+2} / (2q+2)`.
    pub fn energy(&self, u: &SpectralField) -> Result<f64> {
        let kinetic = 0.5 * u.homogeneous_norm_sq(1.0);
        Ok(kinetic + self.potential(u)? / (2.0 * self.cfg.q as f64 + 2.0))
    }
}

/// Exact orbit of the plane wave `c e^{ik·x}` (pointwise amplitude `c`):
/// `c e^{-i(|k|² + |c|^{2q}) t} e^{ik·x}`.
pub fn plane_wave_solution(
    lattice: Arc<Lattice>,
    k: Wavevector,
    c: Complex64,
    q: u32,
    t: f64,
) -> Result<SpectralField> {
    let k2: i64 = k.iter().map(|&x| x as i64 * x as i64).sum();
    let omega = k2 as f64 + c.norm_sqr().powi(q as i32);
    SpectralField::plane_wave(lattice, k, c * Complex64::new(0.0, -omega * t).exp())
}

/// `M(u) = ½ ‖u‖²_{L²}`.
pub fn mass(u: &SpectralField) -> f64 {
    0.5 * u.l2_norm_sq()
}

/// Strichartz bookkeeping for the local theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LwpParams {
    pub r: f64,
    pub gamma: f64,
    pub p: f64,
    pub delta: f64,
    pub c0: f64,
}

impl LwpParams {
    /// `r = 4q`, `γ = 1 - 2q/r`, `p` from `2/r = d(1/2 - 1/p)`, `δ = 1/r`.
    pub fn standard(q: u32, dim: usize) -> Self {
        let r = 4.0 * q as f64;
        let inv_p = 0.5 - 2.0 / (r * dim as f64);
        Self {
            r,
            gamma: 1.0 - 2.0 * q as f64 / r,
            p: if inv_p > 0.0 { 1.0 / inv_p } else { f64::INFINITY },
            delta: 1.0 / r,
            c0: 1.0,
        }
    }

    pub fn validate(&self, q: u32) -> Result<()> {
        if !(self.r > 2.0f64.max(2.0 * q as f64)) {
            return Err(invalid("r", "must exceed max(2, 2q)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", "must lie in (0, 1)"));
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(invalid("c0", "must be positive"));
        }
        if !(self.p >= 2.0) {
            return Err(invalid("p", "must be >= 2"));
        }
        Ok(())
    }
}

/// Local existence time `T(R) = [2^{-(2q+2)} R^{-2q} c₀^{-(2q+1)}]^{1/γ}`.
pub fn increment_time(radius: f64, lwp: &LwpParams, q: u32) -> Result<f64> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid("R", "radius must be positive and finite"));
    }
    lwp.validate(q)?;
    let q = q as f64;
    let base = 1.0 / (2.0f64.powf(2.0 * q + 2.0) * radius.powf(2.0 * q) * lwp.c0.powf(2.0 * q + 1.0));
    Ok(base.powf(1.0 / lwp.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementReport {
    /// Horizon `T(‖u₀‖_{H^s})`; infinite for `u₀ = 0`.
    pub time: f64,
    /// `sup_t ‖φ^t u₀‖_{H^s} / ‖u₀‖_{H^s}`.
    pub ratio: f64,
    /// `sup_t ‖u‖_{H^s} + (∫_0^T ‖u‖^r_{W^{s-δ,p}} dt)^{1/r}` by trapezoid.
    pub y_norm: f64,
    /// True when the ratio exceeds `2c₀`.
    pub flagged: bool,
}

pub fn increment_check(prop: &Propagator, u0: &SpectralField, s: f64, lwp: &LwpParams) -> Result<IncrementReport> {
    let q = prop.q();
    lwp.validate(q)?;
    let norm0 = u0.sobolev_norm(s);
    if norm0 == 0.0 {
        return Ok(IncrementReport {
            time: f64::INFINITY,
            ratio: 1.0,
            y_norm: 0.0,
            flagged: false,
        });
    }
    let time = increment_time(norm0, lwp, q)?;
    let sigma = s - lwp.delta;
    let w_norm = |u: &SpectralField| -> Result<f64> { prop.transform().lebesgue_norm(&u.bessel(sigma), lwp.p) };
    let mut sup = norm0;
    let mut integral = 0.0;
    let mut last = (0.0, w_norm(u0)?.powf(lwp.r));
    prop.flow(u0, time, |t, u| {
        if t == 0.0 {
            return Ok(());
        }
        sup = sup.max(u.sobolev_norm(s));
        let w = w_norm(u)?.powf(lwp.r);
        integral += 0.5 * (w + last.1) * (t - last.0);
        last = (t, w);
        Ok(())
    })?;
    let ratio = sup / norm0;
    Ok(IncrementReport {
        time,
        ratio,
        y_norm: sup + integral.powf(1.0 / lwp.r),
        flagged: ratio > 2.0 * lwp.c0,
    })
}

/// `g(t) = ‖φ^t_fine P_fine u₀ - φ^t_coarse P_coarse u₀‖_{H^{s'}}` sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl GapCurve {
    pub fn sup(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

pub fn galerkin_gap(
    u0: &SpectralField,
    coarse: &Propagator,
    fine: &Propagator,
    s_prime: f64,
    t: f64,
) -> Result<GapCurve> {
    let (cl, fl) = (coarse.lattice(), fine.lattice());
    if !(cl.cutoff() < fl.cutoff()) || !cl.is_sublattice_of(fl) {
        return Err(Error::LatticeMismatch);
    }
    let mut uc = u0.transfer(cl.clone())?;
    let mut uf = u0.transfer(fl.clone())?;
    let (n, h) = schedule(t, fine.config().dt.min(coarse.config().dt));
    let gap = |uc: &SpectralField, uf: &SpectralField| -> Result<f64> {
        Ok(uf.sub(&uc.transfer(fl.clone())?)?.sobolev_norm(s_prime))
    };
    let mut curve = GapCurve {
        times: alloc::vec![0.0],
        gaps: alloc::vec![gap(&uc, &uf)?],
    };
    for i in 1..=n {
        uc = coarse.step_by(&uc, h)?;
        uf = fine.step_by(&uf, h)?;
        curve.times.push(h * i as f64);
        curve.gaps.push(gap(&uc, &uf)?);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::NaiveDft;
    use crate::field::mode_scale;
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lattice(d: usize, cutoff: f64) -> Arc<Lattice> {
        Arc::new(Lattice::new(d, cutoff).unwrap())
    }

    fn prop(d: usize, cutoff: f64, q: u32, dt: f64) -> Propagator {
        Propagator::new(lattice(d, cutoff), FlowConfig::new(q, dt), &NaiveDft).unwrap()
    }

    #[test]
    fn nonlinear_term_plane_wave_and_zero() {
        let p = prop(1, 9.0, 2, 0.01);
        let c = Complex64::new(0.6, -0.3);
        let u = SpectralField::plane_wave(p.lattice().clone(), [2, 0, 0], c).unwrap();
        let n = p.nonlinear_term(&u).unwrap();
        let expect = u.scaled(c.norm_sqr().powi(2));
        assert!(n.max_abs_diff(&expect).unwrap() < 1e-13);
        let z = SpectralField::zeros(p.lattice().clone());
        assert!(p.nonlinear_term(&z).unwrap().is_zero());
    }

    #[test]
    fn nonlinear_term_cos_cubed() {
        // cos x = (2π)^{1/2}/2 (e_1 + e_{-1}); cos³x = (3 cos x + cos 3x)/4
        let half = mode_scale(1) / 2.0;
        for (cutoff, with_third) in [(9.0, true), (4.0, false)] {
            let l = lattice(1, cutoff);
            let p = Propagator::new(l.clone(), FlowConfig::new(1, 0.01), &NaiveDft).unwrap();
            let mut u = SpectralField::zeros(l.clone());
            for k in [1, -1] {
                u.coeffs_mut()[l.index_of(&[k, 0, 0]).unwrap()] = Complex64::new(half, 0.0);
            }
            let n = p.nonlinear_term(&u).unwrap();
            for (idx, k) in l.modes().iter().enumerate() {
                let expect = match k[0].abs() {
                    1 => 0.75 * half,
                    3 if with_third => 0.25 * half,
                    _ => 0.0,
                };
                assert!(
                    (n.coeffs()[idx] - Complex64::new(expect, 0.0)).norm() < 1e-13,
                    "k={k:?}"
                );
            }
        }
    }

    #[test]
    fn plane_wave_orbit_is_exact() {
        let p = prop(1, 16.0, 1, 0.05);
        let c = Complex64::new(0.8, 0.1);
        let k = 3;
        let u0 = SpectralField::plane_wave(p.lattice().clone(), [k, 0, 0], c).unwrap();
        let t = 10.0;
        let u = p.flow(&u0, t, |_, _| Ok(())).unwrap();
        let expect = plane_wave_solution(p.lattice().clone(), [k, 0, 0], c, 1, t).unwrap();
        assert!(u.max_abs_diff(&expect).unwrap() < 1e-10);
        let z = SpectralField::zeros(p.lattice().clone());
        assert!(p.step(&z).unwrap().is_zero());
    }

    fn richardson_order(scheme: Scheme, seed: u64) -> f64 {
        let l = lattice(1, 16.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = SpectralField::random(l.clone(), 1.0, 1.0, false, &mut rng);
        let run = |dt: f64| {
            let mut cfg = FlowConfig::new(1, dt);
            cfg.scheme = scheme;
            let p = Propagator::new(l.clone(), cfg, &NaiveDft).unwrap();
            p.flow(&u0, 0.4, |_, _| Ok(())).unwrap()
        };
        let (a, b, c) = (run(0.02), run(0.01), run(0.005));
        let e1 = a.sub(&b).unwrap().l2_norm();
        let e2 = b.sub(&c).unwrap().l2_norm();
        (e1 / e2).log2()
    }

    #[test]
    fn splitting_orders() {
        for seed in 0..3 {
            let strang = richardson_order(Scheme::Strang, seed);
            assert!((strang - 2.0).abs() < 0.2, "strang {strang}");
            let lie = richardson_order(Scheme::Lie, seed);
            assert!((lie - 1.0).abs() < 0.2, "lie {lie}");
        }
    }

    #[test]
    fn backward_flow_inverts_forward() {
        let p = prop(1, 9.0, 1, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u0 = SpectralField::random(p.lattice().clone(), 1.0, 1.0, false, &mut rng);
        let u = p.flow(&u0, 0.5, |_, _| Ok(())).unwrap();
        let back = p.flow(&u, -0.5, |_, _| Ok(())).unwrap();
        assert!(back.max_abs_diff(&u0).unwrap() < 1e-4);
    }

    #[test]
    fn mass_and_energy_closed_forms() {
        for d in 1..=2 {
            let p = prop(d, 4.0, 2, 0.01);
            let c = Complex64::new(0.5, 0.5);
            let vol = (2.0 * PI).powi(d as i32);
            let u = SpectralField::plane_wave(p.lattice().clone(), [0, 0, 0], c).unwrap();
            assert!((mass(&u) - 0.5 * c.norm_sqr() * vol).abs() < 1e-13);
            let e = c.norm_sqr().powi(3) * vol / 6.0;
            assert!((p.energy(&u).unwrap() - e).abs() < 1e-13);
            let w = SpectralField::plane_wave(p.lattice().clone(), [2, 0, 0], c).unwrap();
            let kin = 0.5 * 4.0 * c.norm_sqr() * vol;
            assert!((p.energy(&w).unwrap() - e - kin).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_matches_physical_space_evaluation() {
        let p = prop(1, 25.0, 2, 0.01);
        let l = p.lattice().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = SpectralField::random(l.clone(), 0.5, 1.0, false, &mut rng);
        let mut du = u.clone();
        for (c, k) in du.coeffs_mut().iter_mut().zip(l.modes()) {
            *c *= Complex64::new(0.0, k[0] as f64);
        }
        let m = 4 * l.min_grid();
        let tr = Transform::new(l, m, &NaiveDft).unwrap();
        let gu = tr.to_physical(&u).unwrap();
        let gdu = tr.to_physical(&du).unwrap();
        let direct = 0.5 * gdu.integrate(|v| v.norm_sqr()) + gu.integrate(|v| v.norm_sqr().powi(3)) / 6.0;
        let e = p.energy(&u).unwrap();
        assert!((e - direct).abs() < 1e-9 * e.abs());
    }

    #[test]
    fn increment_time_values() {
        let lwp = LwpParams {
            r: 4.0,
            gamma: 0.5,
            p: f64::INFINITY,
            delta: 0.25,
            c0: 1.0,
        };
        let t1 = increment_time(1.0, &lwp, 1).unwrap();
        assert!((t1 - 3.90625e-3).abs() < 1e-18);
        let t2 = increment_time(2.0, &lwp, 1).unwrap();
        assert!((t1 / t2 - 16.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for r in [0.1, 1.0, 10.0, 1e3, 1e6] {
            let t = increment_time(r, &lwp, 1).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!(increment_time(0.0, &lwp, 1).is_err());
        assert_eq!(LwpParams::standard(1, 1), lwp);
    }

    #[test]
    fn increment_check_cases() {
        let p = prop(1, 9.0, 1, 0.01);
        let l = p.lattice().clone();
        let lwp = LwpParams::standard(1, 1);
        let z = SpectralField::zeros(l.clone());
        let r = increment_check(&p, &z, 2.0, &lwp).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert!(!r.flagged);

        let w = SpectralField::plane_wave(l.clone(), [1, 0, 0], Complex64::new(0.2, 0.0)).unwrap();
        let r = increment_check(&p, &w, 2.0, &lwp).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut u = SpectralField::random(l, 1.0, 1.0, false, &mut rng);
        let n = u.sobolev_norm(2.0);
        u.scale_in_place(0.1 / n);
        let r = increment_check(&p, &u, 2.0, &lwp).unwrap();
        assert!(r.ratio < 2.0 && !r.flagged, "{r:?}");
        assert!(r.y_norm.is_finite());
    }

    #[test]
    fn galerkin_gap_vanishes_on_plane_wave() {
        let coarse = prop(1, 4.0, 1, 0.01);
        let fine = prop(1, 16.0, 1, 0.01);
        let u0 = SpectralField::plane_wave(fine.lattice().clone(), [1, 0, 0], Complex64::new(0.7, 0.0)).unwrap();
        let g = galerkin_gap(&u0, &coarse, &fine, 1.0, 1.0).unwrap();
        assert!(g.sup() < 1e-12);
        assert!(galerkin_gap(&u0, &fine, &coarse, 1.0, 1.0).is_err());
    }

    #[test]
    fn schedule_rounds_sensibly() {
        assert_eq!(schedule(10.0, 1e-3).0, 10_000);
        assert_eq!(schedule(1.0, 0.3).0, 4);
        assert_eq!(schedule(0.0, 0.3).0, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mass_is_conserved(seed in any::<u64>(), q in 1u32..=4, d in 1usize..=2) {
            let cutoff = if d == 1 { 16.0 } else { 4.0 };
            let p = prop(d, cutoff, q, 0.05);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u0 = SpectralField::random(p.lattice().clone(), 1.0, 0.5, false, &mut rng);
            let m0 = mass(&u0);
            let u = p.flow(&u0, 1.0, |_, _| Ok(())).unwrap();
            prop_assert!((mass(&u) - m0).abs() < 1e-12 * m0);
        }
    }
}
