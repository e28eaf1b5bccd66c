//! Dissipation operator `𝓛_s u = (-Δ)^{s-1}u + C ‖u‖^{3k̃}_{H^{s-η}} u` and
//! the dissipation rates of mass and energy against it.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::field::{eig_pow, SpectralField};
use crate::grid::{PhysicalGrid, Transform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationParams {
    pub s: f64,
    pub k_tilde: f64,
    pub c_ds: f64,
    /// `s⁻ = s - η`.
    pub eta: f64,
    pub q: u32,
    pub dim: usize,
}

impl DissipationParams {
    pub fn new(dim: usize, q: u32, s: f64) -> Self {
        Self {
            s,
            k_tilde: 2.0,
            c_ds: 1.0,
            eta: 0.1,
            q,
            dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_tilde >= 1.0) || !self.k_tilde.is_finite() {
            return Err(invalid("k_tilde", "must be finite and >= 1"));
        }
        if !(self.eta > 0.0 && self.eta < self.s) {
            return Err(invalid("eta", "must lie in (0, s)"));
        }
        // zero switches the nonlinear friction off (linear OU dynamics)
        if !(self.c_ds >= 0.0) || !self.c_ds.is_finite() {
            return Err(invalid("c_ds", "must be finite and nonnegative"));
        }
        if self.q < 1 {
            return Err(invalid("q", "must be >= 1"));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        Ok(())
    }

    pub fn s_minus(&self) -> f64 {
        self.s - self.eta
    }

    /// Exponent `3k̃` of the damping norm.
    pub fn damping_exponent(&self) -> f64 {
        3.0 * self.k_tilde
    }

    /// `C ‖u‖^{3k̃}_{H^{s⁻}}`, the scalar friction coefficient.
    pub fn damping_coefficient(&self, u: &SpectralField) -> Result<f64> {
        let n = u.sobolev_norm(self.s_minus());
        let c = self.c_ds * n.powf(self.damping_exponent());
        if !c.is_finite() {
            return Err(Error::Overflow {
                what: "damping norm power",
                norm: n,
            });
        }
        Ok(c)
    }

    /// Per-mode linear damping rate `λ_k^{s-1}`.
    pub fn linear_rate(&self, lambda: f64) -> f64 {
        eig_pow(lambda, self.s - 1.0)
    }
}

pub fn apply_dissipation(u: &SpectralField, p: &DissipationParams) -> Result<SpectralField> {
    let c = p.damping_coefficient(u)?;
    let mut out = u.frac_laplacian(p.s - 1.0);
    for (o, a) in out.coeffs_mut().iter_mut().zip(u.coeffs()) {
        *o += a * c;
    }
    Ok(out)
}

/// `𝓜(u) = Σ λ^{s-1}|u_k|² + C‖u‖^{3k̃}_{H^{s⁻}} ‖u‖²_{L²}`.
pub fn mass_rate(u: &SpectralField, p: &DissipationParams) -> Result<f64> {
    Ok(u.homogeneous_norm_sq(p.s - 1.0) + p.damping_coefficient(u)? * u.l2_norm_sq())
}

/// Every rate at once from a single grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub mass_rate: f64,
    pub energy_rate: f64,
    pub coercive_rate: f64,
    /// `∫|u|^{2q+2}`.
    pub potential: f64,
    /// `⟨(-Δ)^{s-1}u, |u|^{2q}u⟩`.
    pub pairing: f64,
    /// `C‖u‖^{3k̃}_{H^{s⁻}}`.
    pub damping: f64,
}

pub fn rates(u: &SpectralField, p: &DissipationParams, tr: &Transform) -> Result<Rates> {
    let damping = p.damping_coefficient(u)?;
    let grid = tr.to_physical(u)?;
    let lifted = tr.to_physical(&u.frac_laplacian(p.s - 1.0))?;
    let q = p.q as i32;
    let mut potential = 0.0;
    let mut pairing = 0.0;
    for (v, w) in grid.values().iter().zip(lifted.values()) {
        let m2 = v.norm_sqr();
        let mq = m2.powi(q);
        potential += mq * m2;
        pairing += mq * (w.re * v.re + w.im * v.im);
    }
    let cell = grid.cell_volume();
    potential *= cell;
    pairing *= cell;
    let l2 = u.l2_norm_sq();
    let mass_rate = u.homogeneous_norm_sq(p.s - 1.0) + damping * l2;
    let energy_rate = u.homogeneous_norm_sq(p.s) + damping * (potential + u.homogeneous_norm_sq(1.0)) + pairing;
    let coercive_rate = 0.5 * u.sobolev_norm_sq(p.s) + damping * potential + 0.5 * damping * l2;
    Ok(Rates {
        mass_rate,
        energy_rate,
        coercive_rate,
        potential,
        pairing,
        damping,
    })
}

/// `𝓔(u) = Σλ^s|u_k|² + C‖u‖^{3k̃}_{H^{s⁻}}(∫|u|^{2q+2} + Σλ|u_k|²) + ⟨(-Δ)^{s-1}u, |u|^{2q}u⟩`.
pub fn energy_rate(u: &SpectralField, p: &DissipationParams, tr: &Transform) -> Result<f64> {
    Ok(rates(u, p, tr)?.energy_rate)
}

/// `𝓔₀(u) = ½‖u‖²_{H^s} + C‖u‖^{3k̃}_{H^{s⁻}}‖u‖^{2q+2}_{L^{2q+2}} + (C/2)‖u‖²_{L²}‖u‖^{3k̃}_{H^{s⁻}}`.
pub fn coercive_rate(u: &SpectralField, p: &DissipationParams, tr: &Transform) -> Result<f64> {
    Ok(rates(u, p, tr)?.coercive_rate)
}

/// The three pure-power pieces of `𝓔₀`, of homogeneity `2`, `3k̃+2q+2`, `3k̃+2`.
pub fn coercive_terms(u: &SpectralField, p: &DissipationParams, tr: &Transform) -> Result<[f64; 3]> {
    let r = rates(u, p, tr)?;
    Ok([
        0.5 * u.sobolev_norm_sq(p.s),
        r.damping * r.potential,
        0.5 * r.damping * u.l2_norm_sq(),
    ])
}

fn projected_nonlinearity(u: &SpectralField, q: u32, tr: &Transform) -> Result<SpectralField> {
    let mut grid = tr.to_physical(u)?;
    for v in grid.values_mut() {
        *v *= v.norm_sqr().powi(q as i32);
    }
    tr.to_spectral(&grid)
}

/// `(u, 𝓛_s u)`, the inner-product form of the mass rate.
pub fn mass_rate_dual(u: &SpectralField, p: &DissipationParams) -> Result<f64> {
    u.real_inner(&apply_dissipation(u, p)?)
}

/// `(-Δu + P_N(|u|^{2q}u), 𝓛_s u)`, the inner-product form of the energy rate.
pub fn energy_rate_dual(u: &SpectralField, p: &DissipationParams, tr: &Transform) -> Result<f64> {
    let grad = u.frac_laplacian(1.0);
    let n = projected_nonlinearity(u, p.q, tr)?;
    let de = grad.add_scaled(&n, Complex64::new(1.0, 0.0))?;
    de.real_inner(&apply_dissipation(u, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CordobaGap {
    /// `⟨|f|^{2q} f, (-Δ)^γ f⟩`.
    pub lhs: f64,
    /// `‖(-Δ)^{γ/2} |f|^{q+1}‖² / (q+1)` from the grid spectrum of `|f|^{q+1}`.
    pub rhs: f64,
}

impl CordobaGap {
    pub fn gap(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Gap relative to the size of the two sides.
    pub fn relative(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.gap() / scale
        }
    }
}

/// Both sides of the nonlinear Córdoba–Córdoba inequality by quadrature on
/// `tr`'s grid. `q` may be any real `>= 1`.
pub fn cordoba_gap(f: &SpectralField, gamma: f64, q: f64, tr: &Transform) -> Result<CordobaGap> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", "must lie in (0, 1]"));
    }
    if !(q >= 1.0) {
        return Err(invalid("q", "must be >= 1"));
    }
    let grid = tr.to_physical(f)?;
    let lifted = tr.to_physical(&f.frac_laplacian(gamma))?;
    let lhs = grid
        .values()
        .iter()
        .zip(lifted.values())
        .map(|(v, w)| v.norm().powf(2.0 * q) * (v.re * w.re + v.im * w.im))
        .sum::<f64>()
        * grid.cell_volume();
    let power: Vec<Complex64> = grid
        .values()
        .iter()
        .map(|v| Complex64::new(v.norm().powf(q + 1.0), 0.0))
        .collect();
    let g = PhysicalGrid::new(grid.dim(), grid.points(), power)?;
    let spectrum = tr.grid_spectrum(&g)?;
    let rhs = spectrum
        .iter()
        .zip(tr.grid_eigenvalues())
        .map(|(c, l)| eig_pow(l, gamma) * c.norm_sqr())
        .sum::<f64>()
        / (q + 1.0);
    Ok(CordobaGap { lhs, rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    /// Smallest `K >= 0` with `𝓔₀(u) <= 𝓔(u) + K` on the corpus.
    pub k_fit: f64,
    /// Fields failing any checkable step of the `s > 2` absorption chain.
    pub violations: usize,
    /// The Young exponent split used, `β = (4q+2)/(3k̃+2)`.
    pub beta: f64,
    /// True when `s > 2`, the regime the chain is written for.
    pub high_regularity: bool,
}

/// One field's pass through the chain: Cauchy–Schwarz split of the pairing,
/// interpolation of `H^{s⁻(1-β)}` between `H^{s⁻}` and `L²`, and Young's
/// inequality `X^{4q+2-2β} Y^{2β} <= (1-β) + β X^{3k̃} Y²`.
pub fn chain_holds(u: &SpectralField, p: &DissipationParams, tr: &Transform, beta: f64) -> Result<bool> {
    let r = rates(u, p, tr)?;
    let mut grid = tr.to_physical(u)?;
    for v in grid.values_mut() {
        *v *= v.norm_sqr().powi(p.q as i32);
    }
    let spectrum = tr.grid_spectrum(&grid)?;
    let lifted_sq: f64 = spectrum
        .iter()
        .zip(tr.grid_eigenvalues())
        .map(|(c, l)| eig_pow(l, p.s - 2.0) * c.norm_sqr())
        .sum();
    let tol = 1e-10;
    let split_rhs = 0.5 * u.homogeneous_norm_sq(p.s) + 0.5 * lifted_sq;
    let split = r.pairing <= split_rhs + tol * (1.0 + split_rhs.abs());

    let x = u.sobolev_norm(p.s_minus());
    let y = u.l2_norm();
    let mid = u.sobolev_norm(p.s_minus() * (1.0 - beta));
    let interp_rhs = x.powf(1.0 - beta) * y.powf(beta);
    let interp = mid <= interp_rhs * (1.0 + tol) + tol;

    let q = p.q as f64;
    let lhs = x.powf(4.0 * q + 2.0 - 2.0 * beta) * y.powf(2.0 * beta);
    let young_rhs = (1.0 - beta) + beta * x.powf(p.damping_exponent()) * y * y;
    let young = lhs <= young_rhs * (1.0 + tol);
    Ok(split && interp && young)
}

pub fn coercivity_gap(corpus: &[SpectralField], p: &DissipationParams, tr: &Transform) -> Result<CoercivityReport> {
    if corpus.is_empty() {
        return Err(Error::TooFew {
            what: "fields in the corpus",
            need: 1,
            have: 0,
        });
    }
    let q = p.q as f64;
    let beta = (4.0 * q + 2.0) / (p.damping_exponent() + 2.0);
    let mut k_fit = 0.0f64;
    let mut violations = 0;
    for u in corpus {
        let r = rates(u, p, tr)?;
        k_fit = k_fit.max(r.coercive_rate - r.energy_rate);
        if beta >= 1.0 || !chain_holds(u, p, tr, beta)? {
            violations += 1;
        }
    }
    Ok(CoercivityReport {
        k_fit,
        violations,
        beta,
        high_regularity: p.s > 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{next_smooth, NaiveDft};
    use crate::flow::{FlowConfig, Propagator};
    use crate::lattice::Lattice;
    use alloc::sync::Arc;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(d: usize, cutoff: f64, q: u32) -> (Arc<Lattice>, Transform) {
        let l = Arc::new(Lattice::new(d, cutoff).unwrap());
        let p = Propagator::new(l.clone(), FlowConfig::new(q, 0.01), &NaiveDft).unwrap();
        (l, p.transform().clone())
    }

    #[test]
    fn zero_field_rates_vanish() {
        let (l, tr) = setup(1, 9.0, 1);
        let p = DissipationParams::new(1, 1, 2.0);
        let z = SpectralField::zeros(l);
        assert!(apply_dissipation(&z, &p).unwrap().is_zero());
        let r = rates(&z, &p, &tr).unwrap();
        assert_eq!((r.mass_rate, r.energy_rate, r.coercive_rate), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_mode_hand_values() {
        let (l, _) = setup(1, 4.0, 1);
        let mut p = DissipationParams::new(1, 1, 2.0);
        p.k_tilde = 1.0;
        p.eta = 1e-9;
        let u = SpectralField::single_mode(l.clone(), [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        // ‖u‖_{H^{2-η}} = 2^{(2-η)/2}
        let damp = 2.0f64.powf(1.5 * (2.0 - p.eta));
        let idx = l.index_of(&[1, 0, 0]).unwrap();
        let a = apply_dissipation(&u, &p).unwrap();
        assert!((a.coeffs()[idx].re - (1.0 + damp)).abs() < 1e-12);
        assert!((mass_rate(&u, &p).unwrap() - (1.0 + damp)).abs() < 1e-12);
        let twice = apply_dissipation(&u.scaled(2.0), &p).unwrap();
        assert!(twice.max_abs_diff(&a.scaled(2.0)).unwrap() > 1.0);
    }

    #[test]
    fn constant_field_energy_rate() {
        let (l, tr) = setup(1, 9.0, 1);
        let p = DissipationParams::new(1, 1, 2.0);
        let c = 0.3;
        let u = SpectralField::plane_wave(l, [0, 0, 0], Complex64::new(c, 0.0)).unwrap();
        let r = rates(&u, &p, &tr).unwrap();
        let vol = 2.0 * core::f64::consts::PI;
        let damp = p.c_ds * (c * c * vol).powf(0.5 * p.damping_exponent());
        let expect = damp * c.powi(4) * vol;
        assert!(r.pairing.abs() < 1e-15);
        assert!((r.energy_rate - expect).abs() < 1e-13);
    }

    #[test]
    fn cordoba_trivial_cases() {
        let l = Arc::new(Lattice::new(1, 4.0).unwrap());
        let tr = Transform::new(l.clone(), next_smooth(4 * l.min_grid()), &NaiveDft).unwrap();
        let w = SpectralField::plane_wave(l.clone(), [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let g = cordoba_gap(&w, 0.5, 1.0, &tr).unwrap();
        assert!(g.rhs.abs() < 1e-14 && g.lhs > 0.0);
        // |f| = 1 and λ = 1, so the pairing is the torus length
        let expect = 2.0 * core::f64::consts::PI;
        assert!((g.lhs - expect).abs() < 1e-13);
        let c = SpectralField::plane_wave(l, [0, 0, 0], Complex64::new(0.7, 0.0)).unwrap();
        let g = cordoba_gap(&c, 1.0, 2.0, &tr).unwrap();
        assert!(g.lhs.abs() < 1e-15 && g.rhs.abs() < 1e-15);
    }

    #[test]
    fn coercivity_small_and_zero_corpora() {
        let (l, tr) = setup(1, 9.0, 1);
        let p = DissipationParams::new(1, 1, 2.0);
        let r = coercivity_gap(&[SpectralField::zeros(l.clone())], &p, &tr).unwrap();
        assert_eq!(r.k_fit, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let corpus: Vec<_> = (0..50)
            .map(|_| {
                let u = SpectralField::random(l.clone(), 1.0, 1.0, false, &mut rng);
                let n = u.sobolev_norm(p.s);
                u.scaled(1e-2 / n)
            })
            .collect();
        let r = coercivity_gap(&corpus, &p, &tr).unwrap();
        assert!(r.k_fit < 1e-4);
        assert!(coercivity_gap(&[], &p, &tr).is_err());
    }

    #[test]
    fn coercive_terms_scale_with_known_exponents() {
        let (l, tr) = setup(1, 9.0, 1);
        let p = DissipationParams::new(1, 1, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = SpectralField::random(l, 1.0, 0.5, false, &mut rng);
        let a = coercive_terms(&u, &p, &tr).unwrap();
        let t: f64 = 1.7;
        let b = coercive_terms(&u.scaled(t), &p, &tr).unwrap();
        let k3 = p.damping_exponent();
        for (i, expo) in [2.0, k3 + 4.0, k3 + 2.0].iter().enumerate() {
            let slope = (b[i] / a[i]).ln() / t.ln();
            assert!((slope - expo).abs() < 1e-9, "term {i}: {slope}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn duality_and_positivity(seed in any::<u64>(), q in 1u32..=3, s in 1.2f64..2.0) {
            let (l, tr) = setup(1, 16.0, q);
            let mut p = DissipationParams::new(1, q, s);
            p.eta = 0.1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = SpectralField::random(l, 1.0, 0.4, true, &mut rng);
            let r = rates(&u, &p, &tr).unwrap();
            let md = mass_rate_dual(&u, &p).unwrap();
            let ed = energy_rate_dual(&u, &p, &tr).unwrap();
            prop_assert!((r.mass_rate - md).abs() <= 1e-10 * md.abs());
            prop_assert!((r.energy_rate - ed).abs() <= 1e-9 * ed.abs());
            prop_assert!(r.mass_rate >= 0.0 && r.coercive_rate >= 0.0);
            prop_assert!(r.energy_rate >= u.homogeneous_norm_sq(s));
        }

        #[test]
        fn cordoba_holds_on_random_fields(seed in any::<u64>(), q in 1u32..=3, gi in 0usize..3, real in any::<bool>()) {
            let gamma = [0.25, 0.5, 1.0][gi];
            let l = Arc::new(Lattice::new(1, 9.0).unwrap());
            let tr = Transform::new(l.clone(), next_smooth(4 * l.min_grid()), &NaiveDft).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = SpectralField::random(l, 1.0, 1.0, real, &mut rng);
            let g = cordoba_gap(&f, gamma, q as f64, &tr).unwrap();
            prop_assert!(g.relative() >= -1e-6, "{g:?}");
        }
    }
}
