use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Wavevector};

/// `λ^γ` with the kernel of `-Δ` projected out: `0^γ = 0` unless `γ = 0`.
#[inline]
pub fn eig_pow(lambda: f64, gamma: f64) -> f64 {
    if lambda == 0.0 {
        if gamma == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if gamma == 1.0 {
        lambda
    } else {
        lambda.powf(gamma)
    }
}

/// `(2π)^{d/2}`, the ratio between a mode coefficient and the physical
/// amplitude of the corresponding plane wave.
pub fn mode_scale(dim: usize) -> f64 {
    (2.0 * PI).powf(dim as f64 / 2.0)
}

/// Coefficients of `u = Σ_k u_k e_k` with `e_k(x) = (2π)^{-d/2} e^{ik·x}`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    lattice: Arc<Lattice>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        same_lattice(&self.lattice, &other.lattice) && self.coeffs == other.coeffs
    }
}

pub(crate) fn same_lattice(a: &Lattice, b: &Lattice) -> bool {
    core::ptr::eq(a, b) || (a.dim() == b.dim() && a.mode_count() == b.mode_count())
}

impl SpectralField {
    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        let n = lattice.mode_count();
        Self {
            lattice,
            coeffs: alloc::vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_coeffs(lattice: Arc<Lattice>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.mode_count() {
            return Err(Error::LatticeMismatch);
        }
        Ok(Self { lattice, coeffs })
    }

    /// Field whose only nonzero coefficient sits on mode `k`.
    pub fn single_mode(lattice: Arc<Lattice>, k: Wavevector, coeff: Complex64) -> Result<Self> {
        let idx = lattice.index_of(&k).ok_or(Error::LatticeMismatch)?;
        let mut u = Self::zeros(lattice);
        u.coeffs[idx] = coeff;
        Ok(u)
    }

    /// Plane wave `c e^{ik·x}` given by its physical amplitude `c`.
    pub fn plane_wave(lattice: Arc<Lattice>, k: Wavevector, amplitude: Complex64) -> Result<Self> {
        let scale = mode_scale(lattice.dim());
        Self::single_mode(lattice, k, amplitude * scale)
    }

    /// Random field with coefficients `amplitude · (1+λ)^{-decay} · ξ_k`,
    /// `ξ_k` standard complex Gaussian. With `real = true` the coefficients
    /// satisfy `u_{-k} = conj(u_k)`, so `u(x)` is real-valued.
    pub fn random<R: RngCore + ?Sized>(
        lattice: Arc<Lattice>,
        decay: f64,
        amplitude: f64,
        real: bool,
        rng: &mut R,
    ) -> Self {
        let n = lattice.mode_count();
        let mut coeffs = Vec::with_capacity(n);
        for &lambda in lattice.eigenvalues() {
            let w = amplitude * (1.0 + lambda).powf(-decay) * core::f64::consts::FRAC_1_SQRT_2;
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            coeffs.push(Complex64::new(re * w, im * w));
        }
        if real {
            let neg = lattice.negation_map();
            for i in 0..n {
                let j = neg[i];
                if j == i {
                    coeffs[i] = Complex64::new(coeffs[i].re * core::f64::consts::SQRT_2, 0.0);
                } else if i < j {
                    coeffs[j] = coeffs[i].conj();
                }
            }
        }
        Self { lattice, coeffs }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `Σ_k (1+λ_k)^s |u_k|²`.
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.l2_norm_sq();
        }
        self.coeffs
            .iter()
            .zip(self.lattice.eigenvalues())
            .map(|(c, &l)| (1.0 + l).powf(s) * c.norm_sqr())
            .sum()
    }

    /// Inhomogeneous Sobolev norm `‖u‖_{H^s}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    /// Homogeneous seminorm squared `‖(-Δ)^{s/2} u‖²_{L²} = Σ_k λ_k^s |u_k|²`.
    pub fn homogeneous_norm_sq(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.lattice.eigenvalues())
            .map(|(c, &l)| eig_pow(l, s) * c.norm_sqr())
            .sum()
    }

    /// Zeroes every coefficient with `λ_k > cutoff`.
    pub fn project(&self, cutoff: f64) -> Result<Self> {
        if cutoff > self.lattice.cutoff() {
            return Err(Error::CutoffExceedsLattice {
                requested: cutoff,
                available: self.lattice.cutoff(),
            });
        }
        let mut out = self.clone();
        for (c, &l) in out.coeffs.iter_mut().zip(self.lattice.eigenvalues()) {
            if l > cutoff {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }

    /// Multiplies each coefficient by `λ_k^γ`; the constant mode is sent to 0
    /// for `γ != 0`.
    pub fn frac_laplacian(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        for (c, &l) in out.coeffs.iter_mut().zip(self.lattice.eigenvalues()) {
            *c *= eig_pow(l, gamma);
        }
        out
    }

    /// Multiplies each coefficient by `(1+λ_k)^{s/2}`.
    pub fn bessel(&self, s: f64) -> Self {
        let mut out = self.clone();
        for (c, &l) in out.coeffs.iter_mut().zip(self.lattice.eigenvalues()) {
            *c *= (1.0 + l).powf(s / 2.0);
        }
        out
    }

    /// Real inner product `(u, v) = Re ∫ u conj(v)`.
    pub fn real_inner(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(factor);
        out
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &Self, factor: Complex64) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * factor;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// Coefficients of `conj(u(x))`: mode `k` receives `conj(u_{-k})`.
    pub fn conj(&self) -> Self {
        let neg = self.lattice.negation_map();
        let coeffs = neg.iter().map(|&j| self.coeffs[j].conj()).collect();
        Self {
            lattice: self.lattice.clone(),
            coeffs,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Re-expresses the field on another lattice: shared modes are copied,
    /// modes missing from `target` are dropped, new modes are zero.
    pub fn transfer(&self, target: Arc<Lattice>) -> Result<Self> {
        if target.dim() != self.lattice.dim() {
            return Err(Error::LatticeMismatch);
        }
        let mut out = Self::zeros(target);
        for (k, c) in self.lattice.modes().iter().zip(&self.coeffs) {
            if let Some(idx) = out.lattice.index_of(k) {
                out.coeffs[idx] = *c;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if same_lattice(&self.lattice, &other.lattice) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lattice(d: usize, cutoff: f64) -> Arc<Lattice> {
        Arc::new(Lattice::new(d, cutoff).unwrap())
    }

    #[test]
    fn sobolev_single_mode() {
        let l = lattice(1, 4.0);
        let u = SpectralField::single_mode(l.clone(), [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!((u.sobolev_norm(2.0) - 2.0).abs() < 1e-15);
        let z = SpectralField::zeros(l);
        for s in [-1.0, 0.0, 0.5, 3.0] {
            assert_eq!(z.sobolev_norm(s), 0.0);
        }
    }

    #[test]
    fn projection_cases() {
        let l = lattice(2, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = SpectralField::random(l.clone(), 0.5, 1.0, false, &mut rng);
        assert_eq!(u.project(10.0).unwrap(), u);
        let p0 = u.project(0.0).unwrap();
        assert_eq!(p0.coeffs()[0], u.coeffs()[0]);
        assert!(p0.coeffs()[1..].iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        assert!(matches!(u.project(11.0), Err(Error::CutoffExceedsLattice { .. })));
    }

    #[test]
    fn frac_laplacian_cases() {
        let l = lattice(1, 9.0);
        let e0 = SpectralField::single_mode(l.clone(), [0, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(e0.frac_laplacian(1.0).is_zero());
        let u = SpectralField::single_mode(l.clone(), [2, 0, 0], Complex64::new(1.0, 0.5)).unwrap();
        let idx = l.index_of(&[2, 0, 0]).unwrap();
        assert_eq!(u.frac_laplacian(1.0).coeffs()[idx], Complex64::new(4.0, 2.0));
        assert_eq!(u.frac_laplacian(0.5).coeffs()[idx], Complex64::new(2.0, 1.0));
        assert_eq!(e0.frac_laplacian(-0.5).coeffs()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn real_random_fields_are_hermitian() {
        let l = lattice(2, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = SpectralField::random(l, 1.0, 1.0, true, &mut rng);
        assert!(u.conj().max_abs_diff(&u).unwrap() < 1e-15);
    }

    #[test]
    fn transfer_between_lattices() {
        let small = lattice(2, 2.0);
        let big = lattice(2, 9.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = SpectralField::random(small.clone(), 0.0, 1.0, false, &mut rng);
        let up = u.transfer(big).unwrap();
        assert_eq!(up.l2_norm_sq(), u.l2_norm_sq());
        assert_eq!(up.transfer(small).unwrap(), u);
    }

    fn field_strategy() -> impl Strategy<Value = (u64, f64)> {
        (any::<u64>(), 0.0f64..16.0)
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_self_adjoint_and_contracting((seed, cut) in field_strategy()) {
            let l = lattice(2, 16.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = SpectralField::random(l.clone(), 0.3, 1.0, false, &mut rng);
            let v = SpectralField::random(l, 0.3, 1.0, false, &mut rng);
            let pu = u.project(cut).unwrap();
            prop_assert_eq!(pu.project(cut).unwrap(), pu.clone());
            let lhs = pu.real_inner(&v).unwrap();
            let rhs = u.real_inner(&v.project(cut).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            for s in [0.0, 1.0, 2.0] {
                prop_assert!(pu.sobolev_norm(s) <= u.sobolev_norm(s));
            }
        }

        #[test]
        fn frac_laplacian_composes(seed in any::<u64>(), g1 in -1.5f64..1.5, g2 in -1.5f64..1.5) {
            let l = lattice(2, 12.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = SpectralField::random(l, 0.0, 1.0, false, &mut rng);
            let a = u.frac_laplacian(g1).frac_laplacian(g2);
            let b = u.frac_laplacian(g1 + g2);
            // compare off the constant mode
            for i in 1..a.coeffs().len() {
                let scale = 1.0 + b.coeffs()[i].norm();
                prop_assert!((a.coeffs()[i] - b.coeffs()[i]).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn sobolev_monotone_in_s(seed in any::<u64>(), s1 in -2.0f64..3.0, ds in 0.0f64..2.0) {
            let l = lattice(1, 25.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = SpectralField::random(l, 0.5, 1.0, true, &mut rng);
            prop_assert!(u.sobolev_norm(s1) <= u.sobolev_norm(s1 + ds) * (1.0 + 1e-14));
        }
    }
}
