//! Uniform physical grids on `[0, 2π)^d` and the transforms between them and
//! lattice coefficients.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fft::{next_smooth, Direction, FftKernel, FftPlanner};
use crate::field::{mode_scale, SpectralField};
use crate::lattice::Lattice;

/// Samples of a field at `x_j = 2π j / m` along each axis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalGrid {
    dim: usize,
    points: usize,
    values: Vec<Complex64>,
}

impl PhysicalGrid {
    pub fn new(dim: usize, points: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != points.pow(dim as u32) {
            return Err(invalid("values", "length must be points^dim"));
        }
        Ok(Self { dim, points, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Volume of one grid cell, `(2π/m)^d`.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.points as f64).powi(self.dim as i32)
    }

    /// Uniform-rule quadrature of `∫ f(u(x)) dx`.
    pub fn integrate<F: Fn(Complex64) -> f64>(&self, f: F) -> f64 {
        self.values.iter().map(|&v| f(v)).sum::<f64>() * self.cell_volume()
    }

    /// Quadrature approximation of `‖u‖_{L^p}`; `p = ∞` gives the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == f64::INFINITY {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let sum = if p == 2.0 {
            self.integrate(|v| v.norm_sqr())
        } else {
            self.integrate(|v| v.norm().powf(p))
        };
        sum.powf(1.0 / p)
    }
}

/// Grid size for products of degree `degree` of lattice fields: the padded
/// grid makes the lattice coefficients of the product exact.
pub fn dealiased_points(lattice: &Lattice, factor: usize) -> usize {
    next_smooth(factor.max(1) * lattice.min_grid())
}

/// Default padding factor `⌈(2q+2)/2⌉` for a `|u|^{2q}u` nonlinearity.
pub fn default_dealias_factor(q: u32) -> usize {
    (q as usize) + 1
}

/// Precomputed transform between a lattice and an `m^d` grid.
#[derive(Clone)]
pub struct Transform {
    lattice: Arc<Lattice>,
    points: usize,
    forward: Arc<dyn FftKernel>,
    inverse: Arc<dyn FftKernel>,
    slots: Vec<usize>,
}

impl core::fmt::Debug for Transform {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Transform")
            .field("dim", &self.lattice.dim())
            .field("cutoff", &self.lattice.cutoff())
            .field("points", &self.points)
            .finish()
    }
}

impl Transform {
    pub fn new(lattice: Arc<Lattice>, points: usize, planner: &dyn FftPlanner) -> Result<Self> {
        if points < lattice.min_grid() {
            return Err(Error::Unresolved {
                points,
                required: 2 * lattice.max_component(),
            });
        }
        let dim = lattice.dim();
        let slots = lattice
            .modes()
            .iter()
            .map(|k| {
                (0..dim).fold(0usize, |acc, axis| {
                    acc * points + (k[axis].rem_euclid(points as i32)) as usize
                })
            })
            .collect();
        Ok(Self {
            forward: planner.plan(points, Direction::Forward),
            inverse: planner.plan(points, Direction::Inverse),
            lattice,
            points,
            slots,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim() as u32)
    }

    pub fn to_physical(&self, u: &SpectralField) -> Result<PhysicalGrid> {
        u.check_lattice(&self.lattice)?;
        let mut values = alloc::vec![Complex64::new(0.0, 0.0); self.len()];
        let scale = 1.0 / mode_scale(self.dim());
        for (&slot, &c) in self.slots.iter().zip(u.coeffs()) {
            values[slot] = c * scale;
        }
        self.transform_in_place(&mut values, Direction::Inverse);
        Ok(PhysicalGrid {
            dim: self.dim(),
            points: self.points,
            values,
        })
    }

    pub fn to_spectral(&self, grid: &PhysicalGrid) -> Result<SpectralField> {
        let spectrum = self.grid_spectrum(grid)?;
        let coeffs = self.slots.iter().map(|&slot| spectrum[slot]).collect();
        SpectralField::from_coeffs(self.lattice.clone(), coeffs)
    }

    /// Full grid spectrum normalized like lattice coefficients:
    /// `û(k) = (2π)^{d/2} m^{-d} Σ_j u(x_j) e^{-ik·x_j}`.
    pub fn grid_spectrum(&self, grid: &PhysicalGrid) -> Result<Vec<Complex64>> {
        if grid.dim != self.dim() || grid.points != self.points {
            return Err(Error::Unresolved {
                points: grid.points,
                required: 2 * self.lattice.max_component(),
            });
        }
        let mut values = grid.values.clone();
        self.transform_in_place(&mut values, Direction::Forward);
        let scale = mode_scale(self.dim()) / self.len() as f64;
        for v in &mut values {
            *v *= scale;
        }
        Ok(values)
    }

    /// Inverse of [`Transform::grid_spectrum`].
    pub fn grid_synthesis(&self, mut spectrum: Vec<Complex64>) -> Result<PhysicalGrid> {
        if spectrum.len() != self.len() {
            return Err(invalid("spectrum", "length must match the grid"));
        }
        let scale = 1.0 / mode_scale(self.dim());
        for v in &mut spectrum {
            *v *= scale;
        }
        self.transform_in_place(&mut spectrum, Direction::Inverse);
        Ok(PhysicalGrid {
            dim: self.dim(),
            points: self.points,
            values: spectrum,
        })
    }

    /// `|k|²` for every slot of the full grid spectrum (signed frequencies,
    /// the Nyquist slot taken as `+m/2`).
    pub fn grid_eigenvalues(&self) -> Vec<f64> {
        let m = self.points;
        let freq = |j: usize| -> f64 {
            let f = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
            f * f
        };
        let dim = self.dim();
        (0..self.len())
            .map(|mut idx| {
                let mut acc = 0.0;
                for _ in 0..dim {
                    acc += freq(idx % m);
                    idx /= m;
                }
                acc
            })
            .collect()
    }

    /// Quadrature `‖u‖_{L^p}` on this grid.
    pub fn lebesgue_norm(&self, u: &SpectralField, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(invalid("p", "Lebesgue exponent must be >= 1"));
        }
        Ok(self.to_physical(u)?.lp_norm(p))
    }

    fn transform_in_place(&self, values: &mut [Complex64], direction: Direction) {
        let kernel = match direction {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let m = self.points;
        let dim = self.dim();
        // last axis is contiguous
        kernel.process(values);
        if dim == 1 {
            return;
        }
        let mut lines = alloc::vec![Complex64::new(0.0, 0.0); values.len()];
        for axis in 0..dim - 1 {
            let stride = m.pow((dim - 1 - axis) as u32);
            let outer = m.pow(axis as u32);
            for o in 0..outer {
                for i in 0..stride {
                    let line = (o * stride + i) * m;
                    let base = o * m * stride + i;
                    for t in 0..m {
                        lines[line + t] = values[base + t * stride];
                    }
                }
            }
            kernel.process(&mut lines);
            for o in 0..outer {
                for i in 0..stride {
                    let line = (o * stride + i) * m;
                    let base = o * m * stride + i;
                    for t in 0..m {
                        values[base + t * stride] = lines[line + t];
                    }
                }
            }
        }
    }
}

impl SpectralField {
    pub(crate) fn check_lattice(&self, lattice: &Lattice) -> Result<()> {
        if crate::field::same_lattice(self.lattice(), lattice) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }
}

/// Samples `u` on an `m^d` grid.
pub fn to_physical(u: &SpectralField, points: usize, planner: &dyn FftPlanner) -> Result<PhysicalGrid> {
    Transform::new(u.lattice().clone(), points, planner)?.to_physical(u)
}

/// Extracts lattice coefficients from grid samples.
pub fn to_spectral(grid: &PhysicalGrid, lattice: Arc<Lattice>, planner: &dyn FftPlanner) -> Result<SpectralField> {
    if grid.dim() != lattice.dim() {
        return Err(Error::LatticeMismatch);
    }
    Transform::new(lattice, grid.points(), planner)?.to_spectral(grid)
}

/// Quadrature `‖u‖_{L^p}` on an `m^d` grid.
pub fn lebesgue_norm(u: &SpectralField, p: f64, points: usize, planner: &dyn FftPlanner) -> Result<f64> {
    Transform::new(u.lattice().clone(), points, planner)?.lebesgue_norm(u, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::NaiveDft;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lattice(d: usize, cutoff: f64) -> Arc<Lattice> {
        Arc::new(Lattice::new(d, cutoff).unwrap())
    }

    #[test]
    fn constant_mode_is_constant() {
        for d in 1..=3 {
            let l = lattice(d, 2.0);
            let u0 = Complex64::new(0.7, -0.2);
            let u = SpectralField::single_mode(l, [0, 0, 0], u0).unwrap();
            let g = to_physical(&u, 5, &NaiveDft).unwrap();
            let expect = u0 / mode_scale(d);
            assert!(g.values().iter().all(|v| (v - expect).norm() < 1e-14));
        }
    }

    #[test]
    fn single_mode_samples_exponential() {
        let l = lattice(1, 1.0);
        let u = SpectralField::single_mode(l, [1, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let g = to_physical(&u, 8, &NaiveDft).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            let x = 2.0 * PI * j as f64 / 8.0;
            let expect = Complex64::new(x.cos(), x.sin()) / (2.0 * PI).sqrt();
            assert!((v - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn round_trip_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, cutoff, m) in [(1, 30.0, 12), (2, 8.0, 7), (3, 3.0, 4)] {
            let l = lattice(d, cutoff);
            let u = SpectralField::random(l.clone(), 0.0, 1.0, false, &mut rng);
            let tr = Transform::new(l, m, &NaiveDft).unwrap();
            let back = tr.to_spectral(&tr.to_physical(&u).unwrap()).unwrap();
            assert!(back.max_abs_diff(&u).unwrap() < 1e-12);
        }
    }

    #[test]
    fn under_resolved_grid_is_an_error() {
        let l = lattice(1, 16.0);
        let u = SpectralField::zeros(l.clone());
        assert!(matches!(to_physical(&u, 8, &NaiveDft), Err(Error::Unresolved { .. })));
        let g = PhysicalGrid::new(1, 8, alloc::vec![Complex64::new(1.0, 0.0); 8]).unwrap();
        assert!(matches!(to_spectral(&g, l, &NaiveDft), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn lebesgue_of_constant_modulus_fields() {
        for d in 1..=2 {
            let l = lattice(d, 4.0);
            let c = Complex64::new(0.3, 0.4);
            for k in [[0, 0, 0], [1, 0, 0], [2, 0, 0]] {
                let u = SpectralField::plane_wave(l.clone(), k, c).unwrap();
                for p in [1.0, 2.0, 3.5, 8.0] {
                    let got = lebesgue_norm(&u, p, 9, &NaiveDft).unwrap();
                    let expect = c.norm() * (2.0 * PI).powf(d as f64 / p);
                    assert!((got - expect).abs() < 1e-12 * expect, "d={d} p={p}");
                }
            }
        }
    }

    #[test]
    fn parseval_and_quadrature_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = lattice(1, 25.0);
        for _ in 0..20 {
            let u = SpectralField::random(l.clone(), 0.5, 1.0, false, &mut rng);
            let l2 = lebesgue_norm(&u, 2.0, 11, &NaiveDft).unwrap();
            assert!((l2 - u.sobolev_norm(0.0)).abs() < 1e-10 * l2);
            for q in 1..=4u32 {
                let p = 2.0 * q as f64 + 2.0;
                let m = (q as usize + 1) * l.min_grid();
                let a = lebesgue_norm(&u, p, m, &NaiveDft).unwrap();
                let b = lebesgue_norm(&u, p, 2 * m, &NaiveDft).unwrap();
                assert!((a - b).abs() < 1e-8 * b, "q={q}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn multi_dim_transform_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = lattice(2, 5.0);
        let u = SpectralField::random(l.clone(), 0.0, 1.0, false, &mut rng);
        let m = 6;
        let g = to_physical(&u, m, &NaiveDft).unwrap();
        for j0 in 0..m {
            for j1 in 0..m {
                let x = [2.0 * PI * j0 as f64 / m as f64, 2.0 * PI * j1 as f64 / m as f64];
                let mut direct = Complex64::new(0.0, 0.0);
                for (k, c) in l.modes().iter().zip(u.coeffs()) {
                    let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1];
                    direct += c * Complex64::new(phase.cos(), phase.sin()) / (2.0 * PI);
                }
                assert!((g.values()[j0 * m + j1] - direct).norm() < 1e-13);
            }
        }
    }
}
