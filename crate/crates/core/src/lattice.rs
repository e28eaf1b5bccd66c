use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused whenever std is linked into the build
use num_traits::Float;

use crate::error::{invalid, Error, Result};

pub const MAX_DIM: usize = 3;

/// Integer wave vector; components beyond the lattice dimension are zero.
pub type Wavevector = [i32; MAX_DIM];

/// Truncated Fourier lattice of the torus `[0, 2π)^d`.
///
/// Holds every `k ∈ Z^d` with `|k|² <= cutoff`, ordered by eigenvalue `|k|²`
/// and then lexicographically, so the constant mode is always first.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    cutoff: f64,
    modes: Vec<Wavevector>,
    eigenvalues: Vec<f64>,
    index: BTreeMap<Wavevector, usize>,
    max_component: usize,
}

impl Lattice {
    pub fn new(dim: usize, cutoff: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(cutoff >= 0.0) || !cutoff.is_finite() {
            return Err(invalid("cutoff", "must be a finite nonnegative number"));
        }
        let bound = cutoff.floor() as i64;
        let radius = cutoff.sqrt().floor() as i32;
        let span = |axis: usize| if axis < dim { -radius..=radius } else { 0..=0 };

        let mut modes = Vec::new();
        for k0 in span(0) {
            for k1 in span(1) {
                for k2 in span(2) {
                    let norm2 = (k0 as i64).pow(2) + (k1 as i64).pow(2) + (k2 as i64).pow(2);
                    if norm2 <= bound {
                        modes.push([k0, k1, k2]);
                    }
                }
            }
        }
        modes.sort_by(|a, b| norm2(a).cmp(&norm2(b)).then(a.cmp(b)));

        let eigenvalues = modes.iter().map(|k| norm2(k) as f64).collect();
        let index = modes.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let max_component = modes
            .iter()
            .flat_map(|k| k.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        Ok(Self {
            dim,
            cutoff,
            modes,
            eigenvalues,
            index,
            max_component,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn modes(&self) -> &[Wavevector] {
        &self.modes
    }

    /// Eigenvalues `λ_k = |k|²` of `-Δ`, aligned with [`Lattice::modes`].
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn index_of(&self, k: &Wavevector) -> Option<usize> {
        self.index.get(k).copied()
    }

    /// Largest `|k_i|` over all modes and axes.
    pub fn max_component(&self) -> usize {
        self.max_component
    }

    /// Minimal grid size per dimension that separates all lattice modes.
    pub fn min_grid(&self) -> usize {
        2 * self.max_component + 1
    }

    /// Index of `-k` for every mode; the ball lattice is symmetric.
    pub fn negation_map(&self) -> Vec<usize> {
        self.modes
            .iter()
            .map(|k| {
                let neg = [-k[0], -k[1], -k[2]];
                self.index[&neg]
            })
            .collect()
    }

    /// True if every mode of `self` is also a mode of `other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.dim == other.dim && self.modes.iter().all(|k| other.index.contains_key(k))
    }
}

fn norm2(k: &Wavevector) -> i64 {
    k.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force count of integer points of `Z^d` in the closed ball of radius √Λ.
    fn brute_count(dim: usize, cutoff: f64) -> usize {
        let r = 40i64;
        let mut n = 0;
        let range = |axis: usize| if axis < dim { -r..=r } else { 0..=0 };
        for a in range(0) {
            for b in range(1) {
                for c in range(2) {
                    if ((a * a + b * b + c * c) as f64) <= cutoff {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn small_lattices() {
        let l = Lattice::new(1, 0.0).unwrap();
        assert_eq!(l.modes(), &[[0, 0, 0]]);

        let l = Lattice::new(1, 4.0).unwrap();
        assert_eq!(l.mode_count(), 5);
        let ks: Vec<i32> = l.modes().iter().map(|k| k[0]).collect();
        assert_eq!(ks, [0, -1, 1, -2, 2]);

        let l = Lattice::new(2, 2.0).unwrap();
        assert_eq!(l.mode_count(), 9);
        assert_eq!(brute_count(2, 2.0), 9);
    }

    #[test]
    fn counts_match_enumeration() {
        for dim in 1..=3 {
            for cutoff in [0.0, 1.0, 2.5, 9.0, 17.3, 50.0] {
                let l = Lattice::new(dim, cutoff).unwrap();
                assert_eq!(l.mode_count(), brute_count(dim, cutoff), "d={dim} Λ={cutoff}");
            }
        }
    }

    #[test]
    fn ordering_invariants() {
        let l = Lattice::new(3, 12.0).unwrap();
        assert_eq!(l.eigenvalues()[0], 0.0);
        assert!(l.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        for (i, k) in l.modes().iter().enumerate() {
            assert_eq!(l.index_of(k), Some(i));
            assert!(l.eigenvalues()[i] <= 12.0);
        }
        let neg = l.negation_map();
        for (i, &j) in neg.iter().enumerate() {
            assert_eq!(neg[j], i);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Lattice::new(4, 1.0), Err(Error::UnsupportedDimension(4)));
        assert_eq!(Lattice::new(0, 1.0), Err(Error::UnsupportedDimension(0)));
        assert!(Lattice::new(1, -1.0).is_err());
        assert!(Lattice::new(1, f64::NAN).is_err());
    }
}
