use std::sync::Arc;

use fdnls_core::dissipation::{mass_rate, mass_rate_dual, rates};
use fdnls_core::ensemble::{complement_table, sorted_levels, EnsembleSpec};
use fdnls_core::flow::{mass, schedule};
use fdnls_core::stats::{batch_means, ks_statistic, loglog_slope};
use fdnls_core::stochastic::path_rng;
use fdnls_core::{DissipationParams, FlowConfig, Lattice, NaiveDft, Propagator, SpectralField, Transform};
use proptest::prelude::*;

fn lattice(cutoff: f64) -> Arc<Lattice> {
    Arc::new(Lattice::new(1, cutoff).unwrap())
}

fn field(l: &Arc<Lattice>, seed: u64, amplitude: f64) -> SpectralField {
    SpectralField::random(l.clone(), 1.0, amplitude, false, &mut path_rng(seed, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_conserves_mass(seed in any::<u64>(), amp in 0.1f64..1.5, q in 1u32..=3) {
        let l = lattice(16.0);
        let prop = Propagator::new(l.clone(), FlowConfig::new(q, 0.01), &NaiveDft).unwrap();
        let u0 = field(&l, seed, amp);
        let u = prop.flow(&u0, 0.2, |_, _| Ok(())).unwrap();
        prop_assert!((mass(&u) - mass(&u0)).abs() <= 1e-12 * mass(&u0).max(1e-300));
    }

    #[test]
    fn fractional_powers_compose(seed in any::<u64>(), g1 in 0.0f64..1.5, g2 in 0.0f64..1.5) {
        let l = lattice(36.0);
        let u = field(&l, seed, 1.0);
        let a = u.frac_laplacian(g1).frac_laplacian(g2);
        let b = u.frac_laplacian(g1 + g2);
        let scale = b.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn mass_rate_is_nonnegative_and_self_adjoint(seed in any::<u64>(), amp in 0.0f64..2.0) {
        let l = lattice(16.0);
        let p = DissipationParams::new(1, 1, 2.0);
        let u = field(&l, seed, amp);
        let m = mass_rate(&u, &p).unwrap();
        prop_assert!(m >= 0.0);
        let d = mass_rate_dual(&u, &p).unwrap();
        prop_assert!((m - d).abs() <= 1e-12 * m.abs().max(1e-300));
    }

    #[test]
    fn complement_fractions_never_increase(flags in prop::collection::vec(0usize..4, 50..120)) {
        // sample p belongs to every level above flags[p]
        let levels = sorted_levels(&[3, 1, 2, 2]);
        let members: Vec<Vec<bool>> = flags.iter().map(|&f| levels.iter().map(|&i| i > f).collect()).collect();
        let l2 = vec![1.0; flags.len()];
        let spec = EnsembleSpec::standard(1, 1, 1.9).unwrap();
        let t = complement_table(&l2, &members, &spec, &levels).unwrap();
        prop_assert!(t.monotone);
        prop_assert!(t.fractions.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ks_statistic_is_a_symmetric_distance(a in prop::collection::vec(-5.0f64..5.0, 1..40),
                                           b in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let d = ks_statistic(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a));
        prop_assert_eq!(ks_statistic(&a, &a), 0.0);
    }
}

#[test]
fn zero_field_rates_vanish_on_any_grid() {
    let l = lattice(64.0);
    let tr = Transform::new(l.clone(), 256, &NaiveDft).unwrap();
    let r = rates(&SpectralField::zeros(l), &DissipationParams::new(1, 2, 2.5), &tr).unwrap();
    assert_eq!((r.mass_rate, r.energy_rate, r.coercive_rate), (0.0, 0.0, 0.0));
}

#[test]
fn schedule_and_slopes_match_hand_values() {
    let (n, h) = schedule(1.0, 0.3);
    // never a step longer than requested
    assert_eq!(n, 4);
    assert_eq!(h, 0.25);
    assert_eq!(schedule(1.0, 0.1).0, 10);
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 5.0 * v.powf(-3.0)).collect();
    assert!((loglog_slope(&x, &y).unwrap() + 3.0).abs() < 1e-12);
    // 64 values in 32 batches of two: means 0.5, 2.5, ... with mean 31.5
    let xs: Vec<f64> = (0..64).map(f64::from).collect();
    let b = batch_means(&xs, 32).unwrap();
    assert_eq!(b.batches, 32);
    assert!((b.mean - 31.5).abs() < 1e-12);
}
