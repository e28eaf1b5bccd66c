//! Long-time stationary statistics over a grid of couplings and cutoffs.

use std::collections::BTreeMap;

use fdnls_core::measure::{
    check_energy_moment, check_stationary_identity, kb_sample, l2_histogram, l2_norms, tail_moment, EmpiricalMeasure,
};
use fdnls_core::stochastic::{path_rng, series, ObserveSpec};
use fdnls_core::SpectralField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{integrator, lattice, noise, Context, Outcome};
use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;
use crate::io::{num, Check, Table};

/// One grid cell: coupling `alpha` and cutoff `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub alpha: f64,
    pub cutoff: f64,
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &alpha in &cfg.physics.alpha_list {
        for &cutoff in &cfg.physics.cutoff_list {
            out.push(Cell {
                index: out.len() as u64,
                alpha,
                cutoff,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Stored {
    times: Vec<f64>,
    series: BTreeMap<String, Vec<f64>>,
    fields: Vec<Vec<[f64; 2]>>,
}

/// Samples the empirical measure of one cell. With `keep` set, up to `keep`
/// evenly spaced fields are retained.
pub fn cell_measure(
    cfg: &ExperimentConfig,
    ctx: &Context,
    cell: Cell,
    keep: Option<usize>,
) -> Result<EmpiricalMeasure> {
    let p = &cfg.physics;
    let n = &cfg.numerics;
    let l = lattice(p.dim, cell.cutoff)?;
    let name = match keep {
        Some(k) => format!("kb_cell{:03}_keep{k}", cell.index),
        None => format!("kb_cell{:03}", cell.index),
    };
    let stored: Stored = ctx.unit(&name, || {
        let sde = integrator(cfg, ctx, &l, cell.alpha, n.dt_nondim)?;
        let spec = ObserveSpec {
            every: 1,
            sobolev: vec![p.s_prime],
            energy: true,
            snapshots: keep.is_some(),
        };
        let mut rng = path_rng(cfg.seed, cell.index);
        let mu = kb_sample(
            &sde,
            n.horizon_nondim,
            n.burn_in_nondim,
            n.thin_nondim,
            &spec,
            &mut rng,
            cell.index,
            cfg.seed,
        )?;
        let fields = match keep {
            Some(k) if !mu.fields.is_empty() => {
                let stride = (mu.fields.len() / k.max(1)).max(1);
                mu.fields
                    .iter()
                    .step_by(stride)
                    .take(k)
                    .map(|u| u.coeffs().iter().map(|c| [c.re, c.im]).collect())
                    .collect()
            }
            _ => Vec::new(),
        };
        Ok(Stored {
            times: mu.times,
            series: mu.series,
            fields,
        })
    })?;
    let fields = stored
        .fields
        .into_iter()
        .map(|c| {
            SpectralField::from_coeffs(
                l.clone(),
                c.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
            )
        })
        .collect::<fdnls_core::Result<Vec<_>>>()?;
    Ok(EmpiricalMeasure {
        times: stored.times,
        series: stored.series,
        fields,
        burn_in: n.burn_in_nondim,
        thin: n.thin_nondim,
    })
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let grid = cells(cfg);
    let measures = ctx.par_map(grid.clone(), |c| cell_measure(cfg, ctx, c, None))?;
    let mut out = Outcome::new(Kind::Kb);
    let mut kb = Table::new(
        "kb",
        &["check", "alpha", "N", "observable", "estimate", "se", "target", "z"],
    );
    let mut tail = Table::new("tail", &["check", "alpha", "N", "R", "value", "se", "slope"]);
    let mut hist = Table::new("histogram", &["check", "alpha", "N", "lo", "hi", "count"]);
    let mut energy = Vec::new();
    let mut coercive = Vec::new();

    for (cell, mu) in grid.iter().zip(&measures) {
        let l = lattice(cfg.physics.dim, cell.cutoff)?;
        let a = noise(cfg, &l);
        let label = format!("alpha={} N={}", cell.alpha, cell.cutoff);
        let id = check_stationary_identity(mu, &a)?;
        kb.push(vec![
            "stationary_identity".into(),
            num(cell.alpha),
            num(cell.cutoff),
            series::MASS_RATE.into(),
            num(id.estimate),
            num(id.se),
            num(id.target),
            num(id.z),
        ]);
        out.summary.checks.push(
            Check::hard("stationary_identity", id.pass)
                .target(id.target)
                .estimate(id.estimate)
                .se(id.se)
                .note(format!("{label}, z = {:.3}", id.z)),
        );
        if id.warning {
            out.summary
                .warnings
                .push(format!("{label}: batch means of the mass rate are still correlated"));
        }
        for (name, sink) in [
            (series::ENERGY_RATE, &mut energy),
            (series::COERCIVE_RATE, &mut coercive),
        ] {
            let est = mu.moment_of(name)?;
            kb.push(vec![
                "energy_moment".into(),
                num(cell.alpha),
                num(cell.cutoff),
                name.into(),
                num(est.mean),
                num(est.se),
                String::new(),
                String::new(),
            ]);
            sink.push(est.mean);
        }
        let w = mu.two_window(series::MASS_RATE)?;
        out.summary.checks.push(
            Check::soft("two_window", w.pass)
                .estimate(w.z)
                .note(format!("{label}, first vs second half of the mass rate")),
        );

        let curve = tail_moment(mu, &cfg.statistics.r_list)?;
        for i in 0..curve.radii.len() {
            tail.push(vec![
                "tail_decay".into(),
                num(cell.alpha),
                num(cell.cutoff),
                num(curve.radii[i]),
                num(curve.values[i]),
                num(curve.se[i]),
                curve.slope.map(num).unwrap_or_default(),
            ]);
        }
        let mut tc = Check::hard("tail_decay", curve.pass).target(-0.7);
        if let Some(s) = curve.slope {
            tc = tc.estimate(s);
        }
        out.summary.checks.push(tc.note(if curve.floor {
            format!("{label}, tail at the floor")
        } else {
            format!("{label}, log-log slope, monotone = {}", curve.monotone)
        }));

        let h = l2_histogram(&l2_norms(mu)?, cfg.statistics.bins)?;
        for i in 0..h.counts.len() {
            hist.push(vec![
                "l2_atom".into(),
                num(cell.alpha),
                num(cell.cutoff),
                num(h.edges[i]),
                num(h.edges[i + 1]),
                h.counts[i].to_string(),
            ]);
        }
        out.summary.checks.push(
            Check::soft("l2_atom", !h.atom)
                .estimate(h.max_fraction)
                .note(format!("{label}, largest bin fraction of the L2 norm")),
        );
    }

    for (name, values) in [("energy_rate", &energy), ("coercive_rate", &coercive)] {
        let b = check_energy_moment(values)?;
        out.summary.checks.push(
            Check::hard("energy_moment", b.pass)
                .target(2.0 * b.median)
                .estimate(b.max)
                .note(format!("{name}: max over the grid against twice the median")),
        );
    }
    out.tables.extend([kb, tail, hist]);
    Ok(out)
}
