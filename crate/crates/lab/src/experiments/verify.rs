//! Deterministic verification suites: conservation, splitting order,
//! functional inequalities, discrete duality and Galerkin convergence.

use std::sync::Arc;

use fdnls_core::dissipation::{coercivity_gap, cordoba_gap, energy_rate_dual, mass_rate_dual, rates};
use fdnls_core::flow::{galerkin_gap, increment_check};
use fdnls_core::grid::{dealiased_points, default_dealias_factor};
use fdnls_core::stats::{linear_fit, mean};
use fdnls_core::stochastic::path_rng;
use fdnls_core::{Lattice, LwpParams, Propagator, SpectralField, Transform};

use super::{flow, lattice, relative, Context, Outcome};
use crate::config::{ExperimentConfig, InitialKind, Kind, Suite};
use crate::error::Result;
use crate::io::{num, Check, Table};

pub const CORDOBA_TOL: f64 = 1e-6;
pub const DUALITY_TOL: f64 = 1e-9;
pub const ORDER_BAND: (f64, f64) = (1.8, 2.2);

/// Random-field streams of the different suites never overlap.
fn stream(suite: u64, i: u64) -> u64 {
    (suite << 40) + i
}

fn random_fields(cfg: &ExperimentConfig, l: &Arc<Lattice>, suite: u64, n: usize, decay: f64) -> Vec<SpectralField> {
    (0..n as u64)
        .map(|i| {
            let mut rng = path_rng(cfg.seed, stream(suite, i));
            SpectralField::random(l.clone(), decay, cfg.initial.amplitude, cfg.initial.real, &mut rng)
        })
        .collect()
}

fn quadrature(cfg: &ExperimentConfig, l: &Lattice, q: u32) -> usize {
    if cfg.numerics.quadrature_points > 0 {
        cfg.numerics.quadrature_points
    } else {
        dealiased_points(l, 4 * default_dealias_factor(q))
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(Kind::Verify);
    for suite in &cfg.verify.suites {
        match suite {
            Suite::Mass => mass(cfg, ctx, &mut out)?,
            Suite::PlaneWave => plane_wave(cfg, ctx, &mut out)?,
            Suite::StrangOrder => strang_order(cfg, ctx, &mut out)?,
            Suite::Cordoba => cordoba(cfg, ctx, &mut out)?,
            Suite::Coercivity => coercivity(cfg, ctx, &mut out)?,
            Suite::Duality => duality(cfg, ctx, &mut out)?,
            Suite::GalerkinGap => gap(cfg, ctx, &mut out)?,
            Suite::Increment => increment(cfg, ctx, &mut out)?,
        }
    }
    Ok(out)
}

fn mass(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let mut c = cfg.clone();
    c.initial.kind = InitialKind::Random;
    let r = flow::simulate(&c, ctx)?;
    let drift = r.mass_drift();
    out.summary.checks.push(
        Check::hard("mass_conservation", drift < flow::MASS_TOL)
            .target(flow::MASS_TOL)
            .estimate(drift)
            .note("max relative mass drift of a random datum"),
    );
    Ok(())
}

fn plane_wave(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let mut c = cfg.clone();
    c.initial.kind = InitialKind::PlaneWave;
    let r = flow::simulate(&c, ctx)?;
    let err = r.max_orbit_error().unwrap_or(f64::INFINITY);
    out.summary.checks.push(
        Check::hard("plane_wave", err < flow::ORBIT_TOL)
            .target(flow::ORBIT_TOL)
            .estimate(err)
            .note("max coefficient error against the exact orbit"),
    );
    Ok(())
}

/// Observed order `log2(|u_h - u_{h/2}| / |u_{h/2} - u_{h/4}|)` per field.
pub fn splitting_orders(cfg: &ExperimentConfig, ctx: &Context) -> Result<Vec<f64>> {
    let v = &cfg.verify;
    let l = lattice(cfg.physics.dim, cfg.physics.cutoff)?;
    let props = [1.0, 2.0, 4.0]
        .iter()
        .map(|f| Propagator::new(l.clone(), cfg.flow_config(v.order_dt_nondim / f), &ctx.planner))
        .collect::<fdnls_core::Result<Vec<_>>>()?;
    let fields = random_fields(cfg, &l, 1, v.order_fields, cfg.initial.decay);
    ctx.par_map(fields, |u0| {
        let ends = props
            .iter()
            .map(|p| p.flow(&u0, v.order_t_nondim, |_, _| Ok(())))
            .collect::<fdnls_core::Result<Vec<_>>>()?;
        let e1 = ends[0].sub(&ends[1])?.l2_norm();
        let e2 = ends[1].sub(&ends[2])?.l2_norm();
        Ok((e1 / e2).log2())
    })
}

fn strang_order(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let orders = splitting_orders(cfg, ctx)?;
    let mut t = Table::new("strang_order", &["check", "field", "order"]);
    for (i, o) in orders.iter().enumerate() {
        t.push(vec!["strang_order".into(), i.to_string(), num(*o)]);
    }
    out.tables.push(t);
    let lo = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = orders.iter().all(|o| *o >= ORDER_BAND.0 && *o <= ORDER_BAND.1);
    out.summary.checks.push(
        Check::hard("strang_order", pass)
            .estimate(mean(&orders))
            .note(format!("observed orders in [{lo:.4}, {hi:.4}], required [1.8, 2.2]")),
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CordobaCell {
    pub gamma: f64,
    pub q: u32,
    pub worst: f64,
    /// Fields below `-CORDOBA_TOL` on the base grid.
    pub flagged: usize,
    /// Flagged fields still below after refinement.
    pub confirmed: usize,
    pub worst_refined: f64,
}

pub fn cordoba_cells(cfg: &ExperimentConfig, ctx: &Context) -> Result<Vec<CordobaCell>> {
    let v = &cfg.verify;
    let l = lattice(cfg.physics.dim, cfg.physics.cutoff)?;
    let fields = random_fields(cfg, &l, 2, v.fields, cfg.initial.decay);
    let mut grid = Vec::new();
    for &gamma in &v.gammas {
        for &q in &v.q_list {
            grid.push((gamma, q));
        }
    }
    ctx.par_map(grid, |(gamma, q)| {
        let points = quadrature(cfg, &l, q);
        let tr = Transform::new(l.clone(), points, &ctx.planner)?;
        let fine = Transform::new(l.clone(), points * v.refine_factor.max(1), &ctx.planner)?;
        let mut cell = CordobaCell {
            gamma,
            q,
            worst: f64::INFINITY,
            flagged: 0,
            confirmed: 0,
            worst_refined: f64::INFINITY,
        };
        for f in &fields {
            let r = cordoba_gap(f, gamma, q as f64, &tr)?.relative();
            cell.worst = cell.worst.min(r);
            if r < -CORDOBA_TOL {
                cell.flagged += 1;
                let rr = cordoba_gap(f, gamma, q as f64, &fine)?.relative();
                cell.worst_refined = cell.worst_refined.min(rr);
                if rr < -CORDOBA_TOL {
                    cell.confirmed += 1;
                }
            }
        }
        Ok(cell)
    })
}

fn cordoba(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let cells = cordoba_cells(cfg, ctx)?;
    let mut t = Table::new(
        "cordoba",
        &[
            "check",
            "gamma",
            "q",
            "fields",
            "worst_relative_gap",
            "flagged",
            "confirmed",
            "worst_refined",
        ],
    );
    for c in &cells {
        t.push(vec![
            "cordoba".into(),
            num(c.gamma),
            c.q.to_string(),
            cfg.verify.fields.to_string(),
            num(c.worst),
            c.flagged.to_string(),
            c.confirmed.to_string(),
            if c.flagged > 0 {
                num(c.worst_refined)
            } else {
                String::new()
            },
        ]);
    }
    out.tables.push(t);
    let confirmed: usize = cells.iter().map(|c| c.confirmed).sum();
    let flagged: usize = cells.iter().map(|c| c.flagged).sum();
    let worst = cells.iter().map(|c| c.worst).fold(f64::INFINITY, f64::min);
    out.summary.checks.push(
        Check::hard("cordoba", confirmed == 0)
            .target(-CORDOBA_TOL)
            .estimate(worst)
            .note(format!(
                "{flagged} quadrature violations, {confirmed} survive a {}x finer grid",
                cfg.verify.refine_factor
            )),
    );
    Ok(())
}

fn coercivity(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let p = cfg.dissipation();
    let l = lattice(cfg.physics.dim, cfg.physics.cutoff)?;
    let tr = Transform::new(l.clone(), quadrature(cfg, &l, p.q), &ctx.planner)?;
    let corpus = random_fields(cfg, &l, 3, cfg.verify.fields, cfg.initial.decay);
    let r = coercivity_gap(&corpus, &p, &tr)?;
    out.summary.checks.push(
        Check::soft("coercivity", r.violations == 0)
            .estimate(r.k_fit)
            .note(format!(
                "fitted K = {:e}, beta = {:.4}, {} chain failures of {}, s > 2: {}",
                r.k_fit,
                r.beta,
                r.violations,
                corpus.len(),
                r.high_regularity
            )),
    );
    Ok(())
}

/// Worst relative disagreement of the mass and energy rates with their
/// adjoint forms.
pub fn duality_errors(cfg: &ExperimentConfig, ctx: &Context) -> Result<(f64, f64)> {
    let p = cfg.dissipation();
    let l = lattice(cfg.physics.dim, cfg.physics.cutoff)?;
    let tr = Transform::new(l.clone(), quadrature(cfg, &l, p.q), &ctx.planner)?;
    let fields = random_fields(cfg, &l, 4, cfg.verify.duality_fields, cfg.initial.decay);
    let mut worst = (0.0f64, 0.0f64);
    for u in &fields {
        let r = rates(u, &p, &tr)?;
        worst.0 = worst.0.max(relative(r.mass_rate, mass_rate_dual(u, &p)?));
        worst.1 = worst.1.max(relative(r.energy_rate, energy_rate_dual(u, &p, &tr)?));
    }
    Ok(worst)
}

fn duality(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let (m, e) = duality_errors(cfg, ctx)?;
    for (name, err) in [("duality_mass", m), ("duality_energy", e)] {
        out.summary.checks.push(
            Check::hard(name, err <= DUALITY_TOL)
                .target(DUALITY_TOL)
                .estimate(err)
                .note("max relative difference over the corpus"),
        );
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapFit {
    pub cutoffs: Vec<f64>,
    /// Corpus average of `sup_t` gap per cutoff.
    pub gaps: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
}

impl GapFit {
    pub fn ratio(&self) -> f64 {
        self.slope / self.expected
    }

    pub fn pass(&self) -> bool {
        (0.5..=2.0).contains(&self.ratio())
    }
}

/// Galerkin gap against the fine cutoff on a corpus with regularity
/// `data_regularity`; the slope is fitted in `log(1+Λ)`.
pub fn gap_fit(cfg: &ExperimentConfig, ctx: &Context) -> Result<GapFit> {
    let v = &cfg.verify;
    let d = cfg.physics.dim as f64;
    let fine_l = lattice(cfg.physics.dim, v.gap_fine_cutoff)?;
    let dt = cfg.numerics.dt_nondim;
    let fine = Propagator::new(fine_l.clone(), cfg.flow_config(dt), &ctx.planner)?;
    let corpus = random_fields(cfg, &fine_l, 5, v.gap_fields, v.data_regularity / 2.0 + d / 4.0);
    let s_prime = cfg.physics.s_prime;
    let gaps = ctx.par_map(v.gap_cutoffs.clone(), |n| {
        let coarse = Propagator::new(lattice(cfg.physics.dim, n)?, cfg.flow_config(dt), &ctx.planner)?;
        let sups = corpus
            .iter()
            .map(|u0| Ok(galerkin_gap(u0, &coarse, &fine, s_prime, v.gap_t_nondim)?.sup()))
            .collect::<Result<Vec<f64>>>()?;
        Ok(mean(&sups))
    })?;
    let x: Vec<f64> = v.gap_cutoffs.iter().map(|n| (1.0 + n).ln()).collect();
    let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, _) = linear_fit(&x, &y)?;
    Ok(GapFit {
        cutoffs: v.gap_cutoffs.clone(),
        gaps,
        slope,
        expected: (s_prime - v.data_regularity) / 2.0,
    })
}

fn gap(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let fit = gap_fit(cfg, ctx)?;
    let mut t = Table::new("galerkin_gap", &["check", "cutoff", "mean_sup_gap"]);
    for (n, g) in fit.cutoffs.iter().zip(&fit.gaps) {
        t.push(vec!["galerkin_gap".into(), num(*n), num(*g)]);
    }
    out.tables.push(t);
    out.summary.checks.push(
        Check::hard("galerkin_gap", fit.pass())
            .target(fit.expected)
            .estimate(fit.slope)
            .note(format!("slope ratio {:.4}, required in [0.5, 2]", fit.ratio())),
    );
    Ok(())
}

fn increment(cfg: &ExperimentConfig, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let l = lattice(cfg.physics.dim, cfg.physics.cutoff)?;
    let prop = Propagator::new(l.clone(), cfg.flow_config(cfg.numerics.dt_nondim), &ctx.planner)?;
    let lwp = LwpParams::standard(cfg.physics.q, cfg.physics.dim);
    let fields = random_fields(cfg, &l, 6, cfg.verify.order_fields, cfg.initial.decay);
    let mut flagged = 0;
    let mut worst = 0.0f64;
    for u in &fields {
        let r = increment_check(&prop, u, cfg.physics.s, &lwp)?;
        worst = worst.max(r.ratio);
        flagged += r.flagged as usize;
    }
    out.summary.checks.push(
        Check::soft("increment", flagged == 0)
            .target(2.0 * lwp.c0)
            .estimate(worst)
            .note(format!(
                "{flagged} of {} fields exceed twice c0 before T(R)",
                fields.len()
            )),
    );
    Ok(())
}
