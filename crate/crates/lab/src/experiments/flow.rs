//! Deterministic Galerkin flow: conservation and closed-form orbit errors.

use fdnls_core::flow::{mass, plane_wave_solution, schedule};
use fdnls_core::Propagator;
use num_complex::Complex64;

use super::{initial_field, lattice, wavevector, Context, Outcome};
use crate::config::{ExperimentConfig, InitialKind, Kind};
use crate::error::Result;
use crate::io::{num, Check, Table};

pub const MASS_TOL: f64 = 1e-8;
pub const ORBIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
    /// Max-coefficient distance to the exact orbit (plane waves only).
    pub orbit_error: Option<Vec<f64>>,
}

impl FlowReport {
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        let worst = self.mass.iter().fold(0.0f64, |acc, m| acc.max((m - m0).abs()));
        if m0 == 0.0 {
            worst
        } else {
            worst / m0
        }
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let worst = self.energy.iter().fold(0.0f64, |acc, e| acc.max((e - e0).abs()));
        if e0 == 0.0 {
            worst
        } else {
            worst / e0.abs()
        }
    }

    pub fn max_orbit_error(&self) -> Option<f64> {
        self.orbit_error.as_ref().map(|e| e.iter().copied().fold(0.0, f64::max))
    }
}

/// Flows the configured initial datum to `t_final`, recording every
/// `record_every_nondim`.
pub fn simulate(cfg: &ExperimentConfig, ctx: &Context) -> Result<FlowReport> {
    let p = &cfg.physics;
    let n = &cfg.numerics;
    let l = lattice(p.dim, p.cutoff)?;
    let prop = Propagator::new(l.clone(), cfg.flow_config(n.dt_nondim), &ctx.planner)?;
    let u0 = initial_field(cfg, &l, 0)?;
    let (steps, h) = schedule(n.t_final_nondim, n.dt_nondim);
    let every = ((n.record_every_nondim / h).round() as usize).max(1);
    let plane = cfg.initial.kind == InitialKind::PlaneWave;
    let mut report = FlowReport {
        times: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        norm: Vec::new(),
        orbit_error: plane.then(Vec::new),
    };
    let mut index = 0usize;
    prop.flow(&u0, n.t_final_nondim, |t, u| {
        let record = index.is_multiple_of(every) || index == steps;
        index += 1;
        if !record {
            return Ok(());
        }
        report.times.push(t);
        report.mass.push(mass(u));
        report.energy.push(prop.energy(u)?);
        report.norm.push(u.sobolev_norm(p.s_prime));
        if let Some(errs) = report.orbit_error.as_mut() {
            let exact = plane_wave_solution(
                l.clone(),
                wavevector(&cfg.initial.mode),
                Complex64::new(cfg.initial.amplitude, 0.0),
                p.q,
                t,
            )?;
            errs.push(u.max_abs_diff(&exact)?);
        }
        Ok(())
    })?;
    Ok(report)
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let report = simulate(cfg, ctx)?;
    let mut out = Outcome::new(Kind::Flow);
    let mut table = Table::new("flow", &["t", "mass", "energy", "hs_norm", "orbit_error"]);
    for i in 0..report.times.len() {
        table.push(vec![
            num(report.times[i]),
            num(report.mass[i]),
            num(report.energy[i]),
            num(report.norm[i]),
            report.orbit_error.as_ref().map(|e| num(e[i])).unwrap_or_default(),
        ]);
    }
    out.tables.push(table);
    let drift = report.mass_drift();
    out.summary.checks.push(
        Check::hard("mass_conservation", drift < MASS_TOL)
            .target(MASS_TOL)
            .estimate(drift)
            .note("max relative mass drift"),
    );
    out.summary.checks.push(
        Check::soft("energy_conservation", true)
            .estimate(report.energy_drift())
            .note("max relative energy drift, reported"),
    );
    if let Some(err) = report.max_orbit_error() {
        out.summary.checks.push(
            Check::hard("plane_wave", err < ORBIT_TOL)
                .target(ORBIT_TOL)
                .estimate(err)
                .note("max coefficient error against the exact orbit"),
        );
    }
    Ok(out)
}
