//! Ensembles of initial data drawn from a stationary corpus: complement
//! decay across levels and the growth envelope of members.

use fdnls_core::ensemble::{
    complement_table, ensemble_limit_probe, envelope_ratios, membership_i, sorted_levels, ComplementTable,
    EnsembleSpec, OrbitProfile,
};
use fdnls_core::Propagator;
use serde::{Deserialize, Serialize};

use super::kb::{cell_measure, Cell};
use super::{lattice, Context, Outcome};
use crate::config::{ExperimentConfig, Kind};
use crate::error::{LabError, Result};
use crate::io::{num, Check, Table};

/// Per-sample results; profiles themselves are not kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub sample: usize,
    pub l2_norm: f64,
    /// Membership at each level of the sorted level list.
    pub members: Vec<bool>,
    /// Smallest level the sample belongs to.
    pub level: Option<usize>,
    /// `max_t ‖φ^t u₀‖_{H^{s'}} / (i (1+t)^{1/k̃})` at that level.
    pub envelope: Option<f64>,
}

pub fn spec(cfg: &ExperimentConfig) -> Result<EnsembleSpec> {
    let p = &cfg.physics;
    let mut s = EnsembleSpec::standard(p.q, p.dim, p.s_prime)?;
    s.j_max = cfg.statistics.j_max;
    s.a_floor = p.a_floor;
    s.k_tilde = p.k_tilde;
    s.validate()?;
    Ok(s)
}

pub fn profile_horizon(cfg: &ExperimentConfig, spec: &EnsembleSpec) -> f64 {
    spec.full_horizon().max(cfg.statistics.envelope_t_nondim)
}

pub fn corpus_cell(cfg: &ExperimentConfig) -> Cell {
    Cell {
        index: 0,
        alpha: cfg.physics.alpha,
        cutoff: cfg.physics.cutoff,
    }
}

pub fn summarize(
    cfg: &ExperimentConfig,
    ctx: &Context,
) -> Result<(Vec<SampleSummary>, Vec<fdnls_core::SpectralField>)> {
    let spec = spec(cfg)?;
    let levels = sorted_levels(&cfg.statistics.i_list);
    let mu = cell_measure(cfg, ctx, corpus_cell(cfg), Some(cfg.statistics.corpus))?;
    let corpus = mu.fields;
    if corpus.is_empty() {
        return Err(LabError::Usage("the stationary run kept no fields".into()));
    }
    let l = lattice(cfg.physics.dim, cfg.physics.cutoff)?;
    let prop = Propagator::new(l, cfg.flow_config(cfg.numerics.dt_nondim), &ctx.planner)?;
    let horizon = profile_horizon(cfg, &spec);
    let items: Vec<(usize, &fdnls_core::SpectralField)> = corpus.iter().enumerate().collect();
    let summaries = ctx.par_map(items, |(k, u0)| {
        ctx.unit(&format!("ensemble_sample{k:05}"), || {
            let profile = OrbitProfile::compute(u0, &prop, spec.s_prime, horizon, spec.max_steps)?;
            let mut members = Vec::with_capacity(levels.len());
            for &i in &levels {
                members.push(membership_i(&profile, &spec, i)?.member);
            }
            let level = levels.iter().zip(&members).find(|(_, m)| **m).map(|(i, _)| *i);
            let envelope = level.map(|i| envelope_ratios(&profile, i, 1.0, spec.k_tilde).max_ratio);
            Ok(SampleSummary {
                sample: k,
                l2_norm: profile.l2_norm,
                members,
                level,
                envelope,
            })
        })
    })?;
    Ok((summaries, corpus))
}

pub fn complement(summaries: &[SampleSummary], spec: &EnsembleSpec, levels: &[usize]) -> Result<ComplementTable> {
    let l2: Vec<f64> = summaries.iter().map(|s| s.l2_norm).collect();
    let members: Vec<Vec<bool>> = summaries.iter().map(|s| s.members.clone()).collect();
    Ok(complement_table(&l2, &members, spec, levels)?)
}

/// `C_env` is the largest calibration ratio times this factor. Without a
/// margin the largest of the verification ratios exceeds the largest
/// calibration ratio half of the time for exchangeable samples.
pub const CALIBRATION_MARGIN: f64 = 1.25;

/// Envelope constant fitted on even samples and checked on odd samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSplit {
    /// Largest ratio among calibration samples.
    pub fitted: f64,
    pub c_env: f64,
    pub worst: f64,
    pub calibrated: usize,
    pub verified: usize,
    pub violations: usize,
    /// Verification samples above the unpadded fit.
    pub above_fit: usize,
}

pub fn growth_split(summaries: &[SampleSummary]) -> GrowthSplit {
    let members: Vec<&SampleSummary> = summaries.iter().filter(|s| s.envelope.is_some()).collect();
    let (even, odd): (Vec<&&SampleSummary>, Vec<&&SampleSummary>) = members.iter().partition(|s| s.sample % 2 == 0);
    let fitted = even.iter().filter_map(|s| s.envelope).fold(0.0, f64::max);
    let c_env = CALIBRATION_MARGIN * fitted;
    let worst = odd.iter().filter_map(|s| s.envelope).fold(0.0, f64::max);
    let count = |c: f64| odd.iter().filter(|s| s.envelope.is_some_and(|r| r > c)).count();
    GrowthSplit {
        fitted,
        c_env,
        worst,
        calibrated: even.len(),
        verified: odd.len(),
        violations: count(c_env),
        above_fit: count(fitted),
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let spec = spec(cfg)?;
    let levels = sorted_levels(&cfg.statistics.i_list);
    let (summaries, corpus) = summarize(cfg, ctx)?;
    let mut out = Outcome::new(Kind::Ensemble);

    let mut table = Table::new(
        "complement",
        &[
            "check", "a_floor", "i", "samples", "failures", "fraction", "bound", "slope",
        ],
    );
    let main = complement(&summaries, &spec, &levels)?;
    let mut slopes = Vec::new();
    for &a in &cfg.statistics.a_floor_sweep {
        let t = complement(&summaries, &EnsembleSpec { a_floor: a, ..spec }, &levels)?;
        for (n, &i) in t.levels.iter().enumerate() {
            table.push(vec![
                "complement_decay".into(),
                num(a),
                i.to_string(),
                t.samples.to_string(),
                t.failures[n].to_string(),
                num(t.fractions[n]),
                num(t.bound(i, spec.k_tilde)),
                t.effective_slope().map(num).unwrap_or_default(),
            ]);
        }
        slopes.push((a, t.effective_slope()));
    }
    let target = -2.0 * spec.k_tilde + 1.0;
    let mut c = Check::hard("complement_decay", main.pass).target(target);
    if let Some(s) = main.effective_slope() {
        c = c.estimate(s);
    }
    let fractions: Vec<String> = main.fractions.iter().map(|f| format!("{f}")).collect();
    out.summary.checks.push(c.note(format!(
        "a = {}, {} samples, fractions [{}], monotone = {}, {}",
        spec.a_floor,
        main.samples,
        fractions.join(", "),
        main.monotone,
        if main.slope.is_some() {
            "fitted slope"
        } else if main.slope_bound.is_some() {
            "rule-of-three bound past the last failing level"
        } else {
            "no failures at any level"
        }
    )));
    if main.effective_slope().is_none() {
        out.summary
            .warnings
            .push("no sample fails any level; complement decay is at the resolution floor".into());
    }
    let known: Vec<f64> = slopes.iter().filter_map(|(_, s)| *s).collect();
    let spread = if known.len() == slopes.len() && !known.is_empty() {
        known.iter().copied().fold(f64::NEG_INFINITY, f64::max) - known.iter().copied().fold(f64::INFINITY, f64::min)
    } else if known.is_empty() {
        0.0
    } else {
        f64::INFINITY
    };
    out.summary.checks.push(
        Check::hard("complement_floor_sensitivity", spread < 0.5)
            .target(0.5)
            .estimate(spread)
            .note("slope spread over the a-floor sweep"),
    );

    let split = growth_split(&summaries);
    out.summary.checks.push(
        Check::hard("growth_envelope", split.verified > 0 && split.violations == 0)
            .target(split.c_env)
            .estimate(split.worst)
            .note(format!(
                "C_env = {} x {:.6} from {} even samples; {} of {} odd samples exceed it, {} exceed the unpadded fit",
                CALIBRATION_MARGIN, split.fitted, split.calibrated, split.violations, split.verified, split.above_fit
            )),
    );
    let worst_all = summaries.iter().filter_map(|s| s.envelope).fold(0.0, f64::max);
    out.summary.checks.push(
        Check::soft("growth_envelope_default", worst_all <= spec.c_env)
            .target(spec.c_env)
            .estimate(worst_all)
            .note("largest ratio against the default C_env = 2 c0"),
    );
    let mut growth = Table::new("growth", &["check", "sample", "level", "ratio", "role"]);
    for s in &summaries {
        if let (Some(i), Some(r)) = (s.level, s.envelope) {
            growth.push(vec![
                "growth_envelope".into(),
                s.sample.to_string(),
                i.to_string(),
                num(r),
                if s.sample % 2 == 0 { "calibrate" } else { "verify" }.into(),
            ]);
        }
    }

    if let Some(first) = summaries.iter().find(|s| s.level.is_some()) {
        let i = first.level.unwrap_or(1);
        let u0 = &corpus[first.sample];
        let mut props = Vec::new();
        for &n in cfg.physics.cutoff_list.iter().filter(|n| **n >= cfg.physics.cutoff) {
            let l = lattice(cfg.physics.dim, n)?;
            props.push(Propagator::new(
                l,
                cfg.flow_config(cfg.numerics.dt_nondim),
                &ctx.planner,
            )?);
        }
        if props.len() >= 2 {
            let refs: Vec<&Propagator> = props.iter().collect();
            let probe = ensemble_limit_probe(u0, &spec, i, &refs)?;
            out.summary
                .checks
                .push(Check::soft("ensemble_limit", probe.stabilized).note(format!(
                    "membership at cutoffs {:?}: {:?}",
                    probe.cutoffs, probe.members
                )));
        }
    }

    out.tables.extend([table, growth]);
    let lines = summaries
        .iter()
        .map(|s| serde_json::to_value(s).expect("summaries serialize"))
        .collect();
    out.jsonl.push(("ensemble".into(), lines));
    out.snapshots.push(("corpus".into(), corpus));
    Ok(out)
}
