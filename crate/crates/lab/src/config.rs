//! Experiment configuration files (TOML).
//!
//! Every key has a default, so a config only lists what it changes. Times
//! are nondimensional and their keys end in `_nondim`. Unknown keys are
//! rejected, and all offending keys are reported together.

use std::collections::BTreeSet;
use std::path::Path;

use fdnls_core::{DissipationParams, FlowConfig, NonlinearSubstep, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Flow,
    Sde,
    Kb,
    Inviscid,
    Ensemble,
    Verify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Flow => "flow",
            Kind::Sde => "sde",
            Kind::Kb => "kb",
            Kind::Inviscid => "inviscid",
            Kind::Ensemble => "ensemble",
            Kind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Strang,
    Lie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    PlaneWave,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Mass,
    PlaneWave,
    StrangOrder,
    Cordoba,
    Coercivity,
    Duality,
    GalerkinGap,
    Increment,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Mass,
        Suite::PlaneWave,
        Suite::StrangOrder,
        Suite::Cordoba,
        Suite::Coercivity,
        Suite::Duality,
        Suite::GalerkinGap,
        Suite::Increment,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub dim: usize,
    pub q: u32,
    /// Spectral cutoff `Λ`: modes with `|k|² <= Λ` are kept.
    pub cutoff: f64,
    /// Cutoffs swept by `kb`.
    pub cutoff_list: Vec<f64>,
    pub s: f64,
    pub s_prime: f64,
    pub k_tilde: f64,
    pub eta: f64,
    pub c_ds: f64,
    pub alpha: f64,
    pub alpha_list: Vec<f64>,
    /// `a_k = noise_amplitude · (1 + λ_k)^{-noise_decay}`.
    pub noise_amplitude: f64,
    pub noise_decay: f64,
    pub a_floor: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            dim: 1,
            q: 1,
            cutoff: 64.0,
            cutoff_list: vec![16.0, 64.0, 256.0],
            s: 2.0,
            s_prime: 1.9,
            k_tilde: 2.0,
            eta: 0.1,
            c_ds: 1.0,
            alpha: 0.1,
            alpha_list: vec![0.2, 0.1, 0.05],
            noise_amplitude: 1.0,
            noise_decay: 1.0,
            a_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub dt_nondim: f64,
    pub t_final_nondim: f64,
    pub horizon_nondim: f64,
    pub burn_in_nondim: f64,
    pub thin_nondim: f64,
    /// Spacing of recorded samples along `sde` paths.
    pub record_every_nondim: f64,
    /// Grid refinement for the nonlinearity; 0 picks `q + 1`.
    pub dealias_factor: usize,
    /// Points per axis for quadrature checks; 0 picks four times the
    /// dealiased minimum.
    pub quadrature_points: usize,
    pub scheme: SchemeName,
    /// `sde`: repeat the run at `dt/2` and compare the bias.
    pub dt_halving: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt_nondim: 1e-3,
            t_final_nondim: 10.0,
            horizon_nondim: 2e4,
            burn_in_nondim: 200.0,
            thin_nondim: 1.0,
            record_every_nondim: 0.1,
            dealias_factor: 0,
            quadrature_points: 0,
            scheme: SchemeName::Strang,
            dt_halving: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Statistics {
    pub paths: usize,
    pub batches: usize,
    pub bins: usize,
    pub j_max: usize,
    pub i_list: Vec<usize>,
    pub r_list: Vec<f64>,
    /// Samples drawn for the ensemble corpus.
    pub corpus: usize,
    pub a_floor_sweep: Vec<f64>,
    pub envelope_t_nondim: f64,
}

impl Default for Statistics {
    fn default() -> Self {
        Self {
            paths: 200,
            batches: 32,
            bins: 50,
            j_max: 8,
            i_list: vec![1, 2, 3, 4, 6, 8],
            r_list: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            corpus: 200,
            a_floor_sweep: vec![1e-4, 1e-3, 1e-2],
            envelope_t_nondim: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Initial {
    pub kind: InitialKind,
    /// Wavevector of a plane wave, one entry per dimension.
    pub mode: Vec<i64>,
    pub amplitude: f64,
    /// Random data: coefficients scale like `(1 + λ)^{-decay}`.
    pub decay: f64,
    pub real: bool,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            kind: InitialKind::Random,
            mode: vec![1],
            amplitude: 1.0,
            decay: 1.0,
            real: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Verify {
    pub suites: Vec<Suite>,
    /// Random fields per Córdoba cell and for the coercivity corpus.
    pub fields: usize,
    pub duality_fields: usize,
    pub gammas: Vec<f64>,
    pub q_list: Vec<u32>,
    /// Grid multiplier for re-checking Córdoba violations.
    pub refine_factor: usize,
    pub order_fields: usize,
    pub order_t_nondim: f64,
    pub order_dt_nondim: f64,
    pub gap_cutoffs: Vec<f64>,
    pub gap_fine_cutoff: f64,
    pub gap_fields: usize,
    pub gap_t_nondim: f64,
    /// Smooth corpus: data lie in `H^σ` for every `σ` below this value.
    pub data_regularity: f64,
}

impl Default for Verify {
    fn default() -> Self {
        Self {
            suites: vec![Suite::Cordoba, Suite::Coercivity, Suite::Duality],
            fields: 1000,
            duality_fields: 500,
            gammas: vec![0.25, 0.5, 1.0],
            q_list: vec![1, 2, 3],
            refine_factor: 2,
            order_fields: 20,
            order_t_nondim: 1.0,
            order_dt_nondim: 0.01,
            gap_cutoffs: vec![16.0, 36.0, 64.0, 144.0],
            gap_fine_cutoff: 1024.0,
            gap_fields: 10,
            gap_t_nondim: 1.0,
            data_regularity: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub statistics: Statistics,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub verify: Verify,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub reason: String,
}

impl ConfigIssue {
    fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            seed: 0,
            physics: Physics::default(),
            numerics: Numerics::default(),
            statistics: Statistics::default(),
            initial: Initial::default(),
            verify: Verify::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    /// Parses and validates; every unknown key, type error and violated
    /// constraint is collected before failing.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| LabError::Config(vec![ConfigIssue::new("<syntax>", e.message())]))?;
        let mut issues = Vec::new();
        unknown_keys(&table, &template(), "", &mut issues);
        if !table.contains_key("kind") {
            issues.push(ConfigIssue::new(
                "kind",
                "missing; one of flow, sde, kb, inviscid, ensemble, verify",
            ));
        }
        if !issues.is_empty() {
            return Err(LabError::Config(issues));
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            LabError::Config(vec![ConfigIssue::new("<value>", e.message().to_string())])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(issues))
        }
    }

    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut check = |ok: bool, key: &str, reason: &str| {
            if !ok {
                out.push(ConfigIssue::new(key, reason));
            }
        };
        let p = &self.physics;
        let n = &self.numerics;
        let st = &self.statistics;
        let kind = self.kind;
        let stochastic = matches!(kind, Kind::Sde | Kind::Kb | Kind::Inviscid | Kind::Ensemble);

        check(self.seed <= i64::MAX as u64, "seed", "must fit in 63 bits");
        check((1..=3).contains(&p.dim), "physics.dim", "must be 1, 2 or 3");
        check(p.q >= 1, "physics.q", "must be at least 1");
        check(
            p.cutoff.is_finite() && p.cutoff >= 1.0,
            "physics.cutoff",
            "must be finite and >= 1",
        );
        check(p.s.is_finite() && p.s > 1.0, "physics.s", "must exceed 1");
        check(p.eta > 0.0 && p.eta < p.s, "physics.eta", "must lie in (0, s)");
        check(p.k_tilde > 0.0, "physics.k_tilde", "must be positive");
        check(
            p.c_ds.is_finite() && p.c_ds >= 0.0,
            "physics.c_ds",
            "must be finite and nonnegative",
        );
        check(
            p.s_prime.is_finite() && p.s_prime <= p.s - p.eta + 1e-12,
            "physics.s_prime",
            "must not exceed s - eta",
        );
        check((0.0..1.0).contains(&p.alpha), "physics.alpha", "must lie in [0, 1)");
        check(
            p.noise_amplitude.is_finite() && p.noise_amplitude >= 0.0,
            "physics.noise_amplitude",
            "must be finite and nonnegative",
        );
        check(p.noise_decay.is_finite(), "physics.noise_decay", "must be finite");
        check(p.a_floor > 0.0, "physics.a_floor", "must be positive");
        check(
            n.dt_nondim > 0.0 && n.dt_nondim.is_finite(),
            "numerics.dt_nondim",
            "must be positive",
        );
        check(n.t_final_nondim > 0.0, "numerics.t_final_nondim", "must be positive");
        check(
            n.dealias_factor == 0 || n.dealias_factor as u32 > p.q,
            "numerics.dealias_factor",
            "must be 0 (automatic) or at least q + 1",
        );
        check(st.batches >= 2, "statistics.batches", "must be at least 2");
        if p.dim != self.initial.mode.len() && self.initial.kind == InitialKind::PlaneWave {
            check(false, "initial.mode", "needs one entry per dimension");
        }
        check(
            self.initial.amplitude.is_finite(),
            "initial.amplitude",
            "must be finite",
        );
        check(self.initial.decay.is_finite(), "initial.decay", "must be finite");
        if stochastic {
            check(
                p.alpha_list.iter().all(|a| *a > 0.0 && *a < 1.0),
                "physics.alpha_list",
                "entries must lie in (0, 1)",
            );
        }
        match kind {
            Kind::Sde => {
                check(st.paths >= 2, "statistics.paths", "must be at least 2");
                check(
                    n.record_every_nondim >= n.dt_nondim,
                    "numerics.record_every_nondim",
                    "must be at least dt_nondim",
                );
            }
            Kind::Kb | Kind::Inviscid | Kind::Ensemble => {
                check(n.thin_nondim > 0.0, "numerics.thin_nondim", "must be positive");
                check(
                    n.burn_in_nondim >= 0.0,
                    "numerics.burn_in_nondim",
                    "must be nonnegative",
                );
                check(
                    n.horizon_nondim >= n.burn_in_nondim + 10.0 * n.thin_nondim,
                    "numerics.horizon_nondim",
                    "must be at least burn_in + 10 * thin",
                );
                check(
                    n.thin_nondim >= n.dt_nondim,
                    "numerics.thin_nondim",
                    "must be at least dt_nondim",
                );
            }
            _ => {}
        }
        match kind {
            Kind::Kb => {
                check(!p.cutoff_list.is_empty(), "physics.cutoff_list", "must not be empty");
                check(!p.alpha_list.is_empty(), "physics.alpha_list", "must not be empty");
                check(
                    p.cutoff_list.iter().all(|c| c.is_finite() && *c >= 1.0),
                    "physics.cutoff_list",
                    "entries must be finite and >= 1",
                );
                check(st.bins >= 1, "statistics.bins", "must be positive");
                check(
                    !st.r_list.is_empty() && st.r_list.iter().all(|r| *r > 0.0),
                    "statistics.r_list",
                    "needs positive radii",
                );
            }
            Kind::Inviscid => {
                check(
                    p.alpha_list.len() >= 3,
                    "physics.alpha_list",
                    "needs at least 3 couplings",
                );
            }
            Kind::Ensemble => {
                check(st.j_max >= 1, "statistics.j_max", "must be at least 1");
                check(
                    !st.i_list.is_empty() && st.i_list.iter().all(|i| *i >= 1),
                    "statistics.i_list",
                    "needs levels >= 1",
                );
                check(st.corpus >= 50, "statistics.corpus", "must be at least 50");
                check(
                    st.a_floor_sweep.iter().all(|a| *a > 0.0),
                    "statistics.a_floor_sweep",
                    "entries must be positive",
                );
                check(
                    st.envelope_t_nondim > 0.0,
                    "statistics.envelope_t_nondim",
                    "must be positive",
                );
                check(p.alpha > 0.0, "physics.alpha", "must be positive to sample a corpus");
            }
            Kind::Verify => {
                let v = &self.verify;
                check(!v.suites.is_empty(), "verify.suites", "must not be empty");
                check(v.fields >= 1, "verify.fields", "must be positive");
                check(
                    v.gammas.iter().all(|g| *g > 0.0 && *g <= 1.0),
                    "verify.gammas",
                    "entries must lie in (0, 1]",
                );
                check(
                    v.q_list.iter().all(|q| *q >= 1),
                    "verify.q_list",
                    "entries must be >= 1",
                );
                check(v.refine_factor >= 2, "verify.refine_factor", "must be at least 2");
                check(v.order_fields >= 1, "verify.order_fields", "must be positive");
                check(
                    v.gap_cutoffs.len() >= 2,
                    "verify.gap_cutoffs",
                    "needs at least two cutoffs",
                );
                check(
                    v.gap_cutoffs.iter().all(|c| *c >= 1.0 && *c < v.gap_fine_cutoff),
                    "verify.gap_cutoffs",
                    "entries must lie in [1, gap_fine_cutoff)",
                );
                check(v.gap_fields >= 1, "verify.gap_fields", "must be positive");
                check(
                    v.data_regularity > p.s_prime,
                    "verify.data_regularity",
                    "must exceed s_prime",
                );
            }
            _ => {}
        }
        out
    }

    pub fn flow_config(&self, dt: f64) -> FlowConfig {
        let mut f = FlowConfig::new(self.physics.q, dt);
        f.scheme = match self.numerics.scheme {
            SchemeName::Strang => Scheme::Strang,
            SchemeName::Lie => Scheme::Lie,
        };
        f.substep = NonlinearSubstep::Collocation;
        if self.numerics.dealias_factor > 0 {
            f.dealias_factor = Some(self.numerics.dealias_factor);
        }
        f
    }

    pub fn dissipation(&self) -> DissipationParams {
        let p = &self.physics;
        let mut d = DissipationParams::new(p.dim, p.q, p.s);
        d.k_tilde = p.k_tilde;
        d.eta = p.eta;
        d.c_ds = p.c_ds;
        d
    }
}

fn template() -> toml::Table {
    toml::Table::try_from(ExperimentConfig::new(Kind::Flow)).expect("template serializes")
}

fn unknown_keys(table: &toml::Table, template: &toml::Table, prefix: &str, out: &mut Vec<ConfigIssue>) {
    let known: BTreeSet<&String> = template.keys().collect();
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        if !known.contains(key) {
            out.push(ConfigIssue::new(path, "unknown key"));
            continue;
        }
        if let (toml::Value::Table(sub), Some(toml::Value::Table(tsub))) = (value, template.get(key)) {
            unknown_keys(sub, tsub, &path, out);
        }
    }
}
