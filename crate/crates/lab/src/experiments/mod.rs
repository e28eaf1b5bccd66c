//! One runner per experiment kind. Each returns an [`Outcome`]; writing it
//! to disk is the job of [`crate::runner`].

use std::path::PathBuf;
use std::sync::Arc;

use fdnls_core::stochastic::{path_rng, NoiseProfile, SdeConfig, SdeIntegrator};
use fdnls_core::{Lattice, SpectralField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{ExperimentConfig, InitialKind, Kind};
use crate::error::{io_err, LabError, Result};
use crate::fft::RustFftPlanner;
use crate::io::{read_json, write_json, Summary, Table};

pub mod ensemble;
pub mod flow;
pub mod inviscid;
pub mod kb;
pub mod sde;
pub mod verify;

/// Tables, checks and side files produced by one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub jsonl: Vec<(String, Vec<serde_json::Value>)>,
    pub snapshots: Vec<(String, Vec<SpectralField>)>,
}

impl Outcome {
    pub fn new(kind: Kind) -> Self {
        Self {
            summary: Summary::new(kind.name()),
            tables: Vec::new(),
            jsonl: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Worker pool, FFT planner and the resume cache of one run.
pub struct Context {
    pub planner: RustFftPlanner,
    pool: rayon::ThreadPool,
    units: Option<PathBuf>,
}

impl Context {
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| LabError::Usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self {
            planner: RustFftPlanner::new(),
            pool,
            units: None,
        })
    }

    /// Finished work units are stored under `dir` and reused on rerun.
    pub fn with_units(mut self, dir: PathBuf) -> Self {
        self.units = Some(dir);
        self
    }

    /// Order-preserving parallel map; the result does not depend on the
    /// number of workers.
    pub fn par_map<T, R, F>(&self, items: Vec<T>, f: F) -> Result<Vec<R>>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> Result<R> + Sync + Send,
    {
        self.pool.install(|| items.into_par_iter().map(f).collect())
    }

    pub fn unit<T, F>(&self, name: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let Some(dir) = &self.units else {
            return compute();
        };
        let path = dir.join(format!("{name}.json"));
        if path.exists() {
            return read_json(&path);
        }
        let value = compute()?;
        let tmp = dir.join(format!(".{name}.json.tmp"));
        write_json(&tmp, &value)?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(value)
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.kind {
        Kind::Flow => flow::run(cfg, ctx),
        Kind::Sde => sde::run(cfg, ctx),
        Kind::Kb => kb::run(cfg, ctx),
        Kind::Inviscid => inviscid::run(cfg, ctx),
        Kind::Ensemble => ensemble::run(cfg, ctx),
        Kind::Verify => verify::run(cfg, ctx),
    }
}

pub fn lattice(dim: usize, cutoff: f64) -> Result<Arc<Lattice>> {
    Ok(Arc::new(Lattice::new(dim, cutoff)?))
}

pub fn noise(cfg: &ExperimentConfig, l: &Lattice) -> NoiseProfile {
    NoiseProfile::power_law(l, cfg.physics.noise_amplitude, cfg.physics.noise_decay)
}

pub fn sde_config(cfg: &ExperimentConfig, l: &Lattice, alpha: f64, dt: f64) -> SdeConfig {
    SdeConfig {
        alpha,
        dissipation: cfg.dissipation(),
        noise: noise(cfg, l),
        flow: cfg.flow_config(dt),
    }
}

pub fn integrator(
    cfg: &ExperimentConfig,
    ctx: &Context,
    l: &Arc<Lattice>,
    alpha: f64,
    dt: f64,
) -> Result<SdeIntegrator> {
    Ok(SdeIntegrator::new(
        l.clone(),
        sde_config(cfg, l, alpha, dt),
        &ctx.planner,
    )?)
}

pub fn wavevector(mode: &[i64]) -> [i32; 3] {
    let mut k = [0; 3];
    for (slot, m) in k.iter_mut().zip(mode) {
        *slot = *m as i32;
    }
    k
}

/// Initial datum of work unit `unit`, drawn from its own stream.
pub fn initial_field(cfg: &ExperimentConfig, l: &Arc<Lattice>, unit: u64) -> Result<SpectralField> {
    let init = &cfg.initial;
    Ok(match init.kind {
        InitialKind::Zero => SpectralField::zeros(l.clone()),
        InitialKind::PlaneWave => {
            SpectralField::plane_wave(l.clone(), wavevector(&init.mode), Complex64::new(init.amplitude, 0.0))?
        }
        InitialKind::Random => {
            let mut rng = path_rng(cfg.seed, unit);
            SpectralField::random(l.clone(), init.decay, init.amplitude, init.real, &mut rng)
        }
    })
}

/// `(estimate - target) / se`, zero when both sides agree exactly.
pub fn z_score(estimate: f64, target: f64, se: f64) -> f64 {
    let d = estimate - target;
    if se > 0.0 {
        d / se
    } else if d.abs() <= 1e-14 * (1.0 + target.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
