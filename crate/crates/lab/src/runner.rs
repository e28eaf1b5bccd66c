//! Run directories: manifest, resume, replay and aggregate reports.
//!
//! Layout of a run directory:
//!
//! ```text
//! manifest.json      tool, version, seed, config, progress
//! summary.json       checks and warnings
//! results/*.csv      tables
//! *.jsonl            per-path or per-sample records
//! *.snap             binary field snapshots
//! units/             finished work units, reused on rerun
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_err, LabError, Result};
use crate::experiments::{self, Context};
use crate::io::{read_json, write_json, write_jsonl, write_snapshots, Manifest, Summary, STREAMS, TOOL, VERSION};

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";
pub const RESULTS: &str = "results";
pub const UNITS: &str = "units";
pub const REPORT: &str = "report.json";

fn listing(dir: &Path) -> Result<Vec<String>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.starts_with('.') {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Runs `cfg` into `out`. A directory holding an unfinished or finished run
/// of the same config and version is resumed; any other manifest is refused.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<Summary> {
    cfg.validate()?;
    let config = cfg.to_toml();
    let manifest_path = out.join(MANIFEST);
    if manifest_path.exists() {
        let old: Manifest = read_json(&manifest_path)?;
        if old.version != VERSION {
            return Err(LabError::Version {
                found: old.version,
                expected: VERSION.into(),
            });
        }
        if old.config != config {
            return Err(LabError::Usage(format!(
                "{} holds a run with a different configuration; choose another --out",
                out.display()
            )));
        }
    }
    let units = out.join(UNITS);
    fs::create_dir_all(&units).map_err(io_err(&units))?;
    let mut manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        kind: cfg.kind.name().into(),
        seed: cfg.seed,
        streams: STREAMS.into(),
        workers,
        config,
        completed: listing(&units)?,
        outputs: Vec::new(),
        finished: false,
    };
    write_json(&manifest_path, &manifest)?;

    let ctx = Context::new(workers)?.with_units(units.clone());
    let outcome = experiments::run(cfg, &ctx)?;

    let results = out.join(RESULTS);
    fs::create_dir_all(&results).map_err(io_err(&results))?;
    let mut outputs = Vec::new();
    for t in &outcome.tables {
        t.write(&results)?;
        outputs.push(format!("{RESULTS}/{}.csv", t.name));
    }
    for (name, lines) in &outcome.jsonl {
        write_jsonl(&out.join(format!("{name}.jsonl")), lines)?;
        outputs.push(format!("{name}.jsonl"));
    }
    for (name, fields) in &outcome.snapshots {
        write_snapshots(&out.join(format!("{name}.snap")), fields)?;
        outputs.push(format!("{name}.snap"));
    }
    write_json(&out.join(SUMMARY), &outcome.summary)?;
    outputs.push(SUMMARY.into());

    manifest.completed = listing(&units)?;
    manifest.outputs = outputs;
    manifest.finished = true;
    write_json(&manifest_path, &manifest)?;
    Ok(outcome.summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub summary: Summary,
    /// Outputs whose bytes differ from the original run.
    pub mismatches: Vec<String>,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Reruns the experiment recorded in `manifest` into the fresh directory
/// `out` and compares the tables and summary byte for byte.
pub fn replay(manifest: &Path, out: &Path, workers: usize) -> Result<Replay> {
    let m: Manifest = read_json(manifest)?;
    if m.version != VERSION {
        return Err(LabError::Version {
            found: m.version,
            expected: VERSION.into(),
        });
    }
    if out.exists() && !listing(out)?.is_empty() {
        return Err(LabError::Usage(format!("replay target {} is not empty", out.display())));
    }
    let cfg = ExperimentConfig::parse(&m.config)?;
    let summary = run_experiment(&cfg, out, workers)?;
    let original = manifest.parent().unwrap_or(Path::new("."));
    let mut names: Vec<String> = listing(&original.join(RESULTS))?
        .into_iter()
        .map(|n| format!("{RESULTS}/{n}"))
        .collect();
    names.push(SUMMARY.into());
    let mut mismatches = Vec::new();
    for name in names {
        let a = fs::read(original.join(&name)).ok();
        let b = fs::read(out.join(&name)).ok();
        if a.is_none() || a != b {
            mismatches.push(name);
        }
    }
    Ok(Replay { summary, mismatches })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub dir: PathBuf,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<RunEntry>,
    pub passed: bool,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join(SUMMARY).is_file() {
        out.push(dir.to_path_buf());
    }
    for name in listing(dir)? {
        let p = dir.join(&name);
        if p.is_dir() && name != UNITS && name != RESULTS {
            collect(&p, out)?;
        }
    }
    Ok(())
}

/// Gathers every `summary.json` under `dir` into `dir/report.json`.
pub fn report(dir: &Path) -> Result<Report> {
    let mut dirs = Vec::new();
    collect(dir, &mut dirs)?;
    if dirs.is_empty() {
        return Err(LabError::Usage(format!("no run summaries under {}", dir.display())));
    }
    let mut runs = Vec::new();
    for d in dirs {
        let summary: Summary = read_json(&d.join(SUMMARY))?;
        let rel = d.strip_prefix(dir).unwrap_or(&d).to_path_buf();
        runs.push(RunEntry { dir: rel, summary });
    }
    let passed = runs.iter().all(|r| r.summary.passed());
    let report = Report { runs, passed };
    write_json(&dir.join(REPORT), &report)?;
    Ok(report)
}
