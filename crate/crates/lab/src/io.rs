//! Artifact formats: CSV tables, JSON manifest and summary, JSONL
//! trajectories and binary field snapshots.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fdnls_core::stochastic::TrajectorySample;
use fdnls_core::{Lattice, SpectralField};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{format_err, io_err, Result};

pub const TOOL: &str = "fdnls";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A result table; values are stored already formatted so the bytes on disk
/// are a pure function of the computed numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| format_err(&path, e))?;
        w.write_record(&self.header).map_err(|e| format_err(&path, e))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| format_err(&path, e))?;
        }
        w.flush().map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
        let header = r
            .headers()
            .map_err(|e| format_err(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(
                rec.map_err(|e| format_err(path, e))?
                    .iter()
                    .map(str::to_string)
                    .collect(),
            );
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self { name, header, rows })
    }
}

/// Formats a float so it parses back to the same bits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:e}")
    }
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One pass/fail row of a run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub target: Option<f64>,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub pass: bool,
    /// Hard checks decide the exit status; soft ones only warn.
    pub hard: bool,
    pub note: String,
}

impl Check {
    pub fn hard(check: impl Into<String>, pass: bool) -> Self {
        Self {
            check: check.into(),
            target: None,
            estimate: None,
            se: None,
            pass,
            hard: true,
            note: String::new(),
        }
    }

    pub fn soft(check: impl Into<String>, pass: bool) -> Self {
        Self {
            hard: false,
            ..Self::hard(check, pass)
        }
    }

    pub fn target(mut self, x: f64) -> Self {
        self.target = finite(x);
        self
    }

    pub fn estimate(mut self, x: f64) -> Self {
        self.estimate = finite(x);
        self
    }

    pub fn se(mut self, x: f64) -> Self {
        self.se = finite(x);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn new(kind: &str) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            kind: kind.into(),
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.hard && !c.pass)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// 0 when every hard check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub seed: u64,
    /// How per-path random streams derive from the seed.
    pub streams: String,
    pub workers: usize,
    pub config: String,
    /// Work units finished so far; a rerun into the same directory skips them.
    pub completed: Vec<String>,
    pub outputs: Vec<String>,
    pub finished: bool,
}

pub const STREAMS: &str = "ChaCha20 seed_from_u64(seed), set_stream(unit index)";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// One trajectory per JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_id: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
}

impl From<&TrajectorySample> for PathRecord {
    fn from(s: &TrajectorySample) -> Self {
        Self {
            path_id: s.path_id,
            seed: s.seed,
            times: s.times.clone(),
            series: s.series.clone(),
        }
    }
}

impl PathRecord {
    pub fn into_sample(self) -> TrajectorySample {
        let mut s = TrajectorySample::new(self.path_id, self.seed);
        s.times = self.times;
        s.series = self.series;
        s
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| format_err(path, e))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format_err(path, e))?);
    }
    Ok(out)
}

const SNAP_MAGIC: &[u8; 8] = b"FDNLSNAP";
const SNAP_VERSION: u32 = 1;

/// Appends one snapshot: magic, format version, `d`, `Λ`, mode count, then
/// interleaved `re, im` coefficients, all little endian.
pub fn encode_snapshot(u: &SpectralField, out: &mut Vec<u8>) {
    let l = u.lattice();
    out.extend_from_slice(SNAP_MAGIC);
    out.extend_from_slice(&SNAP_VERSION.to_le_bytes());
    out.extend_from_slice(&(l.dim() as u32).to_le_bytes());
    out.extend_from_slice(&l.cutoff().to_le_bytes());
    out.extend_from_slice(&(l.mode_count() as u64).to_le_bytes());
    for c in u.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
}

pub fn write_snapshots(path: &Path, fields: &[SpectralField]) -> Result<()> {
    let mut buf = Vec::new();
    for u in fields {
        encode_snapshot(u, &mut buf);
    }
    std::fs::write(path, buf).map_err(io_err(path))
}

pub fn read_snapshots(path: &Path) -> Result<Vec<SpectralField>> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(io_err(path))?
        .read_to_end(&mut bytes)
        .map_err(io_err(path))?;
    decode_snapshots(&bytes).map_err(|m| format_err(path, m))
}

pub fn decode_snapshots(bytes: &[u8]) -> std::result::Result<Vec<SpectralField>, String> {
    let mut out = Vec::new();
    let mut pos = 0;
    let mut lattice: Option<Arc<Lattice>> = None;
    let take = |pos: &mut usize, n: usize| -> std::result::Result<&[u8], String> {
        let s = bytes.get(*pos..*pos + n).ok_or("truncated snapshot")?;
        *pos += n;
        Ok(s)
    };
    while pos < bytes.len() {
        if take(&mut pos, 8)? != SNAP_MAGIC {
            return Err("bad snapshot magic".into());
        }
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != SNAP_VERSION {
            return Err(format!("unsupported snapshot version {version}"));
        }
        let dim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let cutoff = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let modes = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let l = match &lattice {
            Some(l) if l.dim() == dim && l.cutoff() == cutoff => l.clone(),
            _ => {
                let l = Arc::new(Lattice::new(dim, cutoff).map_err(|e| e.to_string())?);
                lattice = Some(l.clone());
                l
            }
        };
        if l.mode_count() != modes {
            return Err(format!(
                "mode count {modes} does not match the lattice ({})",
                l.mode_count()
            ));
        }
        let mut coeffs = Vec::with_capacity(modes);
        for _ in 0..modes {
            let re = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let im = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            coeffs.push(Complex64::new(re, im));
        }
        out.push(SpectralField::from_coeffs(l, coeffs).map_err(|e| e.to_string())?);
    }
    Ok(out)
}
