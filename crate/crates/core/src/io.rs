//! CSV/JSON persistence with provenance headers.
//!
//! CSV files start with `#`-prefixed header lines (version, config hash,
//! model hash, then one `# run:` line carrying the timestamp and wall time),
//! followed by a header row. Only the `# run:` line differs between reruns of
//! the same configuration.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::MatchReport;
use crate::classical::ClassicalScan;
use crate::error::{Error, Result};
use crate::quantization::Lattice;
use crate::spectra::{ModeTag, SpectrumResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Hash of the full experiment configuration.
    pub config_hash: String,
    /// Hash of the surface and observable alone; `match` compares these.
    pub model_hash: String,
    /// Seconds since the Unix epoch at write time.
    pub timestamp: u64,
    pub wall_time_s: f64,
}

impl Provenance {
    pub fn new(config_hash: &str, model_hash: &str, wall_time_s: f64) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            version: VERSION.to_string(),
            config_hash: config_hash.to_string(),
            model_hash: model_hash.to_string(),
            timestamp,
            wall_time_s,
        }
    }
}

/// A header row plus string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Shortest round-trip formatting; deterministic across runs.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv(path: &Path, prov: &Provenance, table: &Table) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    writeln!(buf, "# toruslab {}", prov.version).ok();
    writeln!(buf, "# config_hash: {}", prov.config_hash).ok();
    writeln!(buf, "# model_hash: {}", prov.model_hash).ok();
    writeln!(buf, "# run: timestamp={} wall_time_s={:.3}", prov.timestamp, prov.wall_time_s).ok();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(&table.header).map_err(|e| io_err(path, e))?;
        for r in &table.rows {
            w.write_record(r).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Header lines and rows of a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Provenance, Table)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut prov = Provenance {
        version: String::new(),
        config_hash: String::new(),
        model_hash: String::new(),
        timestamp: 0,
        wall_time_s: 0.0,
    };
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some(v) = rest.strip_prefix("toruslab ") {
                prov.version = v.to_string();
            } else if let Some(v) = rest.strip_prefix("config_hash: ") {
                prov.config_hash = v.to_string();
            } else if let Some(v) = rest.strip_prefix("model_hash: ") {
                prov.model_hash = v.to_string();
            } else if let Some(v) = rest.strip_prefix("run: ") {
                for kv in v.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("timestamp", t)) => prov.timestamp = t.parse().unwrap_or(0),
                        Some(("wall_time_s", t)) => prov.wall_time_s = t.parse().unwrap_or(0.0),
                        _ => {}
                    }
                }
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(|e| io_err(path, e))?;
    Ok((prov, Table { header, rows }))
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    provenance: Provenance,
    data: T,
}

pub fn write_json<T: Serialize>(path: &Path, prov: &Provenance, data: &T) -> Result<()> {
    let env = Envelope {
        provenance: prov.clone(),
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| io_err(path, e))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(Provenance, T)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let env: Envelope<T> = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    Ok((env.provenance, env.data))
}

/// `a, omega, class, m, n, height, q_avg, qinf_lo, qinf_hi, T`.
pub fn scan_table(scan: &ClassicalScan) -> Table {
    let mut t = Table::new(&["a", "omega", "class", "m", "n", "height", "q_avg", "qinf_lo", "qinf_hi", "T"]);
    for r in &scan.rows {
        let (m, n) = match r.class {
            crate::classical::RotationClass::Rational { m, n, .. } => (Some(m), Some(n)),
            _ => (None, None),
        };
        t.push(vec![
            num(r.a),
            num(r.omega),
            r.class.label().to_string(),
            opt(m),
            opt(n),
            opt(r.class.height()),
            num(r.q_avg),
            num(r.q_inf.lo),
            num(r.q_inf.hi),
            num(r.horizon),
        ]);
    }
    t
}

/// `k1, k2, E, F, Re z, Im z, class, height`.
pub fn lattice_table(lat: &Lattice<f64>) -> Table {
    let mut t = Table::new(&["k1", "k2", "E", "F", "Re z", "Im z", "class", "height"]);
    for z in &lat.entries {
        t.push(vec![
            z.k1.to_string(),
            z.k2.to_string(),
            num(z.e),
            num(z.f),
            num(z.z.re),
            num(z.z.im),
            z.class.label().to_string(),
            opt(z.class.height()),
        ]);
    }
    t
}

/// `re, im, mode, residual`; `mode` is empty for coupled 2d spectra.
/// Rotational spectra are written with both signs of `m`.
pub fn spectrum_table(spec: &SpectrumResult) -> Table {
    let mut t = Table::new(&["re", "im", "mode", "residual"]);
    for e in spec.expanded() {
        let mode = match e.mode {
            ModeTag::Mode { m } => m.to_string(),
            ModeTag::Coupled2d { .. } => String::new(),
        };
        t.push(vec![num(e.value.re), num(e.value.im), mode, num(e.residual)]);
    }
    t
}

/// `re, im, k1, k2, dist`.
pub fn match_table(rep: &MatchReport) -> Table {
    let mut t = Table::new(&["re", "im", "k1", "k2", "dist"]);
    for p in &rep.pairs {
        t.push(vec![
            num(p.eigenvalue.re),
            num(p.eigenvalue.im),
            p.k1.to_string(),
            p.k2.to_string(),
            num(p.distance),
        ]);
    }
    t
}
