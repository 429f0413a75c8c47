//! Plain-text float formats for images and sinograms, a 16-bit PGM preview,
//! per-iteration CSV reports and JSON run manifests.
//!
//! Float files hold one value per line in `{:.16e}` notation (17 significant
//! digits), which round-trips every `f64` exactly. Lines starting with `#` are
//! comments and may appear anywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::krylov::IterationRecord;
use crate::projector::{Image, Sinogram};

pub const IMAGE_MAGIC: &str = "DPCT-IMAGE-F64";
pub const SINOGRAM_MAGIC: &str = "DPCT-SINOGRAM-F64";
pub const SINOGRAM_ORDERING: &str = "ordering=angle-major";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(path: &Path, item: Option<(usize, &str)>, what: &str) -> Result<T> {
    let (line, text) = item.ok_or_else(|| format_err(path, format!("missing {what}")))?;
    text.parse()
        .map_err(|_| format_err(path, format!("line {line}: cannot read {what} from '{text}'")))
}

fn parse_values<'a>(
    path: &Path,
    lines: impl Iterator<Item = (usize, &'a str)>,
    expected: usize,
) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(expected);
    for (line, text) in lines {
        let v: f64 = text
            .parse()
            .map_err(|_| format_err(path, format!("line {line}: '{text}' is not a number")))?;
        values.push(v);
    }
    if values.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        let _ = writeln!(out, "{v:.16e}");
    }
}

/// Serializes an image: magic, `n_x`, `n_y`, then the column-major values.
pub fn format_image(img: &Image, run_id: Option<&str>) -> String {
    let mut out = String::with_capacity(24 * img.values().len() + 64);
    let _ = writeln!(out, "{IMAGE_MAGIC}\n{}\n{}", img.nx(), img.ny());
    if let Some(id) = run_id {
        let _ = writeln!(out, "# run_id {id}");
    }
    push_values(&mut out, img.values());
    out
}

pub fn write_image(path: &Path, img: &Image, run_id: Option<&str>) -> Result<()> {
    write_bytes(path, format_image(img, run_id).as_bytes())
}

pub fn read_image(path: &Path) -> Result<Image> {
    let text = read_text(path)?;
    let mut lines = content_lines(&text);
    match lines.next() {
        Some((_, m)) if m == IMAGE_MAGIC => {}
        _ => return Err(format_err(path, format!("not an image file (expected '{IMAGE_MAGIC}')"))),
    }
    let nx: usize = parse_field(path, lines.next(), "n_x")?;
    let ny: usize = parse_field(path, lines.next(), "n_y")?;
    let values = parse_values(path, lines, nx * ny)?;
    Image::new(nx, ny, values).map_err(|e| format_err(path, e.to_string()))
}

/// A sinogram with its detector spacing, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SinogramFile {
    pub sinogram: Sinogram,
    pub spacing: f64,
}

/// Serializes a sinogram: magic, `k`, `l`, `h`, the ordering tag, then values.
pub fn format_sinogram(sino: &Sinogram, spacing: f64, run_id: Option<&str>) -> String {
    let mut out = String::with_capacity(24 * sino.values().len() + 96);
    let _ = writeln!(
        out,
        "{SINOGRAM_MAGIC}\n{}\n{}\n{spacing:.16e}\n{SINOGRAM_ORDERING}",
        sino.detectors(),
        sino.num_angles()
    );
    if let Some(id) = run_id {
        let _ = writeln!(out, "# run_id {id}");
    }
    push_values(&mut out, sino.values());
    out
}

pub fn write_sinogram(path: &Path, sino: &Sinogram, spacing: f64, run_id: Option<&str>) -> Result<()> {
    write_bytes(path, format_sinogram(sino, spacing, run_id).as_bytes())
}

pub fn read_sinogram(path: &Path) -> Result<SinogramFile> {
    let text = read_text(path)?;
    let mut lines = content_lines(&text);
    match lines.next() {
        Some((_, m)) if m == SINOGRAM_MAGIC => {}
        _ => {
            return Err(format_err(
                path,
                format!("not a sinogram file (expected '{SINOGRAM_MAGIC}')"),
            ))
        }
    }
    let k: usize = parse_field(path, lines.next(), "detector count k")?;
    let l: usize = parse_field(path, lines.next(), "angle count l")?;
    let spacing: f64 = parse_field(path, lines.next(), "detector spacing h")?;
    match lines.next() {
        Some((_, o)) if o == SINOGRAM_ORDERING => {}
        Some((line, o)) => {
            return Err(format_err(
                path,
                format!("line {line}: unsupported ordering '{o}'"),
            ))
        }
        None => return Err(format_err(path, "missing ordering line")),
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(format_err(path, format!("detector spacing {spacing} is not positive")));
    }
    let values = parse_values(path, lines, k * l)?;
    let sinogram = Sinogram::new(k, l, values).map_err(|e| format_err(path, e.to_string()))?;
    Ok(SinogramFile { sinogram, spacing })
}

/// Binary 16-bit PGM, top row first. Values are divided by the maximum;
/// anything at or below zero is black.
pub fn format_pgm(img: &Image) -> Vec<u8> {
    let (nx, ny) = (img.nx(), img.ny());
    let max = img.values().iter().copied().fold(0.0_f64, f64::max);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    out.reserve(2 * nx * ny);
    for row in 0..ny {
        for col in 0..nx {
            let v = img.get(row, col);
            let level = if max > 0.0 && v > 0.0 {
                (v / max * 65535.0).round().min(65535.0) as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

pub fn write_pgm(path: &Path, img: &Image) -> Result<()> {
    write_bytes(path, &format_pgm(img))
}

/// CSV with header `iter,phi0,phi_lambda,lambda,rel_error`; the last cell is
/// empty when no ground truth was supplied.
pub fn format_report_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iter,phi0,phi_lambda,lambda,rel_error\n");
    for r in records {
        let _ = write!(out, "{},{:.16e},{:.16e},{:.16e},", r.iter, r.phi0, r.phi_lambda, r.lambda);
        if let Some(e) = r.rel_error {
            let _ = write!(out, "{e:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_report_csv(path: &Path, records: &[IterationRecord]) -> Result<()> {
    write_bytes(path, format_report_csv(records).as_bytes())
}

pub fn read_report_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "iter,phi0,phi_lambda,lambda,rel_error" => {}
        _ => return Err(format_err(path, "missing report header")),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(format_err(path, format!("line {}: expected 5 cells", i + 1)));
        }
        let bad = |what: &str| format_err(path, format!("line {}: bad {what}", i + 1));
        records.push(IterationRecord {
            iter: cells[0].parse().map_err(|_| bad("iter"))?,
            phi0: cells[1].parse().map_err(|_| bad("phi0"))?,
            phi_lambda: cells[2].parse().map_err(|_| bad("phi_lambda"))?,
            lambda: cells[3].parse().map_err(|_| bad("lambda"))?,
            rel_error: match cells[4].trim() {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("rel_error"))?),
            },
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the command name and resolved configuration.
    pub run_id: String,
    pub command: String,
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub timings: Vec<PhaseTiming>,
    pub outputs: Vec<PathBuf>,
    /// Derived quantities such as the realized noise norm.
    #[serde(default)]
    pub results: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, command_line: Vec<String>, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            run_id: run_id(command, &config),
            command: command.to_string(),
            command_line,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timings: Vec::new(),
            outputs: Vec::new(),
            results: serde_json::Map::new(),
        }
    }

    pub fn record_phase(&mut self, phase: &str, seconds: f64) {
        self.timings.push(PhaseTiming {
            phase: phase.to_string(),
            seconds,
        });
    }

    pub fn result_f64(&self, key: &str) -> Option<f64> {
        self.results.get(key).and_then(|v| v.as_f64())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        write_bytes(path, format!("{json}\n").as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
    }
}

/// Deterministic identifier: equal configurations give equal ids.
pub fn run_id(command: &str, config: &serde_json::Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(config.to_string().as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// `<path>.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// `<prefix><suffix>`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
