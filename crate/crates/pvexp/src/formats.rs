//! CSV and JSON outputs. Every file starts with `#` provenance lines; floats
//! are written with 17 significant digits.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version string embedded in outputs.
pub fn version() -> String {
    format!("pvexp {} ({})", env!("CARGO_PKG_VERSION"), option_env!("PVEXP_GIT_REV").unwrap_or("untracked"))
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Experiment identity shared by Z samples and density files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub model: String,
    pub n: usize,
    pub k: u32,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub seed: u64,
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[model={};n={};k={};H={};seed={}]", self.model, self.n, self.k, self.hurst, self.seed)
    }
}

impl Meta {
    /// Parses the bracketed `[model=..;n=..;k=..;H=..;seed=..]` form.
    pub fn parse(s: &str) -> Option<Self> {
        let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
        let mut m = Self { model: String::new(), n: 0, k: 0, hurst: f64::NAN, seed: 0 };
        let mut seen = 0;
        for part in inner.split(';') {
            let (key, value) = part.split_once('=')?;
            match key {
                "model" => m.model = value.to_string(),
                "n" => m.n = value.parse().ok()?,
                "k" => m.k = value.parse().ok()?,
                "H" => m.hurst = value.parse().ok()?,
                "seed" => m.seed = value.parse().ok()?,
                _ => return None,
            }
            seen += 1;
        }
        (seen == 5).then_some(m)
    }

    /// Errors unless `(model, n, k, H)` agree.
    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        let pairs = [
            ("model", self.model.clone(), other.model.clone()),
            ("n", self.n.to_string(), other.n.to_string()),
            ("k", self.k.to_string(), other.k.to_string()),
            ("H", self.hurst.to_string(), other.hurst.to_string()),
        ];
        for (field, left, right) in pairs {
            if left != right {
                return Err(Error::MetadataMismatch { field: field.into(), left, right });
            }
        }
        Ok(())
    }
}

/// `# key=value` lines: command, version, then the configuration echo.
pub fn provenance(command: &str, echo: &[(String, String)]) -> Vec<String> {
    let mut out = vec![format!("command={command}"), format!("version={}", version())];
    out.extend(echo.iter().map(|(k, v)| format!("{k}={v}")));
    out
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn write_provenance<W: Write>(w: &mut W, lines: &[String]) -> Result<()> {
    for l in lines {
        writeln!(w, "# {l}")?;
    }
    Ok(())
}

/// Splits a file into its `#` lines and the CSV body.
fn split_comments(text: &str) -> (Vec<&str>, String) {
    let mut comments = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(c) => comments.push(c.trim()),
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    (comments, body)
}

/// Single-column CSV with header `Z_n[model=..;n=..;k=..;H=..;seed=..]`.
pub fn write_z_csv<W: Write>(mut w: W, meta: &Meta, provenance: &[String], z: &[f64]) -> Result<()> {
    write_provenance(&mut w, provenance)?;
    let mut csv = csv_writer(w);
    csv.write_record([format!("Z_n{meta}")])?;
    for v in z {
        csv.write_record([float(*v)])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_z_csv(path: &Path) -> Result<(Meta, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let (_, body) = split_comments(&text);
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers()?.get(0).unwrap_or("").to_string();
    let meta = header
        .strip_prefix("Z_n")
        .and_then(Meta::parse)
        .ok_or_else(|| format_err(path, format!("header '{header}' is not Z_n[model=..;n=..;k=..;H=..;seed=..]")))?;
    let mut z = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v = rec.get(0).and_then(|s| s.trim().parse::<f64>().ok());
        z.push(v.ok_or_else(|| format_err(path, format!("row {} is not a number", i + 1)))?);
    }
    Ok((meta, z))
}

/// One z-grid row of the density output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub z: f64,
    pub p_baseline: f64,
    pub p_corrected: f64,
    pub f_baseline: f64,
    pub f_corrected: f64,
}

pub const DENSITY_HEADER: [&str; 5] = ["z", "p_baseline", "p_corrected", "F_baseline", "F_corrected"];

/// Density CSV; the experiment identity is the `# experiment=` line.
pub fn write_density_csv<W: Write>(mut w: W, meta: &Meta, provenance: &[String], rows: &[DensityRow]) -> Result<()> {
    write_provenance(&mut w, &[format!("experiment={meta}")])?;
    write_provenance(&mut w, provenance)?;
    let mut csv = csv_writer(w);
    csv.write_record(DENSITY_HEADER)?;
    for r in rows {
        csv.write_record([r.z, r.p_baseline, r.p_corrected, r.f_baseline, r.f_corrected].map(float))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_density_csv(path: &Path) -> Result<(Meta, Vec<DensityRow>)> {
    let text = std::fs::read_to_string(path)?;
    let (comments, body) = split_comments(&text);
    let meta = comments
        .iter()
        .find_map(|c| c.strip_prefix("experiment=").and_then(Meta::parse))
        .ok_or_else(|| format_err(path, "missing '# experiment=[...]' line"))?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>() != DENSITY_HEADER {
        return Err(format_err(path, format!("header must be {}", DENSITY_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Option<Vec<f64>> = rec.iter().map(|s| s.trim().parse().ok()).collect();
        match vals.as_deref() {
            Some(&[z, p_baseline, p_corrected, f_baseline, f_corrected]) => {
                rows.push(DensityRow { z, p_baseline, p_corrected, f_baseline, f_corrected })
            }
            _ => return Err(format_err(path, format!("row {} is malformed", i + 1))),
        }
    }
    if rows.len() < 2 || rows.windows(2).any(|w| w[1].z <= w[0].z) {
        return Err(format_err(path, "z column must be strictly increasing with at least two rows"));
    }
    Ok((meta, rows))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}
