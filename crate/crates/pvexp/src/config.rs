//! Experiment configuration: defaults, an optional `key = value` file, then
//! command-line overrides, in that order.

use std::path::Path;

use pvexp_core::sde::{lookup_model, ModelParams, SdeModel, Weight};
use pvexp_core::HurstParam;

use crate::error::{Error, Result};
use crate::fbm::Method;
use crate::montecarlo::PathSpec;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "PVEXP_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: String,
    pub sigma: f64,
    pub weight: Weight,
    pub k: u32,
    pub hurst: f64,
    pub n: usize,
    pub kappa: usize,
    pub paths: usize,
    pub expansion_paths: usize,
    pub seed: u64,
    pub x0: f64,
    pub method: Method,
    /// Half-width of the z-grid in effective standard deviations.
    pub z_width: f64,
    pub z_points: usize,
    pub tol: f64,
    pub bootstrap: usize,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "bounded-tanh".into(),
            sigma: 1.0,
            weight: Weight::One,
            k: 1,
            hurst: 0.7,
            n: 128,
            kappa: 8,
            paths: 10_000,
            expansion_paths: 10_000,
            seed: 1,
            x0: 0.0,
            method: Method::Circulant,
            z_width: 8.0,
            z_points: 2001,
            tol: 1e-8,
            bootstrap: 500,
            threads: None,
        }
    }
}

pub const KEYS: [&str; 17] = [
    "model",
    "sigma",
    "weight",
    "k",
    "H",
    "n",
    "kappa",
    "paths",
    "expansion_paths",
    "seed",
    "x0",
    "method",
    "z_width",
    "z_points",
    "tol",
    "bootstrap",
    "threads",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
}

fn weight_name(w: Weight) -> &'static str {
    match w {
        Weight::One => "one",
        Weight::InverseQuadratic => "inverse-quadratic",
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "model" => self.model = value.to_string(),
            "sigma" => self.sigma = parse(key, value)?,
            "weight" => {
                self.weight = match value {
                    "one" => Weight::One,
                    "inverse-quadratic" => Weight::InverseQuadratic,
                    _ => return Err(Error::Config(format!("unknown weight '{value}'; expected one or inverse-quadratic"))),
                }
            }
            "k" => self.k = parse(key, value)?,
            "H" => self.hurst = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "paths" => self.paths = parse(key, value)?,
            "expansion_paths" => self.expansion_paths = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "x0" => self.x0 = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "z_width" => self.z_width = parse(key, value)?,
            "z_points" => self.z_points = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "bootstrap" => self.bootstrap = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            _ => return Err(Error::Config(format!("unknown key '{key}'; known keys: {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", no + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        HurstParam::new(self.hurst).map_err(|e| Error::Config(e.to_string()))?;
        let checks = [
            (self.k >= 1, "k must be at least 1"),
            (self.n >= 4, "n must be at least 4"),
            (self.kappa >= 2, "kappa must be at least 2"),
            (self.paths >= 1, "paths must be at least 1"),
            (self.expansion_paths >= 1, "expansion_paths must be at least 1"),
            (self.sigma.is_finite() && self.sigma > 0.0, "sigma must be positive"),
            (self.x0.is_finite(), "x0 must be finite"),
            (self.z_width > 0.0 && self.z_points >= 3, "z-grid needs z_width > 0 and z_points >= 3"),
            (self.tol > 0.0, "tol must be positive"),
            (self.threads != Some(0), "threads must be at least 1"),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::Config((*msg).to_string()));
        }
        self.model().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn hurst_param(&self) -> Result<HurstParam> {
        Ok(HurstParam::new(self.hurst)?)
    }

    pub fn model(&self) -> Result<SdeModel> {
        Ok(lookup_model(&self.model, ModelParams { sigma: self.sigma, weight: self.weight })?)
    }

    pub fn path_spec(&self) -> Result<PathSpec> {
        Ok(PathSpec {
            model: self.model()?,
            k: self.k,
            hurst: self.hurst_param()?,
            n: self.n,
            kappa: self.kappa,
            x0: self.x0,
            method: self.method,
        })
    }

    /// Every field as `(key, value)`, in [`KEYS`] order. `threads` is left
    /// out because outputs do not depend on it.
    pub fn echo(&self) -> Vec<(String, String)> {
        let v = [
            self.model.clone(),
            self.sigma.to_string(),
            weight_name(self.weight).into(),
            self.k.to_string(),
            self.hurst.to_string(),
            self.n.to_string(),
            self.kappa.to_string(),
            self.paths.to_string(),
            self.expansion_paths.to_string(),
            self.seed.to_string(),
            self.x0.to_string(),
            self.method.to_string(),
            self.z_width.to_string(),
            self.z_points.to_string(),
            self.tol.to_string(),
            self.bootstrap.to_string(),
        ];
        KEYS.iter().zip(v).map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Thread count from the flag, else from [`THREADS_ENV`].
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(parse(THREADS_ENV, &v)?)),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# experiment\nk = 2\nH=0.75 # trailing\n\nmodel = additive\n").unwrap();
        c.set("H", "0.6").unwrap();
        assert_eq!((c.k, c.hurst, c.model.as_str()), (2, 0.6, "additive"));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::default();
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("k", "two").is_err());
        assert!(c.apply_text("k 2").is_err());
        c.hurst = 0.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig { n: 2, ..Default::default() };
        assert!(c.validate().is_err());
        c.n = 16;
        c.model = "Additive".into();
        assert!(c.validate().unwrap_err().to_string().contains("bounded-tanh"));
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig { k: 3, hurst: 0.65, weight: Weight::InverseQuadratic, ..Default::default() };
        let mut d = ExperimentConfig::default();
        for (k, v) in c.echo() {
            d.set(&k, &v).unwrap();
        }
        assert_eq!(c, d);
    }
}
