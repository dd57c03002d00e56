//! Fractional Gaussian noise on a uniform grid of `[0, 1]`, sampled exactly
//! by Cholesky factorization or by circulant embedding.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use pvexp_core::kernel::fgn_autocovariance;
use pvexp_core::linalg::cholesky;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, NS_SAMPLE};

/// Eigenvalues below `-NEGATIVE_EIGEN_TOL * max` reject the embedding.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-9;

const CHOLESKY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cholesky,
    Circulant,
}

impl Method {
    fn byte(self) -> u8 {
        match self {
            Self::Cholesky => 0,
            Self::Circulant => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Cholesky),
            1 => Some(Self::Circulant),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cholesky => "cholesky",
            Self::Circulant => "circulant",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(Self::Cholesky),
            "circulant" => Ok(Self::Circulant),
            _ => Err(Error::Config(format!("unknown sampling method '{s}'; expected cholesky or circulant"))),
        }
    }
}

/// Increments `B_{(i+1)/n} - B_{i/n}` of one fBm path.
#[derive(Debug, Clone, PartialEq)]
pub struct FgnSample {
    pub n: usize,
    pub hurst: f64,
    pub increments: Vec<f64>,
    pub seed: u64,
    /// Method actually used, after any fallback.
    pub method: Method,
}

enum Plan {
    Cholesky(Vec<f64>),
    Circulant { sqrt_eigen: Vec<f64>, fft: Arc<dyn Fft<f64>> },
}

/// Precomputed sampler for fixed `(n, H)`; immutable and shareable.
pub struct FgnSampler {
    n: usize,
    hurst: f64,
    scale: f64,
    plan: Plan,
}

impl fmt::Debug for FgnSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FgnSampler").field("n", &self.n).field("hurst", &self.hurst).field("method", &self.method()).finish()
    }
}

fn check_args(n: usize, hurst: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Config(format!("fGn grid needs n >= 2, got {n}")));
    }
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Config(format!("sampler Hurst index {hurst} outside (0, 1)")));
    }
    Ok(())
}

/// Toeplitz covariance of unit-spaced fGn.
fn toeplitz(n: usize, hurst: f64) -> Vec<f64> {
    let gamma: Vec<f64> = (0..n as i64).map(|k| fgn_autocovariance(k, hurst)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = gamma[i.abs_diff(j)];
        }
    }
    a
}

impl FgnSampler {
    /// Builds the plan for `method`. A circulant embedding with an eigenvalue
    /// below `-1e-9 max` is reported and replaced by Cholesky.
    pub fn new(n: usize, hurst: f64, method: Method) -> Result<Self> {
        check_args(n, hurst)?;
        let plan = match method {
            Method::Cholesky => Self::cholesky_plan(n, hurst)?,
            Method::Circulant => match Self::circulant_plan(n, hurst) {
                Ok(p) => p,
                Err(min_ratio) => {
                    log::warn!("circulant embedding for n={n}, H={hurst} has eigenvalue ratio {min_ratio:e}; falling back to cholesky");
                    Self::cholesky_plan(n, hurst)?
                }
            },
        };
        Ok(Self { n, hurst, scale: (n as f64).powf(-hurst), plan })
    }

    /// Shared sampler from a process-wide cache keyed by `(n, H, method)`.
    pub fn cached(n: usize, hurst: f64, method: Method) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(usize, u64, Method), Arc<FgnSampler>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (n, hurst.to_bits(), method);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(s) = cache.lock().expect("sampler cache poisoned").get(&key) {
            return Ok(Arc::clone(s));
        }
        let sampler = Arc::new(Self::new(n, hurst, method)?);
        cache.lock().expect("sampler cache poisoned").entry(key).or_insert_with(|| Arc::clone(&sampler));
        Ok(sampler)
    }

    fn cholesky_plan(n: usize, hurst: f64) -> Result<Plan> {
        Ok(Plan::Cholesky(cholesky(&toeplitz(n, hurst), n, CHOLESKY_TOL)?))
    }

    /// Err carries `min eigenvalue / max eigenvalue` when the check fails.
    fn circulant_plan(n: usize, hurst: f64) -> std::result::Result<Plan, f64> {
        let size = 2 * n;
        let mut c: Vec<Complex64> = Vec::with_capacity(size);
        c.extend((0..=n as i64).map(|k| Complex64::new(fgn_autocovariance(k, hurst), 0.0)));
        c.extend((1..n as i64).rev().map(|k| Complex64::new(fgn_autocovariance(k, hurst), 0.0)));
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut c);
        let max = c.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let min = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_EIGEN_TOL * max {
            return Err(min / max);
        }
        let sqrt_eigen = c.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();
        Ok(Plan::Circulant { sqrt_eigen, fft })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn method(&self) -> Method {
        match self.plan {
            Plan::Cholesky(_) => Method::Cholesky,
            Plan::Circulant { .. } => Method::Circulant,
        }
    }

    /// One vector of increments on the grid of mesh `1/n`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.n;
        match &self.plan {
            Plan::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n).map(|i| self.scale * l[i * n..i * n + i + 1].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).collect()
            }
            Plan::Circulant { sqrt_eigen, fft } => {
                let mut w: Vec<Complex64> = sqrt_eigen
                    .iter()
                    .map(|s| {
                        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                        Complex64::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut w);
                w[..n].iter().map(|z| self.scale * z.re).collect()
            }
        }
    }
}

/// Deterministic sample for `(n, H, seed, method)`.
pub fn sample_fgn(n: usize, hurst: f64, seed: u64, method: Method) -> Result<FgnSample> {
    let sampler = FgnSampler::cached(n, hurst, method)?;
    let increments = sampler.sample(&mut substream(seed, NS_SAMPLE, 0));
    Ok(FgnSample { n, hurst, increments, seed, method: sampler.method() })
}

/// `B_0 = 0, B_{1/n}, ..., B_1` by cumulative summation.
pub fn path_from_increments(sample: &FgnSample) -> Vec<f64> {
    cumulative(&sample.increments)
}

pub fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for d in increments {
        acc += d;
        out.push(acc);
    }
    out
}

/// Little-endian dump: `n: u64`, `H: f64`, `seed: u64`, `method: u8`, then
/// `n` increments as `f64`.
pub fn write_dump<W: Write>(mut w: W, sample: &FgnSample) -> Result<()> {
    w.write_all(&(sample.n as u64).to_le_bytes())?;
    w.write_all(&sample.hurst.to_le_bytes())?;
    w.write_all(&sample.seed.to_le_bytes())?;
    w.write_all(&[sample.method.byte()])?;
    for x in &sample.increments {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> Result<FgnSample> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let hurst = f64::from_le_bytes(next(&mut r)?);
    let seed = u64::from_le_bytes(next(&mut r)?);
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let method =
        Method::from_byte(byte[0]).ok_or_else(|| Error::Format { path: "<dump>".into(), reason: format!("method byte {}", byte[0]) })?;
    let increments = (0..n).map(|_| Ok(f64::from_le_bytes(next(&mut r)?))).collect::<Result<Vec<_>>>()?;
    Ok(FgnSample { n, hurst, increments, seed, method })
}
