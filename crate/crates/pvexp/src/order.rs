//! Empirical order of the catalog functionals in the additive model.
//!
//! With `Y_j = n^H B(d^n_j)` (variance `c0`, correlation `rho_hat`) and
//! `V1 = sigma`, the catalog functionals reduce to
//!
//! * `G(l1,l2;m) = sigma^{4k} n^{-1} sum_{j1,j2} rho_hat(j2-j1)^{m+1} :Y_{j1}^{q1} Y_{j2}^{q2}:`
//! * `I#(l1,l2,l3;m) = sigma^{6k} n^{-3/2} sum_{j1,j2,j3} rho_hat(j2-j1)^{m+1} rho_hat(j3-j1)^{q1} rho_hat(j3-j2)^{q2}`
//! * `|u(l)|_H = (mu^2 sigma^{4k} n^{-1} sum_{j1,j2} rho_hat(j2-j1) :Y_{j1}^{2l-1}: :Y_{j2}^{2l-1}:)^{1/2}`
//! * `M'(l) = mu sigma^{2k} n^{-1/2} sum_j :Y_j^{2l}:`
//!
//! Double sums are Toeplitz bilinear forms evaluated by FFT.

use std::collections::BTreeMap;
use std::sync::Arc;

use pvexp_core::combinatorics::{finite_triple_sum_powers, mu, LambdaIndex};
use pvexp_core::exponent::{catalog_entry, FunctionalId};
use pvexp_core::kernel::{c0, rho_hat};
use pvexp_core::linalg::linear_fit;
use pvexp_core::wick::{pair_wick_expansion, wick_power, PairTerm};
use pvexp_core::HurstParam;
use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm::{FgnSampler, Method};
use crate::rng::{substream, NS_BOOTSTRAP, NS_ORDER};

/// Allowed excess of the fitted slope over the predicted exponent.
pub const SLOPE_SLACK: f64 = 0.07;

/// `u^T T v` for the symmetric Toeplitz matrix `T_{ij} = t(j - i)` of size `len`.
pub struct ToeplitzForm {
    len: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ToeplitzForm {
    pub fn new(len: usize, t: impl Fn(i64) -> f64) -> Self {
        let size = (2 * len).next_power_of_two();
        let mut c = vec![Complex64::new(0.0, 0.0); size];
        for d in 0..len {
            c[d].re = t(d as i64);
            if d > 0 {
                c[size - d].re = t(d as i64);
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        forward.process(&mut c);
        Self { len, kernel_hat: c, forward, inverse }
    }

    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let size = self.kernel_hat.len();
        let mut w = vec![Complex64::new(0.0, 0.0); size];
        for (dst, x) in w.iter_mut().zip(v) {
            dst.re = *x;
        }
        self.forward.process(&mut w);
        for (x, k) in w.iter_mut().zip(&self.kernel_hat) {
            *x *= k;
        }
        self.inverse.process(&mut w);
        u.iter().zip(&w[..self.len]).map(|(a, b)| a * b.re).sum::<f64>() / size as f64
    }
}

/// Per-`n` evaluator for one functional.
enum Evaluator {
    G { terms: Vec<PairTerm>, forms: BTreeMap<u32, ToeplitzForm>, m: u32, scale: f64 },
    UNorm { q: u32, form: ToeplitzForm, scale: f64 },
    MPrime { q: u32, scale: f64 },
    Fixed(f64),
}

fn evaluator(id: FunctionalId, k: u32, h: HurstParam, sigma: f64, n: usize) -> Result<Evaluator> {
    let nf = n as f64;
    let len = n - 1;
    let table: Vec<f64> = (0..len as i64).map(|d| rho_hat(d, h)).collect();
    let s2k = sigma.powi(2 * k as i32);
    Ok(match id {
        FunctionalId::G { l1, l2, m } => {
            let idx = LambdaIndex::new(k, l1, l2, m)?;
            let scale = s2k * s2k / nf;
            if idx.q1() == 0 && idx.q2() == 0 {
                let lag_sum: f64 = (0..len).map(|d| if d == 0 { 1.0 } else { 2.0 } * (len - d) as f64 * table[d].powi(m as i32 + 1)).sum();
                return Ok(Evaluator::Fixed(scale * lag_sum));
            }
            let terms = pair_wick_expansion(idx.q1(), idx.q2(), c0(h))?;
            let mut forms = BTreeMap::new();
            for t in &terms {
                let p = m + 1 + t.r_power;
                forms.entry(p).or_insert_with(|| ToeplitzForm::new(len, |d| table[d as usize].powi(p as i32)));
            }
            Evaluator::G { terms, forms, m, scale }
        }
        FunctionalId::ISharp { l1, l2, m, .. } => {
            catalog_entry(id, k)?;
            let idx = LambdaIndex::new(k, l1, l2, m)?;
            let sum = finite_triple_sum_powers(n as u64, h, m + 1, idx.q1(), idx.q2());
            Evaluator::Fixed(s2k.powi(3) * sum / nf.sqrt())
        }
        FunctionalId::UNorm { l } => {
            catalog_entry(id, k)?;
            let u = mu(k, l, h)?;
            Evaluator::UNorm { q: 2 * l - 1, form: ToeplitzForm::new(len, |d| table[d as usize]), scale: u * u * s2k * s2k / nf }
        }
        FunctionalId::MPrime { l } => {
            catalog_entry(id, k)?;
            Evaluator::MPrime { q: 2 * l, scale: mu(k, l, h)? * s2k / nf.sqrt() }
        }
    })
}

impl Evaluator {
    fn is_random(&self) -> bool {
        !matches!(self, Self::Fixed(_))
    }

    /// Value of the functional on one vector of normalized second differences.
    fn eval(&self, y: &[f64], var: f64) -> f64 {
        match self {
            Self::G { terms, forms, m, scale } => {
                let mut powers: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
                for t in terms {
                    for p in [t.left, t.right] {
                        powers.entry(p).or_insert_with(|| y.iter().map(|v| v.powi(p as i32)).collect());
                    }
                }
                let total: f64 =
                    terms.iter().map(|t| t.coeff * forms[&(m + 1 + t.r_power)].bilinear(&powers[&t.left], &powers[&t.right])).sum();
                scale * total
            }
            Self::UNorm { q, form, scale } => {
                let w: Vec<f64> = y.iter().map(|&v| wick_power(*q, var, v)).collect();
                (scale * form.bilinear(&w, &w)).max(0.0).sqrt()
            }
            Self::MPrime { q, scale } => scale * y.iter().map(|&v| wick_power(*q, var, v)).sum::<f64>(),
            Self::Fixed(v) => *v,
        }
    }
}

/// Samples of a functional at grid size `n`: `paths` values, or one value
/// when the functional is deterministic.
pub fn functional_samples(id: FunctionalId, k: u32, h: HurstParam, sigma: f64, n: usize, paths: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 4 {
        return Err(Error::Config(format!("order verification needs n >= 4, got {n}")));
    }
    let ev = evaluator(id, k, h, sigma, n)?;
    if !ev.is_random() {
        return Ok(vec![ev.eval(&[], 0.0)]);
    }
    let sampler = FgnSampler::cached(n, h.value(), Method::Circulant)?;
    let unit = (n as f64).powf(h.value());
    let var = c0(h);
    let stream_base = (n as u64) << 32;
    Ok((0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let inc = sampler.sample(&mut substream(seed, NS_ORDER, stream_base | i));
            let y: Vec<f64> = inc.windows(2).map(|w| unit * (w[1] - w[0])).collect();
            ev.eval(&y, var)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub functional: String,
    pub k: u32,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub n_grid: Vec<usize>,
    /// `sqrt(mean F^2)` per grid size.
    pub norms: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub slope: f64,
    pub ci: (f64, f64),
    pub predicted: f64,
    pub pass: bool,
}

fn log_norm_slope(n_grid: &[usize], mean_sq: &[f64]) -> f64 {
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = mean_sq.iter().map(|m| 0.5 * m.ln()).collect();
    linear_fit(&x, &y).0
}

/// Fitted slope of `log ||F_n||_2` against `log n` with a percentile
/// bootstrap interval over paths.
#[allow(clippy::too_many_arguments)]
pub fn verify_order(
    id: FunctionalId,
    k: u32,
    h: HurstParam,
    n_grid: &[usize],
    paths: usize,
    seed: u64,
    resamples: usize,
) -> Result<OrderReport> {
    if n_grid.len() < 3 {
        return Err(Error::Config(format!("n-grid needs at least 3 points, got {}", n_grid.len())));
    }
    if paths == 0 {
        return Err(Error::Config("order verification needs at least one path".into()));
    }
    let predicted = catalog_entry(id, k)?.predicted_exponent(h);
    let squares: Vec<Vec<f64>> = n_grid
        .iter()
        .map(|&n| Ok(functional_samples(id, k, h, 1.0, n, paths, seed)?.iter().map(|v| v * v).collect()))
        .collect::<Result<_>>()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_sq: Vec<f64> = squares.iter().map(|s| mean(s)).collect();
    let slope = log_norm_slope(n_grid, &mean_sq);
    let replicates: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, NS_BOOTSTRAP, b as u64);
            let ms: Vec<f64> =
                squares.iter().map(|s| (0..s.len()).map(|_| s[rng.gen_range(0..s.len())]).sum::<f64>() / s.len() as f64).collect();
            log_norm_slope(n_grid, &ms)
        })
        .collect();
    let ci = if replicates.is_empty() { (slope, slope) } else { crate::stats::percentile_ci(replicates, 0.95) };
    Ok(OrderReport {
        functional: id.to_string(),
        k,
        hurst: h.value(),
        n_grid: n_grid.to_vec(),
        norms: mean_sq.iter().map(|m| m.sqrt()).collect(),
        paths,
        seed,
        slope,
        ci,
        predicted,
        pass: slope <= predicted + SLOPE_SLACK,
    })
}
