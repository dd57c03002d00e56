//! Mixed-normal baseline and first-order corrected density and CDF of `Z_n`.
//!
//! Given per-path `v = G_inf`, `a3 = int a(X)^3` and `c1 = -mu_{2k,0}(a(X_0) + a(X_1)) / 2`,
//!
//! `p_n(z) = E[(1 + n^{-1/2} (C_tau a3 h_3(z, v) / 3 + c1 h_1(z, v))) phi(z; 0, v)]`.

use alloc::format;
use alloc::vec::Vec;

use crate::combinatorics::{c_g_infinity, mu};
use crate::kernel::HurstParam;
use crate::sde::{GridPath, SdeModel};
use crate::variation::trapezoid;
use crate::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Per-path coefficients of the expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFunctionals {
    pub v: f64,
    pub a3: f64,
    pub c1: f64,
}

/// `(v, a3, c1)` for one path, given `C_{G_inf}`.
pub fn path_functionals_with(path: &GridPath, model: &SdeModel, k: u32, h: HurstParam, c_g: f64) -> Result<PathFunctionals> {
    let a: Vec<f64> = path.x.iter().map(|&x| model.a(x, k)).collect();
    let a2: Vec<f64> = a.iter().map(|v| v * v).collect();
    let a3: Vec<f64> = a.iter().map(|v| v * v * v).collect();
    let v = c_g * trapezoid(&a2);
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::DegenerateVariance { path: 0, value: v });
    }
    let c1 = -0.5 * mu(k, 0, h)? * (a[0] + a[a.len() - 1]);
    Ok(PathFunctionals { v, a3: trapezoid(&a3), c1 })
}

/// `(v, a3, c1)` for one path, computing `C_{G_inf}` to `tol`.
pub fn path_functionals(path: &GridPath, model: &SdeModel, k: u32, h: HurstParam, tol: f64) -> Result<PathFunctionals> {
    let c_g = c_g_infinity(k, h, tol)?.value;
    path_functionals_with(path, model, k, h, c_g)
}

/// `h_alpha(z, v)` with `(-d/dz)^alpha phi(z; 0, v) = h_alpha(z, v) phi(z; 0, v)`.
pub fn gaussian_derivative_weight(alpha: u32, z: f64, v: f64) -> Result<f64> {
    if v.is_nan() || v <= 0.0 {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {v}")));
    }
    Ok(match alpha {
        0 => 1.0,
        1 => z / v,
        2 => z * z / (v * v) - 1.0 / v,
        3 => z * z * z / (v * v * v) - 3.0 * z / (v * v),
        _ => return Err(Error::InvalidArgument(format!("derivative order {alpha} exceeds 3"))),
    })
}

/// `phi(z; 0, v)`.
#[inline]
pub fn normal_density(z: f64, v: f64) -> f64 {
    FRAC_1_SQRT_2PI / libm::sqrt(v) * libm::exp(-0.5 * z * z / v)
}

/// `Phi(x / sqrt(v))`.
#[inline]
pub fn normal_cdf(x: f64, v: f64) -> f64 {
    0.5 * libm::erfc(-x / libm::sqrt(2.0 * v))
}

/// Per-path functionals with the expansion constants they feed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionEnsemble {
    pub k: u32,
    pub hurst: HurstParam,
    pub c_tau: f64,
    pub records: Vec<PathFunctionals>,
}

impl ExpansionEnsemble {
    pub fn new(k: u32, hurst: HurstParam, c_tau: f64, records: Vec<PathFunctionals>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| !r.v.is_finite() || r.v <= 0.0) {
            return Err(Error::DegenerateVariance { path: i, value: r.v });
        }
        Ok(Self { k, hurst, c_tau, records })
    }

    /// `sqrt(E[v])`, the scale of the baseline mixture.
    pub fn effective_std(&self) -> f64 {
        libm::sqrt(self.records.iter().map(|r| r.v).sum::<f64>() / self.records.len() as f64)
    }

    /// Same records with `C_tau = 0` and `c1 = 0`.
    pub fn baseline(&self) -> Self {
        let records = self.records.iter().map(|r| PathFunctionals { c1: 0.0, ..*r }).collect();
        Self { c_tau: 0.0, records, ..self.clone() }
    }

    fn mean(&self, f: impl Fn(&PathFunctionals) -> f64) -> f64 {
        self.records.iter().map(f).sum::<f64>() / self.records.len() as f64
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("expansion needs n >= 2, got {n}")));
    }
    Ok(1.0 / libm::sqrt(n as f64))
}

/// Mixed-normal baseline `E[phi(z; 0, v)]`.
pub fn baseline_density(z: f64, ens: &ExpansionEnsemble) -> f64 {
    ens.mean(|r| normal_density(z, r.v))
}

/// Mixed-normal baseline `E[Phi(x / sqrt(v))]`.
pub fn baseline_cdf(x: f64, ens: &ExpansionEnsemble) -> f64 {
    ens.mean(|r| normal_cdf(x, r.v))
}

/// `p_n(z)`.
pub fn expansion_density(z: f64, ens: &ExpansionEnsemble, n: usize) -> Result<f64> {
    let eps = check_n(n)?;
    let ct = ens.c_tau / 3.0;
    Ok(ens.mean(|r| {
        let v = r.v;
        let h1 = z / v;
        let h3 = z * z * z / (v * v * v) - 3.0 * z / (v * v);
        (1.0 + eps * (ct * r.a3 * h3 + r.c1 * h1)) * normal_density(z, v)
    }))
}

/// `F_n(x) = E[Phi(x / sqrt(v))] - n^{-1/2} E[(C_tau a3 h_2(x, v) / 3 + c1) phi(x; 0, v)]`.
pub fn expansion_cdf(x: f64, ens: &ExpansionEnsemble, n: usize) -> Result<f64> {
    let eps = check_n(n)?;
    let ct = ens.c_tau / 3.0;
    Ok(ens.mean(|r| {
        let v = r.v;
        let h2 = x * x / (v * v) - 1.0 / v;
        normal_cdf(x, v) - eps * (ct * r.a3 * h2 + r.c1) * normal_density(x, v)
    }))
}

/// Uniform grid of `points` values on `[-width, width]` times the effective std.
pub fn z_grid(ens: &ExpansionEnsemble, width: f64, points: usize) -> Vec<f64> {
    let s = ens.effective_std();
    let points = points.max(2);
    (0..points).map(|i| s * width * (-1.0 + 2.0 * i as f64 / (points - 1) as f64)).collect()
}

/// `|int p_n - 1|` by the trapezoid rule over `+-width` effective std.
pub fn normalization_error(ens: &ExpansionEnsemble, n: usize, width: f64, points: usize) -> Result<f64> {
    let grid = z_grid(ens, width, points);
    let dz = grid[1] - grid[0];
    let vals = grid.iter().map(|&z| expansion_density(z, ens, n)).collect::<Result<Vec<_>>>()?;
    let last = vals.len() - 1;
    let integral = dz * (vals[1..last].iter().sum::<f64>() + 0.5 * (vals[0] + vals[last]));
    Ok((integral - 1.0).abs())
}

/// `sup_z |(F_n(z + d) - F_n(z - d)) / 2d - p_n(z)|` over `grid`, `d = step * std`.
pub fn cdf_density_gap(ens: &ExpansionEnsemble, n: usize, grid: &[f64], step: f64) -> Result<f64> {
    let d = step * ens.effective_std();
    let mut sup: f64 = 0.0;
    for &z in grid {
        let fd = (expansion_cdf(z + d, ens, n)? - expansion_cdf(z - d, ens, n)?) / (2.0 * d);
        sup = sup.max((fd - expansion_density(z, ens, n)?).abs());
    }
    Ok(sup)
}

/// Number of grid intervals on which `F_n` decreases.
pub fn cdf_decreasing_intervals(ens: &ExpansionEnsemble, n: usize, grid: &[f64]) -> Result<usize> {
    let vals = grid.iter().map(|&z| expansion_cdf(z, ens, n)).collect::<Result<Vec<_>>>()?;
    Ok(vals.windows(2).filter(|w| w[1] < w[0]).count())
}
