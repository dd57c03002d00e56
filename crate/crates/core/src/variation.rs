//! Second-order differences, the weighted power variation `S_n`, its limit
//! `S_inf` and the error statistic `Z_n = sqrt(n) (S_n - S_inf)`.

use alloc::format;
use alloc::vec::Vec;

use crate::combinatorics::mu;
use crate::kernel::{rho_hat, HurstParam};
use crate::sde::{GridPath, SdeModel};
use crate::{Error, Result};

/// `X_{(j+1)/n} - 2 X_{j/n} + X_{(j-1)/n}` for `j = 1..n-1`, from the
/// coarse values `X_{j/n}`, `j = 0..=n`.
pub fn second_difference(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!("second differences need n >= 2, got {} points", x.len())));
    }
    Ok(x.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect())
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("power index k must be at least 1".into()));
    }
    Ok(())
}

/// `S_n = n^{2kH-1} sum_{j=1}^{n-1} f(X_{j/n}) (second difference)^{2k}`.
pub fn weighted_power_variation(x: &[f64], model: &SdeModel, k: u32, h: HurstParam) -> Result<f64> {
    check_k(k)?;
    let d = second_difference(x)?;
    let n = (x.len() - 1) as f64;
    let sum: f64 = d.iter().enumerate().map(|(i, dj)| model.f.eval(x[i + 1]) * libm::pow(*dj, f64::from(2 * k))).sum();
    Ok(libm::pow(n, f64::from(2 * k) * h.value() - 1.0) * sum)
}

/// Composite trapezoid rule on a uniform grid over `[0, 1]`.
pub fn trapezoid(values: &[f64]) -> f64 {
    let m = values.len().saturating_sub(1);
    if m == 0 {
        return 0.0;
    }
    let inner: f64 = values[1..m].iter().sum();
    (inner + 0.5 * (values[0] + values[m])) / m as f64
}

/// Left-point Riemann sum on a uniform grid over `[0, 1]`.
pub fn riemann_left_sum(values: &[f64]) -> f64 {
    let m = values.len().saturating_sub(1);
    if m == 0 {
        return 0.0;
    }
    values[..m].iter().sum::<f64>() / m as f64
}

/// `S_inf = mu_{2k,0} int_0^1 a(X_t) dt`, trapezoid on the fine grid.
pub fn limit_variation(x_fine: &[f64], model: &SdeModel, k: u32, h: HurstParam) -> Result<f64> {
    check_k(k)?;
    if x_fine.len() < 3 {
        return Err(Error::InvalidArgument("limit quadrature needs at least two fine steps".into()));
    }
    let a: Vec<f64> = x_fine.iter().map(|&x| model.a(x, k)).collect();
    Ok(mu(k, 0, h)? * trapezoid(&a))
}

/// `Z_n = sqrt(n) (S_n - S_inf)`.
#[inline]
pub fn error_statistic(s_n: f64, s_inf: f64, n: usize) -> f64 {
    libm::sqrt(n as f64) * (s_n - s_inf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationResult {
    pub n: usize,
    pub k: u32,
    pub s_n: f64,
    pub s_inf: f64,
    pub z_n: f64,
}

/// `S_n` on the coarse view, `S_inf` on the fine grid, and `Z_n`.
pub fn variation_of_path(path: &GridPath, model: &SdeModel, k: u32, h: HurstParam) -> Result<VariationResult> {
    if path.kappa < 2 {
        return Err(Error::InvalidArgument("limit quadrature needs oversampling factor >= 2".into()));
    }
    let coarse = path.coarse_x();
    let n = coarse.len() - 1;
    let s_n = weighted_power_variation(&coarse, model, k, h)?;
    let s_inf = limit_variation(&path.x, model, k, h)?;
    Ok(VariationResult { n, k, s_n, s_inf, z_n: error_statistic(s_n, s_inf, n) })
}

/// `Delta^2_j X - V1(X_{j/n}) B(d^n_j)` for `j = 1..n-1`.
pub fn decomposition_residuals(path: &GridPath, model: &SdeModel) -> Result<Vec<f64>> {
    let x = path.coarse_x();
    let dx = second_difference(&x)?;
    let db = second_difference(&path.coarse_b())?;
    Ok(dx.iter().zip(&db).enumerate().map(|(i, (a, b))| a - model.v1.eval(x[i + 1]) * b).collect())
}

/// Exact `E[S_n]` for `V1 = sigma`, `f = 1`: `(1 - 1/n) mu_{2k,0} sigma^{2k}`.
pub fn additive_mean(n: usize, k: u32, h: HurstParam, sigma: f64) -> Result<f64> {
    check_k(k)?;
    Ok((1.0 - 1.0 / n as f64) * mu(k, 0, h)? * libm::pow(sigma, f64::from(2 * k)))
}

/// Exact `Var(S_n)` for `V1 = sigma`, `f = 1`:
/// `n^{-2} sigma^{4k} sum_{j1,j2} sum_{l=1}^k mu_{2k,2l}^2 (2l)! rho_hat(j2-j1)^{2l}`.
pub fn additive_variance(n: usize, k: u32, h: HurstParam, sigma: f64) -> Result<f64> {
    check_k(k)?;
    let mut weights = Vec::with_capacity(k as usize);
    for l in 1..=k {
        let m = mu(k, l, h)?;
        weights.push(m * m * crate::combinatorics::factorial(2 * l)? as f64);
    }
    let len = n.saturating_sub(1) as i64;
    let cov = |d: i64| {
        let r = rho_hat(d, h);
        weights.iter().enumerate().map(|(i, w)| w * libm::pow(r, 2.0 * (i + 1) as f64)).sum::<f64>()
    };
    let mut total = len as f64 * cov(0);
    for d in 1..len {
        total += 2.0 * (len - d) as f64 * cov(d);
    }
    Ok(total * libm::pow(sigma, f64::from(4 * k)) / (n as f64 * n as f64))
}
