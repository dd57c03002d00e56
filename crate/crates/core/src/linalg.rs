//! Dense helpers shared by the kernel checks, the Wick oracle and the exact
//! fGn sampler.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric matrix stored row-major.
///
/// Pivots down to `-tol * max_diag` are treated as zero (the column is then
/// zeroed), so rank-deficient positive semidefinite matrices factor. Anything
/// more negative is rejected.
pub fn cholesky(a: &[f64], dim: usize, tol: f64) -> Result<Vec<f64>> {
    if a.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, got: a.len() });
    }
    let scale = (0..dim).map(|i| a[i * dim + i].abs()).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= l[j * dim + k] * l[j * dim + k];
        }
        if d < -tol * scale {
            return Err(Error::NotPositiveSemidefinite(format!("pivot {j} is {d:e}")));
        }
        if d <= tol * scale {
            continue;
        }
        let djj = libm::sqrt(d);
        l[j * dim + j] = djj;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = s / djj;
        }
    }
    Ok(l)
}

pub fn is_symmetric(a: &[f64], dim: usize, tol: f64) -> bool {
    (0..dim).all(|i| (0..i).all(|j| (a[i * dim + j] - a[j * dim + i]).abs() <= tol * (1.0 + a[i * dim + j].abs())))
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
