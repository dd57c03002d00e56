//! Covariance structure of fractional Brownian motion on `[0, 1]`.
//!
//! Inner products are those of the Hilbert space attached to the fBm, i.e.
//! `<1_[0,s], 1_[0,t]> = E[B_s B_t]`. Elements used by the rest of the crate
//! are step functions; on a uniform grid they are integrated exactly through
//! the unit-lattice autocovariance of fractional Gaussian noise.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Slack accepted on real-valued times above 1.
pub const TIME_SLACK: f64 = 1e-9;

/// Hurst index restricted to the open interval `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.5 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidHurst(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `2H`, the exponent of the variogram.
    #[inline]
    pub fn alpha(self) -> f64 {
        2.0 * self.0
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl core::fmt::Display for HurstParam {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        self.0.fmt(f)
    }
}

/// `R(s, t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_covariance(s: f64, t: f64, h: HurstParam) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::NegativeTime(s));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let a = h.alpha();
    Ok(0.5 * (libm::pow(s, a) + libm::pow(t, a) - libm::pow((t - s).abs(), a)))
}

/// `c0 = 4 - 2^{2H}`, the variance of a unit-step second difference.
pub fn c0(h: HurstParam) -> f64 {
    4.0 - libm::pow(2.0, h.alpha())
}

/// Correlation of unit-step second differences at lag `j`:
///
/// `rho_hat(j) = (-|j+2|^{2H} + 4|j+1|^{2H} - 6|j|^{2H} + 4|j-1|^{2H} - |j-2|^{2H}) / 2`.
///
/// For `|j| >= 6` the stencil is evaluated as a convergent series in the
/// derivatives of `x^{2H}`; the five-term form loses every significant digit
/// around `|j| ~ 1e5`.
pub fn rho_hat(j: i64, h: HurstParam) -> f64 {
    rho_hat_alpha(j, h.alpha())
}

pub(crate) fn rho_hat_alpha(j: i64, alpha: f64) -> f64 {
    let j = j.unsigned_abs();
    if j < 6 {
        let g = |x: i64| libm::pow(x.unsigned_abs() as f64, alpha);
        let j = j as i64;
        0.5 * (-g(j + 2) + 4.0 * g(j + 1) - 6.0 * g(j) + 4.0 * g(j - 1) - g(j - 2))
    } else {
        -0.5 * central_difference_series(Stencil::Fourth, j as f64, alpha)
    }
}

/// Autocovariance of unit-lattice fractional Gaussian noise,
/// `(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2`.
///
/// Takes a raw Hurst index in `(0, 1)` because the samplers also accept the
/// Brownian case `H = 1/2`.
pub fn fgn_autocovariance(k: i64, hurst: f64) -> f64 {
    let alpha = 2.0 * hurst;
    let k = k.unsigned_abs();
    if k < 4 {
        let g = |x: i64| libm::pow(x.unsigned_abs() as f64, alpha);
        let k = k as i64;
        0.5 * (g(k + 1) - 2.0 * g(k) + g(k - 1))
    } else {
        0.5 * central_difference_series(Stencil::Second, k as f64, alpha)
    }
}

#[derive(Clone, Copy)]
enum Stencil {
    Second,
    Fourth,
}

/// Central difference of `g(x) = x^alpha` written as `sum_r c_r g^{(r)}(x)`
/// with `c_r = sum_s a_s s^r / r!` over the stencil weights `a_s`. The series
/// converges geometrically for `x` beyond the stencil reach.
fn central_difference_series(stencil: Stencil, x: f64, alpha: f64) -> f64 {
    // c_r for even r: second difference 2 / r!, fourth (2^{r+1} - 8) / r!.
    let (first, coeff): (u32, fn(u32, f64) -> f64) = match stencil {
        Stencil::Second => (2, |_r, inv_fact| 2.0 * inv_fact),
        Stencil::Fourth => (4, |r, inv_fact| (libm::pow(2.0, f64::from(r + 1)) - 8.0) * inv_fact),
    };
    // falling factorial alpha (alpha-1) ... (alpha-r+1) and 1/r!
    let mut falling = 1.0;
    let mut inv_fact = 1.0;
    for i in 0..first {
        falling *= alpha - f64::from(i);
        inv_fact /= f64::from(i + 1);
    }
    let mut power = libm::pow(x, alpha - f64::from(first));
    let inv_x2 = 1.0 / (x * x);
    let mut sum = 0.0;
    let mut r = first;
    while r < 400 {
        let term = coeff(r, inv_fact) * falling * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        falling *= (alpha - f64::from(r)) * (alpha - f64::from(r + 1));
        inv_fact /= f64::from(r + 1) * f64::from(r + 2);
        power *= inv_x2;
        r += 2;
    }
    sum
}

#[derive(Debug, Clone, PartialEq)]
enum Breakpoints {
    /// Exact times `idx / n`.
    Grid {
        n: u64,
        idx: Vec<u64>,
    },
    Real(Vec<f64>),
}

/// Piecewise-constant function on `[0, 1]`: `weights[i]` on
/// `[breakpoints[i], breakpoints[i+1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Breakpoints,
    weights: Vec<f64>,
}

impl StepFunction {
    /// Step function with breakpoints `idx[i] / n`.
    pub fn on_grid(n: u64, idx: Vec<u64>, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidStepFunction("grid size must be positive".into()));
        }
        if idx.iter().any(|&i| i > n) {
            return Err(Error::InvalidStepFunction(format!("grid index beyond {n}")));
        }
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction("breakpoints must be strictly increasing".into()));
        }
        Self::check_weights(idx.len(), &weights)?;
        Ok(Self { breakpoints: Breakpoints::Grid { n, idx }, weights })
    }

    /// Step function with real breakpoints in `[0, 1]` (up to [`TIME_SLACK`]).
    pub fn new(times: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let mut times = times;
        for t in times.iter_mut() {
            if !t.is_finite() {
                return Err(Error::InvalidStepFunction("non-finite breakpoint".into()));
            }
            if *t < 0.0 {
                return Err(Error::NegativeTime(*t));
            }
            if *t > 1.0 + TIME_SLACK {
                return Err(Error::InvalidStepFunction(format!("breakpoint {t} beyond 1")));
            }
            *t = t.min(1.0);
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction("breakpoints must be strictly increasing".into()));
        }
        Self::check_weights(times.len(), &weights)?;
        Ok(Self { breakpoints: Breakpoints::Real(times), weights })
    }

    fn check_weights(n_breaks: usize, weights: &[f64]) -> Result<()> {
        if n_breaks < 2 || weights.len() + 1 != n_breaks {
            return Err(Error::InvalidStepFunction(format!("{} weights for {} breakpoints", weights.len(), n_breaks)));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidStepFunction("non-finite weight".into()));
        }
        Ok(())
    }

    /// Indicator of `[(j-1)/n, j/n]`, for `1 <= j <= n`.
    pub fn indicator(n: u64, j: u64) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::InvalidArgument(format!("indicator index {j} outside [1, {n}]")));
        }
        Self::on_grid(n, alloc::vec![j - 1, j], alloc::vec![1.0])
    }

    /// `1_{j+1} - 1_j`, whose Wiener integral is the second difference
    /// `B_{(j+1)/n} - 2 B_{j/n} + B_{(j-1)/n}`; requires `1 <= j <= n-1`.
    pub fn second_difference(n: u64, j: u64) -> Result<Self> {
        if j == 0 || j + 1 > n {
            return Err(Error::InvalidArgument(format!("second difference index {j} outside [1, {}]", n.saturating_sub(1))));
        }
        Self::on_grid(n, alloc::vec![j - 1, j, j + 1], alloc::vec![-1.0, 1.0])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn times(&self) -> Vec<f64> {
        match &self.breakpoints {
            Breakpoints::Grid { n, idx } => idx.iter().map(|&i| i as f64 / *n as f64).collect(),
            Breakpoints::Real(t) => t.clone(),
        }
    }

    fn grid(&self) -> Option<(u64, &[u64])> {
        match &self.breakpoints {
            Breakpoints::Grid { n, idx } => Some((*n, idx)),
            Breakpoints::Real(_) => None,
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Upper limit on the number of lattice lags visited before falling back to
/// the real-valued route.
const LATTICE_WORK_CAP: u64 = 1 << 24;

/// `<a, b>` in the fBm Hilbert space.
///
/// Grid-aligned functions are integrated on their common lattice, where each
/// pair of unit cells contributes `N^{-2H} r(lag)` with the fGn
/// autocovariance `r`; otherwise each pair of intervals contributes
/// `R(u2,v2) - R(u2,v1) - R(u1,v2) + R(u1,v1)`.
pub fn inner_product_steps(a: &StepFunction, b: &StepFunction, h: HurstParam) -> f64 {
    if let (Some((na, ia)), Some((nb, ib))) = (a.grid(), b.grid()) {
        let g = gcd(na, nb);
        if let Some(n) = (na / g).checked_mul(nb) {
            let (sa, sb) = (n / na, n / nb);
            let work: u64 = (ia[ia.len() - 1] - ia[0]) * sa * (ib.len() as u64) + (ib[ib.len() - 1] - ib[0]) * sb * (ia.len() as u64);
            if work <= LATTICE_WORK_CAP {
                return lattice_inner_product(n, ia, sa, &a.weights, ib, sb, &b.weights, h);
            }
        }
    }
    real_inner_product(&a.times(), &a.weights, &b.times(), &b.weights, h)
}

#[allow(clippy::too_many_arguments)]
fn lattice_inner_product(n: u64, ia: &[u64], sa: u64, wa: &[f64], ib: &[u64], sb: u64, wb: &[f64], h: HurstParam) -> f64 {
    let hurst = h.value();
    let mut total = 0.0;
    for (ka, &wa) in wa.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        let (a0, a1) = ((ia[ka] * sa) as i64, (ia[ka + 1] * sa) as i64);
        for (kb, &wb) in wb.iter().enumerate() {
            if wb == 0.0 {
                continue;
            }
            let (b0, b1) = ((ib[kb] * sb) as i64, (ib[kb + 1] * sb) as i64);
            let mut cell_sum = 0.0;
            for lag in (b0 - a1 + 1)..=(b1 - 1 - a0) {
                let count = a1.min(b1 - lag) - a0.max(b0 - lag);
                if count > 0 {
                    cell_sum += count as f64 * fgn_autocovariance(lag, hurst);
                }
            }
            total += wa * wb * cell_sum;
        }
    }
    total * libm::pow(n as f64, -h.alpha())
}

fn real_inner_product(ta: &[f64], wa: &[f64], tb: &[f64], wb: &[f64], h: HurstParam) -> f64 {
    let alpha = h.alpha();
    let g = |x: f64| libm::pow(x.abs(), alpha);
    let mut total = 0.0;
    for (i, &x) in wa.iter().enumerate() {
        let (u1, u2) = (ta[i], ta[i + 1]);
        for (j, &y) in wb.iter().enumerate() {
            let (v1, v2) = (tb[j], tb[j + 1]);
            total += x * y * 0.5 * (g(v2 - u1) + g(v1 - u2) - g(v2 - u2) - g(v1 - u1));
        }
    }
    total
}

/// Row-major Gram matrix of a family of step functions.
pub fn gram_matrix(fs: &[StepFunction], h: HurstParam) -> Vec<f64> {
    let d = fs.len();
    let mut g = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let v = inner_product_steps(&fs[i], &fs[j], h);
            g[i * d + j] = v;
            g[j * d + i] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;
    use proptest::prelude::*;

    fn hp(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn hurst_bounds() {
        assert!(HurstParam::new(0.5).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(HurstParam::new(0.75).is_ok());
    }

    #[test]
    fn covariance_examples() {
        for h in [0.55, 0.75, 0.9] {
            assert!((fbm_covariance(1.0, 1.0, hp(h)).unwrap() - 1.0).abs() < 1e-15);
            let t: f64 = 0.37;
            assert!((fbm_covariance(t, t, hp(h)).unwrap() - t.powf(2.0 * h)).abs() < 1e-15);
        }
        assert!((fbm_covariance(0.5, 1.0, hp(0.75)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fbm_covariance(-0.1, 0.5, hp(0.7)), Err(Error::NegativeTime(-0.1)));
    }

    #[test]
    fn c0_examples() {
        assert!((c0(hp(0.75)) - 1.171_572_875_253_81).abs() < 1e-12);
        for h in [0.55, 0.7, 0.95] {
            assert!((c0(hp(h)) - rho_hat(0, hp(h))).abs() < 1e-14);
            assert!(c0(hp(h)) > 0.0);
        }
    }

    #[test]
    fn series_matches_stencil_at_switch() {
        // Both branches agree where the direct stencil is still accurate.
        for h in [0.55, 0.75, 0.95] {
            let alpha = 2.0 * h;
            for j in 6..40_i64 {
                let g = |x: i64| (x as f64).powf(alpha);
                let direct = 0.5 * (-g(j + 2) + 4.0 * g(j + 1) - 6.0 * g(j) + 4.0 * g(j - 1) - g(j - 2));
                let series = rho_hat(j, hp(h));
                assert!((direct - series).abs() < 1e-11, "j={j} {direct} {series}");
            }
            for k in 4..40_i64 {
                let g = |x: i64| (x as f64).powf(alpha);
                let direct = 0.5 * (g(k + 1) - 2.0 * g(k) + g(k - 1));
                assert!((direct - fgn_autocovariance(k, h)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rho_hat_matches_step_inner_product_oracle() {
        let h = hp(0.7);
        let rho5 = rho_hat(5, h);
        for n in [8_u64, 20, 64] {
            let d1 = StepFunction::second_difference(n, 1).unwrap();
            let d6 = StepFunction::second_difference(n, 6).unwrap();
            let ip = inner_product_steps(&d1, &d6, h) * (n as f64).powf(1.4);
            assert!((ip - rho5).abs() < 1e-13);
            // the real-valued route is an independent check at small lags
            let real = real_inner_product(&d1.times(), d1.weights(), &d6.times(), d6.weights(), h);
            assert!((real * (n as f64).powf(1.4) - rho5).abs() < 1e-9);
        }
    }

    #[test]
    fn indicator_and_second_difference_norms() {
        for h in [0.6, 0.8] {
            let h = hp(h);
            for n in [4_u64, 16, 100] {
                let scale = (n as f64).powf(-h.alpha());
                for j in [1, n / 2, n - 1] {
                    let e = StepFunction::indicator(n, j).unwrap();
                    assert!((inner_product_steps(&e, &e, h) / scale - 1.0).abs() < 1e-13);
                    let d = StepFunction::second_difference(n, j).unwrap();
                    assert!((inner_product_steps(&d, &d, h) / scale - c0(h)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn grids_of_different_sizes_mix() {
        let h = hp(0.65);
        let a = StepFunction::on_grid(3, alloc::vec![0, 3], alloc::vec![1.0]).unwrap();
        let b = StepFunction::on_grid(4, alloc::vec![0, 4], alloc::vec![1.0]).unwrap();
        assert!((inner_product_steps(&a, &b, h) - 1.0).abs() < 1e-13);
        let c = StepFunction::on_grid(3, alloc::vec![1, 2], alloc::vec![1.0]).unwrap();
        let d = StepFunction::new(alloc::vec![1.0 / 3.0, 2.0 / 3.0], alloc::vec![1.0]).unwrap();
        assert!((inner_product_steps(&c, &b, h) - inner_product_steps(&d, &b, h)).abs() < 1e-13);
    }

    #[test]
    fn gram_of_second_differences_is_psd() {
        let h = hp(0.9);
        let n = 48;
        let fs: Vec<_> = (1..n).map(|j| StepFunction::second_difference(n, j).unwrap()).collect();
        let g = gram_matrix(&fs, h);
        assert!(crate::linalg::is_symmetric(&g, fs.len(), 1e-14));
        assert!(cholesky(&g, fs.len(), 1e-10).is_ok());
    }

    #[test]
    fn rejects_bad_step_functions() {
        assert!(StepFunction::new(alloc::vec![0.5, 0.2], alloc::vec![1.0]).is_err());
        assert!(StepFunction::new(alloc::vec![0.0, 1.0 + 1e-10], alloc::vec![1.0]).is_ok());
        assert!(StepFunction::new(alloc::vec![0.0, 1.1], alloc::vec![1.0]).is_err());
        assert!(StepFunction::new(alloc::vec![0.0, 0.5], alloc::vec![f64::INFINITY]).is_err());
        assert!(StepFunction::on_grid(4, alloc::vec![0, 5], alloc::vec![1.0]).is_err());
        assert!(StepFunction::second_difference(4, 4).is_err());
    }

    #[test]
    fn decay_is_power_law() {
        for h in [0.55, 0.75, 0.95] {
            let beta = 4.0 - 2.0 * h;
            let scaled = |j: i64| rho_hat(j, hp(h)).abs() * (j as f64).powf(beta);
            let at_1e3 = scaled(1000);
            let max = (10..=100_000).step_by(37).map(scaled).fold(0.0, f64::max);
            assert!(max.is_finite() && max < 2.0 * at_1e3.max(scaled(10)));
            assert!((scaled(100_000) / at_1e3 - 1.0).abs() < 0.01);
        }
    }

    proptest! {
        #[test]
        fn rho_hat_is_even(j in -100_000_i64..100_000, h in 0.51_f64..0.99) {
            prop_assert_eq!(rho_hat(j, hp(h)), rho_hat(-j, hp(h)));
        }

        #[test]
        fn covariance_is_symmetric(s in 0.0_f64..1.0, t in 0.0_f64..1.0, h in 0.51_f64..0.99) {
            let h = hp(h);
            prop_assert!((fbm_covariance(s, t, h).unwrap() - fbm_covariance(t, s, h).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn inner_product_is_bilinear_and_symmetric(
            w1 in proptest::collection::vec(-2.0_f64..2.0, 3),
            w2 in proptest::collection::vec(-2.0_f64..2.0, 2),
            h in 0.51_f64..0.99,
        ) {
            let h = hp(h);
            let a = StepFunction::on_grid(10, alloc::vec![0, 2, 5, 9], w1.clone()).unwrap();
            let b = StepFunction::on_grid(7, alloc::vec![1, 4, 7], w2).unwrap();
            let ab = inner_product_steps(&a, &b, h);
            prop_assert!((ab - inner_product_steps(&b, &a, h)).abs() < 1e-13);
            let a2 = StepFunction::on_grid(10, alloc::vec![0, 2, 5, 9], w1.iter().map(|w| 3.0 * w).collect()).unwrap();
            prop_assert!((inner_product_steps(&a2, &b, h) - 3.0 * ab).abs() < 1e-12);
        }
    }
}
