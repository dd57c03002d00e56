//! Sample moments, Kolmogorov–Smirnov distances and bootstrap intervals.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::{substream, NS_BOOTSTRAP};

/// Sample mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// `sup |F_emp - F|` for ascending samples with `cdf[i] = F(sorted[i])`.
pub fn ks_sorted(cdf: &[f64]) -> f64 {
    let m = cdf.len() as f64;
    cdf.iter().enumerate().map(|(i, f)| ((i + 1) as f64 / m - f).max(f - i as f64 / m)).fold(0.0, f64::max)
}

/// KS distance of a sample against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let values: Vec<f64> = s.iter().map(|&x| cdf(x)).collect();
    ks_sorted(&values)
}

/// Kolmogorov tail `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = f64::from(j);
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a KS distance `d` with effective sample size `n`.
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// Two-sample KS distance and p-value.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    (d, ks_pvalue(d, na * nb / (na + nb)))
}

/// Empirical quantile by linear interpolation of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Central percentile interval of the replicates at level `level`.
pub fn percentile_ci(mut replicates: Vec<f64>, level: f64) -> (f64, f64) {
    replicates.sort_by(f64::total_cmp);
    let a = 0.5 * (1.0 - level);
    (quantile(&replicates, a), quantile(&replicates, 1.0 - a))
}

/// Bootstrap replicates of `KS(F_1) - KS(F_0)` for one sample, with
/// `f0[i]`, `f1[i]` the two CDFs at the `i`-th smallest observation.
///
/// Each replicate draws multinomial counts over the sorted observations, so
/// no re-sorting is needed.
pub fn bootstrap_ks_difference(f0: &[f64], f1: &[f64], resamples: usize, seed: u64) -> Vec<f64> {
    let m = f0.len();
    (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, NS_BOOTSTRAP, b as u64);
            let mut counts = vec![0u32; m];
            for _ in 0..m {
                counts[rng.gen_range(0..m)] += 1;
            }
            let (mut d0, mut d1, mut seen) = (0.0_f64, 0.0_f64, 0u64);
            for (i, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let below = seen as f64 / m as f64;
                seen += u64::from(c);
                let above = seen as f64 / m as f64;
                d0 = d0.max(above - f0[i]).max(f0[i] - below);
                d1 = d1.max(above - f1[i]).max(f1[i] - below);
            }
            d1 - d0
        })
        .collect()
}
