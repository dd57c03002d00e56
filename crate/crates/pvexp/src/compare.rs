//! Density tables and the KS comparison of simulated `Z_n` against the
//! baseline and corrected CDFs.

use pvexp_core::expansion::{baseline_cdf, baseline_density, expansion_cdf, expansion_density, z_grid, ExpansionEnsemble};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{DensityRow, Meta};
use crate::stats::{bootstrap_ks_difference, ks_sorted, percentile_ci};

/// Fewest `Z_n` samples accepted by [`compare`].
pub const MIN_SAMPLES: usize = 1000;

/// `p_0`, `p_n`, `F_0`, `F_n` on the ensemble's z-grid.
pub fn density_table(ens: &ExpansionEnsemble, n: usize, width: f64, points: usize) -> Result<Vec<DensityRow>> {
    z_grid(ens, width, points)
        .into_par_iter()
        .map(|z| {
            Ok(DensityRow {
                z,
                p_baseline: baseline_density(z, ens),
                p_corrected: expansion_density(z, ens, n)?,
                f_baseline: baseline_cdf(z, ens),
                f_corrected: expansion_cdf(z, ens, n)?,
            })
        })
        .collect()
}

/// Piecewise-linear interpolation of a tabulated CDF, held constant
/// outside the table.
fn interpolate(rows: &[DensityRow], x: f64, pick: impl Fn(&DensityRow) -> f64) -> f64 {
    let i = rows.partition_point(|r| r.z <= x);
    if i == 0 {
        return pick(&rows[0]);
    }
    if i == rows.len() {
        return pick(&rows[rows.len() - 1]);
    }
    let (a, b) = (&rows[i - 1], &rows[i]);
    let t = (x - a.z) / (b.z - a.z);
    pick(a) + t * (pick(b) - pick(a))
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub experiment: Meta,
    pub samples: usize,
    pub bootstrap: usize,
    pub ks_baseline: f64,
    pub ks_corrected: f64,
    /// `ks_corrected - ks_baseline`.
    pub difference: f64,
    /// 95% percentile bootstrap interval of the difference.
    pub ci: (f64, f64),
    pub corrected_is_closer: bool,
    /// Upper end of the interval below zero.
    pub improvement_significant: bool,
    pub pass: bool,
}

/// KS distances of `z` to the tabulated `F_0` and `F_n`, and a bootstrap
/// interval of their difference.
pub fn compare(z_meta: &Meta, z: &[f64], table_meta: &Meta, rows: &[DensityRow], bootstrap: usize, seed: u64) -> Result<ComparisonReport> {
    z_meta.check_compatible(table_meta)?;
    if z.len() < MIN_SAMPLES {
        return Err(Error::Config(format!("comparison needs at least {MIN_SAMPLES} Z_n samples, got {}", z.len())));
    }
    if rows.len() < 2 {
        return Err(Error::Config("density table needs at least two rows".into()));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let f0: Vec<f64> = sorted.iter().map(|&x| interpolate(rows, x, |r| r.f_baseline)).collect();
    let f1: Vec<f64> = sorted.iter().map(|&x| interpolate(rows, x, |r| r.f_corrected)).collect();
    let (ks_baseline, ks_corrected) = (ks_sorted(&f0), ks_sorted(&f1));
    let difference = ks_corrected - ks_baseline;
    let ci =
        if bootstrap == 0 { (difference, difference) } else { percentile_ci(bootstrap_ks_difference(&f0, &f1, bootstrap, seed), 0.95) };
    let corrected_is_closer = difference < 0.0;
    let improvement_significant = ci.1 < 0.0;
    Ok(ComparisonReport {
        experiment: z_meta.clone(),
        samples: z.len(),
        bootstrap,
        ks_baseline,
        ks_corrected,
        difference,
        ci,
        corrected_is_closer,
        improvement_significant,
        pass: corrected_is_closer && improvement_significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pvexp_core::expansion::{normal_cdf, normal_density, PathFunctionals};
    use pvexp_core::HurstParam;
    use rand_distr::{Distribution, StandardNormal};

    fn meta() -> Meta {
        Meta { model: "additive".into(), n: 128, k: 1, hurst: 0.7, seed: 1 }
    }

    fn gaussian_rows(shift: f64) -> Vec<DensityRow> {
        (0..=1600)
            .map(|i| {
                let z = -8.0 + 0.01 * i as f64;
                DensityRow {
                    z,
                    p_baseline: normal_density(z, 1.0),
                    p_corrected: normal_density(z - shift, 1.0),
                    f_baseline: normal_cdf(z, 1.0),
                    f_corrected: normal_cdf(z - shift, 1.0),
                }
            })
            .collect()
    }

    fn normals(n: usize, shift: f64) -> Vec<f64> {
        let mut rng = crate::rng::substream(3, 0, 0);
        (0..n).map(|_| shift + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
    }

    #[test]
    fn shifted_sample_prefers_shifted_cdf() {
        let r = compare(&meta(), &normals(5000, 0.15), &meta(), &gaussian_rows(0.15), 200, 1).unwrap();
        assert!(r.ks_baseline > 0.04 && r.ks_corrected < 0.03);
        assert!(r.ci.0 <= r.ci.1 && r.pass);
        let r = compare(&meta(), &normals(5000, 0.0), &meta(), &gaussian_rows(0.15), 200, 1).unwrap();
        assert!(!r.pass);
        assert!((0.0..=1.0).contains(&r.ks_baseline) && (0.0..=1.0).contains(&r.ks_corrected));
    }

    #[test]
    fn rejects_mismatch_and_small_samples() {
        let other = Meta { n: 64, ..meta() };
        assert!(matches!(compare(&meta(), &normals(2000, 0.0), &other, &gaussian_rows(0.0), 0, 1), Err(Error::MetadataMismatch { .. })));
        assert!(compare(&meta(), &normals(10, 0.0), &meta(), &gaussian_rows(0.0), 0, 1).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_clamped() {
        let rows = gaussian_rows(0.0);
        assert_eq!(interpolate(&rows, rows[10].z, |r| r.f_baseline), rows[10].f_baseline);
        assert_eq!(interpolate(&rows, -100.0, |r| r.f_baseline), rows[0].f_baseline);
        assert_eq!(interpolate(&rows, 100.0, |r| r.f_baseline), rows[1600].f_baseline);
        assert!((interpolate(&rows, 0.005, |r| r.f_baseline) - normal_cdf(0.005, 1.0)).abs() < 1e-5);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let h = HurstParam::new(0.7).unwrap();
        let recs = vec![PathFunctionals { v: 1.0, a3: 1.0, c1: -0.5 }, PathFunctionals { v: 2.0, a3: 0.5, c1: -1.0 }];
        let ens = ExpansionEnsemble::new(1, h, 3.0, recs).unwrap();
        let rows = density_table(&ens, 64, 8.0, 101).unwrap();
        assert_eq!(rows.len(), 101);
        let mid = rows[50];
        assert!(mid.z.abs() < 1e-12 && (mid.f_baseline - 0.5).abs() < 1e-12);
        assert_eq!(mid.p_corrected, expansion_density(mid.z, &ens, 64).unwrap());
    }
}
