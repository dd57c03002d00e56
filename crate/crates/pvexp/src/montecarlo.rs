//! Parallel path ensembles. Path `i` uses the substream `(seed, ns, i)` and
//! results are collected in index order, so outputs do not depend on the
//! thread count.

use pvexp_core::combinatorics::{c_g_infinity, c_tau};
use pvexp_core::expansion::{path_functionals_with, ExpansionEnsemble};
use pvexp_core::sde::{euler_solve, GridPath, SdeModel};
use pvexp_core::variation::{variation_of_path, VariationResult};
use pvexp_core::HurstParam;
use rayon::prelude::*;

use crate::error::Result;
use crate::fbm::{cumulative, FgnSampler, Method};
use crate::rng::{substream, NS_EXPANSION, NS_Z};

/// Absolute tolerance for the limit constants used by the drivers.
pub const CONSTANT_TOL: f64 = 1e-8;

/// Shared settings of a path ensemble.
#[derive(Debug, Clone)]
pub struct PathSpec {
    pub model: SdeModel,
    pub k: u32,
    pub hurst: HurstParam,
    /// Coarse grid size.
    pub n: usize,
    /// Fine steps per coarse step.
    pub kappa: usize,
    pub x0: f64,
    pub method: Method,
}

impl PathSpec {
    pub fn fine_steps(&self) -> usize {
        self.n * self.kappa
    }

    /// Euler path driven by substream `(seed, namespace, index)`.
    pub fn path(&self, seed: u64, namespace: u8, index: u64) -> Result<GridPath> {
        let sampler = FgnSampler::cached(self.fine_steps(), self.hurst.value(), self.method)?;
        let b = cumulative(&sampler.sample(&mut substream(seed, namespace, index)));
        Ok(euler_solve(&self.model, &b, self.x0, self.kappa)?)
    }
}

/// `S_n`, `S_inf`, `Z_n` for `paths` independent paths.
pub fn simulate_variations(spec: &PathSpec, paths: usize, seed: u64) -> Result<Vec<VariationResult>> {
    FgnSampler::cached(spec.fine_steps(), spec.hurst.value(), spec.method)?;
    (0..paths as u64).into_par_iter().map(|i| Ok(variation_of_path(&spec.path(seed, NS_Z, i)?, &spec.model, spec.k, spec.hurst)?)).collect()
}

/// `Z_n` samples only.
pub fn simulate_z(spec: &PathSpec, paths: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(simulate_variations(spec, paths, seed)?.into_iter().map(|r| r.z_n).collect())
}

/// Ensemble of `(v, a3, c1)` records on streams disjoint from [`simulate_z`].
pub fn expansion_ensemble(spec: &PathSpec, paths: usize, seed: u64) -> Result<ExpansionEnsemble> {
    let c_g = c_g_infinity(spec.k, spec.hurst, CONSTANT_TOL)?.value;
    let ct = c_tau(spec.k, spec.hurst, constant_tol(spec.k))?.value;
    FgnSampler::cached(spec.fine_steps(), spec.hurst.value(), spec.method)?;
    let records = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = spec.path(seed, NS_EXPANSION, i)?;
            path_functionals_with(&path, &spec.model, spec.k, spec.hurst, c_g).map_err(|e| match e {
                pvexp_core::Error::DegenerateVariance { value, .. } => {
                    pvexp_core::Error::DegenerateVariance { path: i as usize, value }.into()
                }
                e => e.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpansionEnsemble::new(spec.k, spec.hurst, ct, records)?)
}

/// Tolerance for `C_tau` scaled to its magnitude, which grows like `10^{2k}`.
pub fn constant_tol(k: u32) -> f64 {
    CONSTANT_TOL * 10f64.powi(2 * k as i32)
}
