//! Oracle validation suite behind `pvexp wick-check`.

use pvexp_core::combinatorics::{mu, product_formula_coeff, validate_mixed_coeffs};
use pvexp_core::kernel::{gram_matrix, HurstParam, StepFunction};
use pvexp_core::variation::{additive_mean, additive_variance};
use pvexp_core::wick::{
    chaos_expectation_product, contraction_pattern_counts, isserlis_moment, product_identity_residual, ChaosTerm, GramContext,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::rng::{substream, NS_CHECK};

/// Largest `p`, `q` in the product-formula checks.
pub const PRODUCT_MAX: u32 = 5;
/// Largest `a1 + a2 + c` in the mixed-coefficient checks.
pub const MIXED_MAX: u32 = 8;
/// Random samples in the per-sample product identity check.
pub const IDENTITY_SAMPLES: usize = 1000;
pub const IDENTITY_TOL: f64 = 1e-9;

/// Adds one to `product_formula_coeff(p, q, r)` so that the suite must fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Perturbation {
    pub p: u32,
    pub q: u32,
    pub r: u32,
}

impl std::str::FromStr for Perturbation {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<u32> = s
            .split(',')
            .map(|x| x.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| crate::Error::Config(format!("perturbation must be P,Q,R with nonnegative integers, got '{s}'")))?;
        match v.as_slice() {
            &[p, q, r] => Ok(Self { p, q, r }),
            _ => Err(crate::Error::Config(format!("perturbation must have three entries, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WickReport {
    pub perturbation: Option<Perturbation>,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn check(name: &str, cases: usize, failures: Vec<String>) -> Check {
    Check { name: name.into(), cases, passed: failures.is_empty(), failures }
}

fn coeff_fn(perturb: Option<Perturbation>) -> impl Fn(u32, u32, u32) -> pvexp_core::Result<u128> {
    move |p, q, r| {
        let c = product_formula_coeff(p, q, r)?;
        Ok(match perturb {
            Some(x) if (x.p, x.q, x.r) == (p, q, r) => c + 1,
            _ => c,
        })
    }
}

pub fn product_formula(perturb: Option<Perturbation>) -> Result<Check> {
    let coeff = coeff_fn(perturb);
    let mut failures = Vec::new();
    let mut cases = 0;
    for p in 0..=PRODUCT_MAX {
        for q in 0..=PRODUCT_MAX {
            let counts = contraction_pattern_counts(&[p], &[q])?;
            for r in 0..=p.min(q) {
                cases += 1;
                let got = coeff(p, q, r)?;
                let want = counts.get(&vec![r]).copied().unwrap_or(0);
                if got != want {
                    failures.push(format!("({p},{q},{r}): formula {got}, pairings {want}"));
                }
            }
        }
    }
    Ok(check("product_formula_coeff", cases, failures))
}

pub fn mixed() -> Result<Check> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for total in 0..=MIXED_MAX {
        for a1 in 0..=total {
            for a2 in 0..=total - a1 {
                let c = total - a1 - a2;
                cases += 1;
                if let Err(e) = validate_mixed_coeffs(a1, a2, c) {
                    failures.push(e.to_string());
                }
            }
        }
    }
    Ok(check("mixed_contraction_coeffs", cases, failures))
}

fn random_gram<R: Rng>(rng: &mut R) -> GramContext {
    let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.3..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.3..2.0));
    GramContext::unnamed(vec![a * a, a * b, a * b, b * b + c * c]).expect("Gram of two vectors is PSD")
}

fn product_identity(perturb: Option<Perturbation>, seed: u64) -> Result<Check> {
    let coeff = coeff_fn(perturb);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for s in 0..IDENTITY_SAMPLES {
        let mut rng = substream(seed, NS_CHECK, s as u64);
        let ctx = random_gram(&mut rng);
        let z: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
        let y = ctx.correlate(&z)?;
        let (p, q) = ((s as u32) % (PRODUCT_MAX + 1), (s as u32 / (PRODUCT_MAX + 1)) % (PRODUCT_MAX + 1));
        let res = product_identity_residual(p, q, &ctx, &y, &coeff)?;
        worst = worst.max(res);
        if res > IDENTITY_TOL && failures.len() < 10 {
            failures.push(format!("sample {s}, (p,q)=({p},{q}): relative residual {res:e}"));
        }
    }
    let mut c = check("per_sample_product_identity", IDENTITY_SAMPLES, failures);
    c.name = format!("{} (worst {worst:e})", c.name);
    Ok(c)
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-300)
}

fn exact_expectations() -> Result<Check> {
    let ctx = GramContext::unnamed(vec![1.5, 0.4, 0.4, 0.9])?;
    let (ff, fg, gg) = (1.5, 0.4, 0.9);
    let cases: Vec<(&str, f64, f64)> = vec![
        ("E[f^2]", isserlis_moment(&ctx, &[2, 0])?, ff),
        ("E[f^3]", isserlis_moment(&ctx, &[3, 0])?, 0.0),
        ("E[f^4]", isserlis_moment(&ctx, &[4, 0])?, 3.0 * ff * ff),
        ("E[I1(f)^2]", chaos_expectation_product(&[ChaosTerm::new(vec![1, 0]), ChaosTerm::new(vec![1, 0])], &ctx)?, ff),
        ("E[I2(f f)^2]", chaos_expectation_product(&[ChaosTerm::new(vec![2, 0]), ChaosTerm::new(vec![2, 0])], &ctx)?, 2.0 * ff * ff),
        (
            "E[I1(f) I1(g) I2(f g)]",
            chaos_expectation_product(&[ChaosTerm::new(vec![1, 0]), ChaosTerm::new(vec![0, 1]), ChaosTerm::new(vec![1, 1])], &ctx)?,
            ff * gg + fg * fg,
        ),
    ];
    let failures = cases
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-12 * want.abs().max(1.0))
        .map(|(name, got, want)| format!("{name}: {got} vs {want}"))
        .collect();
    Ok(check("exact_expectations", cases.len(), failures))
}

/// `E[S_n]` and `Var(S_n)` of the additive model at small `n` by Isserlis.
pub fn additive_moments() -> Result<Check> {
    let h = HurstParam::new(0.7)?;
    let sigma: f64 = 1.3;
    let mut failures = Vec::new();
    let mut cases = 0;
    for k in [1u32, 2] {
        for n in [8u64, 32] {
            let ds: Vec<StepFunction> = (1..n).map(|j| StepFunction::second_difference(n, j)).collect::<pvexp_core::Result<_>>()?;
            let gram = gram_matrix(&ds, h);
            let len = ds.len();
            let scale = (n as f64).powf(2.0 * f64::from(k) * h.value() - 1.0) * sigma.powi(2 * k as i32);
            let (mut mean, mut second) = (0.0, 0.0);
            for i in 0..len {
                let one = GramContext::unnamed(vec![gram[i * len + i]])?;
                mean += isserlis_moment(&one, &[2 * k])?;
                for j in 0..len {
                    second += if i == j {
                        isserlis_moment(&one, &[4 * k])?
                    } else {
                        let pair = vec![gram[i * len + i], gram[i * len + j], gram[j * len + i], gram[j * len + j]];
                        isserlis_moment(&GramContext::unnamed(pair)?, &[2 * k, 2 * k])?
                    };
                }
            }
            let (mean, second) = (scale * mean, scale * scale * second);
            let want_mean = additive_mean(n as usize, k, h, sigma)?;
            let want_var = additive_variance(n as usize, k, h, sigma)?;
            cases += 2;
            if !close(mean, want_mean, 1e-10) {
                failures.push(format!("E[S_n] k={k} n={n}: {mean} vs {want_mean}"));
            }
            if (second - mean * mean - want_var).abs() > 1e-10 * second {
                failures.push(format!("Var(S_n) k={k} n={n}: {} vs {want_var}", second - mean * mean));
            }
        }
    }
    Ok(check("additive_moments", cases, failures))
}

/// `x^{2k} = sum_l mu_{2k,2l} :x^{2l}:` tested through `E[x^{2k} :x^{2l}:]`.
fn mu_expansion() -> Result<Check> {
    let h = HurstParam::new(0.8)?;
    let c = pvexp_core::kernel::c0(h);
    let ctx = GramContext::unnamed(vec![c])?;
    let mut failures = Vec::new();
    let mut cases = 0;
    for k in 1..=3u32 {
        for l in 0..=k {
            cases += 1;
            let poly = pvexp_core::wick::chaos_polynomial(&ChaosTerm::new(vec![2 * l]), &ctx)?;
            let mut e = 0.0;
            for (m, coef) in poly.iter() {
                e += coef * isserlis_moment(&ctx, &[m[0] + 2 * k])?;
            }
            let want = mu(k, l, h)? * pvexp_core::combinatorics::factorial(2 * l)? as f64 * c.powi(2 * l as i32);
            if !close(e, want, 1e-10) {
                failures.push(format!("mu({k},{l}): {e} vs {want}"));
            }
        }
    }
    Ok(check("mu_table", cases, failures))
}

/// Runs every check.
pub fn run_suite(perturb: Option<Perturbation>, seed: u64) -> Result<WickReport> {
    let checks = vec![
        product_formula(perturb)?,
        mixed()?,
        product_identity(perturb, seed)?,
        exact_expectations()?,
        additive_moments()?,
        mu_expansion()?,
    ];
    let pass = checks.iter().all(|c| c.passed);
    Ok(WickReport { perturbation: perturb, seed, checks, pass })
}
