use std::collections::BTreeMap;

use pvexp_core::combinatorics::{
    binomial, c_g_infinity, c_tau, c_tau_terms, factorial, finite_square_sum, finite_triple_sum, mu, mu_integer, rho_double_sum,
    rho_power_sum,
};
use pvexp_core::kernel::{c0, inner_product_steps, rho_hat, HurstParam, StepFunction};
use pvexp_core::variation::{additive_mean, additive_variance};
use pvexp_core::wick::{isserlis_moment, GramContext};

fn hp(v: f64) -> HurstParam {
    HurstParam::new(v).unwrap()
}

/// Coefficients of the third cumulant of `sum_l mu_{2k,2l} :Y^{2l}:` summed
/// over three lattice points, grouped by sorted exponent triple of
/// `rho_hat(i1)^x rho_hat(i2)^y rho_hat(i2 - i1)^z`. Keys carry the `c0`
/// power; values are exact integers. Equals `2 C_tau` after summation.
fn cumulant_coefficients(k: u32) -> BTreeMap<([u32; 3], u32), u128> {
    let mut out = BTreeMap::new();
    for l1 in 1..=k {
        for l2 in 1..=k {
            for l3 in 1..=k {
                let (a, b, c) = (2 * l1, 2 * l2, 2 * l3);
                if (a + b + c) % 2 == 1 {
                    continue;
                }
                let half = (a + b + c) / 2;
                if half < a || half < b || half < c {
                    continue;
                }
                // x + y = a, x + z = b, y + z = c
                let (x, y, z) = (half - c, half - b, half - a);
                let mut key = [x, y, z];
                key.sort_unstable();
                let ints = mu_integer(k, l1).unwrap() * mu_integer(k, l2).unwrap() * mu_integer(k, l3).unwrap();
                let comb = factorial(a).unwrap() * factorial(b).unwrap() * factorial(c).unwrap()
                    / (factorial(x).unwrap() * factorial(y).unwrap() * factorial(z).unwrap());
                // connected diagrams need at least two non-empty edges
                if [x, y, z].iter().filter(|&&e| e > 0).count() < 2 {
                    continue;
                }
                *out.entry((key, 3 * k - l1 - l2 - l3)).or_insert(0) += ints * comb;
            }
        }
    }
    out
}

fn d_sum(key: [u32; 3], h: HurstParam) -> f64 {
    // D is symmetric; put the largest exponent on the lone i1 factor
    let [a, b, c] = key;
    rho_double_sum(c - 1, a, b, h, 1e-9).unwrap().value
}

#[test]
fn cumulant_coefficients_k2_frozen() {
    // halved: these are the coefficients of C_tau itself
    let got: BTreeMap<_, _> = cumulant_coefficients(2).into_iter().map(|(key, v)| (key, v / 2)).collect();
    let want: BTreeMap<([u32; 3], u32), u128> =
        BTreeMap::from([(([0, 2, 2], 2), 1296), (([1, 1, 1], 3), 864), (([1, 1, 3], 1), 1728), (([2, 2, 2], 0), 864)]);
    assert_eq!(got, want);
}

#[test]
fn c_tau_matches_third_cumulant() {
    for k in 1..=3 {
        for h in [0.6, 0.75, 0.9] {
            let h = hp(h);
            let oracle: f64 =
                cumulant_coefficients(k).iter().map(|(&(key, p), &c)| c as f64 * c0(h).powi(p as i32) * d_sum(key, h)).sum::<f64>() / 2.0;
            let ct = c_tau(k, h, 1e-7 * 10f64.powi(2 * k as i32)).unwrap();
            assert!((ct.value - oracle).abs() < 1e-6 * oracle.abs().max(1.0), "k={k} {} vs {oracle}", ct.value);
        }
    }
}

#[test]
fn c_tau_grouped_coefficients_are_half_the_cumulant() {
    for k in 1..=4 {
        let h = hp(0.7);
        let (_, terms) = c_tau_terms(k, h, 1e3).unwrap();
        let mut grouped: BTreeMap<([u32; 3], u32), u128> = BTreeMap::new();
        for t in terms {
            let mut key = [t.index.lambda.m + 1, t.index.lambda.q1(), t.index.lambda.q2()];
            key.sort_unstable();
            *grouped.entry((key, t.coefficient.c0_power)).or_insert(0) += t.coefficient.integer;
        }
        let oracle: BTreeMap<_, _> = cumulant_coefficients(k).into_iter().map(|(key, v)| (key, v / 2)).collect();
        assert_eq!(grouped, oracle, "k={k}");
    }
}

#[test]
fn c_tau_k1_is_four_triple_sums() {
    for h in [0.6, 0.75] {
        let h = hp(h);
        let d = rho_double_sum(0, 1, 1, h, 1e-9).unwrap();
        assert!((c_tau(1, h, 1e-9).unwrap().value - 4.0 * d.value).abs() < 1e-8);
        let finite = 4.0 * finite_triple_sum(2048, h);
        assert!((finite / (4.0 * d.value) - 1.0).abs() < 0.02);
    }
}

#[test]
fn c_g_infinity_is_limit_of_scaled_variance() {
    for k in 1..=3 {
        let h = hp(0.65);
        let cg = c_g_infinity(k, h, 1e-9).unwrap().value;
        let alt: f64 = (1..=k)
            .map(|l| {
                let m = mu(k, l, h).unwrap();
                factorial(2 * l).unwrap() as f64 * m * m * rho_power_sum(2 * l, h, 1e-10).unwrap().value
            })
            .sum();
        assert!((cg - alt).abs() < 1e-8 * cg);
        let n = 4096;
        let scaled = n as f64 * additive_variance(n, k, h, 1.0).unwrap();
        assert!((scaled / cg - 1.0).abs() < 0.01, "k={k} {scaled} {cg}");
    }
    let h = hp(0.75);
    let n = 4096_u64;
    let finite = 2.0 * finite_square_sum(n, h);
    assert!((finite / c_g_infinity(1, h, 1e-9).unwrap().value - 1.0).abs() < 0.02);
}

#[test]
fn kernel_identity_holds_on_every_pair() {
    for n in [4_u64, 16, 64, 257] {
        for h in [0.55, 0.75, 0.95] {
            let h = hp(h);
            let scale = (n as f64).powf(-h.alpha());
            let ds: Vec<_> = (1..n).map(|j| StepFunction::second_difference(n, j).unwrap()).collect();
            for (i, a) in ds.iter().enumerate() {
                for (j, b) in ds.iter().enumerate().skip(i) {
                    let got = inner_product_steps(a, b, h);
                    let want = scale * rho_hat(j as i64 - i as i64, h);
                    assert!((got - want).abs() < 1e-12 * scale * c0(h), "n={n} {i} {j}");
                }
            }
        }
    }
}

fn second_difference_gram(n: u64, h: HurstParam, js: &[u64]) -> GramContext {
    let fs: Vec<_> = js.iter().map(|&j| StepFunction::second_difference(n, j).unwrap()).collect();
    GramContext::unnamed(pvexp_core::kernel::gram_matrix(&fs, h)).unwrap()
}

#[test]
fn exact_moments_of_additive_variation_via_wick() {
    let h = hp(0.7);
    let sigma: f64 = 1.3;
    for k in [1_u32, 2] {
        for n in [8_u64, 32] {
            let scale = (n as f64).powf(2.0 * k as f64 * 0.7 - 1.0) * sigma.powi(2 * k as i32);
            let mut mean = 0.0;
            let mut second = 0.0;
            for j1 in 1..n {
                let ctx = second_difference_gram(n, h, &[j1]);
                mean += isserlis_moment(&ctx, &[2 * k]).unwrap();
                for j2 in 1..n {
                    let m = if j1 == j2 {
                        isserlis_moment(&ctx, &[4 * k]).unwrap()
                    } else {
                        isserlis_moment(&second_difference_gram(n, h, &[j1, j2]), &[2 * k, 2 * k]).unwrap()
                    };
                    second += m;
                }
            }
            let (mean, second) = (scale * mean, scale * scale * second);
            let want_mean = additive_mean(n as usize, k, h, sigma).unwrap();
            let want_var = additive_variance(n as usize, k, h, sigma).unwrap();
            assert!((mean - want_mean).abs() < 1e-10 * want_mean, "k={k} n={n}");
            assert!((second - mean * mean - want_var).abs() < 1e-10 * second, "k={k} n={n}");
        }
    }
}

#[test]
fn mu_expands_even_powers_into_wick_powers() {
    // x^{2k} = sum_l mu_{2k,2l} :x^{2l}: for x ~ N(0, c0): check E[x^{2k} :x^{2l}:] = mu (2l)! c0^{2l}
    let h = hp(0.8);
    let c = c0(h);
    let ctx = GramContext::unnamed(vec![c]).unwrap();
    for k in 1..=3 {
        for l in 0..=k {
            let poly = pvexp_core::wick::chaos_polynomial(&pvexp_core::wick::ChaosTerm::new(vec![2 * l]), &ctx).unwrap();
            let e: f64 = poly.iter().map(|(m, coef)| coef * isserlis_moment(&ctx, &[m[0] + 2 * k]).unwrap()).sum();
            let want = mu(k, l, h).unwrap() * factorial(2 * l).unwrap() as f64 * c.powi(2 * l as i32);
            assert!((e - want).abs() < 1e-10 * want.abs(), "k={k} l={l}");
        }
    }
    assert_eq!(binomial(6, 2).unwrap(), 15);
}
