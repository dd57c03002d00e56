//! Closed-form constants of the expansion.
//!
//! Integer quantities are exact (`u128`, overflow is an error); only powers
//! of `c0` and sums of powers of `rho_hat` are floating point. Every
//! truncated lattice sum comes with a certified bound on the discarded tail.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::kernel::{c0, rho_hat, HurstParam};
use crate::{Error, Result};

fn overflow() -> Error {
    Error::InvalidArgument("integer overflow in exact combinatorics".into())
}

fn mul(a: u128, b: u128) -> Result<u128> {
    a.checked_mul(b).ok_or_else(overflow)
}

/// `m!!` with `(-1)!! = 0!! = 1`.
pub fn double_factorial(m: i64) -> Result<u128> {
    if m < -1 {
        return Err(Error::InvalidArgument(format!("double factorial of {m}")));
    }
    let mut acc: u128 = 1;
    let mut i = m;
    while i > 1 {
        acc = mul(acc, i as u128)?;
        i -= 2;
    }
    Ok(acc)
}

pub fn factorial(n: u32) -> Result<u128> {
    (1..=u128::from(n)).try_fold(1u128, mul)
}

/// `C(n, r)`, zero when `r > n`.
pub fn binomial(n: u32, r: u32) -> Result<u128> {
    if r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = mul(acc, u128::from(n - i))? / u128::from(i + 1);
    }
    Ok(acc)
}

/// Integer part of `mu_{2k,2l}`: `C(2k, 2l) (2k - 2l - 1)!!`.
pub fn mu_integer(k: u32, l: u32) -> Result<u128> {
    if l > k {
        return Err(Error::InvalidArgument(format!("mu requires l <= k, got l={l}, k={k}")));
    }
    mul(binomial(2 * k, 2 * l)?, double_factorial(2 * i64::from(k - l) - 1)?)
}

/// `mu_{2k,2l} = C(2k, 2l) (2k - 2l - 1)!! c0^{k-l}`.
pub fn mu(k: u32, l: u32, h: HurstParam) -> Result<f64> {
    Ok(mu_integer(k, l)? as f64 * libm::pow(c0(h), f64::from(k - l)))
}

/// Coefficient of the `r`-fold contraction in `I_p(f^p) I_q(g^q)`:
/// `r! C(p, r) C(q, r)`.
pub fn product_formula_coeff(p: u32, q: u32, r: u32) -> Result<u128> {
    if r > p.min(q) {
        return Err(Error::InvalidArgument(format!("contraction order {r} exceeds min({p}, {q})")));
    }
    mul(mul(factorial(r)?, binomial(p, r)?)?, binomial(q, r)?)
}

/// Coefficients of `<f1,g>^{pi1} <f2,g>^{pi2} I(f1^{a1-pi1} f2^{a2-pi2} g^{c-r})`
/// in the product `I_{a1+a2}(f1^{a1} f2^{a2}) I_c(g^c)`, keyed by `(pi1, pi2)`.
///
/// The two-factor product formula contracts `r = pi1 + pi2` slots of the
/// symmetrized left kernel; a fraction `C(a1,pi1) C(a2,pi2) / C(a1+a2, r)` of
/// those slot choices has the pattern `(pi1, pi2)`.
pub fn mixed_contraction_coeffs(a1: u32, a2: u32, c: u32) -> Result<BTreeMap<(u32, u32), u128>> {
    let p = a1 + a2;
    let mut out = BTreeMap::new();
    for pi1 in 0..=a1 {
        for pi2 in 0..=a2 {
            let r = pi1 + pi2;
            if r > c {
                continue;
            }
            let split = mul(binomial(a1, pi1)?, binomial(a2, pi2)?)?;
            let total = mul(product_formula_coeff(p, c, r)?, split)?;
            let ways = binomial(p, r)?;
            debug_assert_eq!(total % ways, 0);
            out.insert((pi1, pi2), total / ways);
        }
    }
    Ok(out)
}

/// Checks [`mixed_contraction_coeffs`] against brute-force enumeration of
/// partial matchings in the wick oracle.
pub fn validate_mixed_coeffs(a1: u32, a2: u32, c: u32) -> Result<()> {
    let symbolic = mixed_contraction_coeffs(a1, a2, c)?;
    let counted = crate::wick::contraction_pattern_counts(&[a1, a2], &[c])?;
    for (&(pi1, pi2), &coeff) in &symbolic {
        let key = alloc::vec![pi1, pi2];
        let oracle = counted.get(&key).copied().unwrap_or(0);
        if oracle != coeff {
            return Err(Error::OracleMismatch(format!(
                "mixed coefficient ({a1},{a2},{c}) at ({pi1},{pi2}): symbolic {coeff}, oracle {oracle}"
            )));
        }
    }
    if counted.len() != symbolic.len() {
        return Err(Error::OracleMismatch(format!("mixed coefficient ({a1},{a2},{c}): pattern sets differ")));
    }
    Ok(())
}

/// Element `(l1, l2, m)` of the index set Lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LambdaIndex {
    pub l1: u32,
    pub l2: u32,
    pub m: u32,
}

impl LambdaIndex {
    pub fn new(k: u32, l1: u32, l2: u32, m: u32) -> Result<Self> {
        if l1 == 0 || l2 == 0 || l1 > k || l2 > k || m > (2 * l1 - 1).min(2 * l2 - 1) {
            return Err(Error::InvalidArgument(format!("({l1},{l2},{m}) is not in Lambda for k={k}")));
        }
        Ok(Self { l1, l2, m })
    }

    pub fn q1(&self) -> u32 {
        2 * self.l1 - 1 - self.m
    }

    pub fn q2(&self) -> u32 {
        2 * self.l2 - 1 - self.m
    }

    /// `l1 + l2 - 1 - m == 0`, i.e. `l1 == l2` and `m = 2 l1 - 1`.
    pub fn is_zero_class(&self) -> bool {
        self.l1 + self.l2 == 1 + self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SharpClass {
    /// `q1 > 0` and `q2 > 0`.
    Both,
    /// `q1 > 0`, `q2 = 0`.
    First,
    /// `q1 = 0`, `q2 > 0`.
    Second,
}

impl SharpClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::Both => "#0",
            Self::First => "#1",
            Self::Second => "#2",
        }
    }
}

/// Element of Lambda_+ together with `l3`, `2 l3 = q1 + q2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SharpIndex {
    pub lambda: LambdaIndex,
    pub l3: u32,
    pub class: SharpClass,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LambdaSets {
    pub all: Vec<LambdaIndex>,
    pub zero: Vec<LambdaIndex>,
    pub plus: Vec<LambdaIndex>,
    pub sharp: Vec<SharpIndex>,
}

/// Enumerates Lambda, its partition into Lambda_0 and Lambda_+, and the
/// sharp set of Lambda_+ elements admitting `l3 in [k]` with `2 l3 = q1 + q2`.
pub fn lambda_sets(k: u32) -> Result<LambdaSets> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut sets = LambdaSets::default();
    for l1 in 1..=k {
        for l2 in 1..=k {
            for m in 0..=(2 * l1 - 1).min(2 * l2 - 1) {
                let idx = LambdaIndex { l1, l2, m };
                sets.all.push(idx);
                if idx.is_zero_class() {
                    sets.zero.push(idx);
                    continue;
                }
                sets.plus.push(idx);
                let (q1, q2) = (idx.q1(), idx.q2());
                let s = q1 + q2;
                if s % 2 == 0 && s / 2 >= 1 && s / 2 <= k {
                    let class = match (q1 > 0, q2 > 0) {
                        (true, true) => SharpClass::Both,
                        (true, false) => SharpClass::First,
                        (false, true) => SharpClass::Second,
                        (false, false) => unreachable!("Lambda_+ has q1 + q2 > 0"),
                    };
                    sets.sharp.push(SharpIndex { lambda: idx, l3: s / 2, class });
                }
            }
        }
    }
    Ok(sets)
}

/// A constant `integer * c0^{c0_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactConstant {
    pub integer: u128,
    pub c0_power: u32,
}

impl ExactConstant {
    pub fn value(&self, h: HurstParam) -> f64 {
        self.integer as f64 * libm::pow(c0(h), f64::from(self.c0_power))
    }
}

/// `c_{l1,l2,m} = 2 l1 mu_{2k,2l1} mu_{2k,2l2} r!C(2l1-1,m)C(2l2-1,m)` at `r = m`.
pub fn lambda_coefficient(k: u32, idx: LambdaIndex) -> Result<ExactConstant> {
    let integer = mul(
        mul(u128::from(2 * idx.l1), mul(mu_integer(k, idx.l1)?, mu_integer(k, idx.l2)?)?)?,
        product_formula_coeff(2 * idx.l1 - 1, 2 * idx.l2 - 1, idx.m)?,
    )?;
    Ok(ExactConstant { integer, c0_power: 2 * k - idx.l1 - idx.l2 })
}

/// Class constant `C^{(l,m;#)}` multiplying the double sum in `C_tau`.
///
/// The base `c_{l1,l2,m} mu_{2k,2l3}` is multiplied by `q1 c1 + q2 c2`
/// (class #0), `q1 c1` (#1) or `q2 c2` (#2), where `c1`, `c2` are the full
/// contraction coefficients of `I(f1^{q1-1} f2^{q2}) I_{2l3-1}(g)` and
/// `I(f1^{q1} f2^{q2-1}) I_{2l3-1}(g)`.
pub fn sharp_coefficient(k: u32, idx: SharpIndex) -> Result<ExactConstant> {
    let base = lambda_coefficient(k, idx.lambda)?;
    let (q1, q2) = (idx.lambda.q1(), idx.lambda.q2());
    let c = 2 * idx.l3 - 1;
    let full = |a1: u32, a2: u32| -> Result<u128> {
        validate_mixed_coeffs(a1, a2, c)?;
        mixed_contraction_coeffs(a1, a2, c)?
            .get(&(a1, a2))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no full contraction for ({a1},{a2},{c})")))
    };
    let mut weight: u128 = 0;
    if matches!(idx.class, SharpClass::Both | SharpClass::First) {
        weight += mul(u128::from(q1), full(q1 - 1, q2)?)?;
    }
    if matches!(idx.class, SharpClass::Both | SharpClass::Second) {
        weight += mul(u128::from(q2), full(q1, q2 - 1)?)?;
    }
    let integer = mul(mul(base.integer, mu_integer(k, idx.l3)?)?, weight)?;
    Ok(ExactConstant { integer, c0_power: base.c0_power + k - idx.l3 })
}

/// A truncated lattice sum with a certified bound on what was discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: f64,
    /// Upper bound on `|exact - value|` from the discarded tail.
    pub tail: f64,
    /// Truncation radius used.
    pub radius: u64,
}

/// Largest truncation radius attempted by single sums.
pub const MAX_SINGLE_RADIUS: u64 = 1 << 27;
/// Largest truncation radius attempted by double sums.
pub const MAX_DOUBLE_RADIUS: u64 = 4096;

/// `beta = 4 - 2H`, the decay exponent of `rho_hat`.
pub fn decay_exponent(h: HurstParam) -> f64 {
    4.0 - h.alpha()
}

/// `C_hat = 2 max_{10 <= j <= 1000} |rho_hat(j)| j^beta`, so that
/// `|rho_hat(j)| <= C_hat |j|^{-beta}` for `|j| >= 10`.
pub fn decay_constant(h: HurstParam) -> f64 {
    let beta = decay_exponent(h);
    let max = (10..=1000_i64).map(|j| rho_hat(j, h).abs() * libm::pow(j as f64, beta)).fold(0.0, f64::max);
    2.0 * max
}

fn single_tail(c_hat: f64, beta: f64, m: u32, radius: u64) -> f64 {
    let e = f64::from(m) * beta;
    2.0 * libm::pow(c_hat, f64::from(m)) * libm::pow(radius as f64, 1.0 - e) / (e - 1.0)
}

fn power_sum_to(m: u32, h: HurstParam, radius: u64, abs: bool) -> f64 {
    let term = |i: i64| {
        let r = rho_hat(i, h);
        let r = if abs { r.abs() } else { r };
        libm::pow(r, f64::from(m))
    };
    // small terms first
    let mut s = 0.0;
    for i in (1..=radius as i64).rev() {
        s += term(i);
    }
    term(0) + 2.0 * s
}

fn single_radius(m: u32, h: HurstParam, tol: f64) -> Result<u64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if m == 0 {
        return Err(Error::Divergent("sum of rho_hat^0 over Z".into()));
    }
    let (c_hat, beta) = (decay_constant(h), decay_exponent(h));
    let e = f64::from(m) * beta;
    let needed = libm::pow(2.0 * libm::pow(c_hat, f64::from(m)) / ((e - 1.0) * tol), 1.0 / (e - 1.0));
    let radius = libm::ceil(needed).max(10.0);
    if radius > MAX_SINGLE_RADIUS as f64 {
        return Err(Error::ToleranceUnreachable { tol, achieved: single_tail(c_hat, beta, m, MAX_SINGLE_RADIUS) });
    }
    Ok(radius as u64)
}

/// `sum_{i in Z} rho_hat(i)^m`, truncated at the smallest radius whose tail
/// certificate is below `tol`.
pub fn rho_power_sum(m: u32, h: HurstParam, tol: f64) -> Result<Certified> {
    let radius = single_radius(m, h, tol)?;
    Ok(rho_power_sum_at(m, h, radius))
}

/// `sum_{|i| <= radius} rho_hat(i)^m` with its tail certificate.
/// Radii below 10 are raised to 10.
pub fn rho_power_sum_at(m: u32, h: HurstParam, radius: u64) -> Certified {
    let radius = radius.max(10);
    Certified { value: power_sum_to(m, h, radius, false), tail: single_tail(decay_constant(h), decay_exponent(h), m, radius), radius }
}

/// Upper bound on `sum_i |rho_hat(i)|^m`.
fn abs_power_sum_bound(m: u32, h: HurstParam) -> f64 {
    let radius = 1 << 14;
    power_sum_to(m, h, radius, true) + single_tail(decay_constant(h), decay_exponent(h), m, radius)
}

fn rho_powers(h: HurstParam, radius: u64, p: u32) -> Vec<f64> {
    // index i + 2 radius for i in [-2 radius, 2 radius]
    let r = 2 * radius as i64;
    (-r..=r).map(|i| libm::pow(rho_hat(i, h), f64::from(p))).collect()
}

/// Sum over the square `|i1|, |i2| <= radius` of
/// `rho_hat(i1)^x rho_hat(i2)^y rho_hat(i2 - i1)^z` with the certified tail.
fn double_sum_square(x: u32, y: u32, z: u32, h: HurstParam, radius: u64) -> Result<Certified> {
    let radius = radius.max(20);
    let (px, py, pz) = (rho_powers(h, radius, x), rho_powers(h, radius, y), rho_powers(h, radius, z));
    let off = 2 * radius as i64;
    let r = radius as i64;
    let mut total = 0.0;
    for i1 in -r..=r {
        let a = px[(i1 + off) as usize];
        let mut row = 0.0;
        for i2 in -r..=r {
            row += py[(i2 + off) as usize] * pz[(i2 - i1 + off) as usize];
        }
        total += a * row;
    }
    let (c_hat, beta) = (decay_constant(h), decay_exponent(h));
    let n = radius as f64;
    // Region |u| > N for the variable carrying exponent `own`; the other two
    // factors are bounded by splitting on which argument exceeds |u|/2.
    let region = |own: u32, p: u32, q: u32| -> f64 {
        let piece = |near: u32, far: u32| -> f64 {
            let e = beta * f64::from(own + near);
            libm::pow(c_hat, f64::from(own + near))
                * libm::pow(2.0, beta * f64::from(near))
                * abs_power_sum_bound(far, h)
                * libm::pow(n, 1.0 - e)
                / (e - 1.0)
        };
        2.0 * (piece(p, q) + piece(q, p))
    };
    let tail = region(x, y, z) + region(y, x, z);
    Ok(Certified { value: total, tail, radius })
}

/// `D(m+1, q1, q2) = sum_{i1,i2 in Z} rho_hat(i1)^{m+1} rho_hat(i2)^{q1} rho_hat(i2-i1)^{q2}`.
///
/// Zero exponents decouple the sum into a product of single sums; otherwise
/// the square truncation radius doubles from 32 until the tail certificate
/// drops below `tol`.
pub fn rho_double_sum(m: u32, q1: u32, q2: u32, h: HurstParam, tol: f64) -> Result<Certified> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (x, y, z) = (m + 1, q1, q2);
    if y == 0 && z == 0 {
        return Err(Error::Divergent(format!("sum over i2 of rho_hat^0 with m={m}")));
    }
    if y == 0 || z == 0 {
        let other = y.max(z);
        let a = rho_power_sum(x, h, tol / 4.0)?;
        let b = rho_power_sum(other, h, tol / 4.0)?;
        let (abs_a, abs_b) = (abs_power_sum_bound(x, h), abs_power_sum_bound(other, h));
        return Ok(Certified { value: a.value * b.value, tail: a.tail * abs_b + b.tail * abs_a, radius: a.radius.max(b.radius) });
    }
    let mut radius = 32;
    loop {
        let s = double_sum_square(x, y, z, h, radius)?;
        if s.tail < tol {
            return Ok(s);
        }
        if radius >= MAX_DOUBLE_RADIUS {
            return Err(Error::ToleranceUnreachable { tol, achieved: s.tail });
        }
        radius *= 2;
    }
}

/// `C_{G_inf} = sum_l 2l mu_{2k,2l}^2 (2l-1)! sum_i rho_hat(i)^{2l}`.
pub fn c_g_infinity(k: u32, h: HurstParam, tol: f64) -> Result<Certified> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut out = Certified { value: 0.0, tail: 0.0, radius: 0 };
    for l in 1..=k {
        let coeff = mul(
            mul(u128::from(2 * l), mul(mu_integer(k, l)?, mu_integer(k, l)?)?)?,
            product_formula_coeff(2 * l - 1, 2 * l - 1, 2 * l - 1)?,
        )?;
        let w = coeff as f64 * libm::pow(c0(h), f64::from(2 * (k - l)));
        let s = rho_power_sum(2 * l, h, tol / (k as f64 * w))?;
        out.value += w * s.value;
        out.tail += w * s.tail;
        out.radius = out.radius.max(s.radius);
    }
    Ok(out)
}

/// One summand of `C_tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CTauTerm {
    pub index: SharpIndex,
    pub coefficient: ExactConstant,
    pub double_sum: Certified,
}

/// `C_tau = sum over the sharp set of C^{(l,m;#)} D(m+1, q1, q2)`, with the
/// per-term breakdown.
pub fn c_tau_terms(k: u32, h: HurstParam, tol: f64) -> Result<(Certified, Vec<CTauTerm>)> {
    let sets = lambda_sets(k)?;
    let count = sets.sharp.len().max(1) as f64;
    let mut total = Certified { value: 0.0, tail: 0.0, radius: 0 };
    let mut terms = Vec::with_capacity(sets.sharp.len());
    for idx in sets.sharp {
        let coefficient = sharp_coefficient(k, idx)?;
        let w = coefficient.value(h);
        let d = rho_double_sum(idx.lambda.m, idx.lambda.q1(), idx.lambda.q2(), h, tol / (count * w))?;
        total.value += w * d.value;
        total.tail += w * d.tail;
        total.radius = total.radius.max(d.radius);
        terms.push(CTauTerm { index: idx, coefficient, double_sum: d });
    }
    Ok((total, terms))
}

pub fn c_tau(k: u32, h: HurstParam, tol: f64) -> Result<Certified> {
    Ok(c_tau_terms(k, h, tol)?.0)
}

/// `n^{-1} sum_{j1,j2 in [n-1]} rho_hat(j2 - j1)^2`.
pub fn finite_square_sum(n: u64, h: HurstParam) -> f64 {
    let len = n.saturating_sub(1) as i64;
    let mut s = 0.0;
    for d in (1..len).rev() {
        let r = rho_hat(d, h);
        s += 2.0 * (len - d) as f64 * r * r;
    }
    let r0 = rho_hat(0, h);
    (s + len as f64 * r0 * r0) / n as f64
}

/// `n^{-1} sum_{j1,j2,j3 in [n-1]} rho_hat(j2-j1) rho_hat(j3-j1) rho_hat(j3-j2)`.
pub fn finite_triple_sum(n: u64, h: HurstParam) -> f64 {
    finite_triple_sum_powers(n, h, 1, 1, 1)
}

/// `n^{-1} sum_{j1,j2,j3 in [n-1]} rho_hat(j2-j1)^x rho_hat(j3-j1)^y rho_hat(j3-j2)^z`,
/// grouped by the lags `(j2 - j1, j3 - j1)`.
pub fn finite_triple_sum_powers(n: u64, h: HurstParam, x: u32, y: u32, z: u32) -> f64 {
    let len = n.saturating_sub(1) as i64;
    if len == 0 {
        return 0.0;
    }
    let off = 2 * len;
    let table: Vec<f64> = (-off..=off).map(|i| rho_hat(i, h)).collect();
    let pw = |p: u32| -> Vec<f64> { table.iter().map(|r| libm::pow(*r, f64::from(p))).collect() };
    let (tx, ty, tz) = (pw(x), pw(y), pw(z));
    let at = |t: &[f64], i: i64| t[(i + off) as usize];
    let mut total = 0.0;
    for i1 in -(len - 1)..len {
        let mut row = 0.0;
        for i2 in -(len - 1)..len {
            let span = i1.max(i2).max(0) - i1.min(i2).min(0);
            let count = len - span;
            if count > 0 {
                row += count as f64 * at(&ty, i2) * at(&tz, i2 - i1);
            }
        }
        total += at(&tx, i1) * row;
    }
    total / n as f64
}
