//! Exact Gaussian calculus over a finite family of jointly Gaussian
//! generators `Y_i = B(h_i)` with Gram matrix `G_ij = <h_i, h_j>`.
//!
//! Elementary multiple integrals `I_p(h_1^{a_1} ... h_d^{a_d})` are Wick
//! products `:Y_1^{a_1} ... Y_d^{a_d}:` and satisfy
//! `W(a + e_i) = Y_i W(a) - sum_j a_j G_ij W(a - e_j)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{cholesky, is_symmetric};
use crate::{Error, Result};

/// Largest total order handled by pairing enumeration (11!! = 10395 matchings).
pub const ORDER_CAP: u32 = 12;

/// Largest number of slots for which partial matchings are enumerated one by one.
pub const BRUTE_FORCE_SLOTS: u32 = 16;

/// Named generators and their Gram matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct GramContext {
    names: Vec<String>,
    gram: Vec<f64>,
}

impl GramContext {
    pub fn new(names: Vec<String>, gram: Vec<f64>) -> Result<Self> {
        let d = names.len();
        if gram.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: gram.len() });
        }
        let scale = (0..d).map(|i| gram[i * d + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if gram.iter().any(|g| !g.is_finite()) || !is_symmetric(&gram, d, 1e-12 * scale) {
            return Err(Error::NotPositiveSemidefinite("Gram matrix is not symmetric".into()));
        }
        cholesky(&gram, d, 1e-10)?;
        Ok(Self { names, gram })
    }

    /// Generators named `g0, g1, ...`.
    pub fn unnamed(gram: Vec<f64>) -> Result<Self> {
        let d = libm::sqrt(gram.len() as f64) as usize;
        Self::new((0..d).map(|i| format!("g{i}")).collect(), gram)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.dim() + j]
    }

    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// Maps i.i.d. standard normals to a joint sample `L z` of the generators.
    pub fn correlate(&self, z: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if z.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: z.len() });
        }
        let l = cholesky(&self.gram, d, 1e-10)?;
        Ok((0..d).map(|i| (0..=i).map(|j| l[i * d + j] * z[j]).sum()).collect())
    }
}

/// `I_p` of the symmetrized tensor with `multiplicities[i]` copies of
/// generator `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChaosTerm {
    multiplicities: Vec<u32>,
}

impl ChaosTerm {
    pub fn new(multiplicities: Vec<u32>) -> Self {
        Self { multiplicities }
    }

    /// Builds a term from `(generator, multiplicity)` pairs over `dim` generators.
    pub fn from_pairs(dim: usize, pairs: &[(usize, u32)]) -> Result<Self> {
        let mut m = vec![0; dim];
        for &(g, k) in pairs {
            if g >= dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g + 1 });
            }
            m[g] += k;
        }
        Ok(Self::new(m))
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn order(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    fn check_dim(&self, ctx: &GramContext) -> Result<()> {
        if self.multiplicities.len() != ctx.dim() {
            return Err(Error::DimensionMismatch { expected: ctx.dim(), got: self.multiplicities.len() });
        }
        Ok(())
    }
}

fn slots(powers: &[u32]) -> Vec<usize> {
    powers.iter().enumerate().flat_map(|(i, &p)| core::iter::repeat(i).take(p as usize)).collect()
}

fn matching_sum(ctx: &GramContext, slots: &[usize], used: &mut [bool]) -> f64 {
    let Some(i) = used.iter().position(|u| !u) else {
        return 1.0;
    };
    used[i] = true;
    let mut total = 0.0;
    for j in i + 1..slots.len() {
        if !used[j] {
            let w = ctx.get(slots[i], slots[j]);
            if w != 0.0 {
                used[j] = true;
                total += w * matching_sum(ctx, slots, used);
                used[j] = false;
            }
        }
    }
    used[i] = false;
    total
}

/// `E[prod_i Y_i^{powers[i]}]` as a sum over perfect matchings.
pub fn isserlis_moment(ctx: &GramContext, powers: &[u32]) -> Result<f64> {
    if powers.len() != ctx.dim() {
        return Err(Error::DimensionMismatch { expected: ctx.dim(), got: powers.len() });
    }
    let order: u32 = powers.iter().sum();
    if order > ORDER_CAP {
        return Err(Error::OrderTooLarge { order, cap: ORDER_CAP });
    }
    if order % 2 == 1 {
        return Ok(0.0);
    }
    let s = slots(powers);
    Ok(matching_sum(ctx, &s, &mut vec![false; s.len()]))
}

fn wick_value(a: &[u32], ctx: &GramContext, y: &[f64], memo: &mut BTreeMap<Vec<u32>, f64>) -> f64 {
    let Some(i) = a.iter().position(|&x| x > 0) else {
        return 1.0;
    };
    if let Some(&v) = memo.get(a) {
        return v;
    }
    let mut lower = a.to_vec();
    lower[i] -= 1;
    let mut v = y[i] * wick_value(&lower, ctx, y, memo);
    for j in 0..a.len() {
        if lower[j] > 0 {
            let g = ctx.get(i, j);
            if g != 0.0 {
                let mut l2 = lower.clone();
                l2[j] -= 1;
                v -= f64::from(lower[j]) * g * wick_value(&l2, ctx, y, memo);
            }
        }
    }
    memo.insert(a.to_vec(), v);
    v
}

/// Value of the multiple integral at a joint sample `y` of the generators.
pub fn chaos_evaluate(term: &ChaosTerm, ctx: &GramContext, y: &[f64]) -> Result<f64> {
    term.check_dim(ctx)?;
    if y.len() != ctx.dim() {
        return Err(Error::DimensionMismatch { expected: ctx.dim(), got: y.len() });
    }
    Ok(wick_value(&term.multiplicities, ctx, y, &mut BTreeMap::new()))
}

/// Ordinary polynomial in the generators: exponent vector to coefficient.
pub type Polynomial = BTreeMap<Vec<u32>, f64>;

fn wick_poly(a: &[u32], ctx: &GramContext, memo: &mut BTreeMap<Vec<u32>, Polynomial>) -> Polynomial {
    let Some(i) = a.iter().position(|&x| x > 0) else {
        return BTreeMap::from([(vec![0; a.len()], 1.0)]);
    };
    if let Some(p) = memo.get(a) {
        return p.clone();
    }
    let mut lower = a.to_vec();
    lower[i] -= 1;
    let mut out = Polynomial::new();
    for (mono, c) in wick_poly(&lower, ctx, memo) {
        let mut m = mono;
        m[i] += 1;
        *out.entry(m).or_insert(0.0) += c;
    }
    for j in 0..a.len() {
        if lower[j] > 0 {
            let g = ctx.get(i, j);
            if g != 0.0 {
                let mut l2 = lower.clone();
                l2[j] -= 1;
                for (mono, c) in wick_poly(&l2, ctx, memo) {
                    *out.entry(mono).or_insert(0.0) -= f64::from(lower[j]) * g * c;
                }
            }
        }
    }
    memo.insert(a.to_vec(), out.clone());
    out
}

/// The multiple integral expanded as an ordinary polynomial in the generators.
pub fn chaos_polynomial(term: &ChaosTerm, ctx: &GramContext) -> Result<Polynomial> {
    term.check_dim(ctx)?;
    Ok(wick_poly(&term.multiplicities, ctx, &mut BTreeMap::new()))
}

fn poly_mul(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let mut out = Polynomial::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            *out.entry(m).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// `E[prod terms]`, by expanding every factor into a polynomial and taking
/// Isserlis moments monomial by monomial.
pub fn chaos_expectation_product(terms: &[ChaosTerm], ctx: &GramContext) -> Result<f64> {
    let order: u32 = terms.iter().map(ChaosTerm::order).sum();
    if order > ORDER_CAP {
        return Err(Error::OrderTooLarge { order, cap: ORDER_CAP });
    }
    let mut acc = BTreeMap::from([(vec![0; ctx.dim()], 1.0)]);
    for t in terms {
        acc = poly_mul(&acc, &chaos_polynomial(t, ctx)?);
    }
    let mut total = 0.0;
    for (mono, c) in acc {
        if c != 0.0 {
            total += c * isserlis_moment(ctx, &mono)?;
        }
    }
    Ok(total)
}

/// Number of partial matchings between the slots of
/// `:prod Y_i^{left[i]}:` and `:prod Z_j^{right[j]}:`, grouped by the
/// contraction matrix `n[i][j]` (row-major, `left.len() x right.len()`).
///
/// Up to [`BRUTE_FORCE_SLOTS`] slots every matching is enumerated;
/// above that each pattern is counted slot-class by slot-class.
pub fn contraction_pattern_counts(left: &[u32], right: &[u32]) -> Result<BTreeMap<Vec<u32>, u128>> {
    let total: u32 = left.iter().chain(right).sum();
    if total <= BRUTE_FORCE_SLOTS {
        Ok(enumerate_matchings(left, right))
    } else {
        count_patterns(left, right)
    }
}

fn enumerate_matchings(left: &[u32], right: &[u32]) -> BTreeMap<Vec<u32>, u128> {
    fn go(ls: &[usize], rs: &[usize], used: &mut [bool], pattern: &mut [u32], width: usize, out: &mut BTreeMap<Vec<u32>, u128>) {
        let Some((&l, rest)) = ls.split_first() else {
            *out.entry(pattern.to_vec()).or_insert(0) += 1;
            return;
        };
        go(rest, rs, used, pattern, width, out);
        for (k, &r) in rs.iter().enumerate() {
            if !used[k] {
                used[k] = true;
                pattern[l * width + r] += 1;
                go(rest, rs, used, pattern, width, out);
                pattern[l * width + r] -= 1;
                used[k] = false;
            }
        }
    }
    let (ls, rs) = (slots(left), slots(right));
    let mut out = BTreeMap::new();
    let mut pattern = vec![0; left.len() * right.len()];
    go(&ls, &rs, &mut vec![false; rs.len()], &mut pattern, right.len(), &mut out);
    out
}

fn count_patterns(left: &[u32], right: &[u32]) -> Result<BTreeMap<Vec<u32>, u128>> {
    use crate::combinatorics::{binomial, factorial};
    let (dl, dr) = (left.len(), right.len());
    let cells = dl * dr;
    let mut out = BTreeMap::new();
    let mut n = vec![0u32; cells];
    // odometer over all contraction matrices with row sums <= left, column sums <= right
    loop {
        let rows_ok = (0..dl).all(|i| (0..dr).map(|j| n[i * dr + j]).sum::<u32>() <= left[i]);
        let cols_ok = (0..dr).all(|j| (0..dl).map(|i| n[i * dr + j]).sum::<u32>() <= right[j]);
        if rows_ok && cols_ok {
            // choose which left slots go to each right class, then which
            // right slots receive them, then pair them up
            let mut count: u128 = 1;
            let mut mulc = |x: u128| -> Result<()> {
                count = count.checked_mul(x).ok_or_else(|| Error::InvalidArgument("integer overflow counting matchings".into()))?;
                Ok(())
            };
            for i in 0..dl {
                let mut remaining = left[i];
                for j in 0..dr {
                    mulc(binomial(remaining, n[i * dr + j])?)?;
                    remaining -= n[i * dr + j];
                }
            }
            for j in 0..dr {
                let mut remaining = right[j];
                for i in 0..dl {
                    mulc(binomial(remaining, n[i * dr + j])?)?;
                    mulc(factorial(n[i * dr + j])?)?;
                    remaining -= n[i * dr + j];
                }
            }
            out.insert(n.clone(), count);
        }
        let mut c = 0;
        loop {
            if c == cells {
                return Ok(out);
            }
            let cap = left[c / dr].min(right[c % dr]);
            if n[c] < cap {
                n[c] += 1;
                break;
            }
            n[c] = 0;
            c += 1;
        }
    }
}

/// Relative residual of the per-sample product identity
/// `I_p(f^p) I_q(g^q) = sum_r coeff(p,q,r) <f,g>^r I_{p+q-2r}(f^{p-r} g^{q-r})`
/// on a two-generator context, using `coeff` for the coefficients.
pub fn product_identity_residual(
    p: u32,
    q: u32,
    ctx: &GramContext,
    y: &[f64],
    coeff: impl Fn(u32, u32, u32) -> Result<u128>,
) -> Result<f64> {
    if ctx.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ctx.dim() });
    }
    let lhs = chaos_evaluate(&ChaosTerm::new(vec![p, 0]), ctx, y)? * chaos_evaluate(&ChaosTerm::new(vec![0, q]), ctx, y)?;
    let fg = ctx.get(0, 1);
    let mut rhs = 0.0;
    let mut scale = lhs.abs();
    for r in 0..=p.min(q) {
        let t = coeff(p, q, r)? as f64 * libm::pow(fg, f64::from(r)) * chaos_evaluate(&ChaosTerm::new(vec![p - r, q - r]), ctx, y)?;
        scale = scale.max(t.abs());
        rhs += t;
    }
    Ok((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE))
}

/// One monomial `coeff r^{r_power} Y1^{left} Y2^{right}` of a two-generator Wick product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub coeff: f64,
    pub r_power: u32,
    pub left: u32,
    pub right: u32,
}

/// Monomials of `:Y1^{q1} Y2^{q2}:` for generators of common variance `var`
/// and covariance `r`:
///
/// `sum_{s,i,i'} (-1)^{s+i+i'} C(q1,s) C(q2,s) s! C(q1-s,2i) (2i-1)!! C(q2-s,2i') (2i'-1)!!
///  var^{i+i'} r^s Y1^{q1-s-2i} Y2^{q2-s-2i'}`.
pub fn pair_wick_expansion(q1: u32, q2: u32, var: f64) -> Result<Vec<PairTerm>> {
    use crate::combinatorics::{binomial, double_factorial, factorial};
    let mut out = Vec::new();
    for s in 0..=q1.min(q2) {
        let cs = (binomial(q1, s)? * binomial(q2, s)? * factorial(s)?) as f64;
        for i in 0..=(q1 - s) / 2 {
            let ci = (binomial(q1 - s, 2 * i)? * double_factorial(2 * i64::from(i) - 1)?) as f64;
            for j in 0..=(q2 - s) / 2 {
                let cj = (binomial(q2 - s, 2 * j)? * double_factorial(2 * i64::from(j) - 1)?) as f64;
                let sign = if (s + i + j) % 2 == 0 { 1.0 } else { -1.0 };
                out.push(PairTerm {
                    coeff: sign * cs * ci * cj * libm::pow(var, f64::from(i + j)),
                    r_power: s,
                    left: q1 - s - 2 * i,
                    right: q2 - s - 2 * j,
                });
            }
        }
    }
    Ok(out)
}

/// `:Y^q:` for one generator of variance `var`, i.e. `var^{q/2} He_q(y / sqrt(var))`.
pub fn wick_power(q: u32, var: f64, y: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, y);
    if q == 0 {
        return prev;
    }
    for p in 1..q {
        (prev, cur) = (cur, y * cur - f64::from(p) * var * prev);
    }
    cur
}
