//! Scalar Young SDE `dX = V2(X) dt + V1(X) dB` and its left-point Euler scheme.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Smooth scalar coefficient with closed-form derivatives up to order 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `a + b x`
    Affine {
        a: f64,
        b: f64,
    },
    /// `a + b tanh(x)`
    TanhAffine {
        a: f64,
        b: f64,
    },
    /// `scale / (1 + x^2)`
    InverseQuadratic {
        scale: f64,
    },
}

pub const MAX_DERIVATIVE: u32 = 4;

impl Coefficient {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Affine { a, b } => a + b * x,
            Self::TanhAffine { a, b } => a + b * libm::tanh(x),
            Self::InverseQuadratic { scale } => scale / (1.0 + x * x),
        }
    }

    /// `order`-th derivative, `order <= 4`.
    pub fn derivative(&self, order: u32, x: f64) -> Result<f64> {
        if order > MAX_DERIVATIVE {
            return Err(Error::InvalidArgument(format!("derivative of order {order} not available")));
        }
        if order == 0 {
            return Ok(self.eval(x));
        }
        Ok(match *self {
            Self::Constant(_) => 0.0,
            Self::Affine { b, .. } => {
                if order == 1 {
                    b
                } else {
                    0.0
                }
            }
            Self::TanhAffine { b, .. } => {
                let t = libm::tanh(x);
                let s = 1.0 - t * t;
                b * match order {
                    1 => s,
                    2 => -2.0 * t * s,
                    3 => s * (6.0 * t * t - 2.0),
                    _ => 8.0 * t * s * (2.0 - 3.0 * t * t),
                }
            }
            Self::InverseQuadratic { scale } => {
                let u = 1.0 + x * x;
                let x2 = x * x;
                scale
                    * match order {
                        1 => -2.0 * x / (u * u),
                        2 => (6.0 * x2 - 2.0) / (u * u * u),
                        3 => 24.0 * x * (1.0 - x2) / (u * u * u * u),
                        _ => 24.0 * (5.0 * x2 * x2 - 10.0 * x2 + 1.0) / (u * u * u * u * u),
                    }
            }
        })
    }

    /// Whether the coefficient and all its derivatives are bounded on R.
    pub fn is_bounded(&self) -> bool {
        match *self {
            Self::Affine { b, .. } => b == 0.0,
            _ => true,
        }
    }
}

/// Coefficients `(V1, V2)` and weight `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeModel {
    pub name: String,
    pub v1: Coefficient,
    pub v2: Coefficient,
    pub f: Coefficient,
    /// Set when `V1`, `V2`, `f` and their listed derivatives are bounded.
    pub bounded: bool,
}

impl SdeModel {
    pub fn new(name: impl Into<String>, v1: Coefficient, v2: Coefficient, f: Coefficient) -> Self {
        let bounded = v1.is_bounded() && v2.is_bounded() && f.is_bounded();
        Self { name: name.into(), v1, v2, f, bounded }
    }

    /// `a(x) = f(x) V1(x)^{2k}`.
    #[inline]
    pub fn a(&self, x: f64, k: u32) -> f64 {
        self.f.eval(x) * libm::pow(self.v1.eval(x), f64::from(2 * k))
    }

    /// Evaluates every derivative on a grid over `[-radius, radius]` and
    /// reports the first non-finite value or, for bounded models, the
    /// largest absolute value seen.
    pub fn spot_check(&self, radius: f64, points: usize) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for i in 0..=points {
            let x = -radius + 2.0 * radius * i as f64 / points.max(1) as f64;
            for order in 0..=MAX_DERIVATIVE {
                for (label, c) in [("V1", &self.v1), ("V2", &self.v2), ("f", &self.f)] {
                    if label == "f" && order > 2 {
                        continue;
                    }
                    let v = c.derivative(order, x)?;
                    if !v.is_finite() {
                        return Err(Error::InvalidArgument(format!("{label} derivative {order} not finite at {x} in model {}", self.name)));
                    }
                    sup = sup.max(v.abs());
                }
            }
        }
        Ok(sup)
    }
}

/// Choice of weight function for the registry models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weight {
    #[default]
    One,
    /// `1 / (1 + x^2)`
    InverseQuadratic,
}

impl Weight {
    fn coefficient(self) -> Coefficient {
        match self {
            Self::One => Coefficient::Constant(1.0),
            Self::InverseQuadratic => Coefficient::InverseQuadratic { scale: 1.0 },
        }
    }
}

/// Parameter knobs of the registry models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub sigma: f64,
    pub weight: Weight,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { sigma: 1.0, weight: Weight::One }
    }
}

pub const MODEL_NAMES: [&str; 3] = ["additive", "bounded-tanh", "linear"];

/// Looks up a registry model by exact, case-sensitive name.
///
/// * `additive`: `V1 = sigma`, `V2 = 0`.
/// * `bounded-tanh`: `V1 = sigma (1 + tanh(x) / 2)`, `V2 = -tanh(x)`.
/// * `linear`: `V1 = sigma (1 + x)`, `V2 = 0`; unbounded and flagged as such.
pub fn lookup_model(name: &str, params: ModelParams) -> Result<SdeModel> {
    let s = params.sigma;
    if !s.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be finite, got {s}")));
    }
    let f = params.weight.coefficient();
    let model = match name {
        "additive" => SdeModel::new(name, Coefficient::Constant(s), Coefficient::Constant(0.0), f),
        "bounded-tanh" => SdeModel::new(name, Coefficient::TanhAffine { a: s, b: 0.5 * s }, Coefficient::TanhAffine { a: 0.0, b: -1.0 }, f),
        "linear" => SdeModel::new(name, Coefficient::Affine { a: s, b: s }, Coefficient::Constant(0.0), f),
        _ => return Err(Error::UnknownModel { name: name.into(), available: MODEL_NAMES.iter().map(|s| String::from(*s)).collect() }),
    };
    Ok(model)
}

/// All registry models with the given parameters.
pub fn model_registry(params: ModelParams) -> Vec<SdeModel> {
    MODEL_NAMES.iter().filter_map(|n| lookup_model(n, params).ok()).collect()
}

/// Driving path and solution on a fine grid of `m = kappa n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub kappa: usize,
    pub x0: f64,
    /// `B_{i/m}`, `i = 0..=m`.
    pub b: Vec<f64>,
    /// `X_{i/m}`, `i = 0..=m`.
    pub x: Vec<f64>,
}

impl GridPath {
    pub fn fine_steps(&self) -> usize {
        self.x.len() - 1
    }

    pub fn coarse_steps(&self) -> usize {
        self.fine_steps() / self.kappa
    }

    /// `X_{j/n}`.
    pub fn coarse_x(&self) -> Vec<f64> {
        self.x.iter().step_by(self.kappa).copied().collect()
    }

    /// `B_{j/n}`.
    pub fn coarse_b(&self) -> Vec<f64> {
        self.b.iter().step_by(self.kappa).copied().collect()
    }
}

/// Left-point Euler scheme
/// `X_{i+1} = X_i + V2(X_i) / m + V1(X_i) (B_{(i+1)/m} - B_{i/m})`
/// along a driving path `b` with `b[0] = 0` and `m = b.len() - 1` a multiple
/// of `kappa`.
pub fn euler_solve(model: &SdeModel, b: &[f64], x0: f64, kappa: usize) -> Result<GridPath> {
    if kappa == 0 {
        return Err(Error::InvalidArgument("oversampling factor must be at least 1".into()));
    }
    if b.len() < 2 {
        return Err(Error::InvalidArgument("driving path needs at least one step".into()));
    }
    let m = b.len() - 1;
    if m % kappa != 0 {
        return Err(Error::InvalidArgument(format!("{m} fine steps are not a multiple of {kappa}")));
    }
    if !x0.is_finite() {
        return Err(Error::NonFiniteState { step: 0 });
    }
    let dt = 1.0 / m as f64;
    let mut x = Vec::with_capacity(m + 1);
    x.push(x0);
    let mut cur = x0;
    for i in 0..m {
        cur = cur + model.v2.eval(cur) * dt + model.v1.eval(cur) * (b[i + 1] - b[i]);
        if !cur.is_finite() {
            return Err(Error::NonFiniteState { step: i + 1 });
        }
        x.push(cur);
    }
    Ok(GridPath { kappa, x0, b: b.to_vec(), x })
}
