//! The three-term family of sublinear nonlinearities
//!
//! ```text
//! f(x, t) = c(x) t^theta + lambda t^(p-1) - b(x) t^(q-1),   t >= 0,
//! ```
//!
//! with bounded nonnegative coefficients `c`, `b`, `0 <= theta < p - 1 < q - 1`.
//! Every member has `t -> f(x, t) / t^(p-1)` strictly decreasing wherever
//! `c(x) > 0` or `b(x) > 0`, and its limits at `0+` and `+inf` are available in
//! closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::FeSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("f4 violated: c and b vanish together on a set of positive measure, so f(x,t)/t^(p-1) is constant there")]
    F4Violated,
    #[error("coefficient `{name}` must be finite and nonnegative everywhere")]
    NegativeCoefficient { name: &'static str },
    #[error("coefficient `{name}` needs at least two nodal samples")]
    TooFewSamples { name: &'static str },
    #[error("exponent theta = {theta} must satisfy 0 <= theta < p - 1 = {bound}")]
    InvalidTheta { theta: f64, bound: f64 },
    #[error("exponent q = {q} must satisfy q > p = {p}")]
    InvalidQ { q: f64, p: f64 },
    #[error("exponent p must be greater than 1, got {0}")]
    InvalidP(f64),
    #[error("lambda_lin must be finite, got {0}")]
    InvalidLambda(f64),
    #[error("f is only defined for t >= 0, got t = {0}")]
    NegativeArgument(f64),
}

/// A bounded coefficient function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Constant(f64),
    /// Samples at `k / (len - 1)`, linearly interpolated.
    Nodal(Vec<f64>),
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Nodal(v) => {
                let n = v.len() - 1;
                let xs = x.clamp(0.0, 1.0) * n as f64;
                let k = (xs.floor() as usize).min(n - 1);
                let t = xs - k as f64;
                v[k] + (v[k + 1] - v[k]) * t
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Coefficient::Constant(c) => c.abs(),
            Coefficient::Nodal(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    fn validate(&self, name: &'static str) -> Result<(), ModelError> {
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        match self {
            Coefficient::Constant(c) if !ok(*c) => Err(ModelError::NegativeCoefficient { name }),
            Coefficient::Nodal(v) if v.len() < 2 => Err(ModelError::TooFewSamples { name }),
            Coefficient::Nodal(v) if !v.iter().all(|&c| ok(c)) => {
                Err(ModelError::NegativeCoefficient { name })
            }
            _ => Ok(()),
        }
    }

    /// Whether the coefficient vanishes identically on some subinterval.
    fn zero_intervals(&self) -> Vec<(f64, f64)> {
        match self {
            Coefficient::Constant(c) if *c == 0.0 => vec![(0.0, 1.0)],
            Coefficient::Constant(_) => vec![],
            Coefficient::Nodal(v) => {
                let n = (v.len() - 1) as f64;
                v.windows(2)
                    .enumerate()
                    .filter(|(_, w)| w[0] == 0.0 && w[1] == 0.0)
                    .map(|(k, _)| (k as f64 / n, (k + 1) as f64 / n))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityModel {
    c_coeff: Coefficient,
    theta: f64,
    lambda_lin: f64,
    b_coeff: Coefficient,
    q_exp: f64,
    p: f64,
}

impl NonlinearityModel {
    pub fn new(
        c_coeff: Coefficient,
        theta: f64,
        lambda_lin: f64,
        b_coeff: Coefficient,
        q_exp: f64,
        p: f64,
    ) -> Result<Self, ModelError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(ModelError::InvalidP(p));
        }
        c_coeff.validate("c")?;
        b_coeff.validate("b")?;
        if !(theta >= 0.0 && theta < p - 1.0) {
            return Err(ModelError::InvalidTheta {
                theta,
                bound: p - 1.0,
            });
        }
        if !(q_exp > p) || !q_exp.is_finite() {
            return Err(ModelError::InvalidQ { q: q_exp, p });
        }
        if !lambda_lin.is_finite() {
            return Err(ModelError::InvalidLambda(lambda_lin));
        }
        let zc = c_coeff.zero_intervals();
        let zb = b_coeff.zero_intervals();
        let overlap = zc
            .iter()
            .any(|&(a0, a1)| zb.iter().any(|&(b0, b1)| a0.max(b0) < a1.min(b1)));
        if overlap {
            return Err(ModelError::F4Violated);
        }
        Ok(Self {
            c_coeff,
            theta,
            lambda_lin,
            b_coeff,
            q_exp,
            p,
        })
    }

    /// `f(x, t) = c t^theta`.
    pub fn power(c: f64, theta: f64, p: f64) -> Result<Self, ModelError> {
        Self::new(
            Coefficient::Constant(c),
            theta,
            0.0,
            Coefficient::Constant(0.0),
            p + 2.0,
            p,
        )
    }

    /// `f(x, t) = lambda t^(p-1) - b t^(q-1)`.
    pub fn logistic(lambda_lin: f64, b: f64, q: f64, p: f64) -> Result<Self, ModelError> {
        Self::new(
            Coefficient::Constant(0.0),
            0.0,
            lambda_lin,
            Coefficient::Constant(b),
            q,
            p,
        )
    }

    pub fn c_coeff(&self) -> &Coefficient {
        &self.c_coeff
    }

    pub fn b_coeff(&self) -> &Coefficient {
        &self.b_coeff
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda_lin(&self) -> f64 {
        self.lambda_lin
    }

    pub fn q_exp(&self) -> f64 {
        self.q_exp
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Growth constant `C` with `|f(x,t)| <= C (1 + t^(q-1))`.
    pub fn growth_constant(&self) -> f64 {
        self.c_coeff.sup() + self.lambda_lin.abs() + self.b_coeff.sup()
    }

    /// `f(x, t)` without the sign check; `t` must be nonnegative.
    #[inline]
    pub fn f_raw(&self, x: f64, t: f64) -> f64 {
        let c = self.c_coeff.eval(x);
        let b = self.b_coeff.eval(x);
        let mut v = self.lambda_lin * t.powf(self.p - 1.0);
        if c != 0.0 {
            v += c * t.powf(self.theta);
        }
        if b != 0.0 {
            v -= b * t.powf(self.q_exp - 1.0);
        }
        v
    }

    /// Primitive `F(x, t) = int_0^t f(x, tau) d tau`, `t >= 0`.
    #[inline]
    pub fn big_f_raw(&self, x: f64, t: f64) -> f64 {
        let c = self.c_coeff.eval(x);
        let b = self.b_coeff.eval(x);
        let mut v = self.lambda_lin * t.powf(self.p) / self.p;
        if c != 0.0 {
            v += c * t.powf(self.theta + 1.0) / (self.theta + 1.0);
        }
        if b != 0.0 {
            v -= b * t.powf(self.q_exp) / self.q_exp;
        }
        v
    }

    /// `f(x, t) / t^(p-1)` for `t > 0`.
    pub fn ratio(&self, x: f64, t: f64) -> f64 {
        let c = self.c_coeff.eval(x);
        let b = self.b_coeff.eval(x);
        c * t.powf(self.theta - self.p + 1.0) + self.lambda_lin - b * t.powf(self.q_exp - self.p)
    }
}

pub fn eval_f(m: &NonlinearityModel, x: f64, t: f64) -> Result<f64, ModelError> {
    if !(t >= 0.0) {
        return Err(ModelError::NegativeArgument(t));
    }
    Ok(m.f_raw(x, t))
}

#[allow(non_snake_case)]
pub fn eval_F(m: &NonlinearityModel, x: f64, t: f64) -> Result<f64, ModelError> {
    if !(t >= 0.0) {
        return Err(ModelError::NegativeArgument(t));
    }
    Ok(m.big_f_raw(x, t))
}

/// Limits of `f(x,t)/t^(p-1)` and the derived constants, sampled at the mesh
/// nodes `0, h, ..., 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticData {
    pub sample_x: Vec<f64>,
    /// May contain `+inf`.
    pub a0: Vec<f64>,
    /// May contain `-inf`.
    pub a_inf: Vec<f64>,
    pub c_f: f64,
    /// Largest `rho <= 1` with `f(x, t) > 0` on `(0, rho)` at every sample, if any.
    pub rho_f: Option<f64>,
}

pub fn asymptotics(m: &NonlinearityModel, space: &FeSpace) -> AsymptoticData {
    let sample_x: Vec<f64> = (0..=space.n_cells()).map(|i| space.node_x(i)).collect();
    let mut a0 = Vec::with_capacity(sample_x.len());
    let mut a_inf = Vec::with_capacity(sample_x.len());
    let mut c_f: f64 = 0.0;
    let mut rho: Option<f64> = Some(1.0);
    for &x in &sample_x {
        let c = m.c_coeff.eval(x);
        let b = m.b_coeff.eval(x);
        // theta < p - 1 always, so any c(x) > 0 dominates near 0
        a0.push(if c > 0.0 { f64::INFINITY } else { m.lambda_lin });
        a_inf.push(if b > 0.0 {
            f64::NEG_INFINITY
        } else {
            m.lambda_lin
        });
        c_f = c_f.max(m.f_raw(x, 1.0).abs());
        rho = match (rho, positivity_radius(m, x)) {
            (Some(r), Some(rx)) => Some(r.min(rx)),
            _ => None,
        };
    }
    AsymptoticData {
        sample_x,
        a0,
        a_inf,
        c_f,
        rho_f: rho,
    }
}

/// Root of the decreasing ratio `f(x,.)/t^(p-1)` on `(0, 1]`, capped at 1;
/// `None` when `f(x, t) <= 0` for arbitrarily small `t`.
fn positivity_radius(m: &NonlinearityModel, x: f64) -> Option<f64> {
    let c = m.c_coeff.eval(x);
    let positive_near_zero = c > 0.0 || m.lambda_lin > 0.0;
    if !positive_near_zero {
        return None;
    }
    if m.ratio(x, 1.0) > 0.0 {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.ratio(x, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo > 0.0).then_some(lo)
}
