//! Smallest weighted eigenvalue of the mixed operator: a dense generalized
//! eigensolve at `p = 2` and projected Rayleigh-quotient descent for any `p`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::forms::{FormContext, GradientVec};
use crate::minimize::{precondition, t_inner};
use crate::mesh::{lp_norm_pow, CoeffVec, FeSpace};
use crate::nonlinearity::{asymptotics, NonlinearityModel};

#[derive(Debug, Clone, Error)]
pub enum EigenError {
    #[error("rayleigh quotient of the zero function")]
    ZeroVector,
    #[error("weight has {got} samples, expected {want}")]
    WeightLength { got: usize, want: usize },
    #[error("weight must be finite here")]
    UnboundedWeight,
    #[error("mixed finite/infinite weight is not supported")]
    MixedWeight,
    #[error("dense path needs p = 2")]
    DenseUnavailable,
    #[error("mass matrix is not positive definite")]
    Cholesky,
    #[error("not_converged after {} iterations", .0.iterations)]
    NotConverged(Box<EigenReport>),
}

/// Real number that may be infinite; serialized as `"+inf"` / `"-inf"` when so.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(pub f64);

impl ExtReal {
    pub const POS_INF: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_ext(self.0, f)
    }
}

pub(crate) fn format_ext(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v == f64::INFINITY {
        f.write_str("+inf")
    } else if v == f64::NEG_INFINITY {
        f.write_str("-inf")
    } else {
        write!(f, "{v}")
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str(&self.to_string())
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal(v)),
            Raw::Str(s) => match s.as_str() {
                "+inf" | "inf" => Ok(ExtReal::POS_INF),
                "-inf" => Ok(ExtReal::NEG_INF),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

/// Nodal samples of a weight `a(x)` at `0, h, ..., 1`, possibly `+-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFn {
    samples: Vec<f64>,
}

impl WeightFn {
    pub fn from_samples(space: &FeSpace, samples: Vec<f64>) -> Result<Self, EigenError> {
        let want = space.n_cells() + 1;
        if samples.len() != want {
            return Err(EigenError::WeightLength {
                got: samples.len(),
                want,
            });
        }
        Ok(Self { samples })
    }

    pub fn constant(space: &FeSpace, c: f64) -> Self {
        Self {
            samples: vec![c; space.n_cells() + 1],
        }
    }

    pub fn zero(space: &FeSpace) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn is_bounded(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v + c).collect(),
        }
    }

    fn check(&self, ctx: &FormContext) -> Result<(), EigenError> {
        let want = ctx.space().n_cells() + 1;
        if self.samples.len() != want {
            return Err(EigenError::WeightLength {
                got: self.samples.len(),
                want,
            });
        }
        if !self.is_bounded() {
            return Err(EigenError::UnboundedWeight);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol_eig: f64,
    pub max_iters: usize,
}

impl EigenOptions {
    /// `1e-10` for the dense `p = 2` solve, `1e-8` for descent.
    pub fn for_p(p: f64) -> Self {
        Self {
            tol_eig: if p == 2.0 { 1e-10 } else { 1e-8 },
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    Descent,
    Symbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub lambda1: ExtReal,
    /// Second eigenvalue, dense path only.
    pub lambda2: Option<f64>,
    pub e1: Option<CoeffVec>,
    pub iterations: usize,
    pub converged: bool,
    pub method: EigenMethod,
    pub rayleigh_history: Vec<f64>,
}

/// `(Q(u) + int a |u|^p) / ||u||_p^p`.
pub fn rayleigh(ctx: &FormContext, a: &WeightFn, u: &CoeffVec) -> Result<f64, EigenError> {
    a.check(ctx)?;
    if u.max_abs() == 0.0 {
        return Err(EigenError::ZeroVector);
    }
    Ok(rayleigh_unchecked(ctx, a, u))
}

fn rayleigh_unchecked(ctx: &FormContext, a: &WeightFn, u: &CoeffVec) -> f64 {
    let p = ctx.p();
    let num = ctx.local_energy(u) + ctx.nonlocal_energy(u) + ctx.weighted_power(&a.samples, u);
    num / lp_norm_pow(ctx.space(), u, p)
}

/// Rayleigh value and its Euclidean gradient in the nodal coefficients.
fn rayleigh_grad(ctx: &FormContext, a: &WeightFn, u: &CoeffVec) -> (f64, GradientVec) {
    let p = ctx.p();
    let ones = vec![1.0; ctx.space().n_cells() + 1];
    let norm = lp_norm_pow(ctx.space(), u, p);
    let r = rayleigh_unchecked(ctx, a, u);
    let gq = ctx.q_gradient(u);
    let ga = ctx.weighted_power_gradient(&a.samples, u);
    let gn = ctx.weighted_power_gradient(&ones, u);
    let g = gq
        .0
        .iter()
        .zip(&ga.0)
        .zip(&gn.0)
        .map(|((q, a), n)| p / norm * (q + a - r * n))
        .collect();
    (r, GradientVec(g))
}

fn normalize(space: &FeSpace, u: &CoeffVec) -> CoeffVec {
    let p = space.p();
    let n = lp_norm_pow(space, u, p).powf(1.0 / p);
    let sign = if u.0.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    u.scaled(sign / n)
}

/// Smallest eigenvalue of `L + a` for a bounded weight.
pub fn lambda1(ctx: &FormContext, a: &WeightFn, opts: &EigenOptions) -> Result<EigenReport, EigenError> {
    a.check(ctx)?;
    if ctx.dense_forms().is_some() {
        lambda1_dense(ctx, a)
    } else {
        lambda1_descent(ctx, a, opts, &ctx.space().constant(1.0))
    }
}

/// Dense generalized symmetric eigensolve; `p = 2` only.
pub fn lambda1_dense(ctx: &FormContext, a: &WeightFn) -> Result<EigenReport, EigenError> {
    a.check(ctx)?;
    let forms = ctx.dense_forms().ok_or(EigenError::DenseUnavailable)?;
    let stiff = &forms.a_loc + &forms.a_nl + ctx.weighted_mass_matrix(&a.samples);
    let chol = forms.mass.clone().cholesky().ok_or(EigenError::Cholesky)?;
    let l = chol.l();
    let dim = stiff.nrows();
    let mut linv = DMatrix::identity(dim, dim);
    if !l.solve_lower_triangular_mut(&mut linv) {
        return Err(EigenError::Cholesky);
    }
    let c = &linv * stiff * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lam1 = eig.eigenvalues[order[0]];
    let lam2 = order.get(1).map(|&i| eig.eigenvalues[i]);
    let y = eig.eigenvectors.column(order[0]);
    let v = linv.transpose() * y;
    let e1 = normalize(ctx.space(), &CoeffVec(v.iter().copied().collect()));
    Ok(EigenReport {
        lambda1: ExtReal(lam1),
        lambda2: lam2,
        e1: Some(e1),
        iterations: 1,
        converged: true,
        method: EigenMethod::Dense,
        rayleigh_history: vec![lam1],
    })
}

/// Projected preconditioned descent of the Rayleigh quotient on `||u||_p = 1`.
pub fn lambda1_descent(
    ctx: &FormContext,
    a: &WeightFn,
    opts: &EigenOptions,
    start: &CoeffVec,
) -> Result<EigenReport, EigenError> {
    a.check(ctx)?;
    if start.max_abs() == 0.0 {
        return Err(EigenError::ZeroVector);
    }
    let space = ctx.space();
    let h = space.h();
    let mut u = normalize(space, start);
    let (mut r, mut g) = rayleigh_grad(ctx, a, &u);
    let mut history = vec![r];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let dir: Vec<f64> = precondition(&g.0, h).iter().map(|v| -v).collect();
        let slope: f64 = g.0.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            converged = true;
            break;
        }
        let mut alpha = match &prev {
            Some((s, y)) => {
                let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
                if sy > 0.0 {
                    (t_inner(s, s, h) / sy).clamp(1e-10, 1e10)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let mut accepted = None;
        while alpha > 1e-16 {
            let trial = CoeffVec(u.0.iter().zip(&dir).map(|(u, d)| u + alpha * d).collect());
            if trial.max_abs() > 0.0 {
                let trial = normalize(space, &trial);
                let rt = rayleigh_unchecked(ctx, a, &trial);
                if rt <= r + 1e-4 * alpha * slope || (rt <= r && -alpha * slope < 1e-15 * r.abs())
                {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, _)) = accepted else {
            converged = true;
            break;
        };
        iterations += 1;
        let (rn, gn) = rayleigh_grad(ctx, a, &next);
        let s = next.0.iter().zip(&u.0).map(|(a, b)| a - b).collect();
        let y = gn.0.iter().zip(&g.0).map(|(a, b)| a - b).collect();
        prev = Some((s, y));
        let change = (rn - r).abs();
        u = next;
        r = rn;
        g = gn;
        history.push(r);
        if change < opts.tol_eig * r.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let report = EigenReport {
        lambda1: ExtReal(r),
        lambda2: None,
        e1: Some(u),
        iterations,
        converged,
        method: EigenMethod::Descent,
        rayleigh_history: history,
    };
    if converged {
        Ok(report)
    } else {
        Err(EigenError::NotConverged(Box::new(report)))
    }
}

/// `lambda_1(L + a)` for a weight that may be infinite.
///
/// Any `-inf` sample gives `-inf` (a test function supported there drives the
/// quotient down without bound); `+inf` everywhere gives `+inf`.
pub fn lambda1_bo(ctx: &FormContext, a_ext: &WeightFn, opts: &EigenOptions) -> Result<ExtReal, EigenError> {
    let s = a_ext.samples();
    let want = ctx.space().n_cells() + 1;
    if s.len() != want {
        return Err(EigenError::WeightLength { got: s.len(), want });
    }
    let any_neg = s.contains(&f64::NEG_INFINITY);
    let any_pos = s.contains(&f64::INFINITY);
    let all_pos = s.iter().all(|&v| v == f64::INFINITY);
    match (any_neg, any_pos) {
        (true, true) => Err(EigenError::MixedWeight),
        (true, false) => Ok(ExtReal::NEG_INF),
        (false, true) if all_pos => Ok(ExtReal::POS_INF),
        (false, true) => Err(EigenError::MixedWeight),
        (false, false) => Ok(lambda1(ctx, a_ext, opts)?.lambda1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistencePredicate {
    pub lambda_a0: ExtReal,
    pub lambda_ainf: ExtReal,
    pub predict_exists: bool,
    /// The criterion is an equivalence only at `p = 2`.
    pub sharp: bool,
}

/// `lambda_1(L - a0) < 0 < lambda_1(L - a_inf)`.
pub fn existence_predicate(
    ctx: &FormContext,
    m: &NonlinearityModel,
    opts: &EigenOptions,
) -> Result<ExistencePredicate, EigenError> {
    let space = ctx.space();
    let data = asymptotics(m, space);
    let neg = |v: &[f64]| WeightFn::from_samples(space, v.iter().map(|x| -x).collect());
    let lambda_a0 = lambda1_bo(ctx, &neg(&data.a0)?, opts)?;
    let lambda_ainf = lambda1_bo(ctx, &neg(&data.a_inf)?, opts)?;
    Ok(ExistencePredicate {
        lambda_a0,
        lambda_ainf,
        predict_exists: lambda_a0.0 < 0.0 && 0.0 < lambda_ainf.0,
        sharp: ctx.p() == 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::QuadOrders;
    use crate::mesh::build_space;
    use std::f64::consts::PI;

    fn ctx(n: usize, p: f64, s: f64) -> FormContext {
        FormContext::new(build_space(n, p, s).unwrap(), QuadOrders::default()).unwrap()
    }

    #[test]
    fn ext_real_round_trips() {
        let v = vec![ExtReal(1.5), ExtReal::POS_INF, ExtReal::NEG_INF];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"+inf","-inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn rayleigh_identities() {
        let c = ctx(16, 2.0, 0.5);
        let a = WeightFn::zero(c.space());
        let hat = c.space().interpolate(|x| 1.0 - (2.0 * x - 1.0).abs());
        let r = rayleigh(&c, &a, &hat).unwrap();
        assert!(r > PI * PI);
        let r5 = rayleigh(&c, &a.shifted(5.0), &hat).unwrap();
        assert!((r5 - r - 5.0).abs() < 1e-12);
        let r3 = rayleigh(&c, &a, &hat.scaled(3.0)).unwrap();
        assert!((r3 - r).abs() < 1e-12 * r);
        assert!(rayleigh(&c, &a, &c.space().zeros()).is_err());
    }

    #[test]
    fn dense_and_descent_agree() {
        let c = ctx(32, 2.0, 0.5);
        let a = WeightFn::zero(c.space());
        let dense = lambda1_dense(&c, &a).unwrap();
        let desc = lambda1_descent(&c, &a, &EigenOptions::for_p(3.0), &c.space().constant(1.0)).unwrap();
        assert!((dense.lambda1.0 - desc.lambda1.0).abs() < 1e-6, "{dense:?} {desc:?}");
        assert!(dense.lambda1.0 > PI * PI);
        let e1 = dense.e1.unwrap();
        assert!(e1.min_value() > 0.0);
    }

    #[test]
    fn bo_symbolic_cases() {
        let c = ctx(16, 2.0, 0.5);
        let sp = c.space();
        let o = EigenOptions::for_p(2.0);
        let neg = WeightFn::constant(sp, f64::NEG_INFINITY);
        assert_eq!(lambda1_bo(&c, &neg, &o).unwrap(), ExtReal::NEG_INF);
        let pos = WeightFn::constant(sp, f64::INFINITY);
        assert_eq!(lambda1_bo(&c, &pos, &o).unwrap(), ExtReal::POS_INF);
        let mut mixed = vec![1.0; 17];
        mixed[3] = f64::INFINITY;
        let mixed = WeightFn::from_samples(sp, mixed).unwrap();
        assert!(matches!(lambda1_bo(&c, &mixed, &o), Err(EigenError::MixedWeight)));
    }

    #[test]
    fn predicate_for_model_families() {
        let c = ctx(32, 2.0, 0.5);
        let o = EigenOptions::for_p(2.0);
        let l1 = lambda1(&c, &WeightFn::zero(c.space()), &o).unwrap().lambda1.0;
        let power = NonlinearityModel::power(1.0, 0.5, 2.0).unwrap();
        let pr = existence_predicate(&c, &power, &o).unwrap();
        assert_eq!(pr.lambda_a0, ExtReal::NEG_INF);
        assert!((pr.lambda_ainf.0 - l1).abs() < 1e-10);
        assert!(pr.predict_exists && pr.sharp);
        let sup = NonlinearityModel::logistic(l1 + 1.0, 1.0, 4.0, 2.0).unwrap();
        let ps = existence_predicate(&c, &sup, &o).unwrap();
        assert!((ps.lambda_a0.0 + 1.0).abs() < 1e-9);
        assert_eq!(ps.lambda_ainf, ExtReal::POS_INF);
        assert!(ps.predict_exists);
        let sub = NonlinearityModel::logistic(l1 - 1.0, 1.0, 4.0, 2.0).unwrap();
        assert!(!existence_predicate(&c, &sub, &o).unwrap().predict_exists);
    }
}
