//! Energy minimization: preconditioned Barzilai–Borwein descent with Armijo
//! backtracking, plus randomized multi-start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{q_form, residual, FormContext, GradientVec};
use crate::mesh::CoeffVec;
use crate::nonlinearity::NonlinearityModel;

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
/// Relative size below which an energy difference is indistinguishable from rounding.
const ROUNDOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol_res: f64,
    pub max_iters: usize,
    pub step_min: f64,
    pub growth_limit: f64,
}

impl SolveOptions {
    /// Defaults: `tol_res = 1e-8` at `p = 2`, `1e-6` otherwise.
    pub fn for_p(p: f64) -> Self {
        Self {
            tol_res: if p == 2.0 { 1e-8 } else { 1e-6 },
            max_iters: 20_000,
            step_min: 1e-14,
            growth_limit: 1e6,
        }
    }

    pub fn triviality_threshold(&self) -> f64 {
        10.0 * self.tol_res
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxItersExceeded,
    LineSearchStalled,
    EnergyDiverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub energy: f64,
    pub step: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub u_star: CoeffVec,
    pub energy: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    pub is_nontrivial: bool,
    pub min_interior_value: f64,
    pub status: SolveStatus,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("max_iters_exceeded after {} iterations (residual {:.3e})", .0.iterations, .0.residual_inf)]
    MaxItersExceeded(Box<SolveReport>),
    #[error("line_search_stalled at iteration {} (residual {:.3e})", .0.iterations, .0.residual_inf)]
    LineSearchStalled(Box<SolveReport>),
    #[error("energy_diverging: |u| exceeded the growth limit at iteration {}", .0.iterations)]
    EnergyDiverging(Box<SolveReport>),
}

impl SolveError {
    /// Best-so-far report, when the run got far enough to have one.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            SolveError::InvalidOptions(_) => None,
            SolveError::MaxItersExceeded(r)
            | SolveError::LineSearchStalled(r)
            | SolveError::EnergyDiverging(r) => Some(r),
        }
    }
}

/// `E(u) = Q(u)/p - int F(x, u+)`.
pub fn energy(ctx: &FormContext, m: &NonlinearityModel, u: &CoeffVec) -> f64 {
    q_form(ctx, u) / ctx.p() - ctx.potential(m, u)
}

/// Solves `T x = r` for `T = (1/h) tridiag(-1, 2, -1)`.
pub(crate) fn precondition(r: &[f64], h: f64) -> Vec<f64> {
    let n = r.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = 2.0;
    c[0] = -1.0 / denom;
    d[0] = r[0] * h / denom;
    for i in 1..n {
        denom = 2.0 + c[i - 1];
        c[i] = -1.0 / denom;
        d[i] = (r[i] * h + d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// `<a, T b>` for the preconditioner `T`.
pub(crate) fn t_inner(a: &[f64], b: &[f64], h: f64) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut tb = 2.0 * b[i];
        if i > 0 {
            tb -= b[i - 1];
        }
        if i + 1 < n {
            tb -= b[i + 1];
        }
        acc += a[i] * tb;
    }
    acc / h
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct State {
    u: CoeffVec,
    e: f64,
    g: GradientVec,
}

impl State {
    fn new(ctx: &FormContext, m: &NonlinearityModel, u: CoeffVec) -> Self {
        let e = energy(ctx, m, &u);
        let g = residual(ctx, &u, m);
        Self { u, e, g }
    }
}

fn finish(
    ctx: &FormContext,
    m: &NonlinearityModel,
    opts: &SolveOptions,
    state: State,
    iterations: usize,
    history: Vec<HistoryEntry>,
    status: SolveStatus,
) -> SolveReport {
    let mut state = state;
    let pos = state.u.positive_part();
    if pos != state.u {
        let candidate = State::new(ctx, m, pos);
        if candidate.e <= state.e {
            state = candidate;
        }
    }
    let mut res = state.g.max_abs();
    let mut status = status;
    if status == SolveStatus::Converged && res > opts.tol_res {
        status = SolveStatus::MaxItersExceeded;
    }
    // the origin is critical and no better: report the trivial minimizer exactly
    if state.u.max_abs() > 0.0 && state.e >= 0.0 {
        let zero = State::new(ctx, m, ctx.space().zeros());
        if zero.g.max_abs() <= opts.tol_res {
            state = zero;
            res = state.g.max_abs();
            if status != SolveStatus::EnergyDiverging {
                status = SolveStatus::Converged;
            }
        }
    }
    let converged = status == SolveStatus::Converged;
    SolveReport {
        energy: state.e,
        residual_inf: res,
        iterations,
        converged,
        is_nontrivial: state.u.max_abs() > opts.triviality_threshold(),
        min_interior_value: state.u.min_value(),
        status,
        history,
        u_star: state.u,
    }
}

/// Minimizes the energy from `u0`.
pub fn minimize(
    ctx: &FormContext,
    m: &NonlinearityModel,
    u0: &CoeffVec,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    if !(opts.tol_res > 0.0) {
        return Err(SolveError::InvalidOptions("tol_res must be positive".into()));
    }
    if opts.max_iters < 1 {
        return Err(SolveError::InvalidOptions("max_iters must be at least 1".into()));
    }
    let h = ctx.space().h();
    let mut state = State::new(ctx, m, u0.clone());
    let mut history = Vec::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut status = SolveStatus::MaxItersExceeded;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if state.g.max_abs() <= opts.tol_res {
            status = SolveStatus::Converged;
            break;
        }
        let dir: Vec<f64> = precondition(&state.g.0, h).iter().map(|v| -v).collect();
        let slope = dot(&state.g.0, &dir);
        let mut alpha = match &prev {
            Some((s, y)) => {
                let sy = dot(s, y);
                if sy > 0.0 {
                    (t_inner(s, s, h) / sy).clamp(1e-10, 1e10)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let accepted = loop {
            if alpha < opts.step_min {
                break None;
            }
            let trial_u = CoeffVec(
                state
                    .u
                    .0
                    .iter()
                    .zip(&dir)
                    .map(|(u, d)| u + alpha * d)
                    .collect(),
            );
            let trial = State::new(ctx, m, trial_u);
            let predicted = ARMIJO_C * alpha * slope;
            let armijo = trial.e <= state.e + predicted;
            let scale = ROUNDOFF * state.e.abs().max(1e-300);
            // below rounding, judge the step by its trapezoidal energy change instead
            let fine = -predicted < scale && trial.e <= state.e + scale && {
                let gsum: Vec<f64> = state.g.0.iter().zip(&trial.g.0).map(|(a, b)| a + b).collect();
                0.5 * alpha * dot(&gsum, &dir) < 0.0
            };
            if trial.e.is_finite() && (armijo || fine) {
                break Some((alpha, trial));
            }
            alpha *= BACKTRACK;
        };
        let Some((alpha, trial)) = accepted else {
            status = SolveStatus::LineSearchStalled;
            break;
        };
        iterations += 1;
        let s: Vec<f64> = trial.u.0.iter().zip(&state.u.0).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.g.0.iter().zip(&state.g.0).map(|(a, b)| a - b).collect();
        prev = Some((s, y));
        state = trial;
        history.push(HistoryEntry {
            energy: state.e,
            step: alpha,
            residual: state.g.max_abs(),
        });
        if state.u.max_abs() > opts.growth_limit {
            status = SolveStatus::EnergyDiverging;
            break;
        }
    }
    if status == SolveStatus::MaxItersExceeded && state.g.max_abs() <= opts.tol_res {
        status = SolveStatus::Converged;
    }

    let report = finish(ctx, m, opts, state, iterations, history, status);
    match report.status {
        SolveStatus::Converged => Ok(report),
        SolveStatus::MaxItersExceeded => Err(SolveError::MaxItersExceeded(Box::new(report))),
        SolveStatus::LineSearchStalled => Err(SolveError::LineSearchStalled(Box::new(report))),
        SolveStatus::EnergyDiverging => Err(SolveError::EnergyDiverging(Box::new(report))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    NotUnique,
    #[serde(rename = "inconclusive: only trivial minimizer")]
    OnlyTrivial,
    #[serde(rename = "inconclusive: fewer than two converged nontrivial runs")]
    TooFewRuns,
}

impl Uniqueness {
    pub fn label(&self) -> &'static str {
        match self {
            Uniqueness::Unique => "unique",
            Uniqueness::NotUnique => "not_unique",
            Uniqueness::OnlyTrivial => "inconclusive: only trivial minimizer",
            Uniqueness::TooFewRuns => "inconclusive: fewer than two converged nontrivial runs",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutcome {
    pub start: usize,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiStartReport {
    pub runs: Vec<RunOutcome>,
    pub verdict: Uniqueness,
    /// Largest pairwise max-norm distance among converged nontrivial runs.
    pub max_pairwise_diff: f64,
}

impl MultiStartReport {
    pub fn converged(&self) -> impl Iterator<Item = &SolveReport> {
        self.runs
            .iter()
            .filter_map(|r| r.report.as_ref())
            .filter(|r| r.converged)
    }

    /// A converged nontrivial run, or any converged run if none is nontrivial.
    pub fn representative(&self) -> Option<&SolveReport> {
        self.converged()
            .find(|r| r.is_nontrivial)
            .or_else(|| self.converged().next())
    }
}

/// `k` i.i.d. starts with nodal values uniform on `(0, 1]`.
pub fn random_starts(dim: usize, k: usize, seed: u64) -> Vec<CoeffVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| CoeffVec((0..dim).map(|_| 1.0 - rng.gen::<f64>()).collect()))
        .collect()
}

/// Runs `minimize` from `k` random positive starts and compares the results.
pub fn multi_start(
    ctx: &FormContext,
    m: &NonlinearityModel,
    k: usize,
    seed: u64,
    opts: &SolveOptions,
    tol_unique: f64,
) -> Result<MultiStartReport, SolveError> {
    if k < 2 {
        return Err(SolveError::InvalidOptions(format!(
            "multi-start needs at least 2 starts, got {k}"
        )));
    }
    let starts = random_starts(ctx.space().dim(), k, seed);
    let runs: Vec<RunOutcome> = starts
        .par_iter()
        .enumerate()
        .map(|(i, u0)| match minimize(ctx, m, u0, opts) {
            Ok(r) => RunOutcome {
                start: i,
                report: Some(r),
                error: None,
            },
            Err(e) => RunOutcome {
                start: i,
                report: e.report().cloned(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    if let Some(bad) = runs.iter().find(|r| r.error.is_some() && r.report.is_none()) {
        return Err(SolveError::InvalidOptions(bad.error.clone().unwrap_or_default()));
    }
    let good: Vec<&SolveReport> = runs
        .iter()
        .filter_map(|r| r.report.as_ref())
        .filter(|r| r.converged && r.is_nontrivial)
        .collect();
    let mut max_diff: f64 = 0.0;
    for (i, a) in good.iter().enumerate() {
        for b in &good[i + 1..] {
            max_diff = max_diff.max(a.u_star.max_diff(&b.u_star));
        }
    }
    let any_converged = runs
        .iter()
        .any(|r| r.report.as_ref().is_some_and(|r| r.converged));
    let verdict = if good.len() >= 2 {
        if max_diff <= tol_unique {
            Uniqueness::Unique
        } else {
            Uniqueness::NotUnique
        }
    } else if good.is_empty() && any_converged {
        Uniqueness::OnlyTrivial
    } else {
        Uniqueness::TooFewRuns
    };
    Ok(MultiStartReport {
        runs,
        verdict,
        max_pairwise_diff: max_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::QuadOrders;
    use crate::mesh::build_space;

    fn ctx(n: usize, p: f64, s: f64) -> FormContext {
        FormContext::new(build_space(n, p, s).unwrap(), QuadOrders::default()).unwrap()
    }

    #[test]
    fn preconditioner_inverts_tridiagonal() {
        let h = 0.1;
        let r = vec![1.0, -2.0, 0.5, 3.0];
        let x = precondition(&r, h);
        for i in 0..4 {
            let mut tx = 2.0 * x[i];
            if i > 0 {
                tx -= x[i - 1];
            }
            if i < 3 {
                tx -= x[i + 1];
            }
            assert!((tx / h - r[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let c = ctx(16, 2.0, 0.5);
        let m = NonlinearityModel::power(1.0, 0.5, 2.0).unwrap();
        assert_eq!(energy(&c, &m, &c.space().zeros()), 0.0);
    }

    #[test]
    fn power_model_converges_to_positive_solution() {
        let c = ctx(64, 2.0, 0.5);
        let m = NonlinearityModel::power(1.0, 0.5, 2.0).unwrap();
        let opts = SolveOptions::for_p(2.0);
        let r = minimize(&c, &m, &c.space().constant(0.1), &opts).unwrap();
        assert!(r.converged && r.is_nontrivial);
        assert!(r.min_interior_value > 0.0);
        assert!(r.energy < 0.0);
        assert!(r.residual_inf <= opts.tol_res);
        for w in r.history.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-13 * w[0].energy.abs());
        }
    }

    #[test]
    fn one_iteration_cap_reports_best_so_far() {
        let c = ctx(32, 2.0, 0.5);
        let m = NonlinearityModel::power(1.0, 0.5, 2.0).unwrap();
        let opts = SolveOptions {
            max_iters: 1,
            ..SolveOptions::for_p(2.0)
        };
        let err = minimize(&c, &m, &c.space().constant(5.0), &opts).unwrap_err();
        let SolveError::MaxItersExceeded(r) = err else {
            panic!("expected max_iters_exceeded, got {err}");
        };
        assert_eq!(r.history.len(), 1);
        assert!(!r.converged);
    }

    #[test]
    fn multi_start_rejects_single_start() {
        let c = ctx(16, 2.0, 0.5);
        let m = NonlinearityModel::power(1.0, 0.5, 2.0).unwrap();
        assert!(multi_start(&c, &m, 1, 0, &SolveOptions::for_p(2.0), 1e-5).is_err());
    }

    #[test]
    fn random_starts_are_deterministic_and_positive() {
        let a = random_starts(10, 3, 42);
        let b = random_starts(10, 3, 42);
        assert_eq!(a, b);
        assert!(a.iter().all(|u| u.0.iter().all(|&v| v > 0.0 && v <= 1.0)));
    }
}
