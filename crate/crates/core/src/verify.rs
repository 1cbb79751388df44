//! Theorem-level checks bundled into one report: existence predicate against
//! observed solutions, positivity, uniqueness, the De Giorgi level trace and (f5).

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ProblemSpec};
use crate::eigen::{existence_predicate, lambda1, ExistencePredicate, ExtReal, WeightFn};
use crate::forms::FormContext;
use crate::mesh::{CoeffVec, FeSpace};
use crate::minimize::{minimize, multi_start, MultiStartReport, SolveOptions, Uniqueness};
use crate::nonlinearity::{asymptotics, NonlinearityModel};

#[derive(Debug, Clone, Error)]
pub enum VerifyError {
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("need at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("u_star must be nonnegative (min {0})")]
    NegativeSolution(f64),
    #[error("f5_contradiction: lambda_1(L - a0) = {0} < 0 but f is not positive near 0")]
    F5Contradiction(ExtReal),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiTrace {
    pub delta: f64,
    pub levels: Vec<f64>,
    pub u_tilde: CoeffVec,
    #[serde(rename = "Uk")]
    pub uk: Vec<f64>,
    pub eta: f64,
    pub k_vanish: Option<usize>,
}

impl DeGiorgiTrace {
    /// Strictly decreasing until the first zero, zero afterwards.
    pub fn strictly_decreasing(&self) -> bool {
        let cut = self.k_vanish.unwrap_or(self.uk.len() - 1);
        self.uk[..=cut].windows(2).all(|w| w[1] < w[0]) && self.uk[cut..].iter().all(|&v| v == self.uk[cut])
    }
}

/// `int_Omega ((v - c)+)^p`, exact for piecewise-linear `v`.
pub fn positive_part_power(space: &FeSpace, v: &CoeffVec, c: f64) -> f64 {
    let p = space.p();
    let h = space.h();
    let mut acc = 0.0;
    for cell in 0..space.n_cells() {
        let (l, r) = space.cell_values(v, cell);
        let (l, r) = (l - c, r - c);
        if l <= 0.0 && r <= 0.0 {
            continue;
        }
        let d = r - l;
        acc += if d.abs() <= 1e-12 * l.abs().max(r.abs()) {
            h * (0.5 * (l + r)).max(0.0).powf(p)
        } else {
            h * (r.max(0.0).powf(p + 1.0) - l.max(0.0).powf(p + 1.0)) / ((p + 1.0) * d)
        };
    }
    acc
}

pub fn degiorgi_trace(
    ctx: &FormContext,
    u_star: &CoeffVec,
    delta: f64,
    k_max: usize,
) -> Result<DeGiorgiTrace, VerifyError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(VerifyError::InvalidDelta(delta));
    }
    if k_max < 3 {
        return Err(VerifyError::TooFewLevels(k_max));
    }
    if u_star.min_value() < 0.0 {
        return Err(VerifyError::NegativeSolution(u_star.min_value()));
    }
    let space = ctx.space();
    let p = space.p();
    let u_tilde = u_star.scaled(delta.powf(1.0 / (p - 1.0)));
    let levels: Vec<f64> = (0..=k_max).map(|k| 1.0 - 0.5_f64.powi(k as i32)).collect();
    let uk: Vec<f64> = levels
        .iter()
        .map(|&c| positive_part_power(space, &u_tilde, c))
        .collect();
    let k_vanish = uk.iter().position(|&v| v == 0.0);
    Ok(DeGiorgiTrace {
        delta,
        levels,
        u_tilde,
        uk,
        eta: 2.0_f64.powf(p + p * p),
        k_vanish,
    })
}

pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_LEVELS: usize = 12;

/// Starts at `delta = 0.5` and halves up to 10 times until the trace vanishes.
pub fn degiorgi_auto(ctx: &FormContext, u_star: &CoeffVec) -> Result<DeGiorgiTrace, VerifyError> {
    let mut delta = DEFAULT_DELTA;
    let mut trace = degiorgi_trace(ctx, u_star, delta, DEFAULT_LEVELS)?;
    for _ in 0..10 {
        if trace.k_vanish.is_some() {
            break;
        }
        delta *= 0.5;
        trace = degiorgi_trace(ctx, u_star, delta, DEFAULT_LEVELS)?;
    }
    Ok(trace)
}

/// `lambda_1(L - a0) < 0` implies (f5); otherwise report the direct sign search.
pub fn infer_f5(m: &NonlinearityModel, space: &FeSpace, lambda_a0: ExtReal) -> Result<bool, VerifyError> {
    let direct = asymptotics(m, space).rho_f.is_some();
    if lambda_a0.0 < 0.0 {
        if !direct {
            return Err(VerifyError::F5Contradiction(lambda_a0));
        }
        return Ok(true);
    }
    Ok(direct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub spec: ProblemSpec,
    /// `lambda_1(L)` with `a = 0`.
    pub lambda1: Option<f64>,
    pub predicate: Option<ExistencePredicate>,
    pub solves: MultiStartReport,
    pub observed_exists: bool,
    pub smp_pass: bool,
    pub uniqueness_pass: bool,
    pub uniqueness_note: String,
    pub linf_bound: f64,
    pub degiorgi: Option<DeGiorgiTrace>,
    pub f5_inferred: Option<bool>,
    pub consistent: bool,
    pub all_converged: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

fn check(name: &str, ok: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        detail,
    }
}

pub fn run_verify(spec: &ProblemSpec) -> Result<VerifyReport, ConfigError> {
    spec.validate()?;
    let ctx = spec.context();
    let space = ctx.space().clone();
    let model = spec.model().expect("validated model");
    let eopts = spec.eigen_options();
    let sopts = spec.solve_options();
    let mut checks = Vec::new();

    let lambda1_res = lambda1(&ctx, &WeightFn::zero(&space), &eopts);
    let lambda1_val = lambda1_res.as_ref().ok().map(|r| r.lambda1.0);
    checks.push(match &lambda1_res {
        Ok(r) => check("lambda1", r.converged, format!("lambda_1(L) = {}", r.lambda1)),
        Err(e) => check("lambda1", false, e.to_string()),
    });
    let predicate = existence_predicate(&ctx, &model, &eopts);
    checks.push(match &predicate {
        Ok(pr) => check(
            "predicate",
            true,
            format!(
                "lambda_1(L - a0) = {}, lambda_1(L - a_inf) = {}, predict_exists = {}",
                pr.lambda_a0, pr.lambda_ainf, pr.predict_exists
            ),
        ),
        Err(e) => check("predicate", false, e.to_string()),
    });
    let predicate = predicate.ok();

    let solves = multi_start(&ctx, &model, spec.solve.starts, spec.solve.seed, &sopts, spec.solve.tol_unique)
        .map_err(|e| ConfigError::Field {
            field: "solve".into(),
            message: e.to_string(),
        })?;
    let n_conv = solves.converged().count();
    let all_converged = n_conv == solves.runs.len();
    checks.push(check(
        "solve",
        all_converged,
        format!("{n_conv}/{} runs converged", solves.runs.len()),
    ));
    let nontrivial: Vec<_> = solves.converged().filter(|r| r.is_nontrivial).collect();
    let observed_exists = nontrivial.iter().any(|r| r.energy < 0.0);
    let smp_pass = nontrivial.iter().all(|r| r.min_interior_value > 0.0);
    checks.push(if nontrivial.is_empty() {
        Check {
            name: "smp".into(),
            status: CheckStatus::Skipped,
            detail: "no nontrivial solution".into(),
        }
    } else {
        let min = nontrivial
            .iter()
            .map(|r| r.min_interior_value)
            .fold(f64::INFINITY, f64::min);
        check("smp", smp_pass, format!("min interior value {min:e}"))
    });
    let uniqueness_pass = solves.verdict != Uniqueness::NotUnique;
    checks.push(Check {
        name: "uniqueness".into(),
        status: match solves.verdict {
            Uniqueness::Unique => CheckStatus::Pass,
            Uniqueness::NotUnique => CheckStatus::Fail,
            _ => CheckStatus::Skipped,
        },
        detail: format!(
            "{}; max pairwise difference {:e}",
            solves.verdict.label(),
            solves.max_pairwise_diff
        ),
    });

    let rep = solves.representative();
    let linf_bound = rep.map_or(0.0, |r| r.u_star.max_abs());
    let degiorgi = rep.and_then(|r| degiorgi_auto(&ctx, &r.u_star).ok());
    checks.push(match &degiorgi {
        Some(t) => check(
            "degiorgi",
            t.k_vanish.is_some() && t.strictly_decreasing(),
            format!("delta = {}, k_vanish = {:?}", t.delta, t.k_vanish),
        ),
        None => Check {
            name: "degiorgi".into(),
            status: CheckStatus::Skipped,
            detail: "no converged solution".into(),
        },
    });

    let f5 = predicate
        .as_ref()
        .map(|pr| infer_f5(&model, &space, pr.lambda_a0));
    let f5_inferred = match &f5 {
        Some(Ok(v)) => Some(*v),
        _ => None,
    };
    checks.push(match &f5 {
        Some(Ok(v)) => check("f5", true, format!("(f5) holds: {v}")),
        Some(Err(e)) => check("f5", false, e.to_string()),
        None => Check {
            name: "f5".into(),
            status: CheckStatus::Skipped,
            detail: "no predicate".into(),
        },
    });

    let consistent = match &predicate {
        Some(pr) if pr.sharp => pr.predict_exists == observed_exists,
        Some(pr) => !pr.predict_exists || observed_exists,
        None => false,
    };
    checks.push(check(
        "consistency",
        consistent,
        format!(
            "predicted {:?}, observed {observed_exists}",
            predicate.as_ref().map(|p| p.predict_exists)
        ),
    ));

    Ok(VerifyReport {
        spec: spec.clone(),
        lambda1: lambda1_val,
        predicate,
        solves,
        observed_exists,
        smp_pass,
        uniqueness_pass,
        uniqueness_note: "multi-start agreement is numerical evidence, not a proof of uniqueness".into(),
        linf_bound,
        degiorgi,
        f5_inferred,
        consistent,
        all_converged,
        checks,
    })
}

pub const SUMMARY_HEADER: &str = "param,value,p,s,n_cells,lambda_lin,lambda1,lambda_a0,lambda_ainf,\
predict_exists,observed_exists,sharp,unique,smp,linf,delta,k_vanish,consistent";

fn ext(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(v) => ExtReal(v).to_string(),
    }
}

/// One CSV row in the `SUMMARY_HEADER` column order.
pub fn summary_row(param: &str, value: Option<f64>, r: &VerifyReport) -> String {
    let mut row = String::new();
    let pr = r.predicate.as_ref();
    let _ = write!(
        row,
        "{param},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        value.map(|v| v.to_string()).unwrap_or_default(),
        r.spec.p,
        r.spec.s,
        r.spec.n_cells,
        r.spec.nonlinearity.lambda_lin,
        ext(r.lambda1),
        ext(pr.map(|p| p.lambda_a0.0)),
        ext(pr.map(|p| p.lambda_ainf.0)),
        pr.map(|p| p.predict_exists.to_string()).unwrap_or_default(),
        r.observed_exists,
        pr.map(|p| p.sharp.to_string()).unwrap_or_default(),
        r.solves.verdict.label(),
        r.smp_pass,
        r.linf_bound,
        r.degiorgi.as_ref().map(|t| t.delta.to_string()).unwrap_or_default(),
        r.degiorgi
            .as_ref()
            .and_then(|t| t.k_vanish)
            .map_or("none".to_string(), |k| k.to_string()),
        r.consistent,
    );
    row
}

/// Runs `run_verify` for each value of `param`, in input order.
pub fn sweep(
    spec: &ProblemSpec,
    param: &str,
    values: &[f64],
) -> Result<Vec<(f64, VerifyReport)>, ConfigError> {
    let specs = values
        .iter()
        .map(|&v| spec.with_param(param, v).map(|s| (v, s)))
        .collect::<Result<Vec<_>, _>>()?;
    specs
        .into_par_iter()
        .map(|(v, s)| run_verify(&s).map(|r| (v, r)))
        .collect()
}

/// Nontrivial solution with negative energy from the default start `u0 = 0.1`.
pub fn solution_exists(ctx: &FormContext, m: &NonlinearityModel, opts: &SolveOptions) -> bool {
    match minimize(ctx, m, &ctx.space().constant(0.1), opts) {
        Ok(r) => r.is_nontrivial && r.energy < 0.0,
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub lambda_star: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Bisects the existence boundary of `lambda t^(p-1) - b t^(q-1)` on
/// `[center - 2, center + 2]` to width `tol`, at most 20 halvings.
pub fn existence_threshold(
    ctx: &FormContext,
    center: f64,
    b: f64,
    q: f64,
    opts: &SolveOptions,
    tol: f64,
) -> Option<Threshold> {
    let p = ctx.p();
    let exists = |lam: f64| {
        NonlinearityModel::logistic(lam, b, q, p)
            .map(|m| solution_exists(ctx, &m, opts))
            .unwrap_or(false)
    };
    let (mut lo, mut hi) = (center - 2.0, center + 2.0);
    if exists(lo) || !exists(hi) {
        return None;
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < 20 {
        let mid = 0.5 * (lo + hi);
        if exists(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Some(Threshold {
        lambda_star: 0.5 * (lo + hi),
        lo,
        hi,
        iterations,
    })
}
