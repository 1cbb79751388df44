//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ConfigError, ProblemSpec, SWEEP_PARAMS};
use crate::eigen::{lambda1, lambda1_bo, EigenError, EigenMethod, EigenReport, ExtReal, WeightFn};
use crate::minimize::{minimize, SolveError};
use crate::nonlinearity::asymptotics;
use crate::verify::{run_verify, summary_row, sweep, VerifyReport, SUMMARY_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mixedop", version, about = "Sublinear problems for the mixed local/nonlocal p-Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightSel {
    /// The configured weight `eigen.weight` / `eigen.weight_nodes`.
    A,
    /// `-a0` from the nonlinearity.
    A0,
    /// `-a_inf` from the nonlinearity.
    Ainf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the energy from the constant start 0.1.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest eigenvalue of the operator plus a weight.
    Eigen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "a")]
        weight: WeightSel,
    },
    /// Run every check and compare prediction with observation.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verify over a list of parameter values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

/// Writes through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| io_failure(&tmp, e))?;
    fs::rename(&tmp, &target).map_err(|e| io_failure(&target, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn out_dir(spec: &ProblemSpec, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&spec.output.directory))
}

fn wants(spec: &ProblemSpec, format: &str) -> bool {
    spec.output.formats.iter().any(|f| f == format)
}

#[derive(Serialize)]
struct SolveDoc<'a> {
    spec: &'a ProblemSpec,
    status: String,
    report: Option<&'a crate::minimize::SolveReport>,
}

fn cmd_solve(config: &Path, out: Option<PathBuf>) -> Result<i32, Failure> {
    let spec = ProblemSpec::from_path(config)?;
    let ctx = spec.context();
    let model = spec.model().expect("validated model");
    let result = minimize(&ctx, &model, &ctx.space().constant(0.1), &spec.solve_options());
    let (report, status, code) = match &result {
        Ok(r) => (Some(r), "converged".to_string(), EXIT_OK),
        Err(SolveError::InvalidOptions(m)) => {
            return Err(Failure {
                code: EXIT_CONFIG,
                message: m.clone(),
            })
        }
        Err(e) => (e.report(), e.to_string(), EXIT_NOT_CONVERGED),
    };
    let dir = out_dir(&spec, out);
    if let (Some(r), true) = (report, wants(&spec, "csv")) {
        write_atomic(&dir, "solution.csv", &ctx.space().profile_csv(&r.u_star))?;
    }
    if wants(&spec, "json") {
        let doc = SolveDoc {
            spec: &spec,
            status: status.clone(),
            report,
        };
        write_atomic(&dir, "solve_report.json", &to_json(&doc))?;
    }
    if code != EXIT_OK {
        eprintln!("solve: {status}");
    }
    Ok(code)
}

#[derive(Serialize)]
struct EigenDoc<'a> {
    spec: &'a ProblemSpec,
    weight: &'static str,
    report: &'a EigenReport,
}

fn cmd_eigen(config: &Path, out: Option<PathBuf>, sel: WeightSel) -> Result<i32, Failure> {
    let spec = ProblemSpec::from_path(config)?;
    let ctx = spec.context();
    let space = ctx.space();
    let opts = spec.eigen_options();
    let (name, weight) = match sel {
        WeightSel::A => ("a", spec.weight(space)),
        WeightSel::A0 | WeightSel::Ainf => {
            let data = asymptotics(&spec.model().expect("validated model"), space);
            let (name, v) = match sel {
                WeightSel::A0 => ("a0", data.a0),
                _ => ("ainf", data.a_inf),
            };
            let neg = v.iter().map(|x| -x).collect();
            (name, WeightFn::from_samples(space, neg).expect("one sample per node"))
        }
    };
    let eig_failure = |e: EigenError| Failure {
        code: EXIT_CONFIG,
        message: format!("eigen: {e}"),
    };
    let (report, code) = if weight.is_bounded() {
        match lambda1(&ctx, &weight, &opts) {
            Ok(r) => (r, EXIT_OK),
            Err(EigenError::NotConverged(r)) => (*r, EXIT_NOT_CONVERGED),
            Err(e) => return Err(eig_failure(e)),
        }
    } else {
        let value: ExtReal = lambda1_bo(&ctx, &weight, &opts).map_err(eig_failure)?;
        let report = EigenReport {
            lambda1: value,
            lambda2: None,
            e1: None,
            iterations: 0,
            converged: true,
            method: EigenMethod::Symbolic,
            rayleigh_history: Vec::new(),
        };
        (report, EXIT_OK)
    };
    let dir = out_dir(&spec, out);
    if wants(&spec, "json") {
        let doc = EigenDoc {
            spec: &spec,
            weight: name,
            report: &report,
        };
        write_atomic(&dir, "eigen_report.json", &to_json(&doc))?;
    }
    if let (Some(e1), true) = (&report.e1, wants(&spec, "csv")) {
        write_atomic(&dir, "eigenfunction.csv", &space.profile_csv(e1))?;
    }
    println!("lambda1 = {}", report.lambda1);
    Ok(code)
}

fn verify_code(r: &VerifyReport) -> i32 {
    if !r.consistent || (!r.passed() && r.all_converged) {
        EXIT_INCONSISTENT
    } else if !r.all_converged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    }
}

fn cmd_verify(config: &Path, out: Option<PathBuf>) -> Result<i32, Failure> {
    let spec = ProblemSpec::from_path(config)?;
    let report = run_verify(&spec)?;
    let dir = out_dir(&spec, out);
    if wants(&spec, "json") {
        write_atomic(&dir, "verify_report.json", &to_json(&report))?;
    }
    if wants(&spec, "csv") {
        let csv = format!("{SUMMARY_HEADER}\n{}\n", summary_row("", None, &report));
        write_atomic(&dir, "verify_summary.csv", &csv)?;
    }
    for c in &report.checks {
        println!("{:<12} {:?}: {}", c.name, c.status, c.detail);
    }
    Ok(verify_code(&report))
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, param: &str, values: &str) -> Result<i32, Failure> {
    let spec = ProblemSpec::from_path(config)?;
    if !SWEEP_PARAMS.contains(&param) {
        return Err(ConfigError::Field {
            field: "param".into(),
            message: format!("unknown sweep parameter `{param}`; expected one of {SWEEP_PARAMS:?}"),
        }
        .into());
    }
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>().map_err(|_| ConfigError::Field {
                field: "values".into(),
                message: format!("not a number: `{v}`"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(ConfigError::Field {
            field: "values".into(),
            message: "empty value list".into(),
        }
        .into());
    }
    let rows = sweep(&spec, param, &values)?;
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for (v, r) in &rows {
        csv.push_str(&summary_row(param, Some(*v), r));
        csv.push('\n');
    }
    write_atomic(&out_dir(&spec, out), "sweep.csv", &csv)?;
    print!("{csv}");
    let code = rows.iter().map(|(_, r)| verify_code(r)).max().unwrap_or(EXIT_OK);
    Ok(code)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, out),
        Command::Eigen { config, out, weight } => cmd_eigen(&config, out, weight),
        Command::Verify { config, out } => cmd_verify(&config, out),
        Command::Sweep {
            config,
            out,
            param,
            values,
        } => cmd_sweep(&config, out, &param, &values),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
