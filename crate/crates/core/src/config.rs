//! Problem configuration: TOML parsing, defaults and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{EigenOptions, WeightFn};
use crate::forms::{FormContext, QuadOrders};
use crate::mesh::{build_space, FeSpace};
use crate::minimize::SolveOptions;
use crate::nonlinearity::{Coefficient, NonlinearityModel};

#[derive(Debug, Clone, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `c t^theta`, defaults `c = 1`, `theta = 0.5`.
    Power,
    /// `lambda t^(p-1) - b t^(q-1)`, defaults `lambda = 10`, `b = 1`.
    Logistic,
    /// All three terms, every coefficient defaulting to zero.
    General,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinearity {
    family: Option<Family>,
    c: Option<f64>,
    theta: Option<f64>,
    lambda_lin: Option<f64>,
    b: Option<f64>,
    q: Option<f64>,
    c_nodes: Option<Vec<f64>>,
    b_nodes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolve {
    tol_res: Option<f64>,
    max_iters: Option<usize>,
    starts: Option<usize>,
    seed: Option<u64>,
    tol_unique: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigen {
    tol_eig: Option<f64>,
    max_iters: Option<usize>,
    weight: Option<f64>,
    weight_nodes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuad {
    diag_order: Option<usize>,
    far_order: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
    formats: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    p: f64,
    s: f64,
    n_cells: usize,
    #[serde(default)]
    nonlinearity: RawNonlinearity,
    #[serde(default)]
    solve: RawSolve,
    #[serde(default)]
    eigen: RawEigen,
    #[serde(default)]
    quad: RawQuad,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearitySpec {
    pub family: Family,
    pub c: f64,
    pub theta: f64,
    pub lambda_lin: f64,
    pub b: f64,
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_nodes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_nodes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSpec {
    pub tol_res: f64,
    pub max_iters: usize,
    pub starts: usize,
    pub seed: u64,
    pub tol_unique: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSpec {
    pub tol_eig: f64,
    pub max_iters: usize,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_nodes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub directory: String,
    pub formats: Vec<String>,
}

/// Fully resolved problem description; every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub s: f64,
    pub n_cells: usize,
    pub nonlinearity: NonlinearitySpec,
    pub solve: SolveSpec,
    pub eigen: EigenSpec,
    pub quad: QuadOrders,
    pub output: OutputSpec,
}

/// Parameters that `with_param` can vary.
pub const SWEEP_PARAMS: [&str; 4] = ["lambda_lin", "s", "p", "n_cells"];

impl ProblemSpec {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawSpec) -> Result<Self, ConfigError> {
        let p = raw.p;
        let n = raw.nonlinearity;
        let family = n.family.unwrap_or(Family::Power);
        let (c, theta, lambda_lin, b) = match family {
            Family::Power => (1.0, 0.5, 0.0, 0.0),
            Family::Logistic => (0.0, 0.0, 10.0, 1.0),
            Family::General => (0.0, 0.0, 0.0, 0.0),
        };
        let spec = ProblemSpec {
            p,
            s: raw.s,
            n_cells: raw.n_cells,
            nonlinearity: NonlinearitySpec {
                family,
                c: n.c.unwrap_or(c),
                theta: n.theta.unwrap_or(theta),
                lambda_lin: n.lambda_lin.unwrap_or(lambda_lin),
                b: n.b.unwrap_or(b),
                q: n.q.unwrap_or(p + 2.0),
                c_nodes: n.c_nodes,
                b_nodes: n.b_nodes,
            },
            solve: {
                let d = SolveOptions::for_p(p);
                SolveSpec {
                    tol_res: raw.solve.tol_res.unwrap_or(d.tol_res),
                    max_iters: raw.solve.max_iters.unwrap_or(d.max_iters),
                    starts: raw.solve.starts.unwrap_or(5),
                    seed: raw.solve.seed.unwrap_or(0),
                    tol_unique: raw.solve.tol_unique.unwrap_or(1e-5),
                }
            },
            eigen: {
                let d = EigenOptions::for_p(p);
                EigenSpec {
                    tol_eig: raw.eigen.tol_eig.unwrap_or(d.tol_eig),
                    max_iters: raw.eigen.max_iters.unwrap_or(d.max_iters),
                    weight: raw.eigen.weight.unwrap_or(0.0),
                    weight_nodes: raw.eigen.weight_nodes,
                }
            },
            quad: {
                let d = QuadOrders::default();
                QuadOrders {
                    diag_order: raw.quad.diag_order.unwrap_or(d.diag_order),
                    far_order: raw.quad.far_order.unwrap_or(d.far_order),
                }
            },
            output: OutputSpec {
                directory: raw.output.directory.unwrap_or_else(|| "out".into()),
                formats: raw
                    .output
                    .formats
                    .unwrap_or_else(|| vec!["csv".into(), "json".into()]),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every module precondition, naming the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(field_err("p", format!("must be a finite number > 1, got {}", self.p)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(field_err("s", format!("must lie in (0, 1), got {}", self.s)));
        }
        if self.n_cells < 4 {
            return Err(field_err(
                "n_cells",
                format!("mesh too coarse: need at least 4 cells, got {}", self.n_cells),
            ));
        }
        let nodes = self.n_cells + 1;
        for (name, v) in [
            ("nonlinearity.c_nodes", &self.nonlinearity.c_nodes),
            ("nonlinearity.b_nodes", &self.nonlinearity.b_nodes),
            ("eigen.weight_nodes", &self.eigen.weight_nodes),
        ] {
            if let Some(v) = v {
                if v.len() != nodes {
                    return Err(field_err(
                        name,
                        format!("needs n_cells + 1 = {nodes} samples, got {}", v.len()),
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(field_err(name, "samples must be finite"));
                }
            }
        }
        if !self.eigen.weight.is_finite() {
            return Err(field_err("eigen.weight", "must be finite"));
        }
        self.model().map_err(|e| field_err("nonlinearity", e.to_string()))?;
        let s = &self.solve;
        if !(s.tol_res > 0.0) {
            return Err(field_err("solve.tol_res", format!("must be positive, got {}", s.tol_res)));
        }
        if s.max_iters < 1 {
            return Err(field_err("solve.max_iters", "must be at least 1"));
        }
        if s.starts < 2 {
            return Err(field_err("solve.starts", format!("must be at least 2, got {}", s.starts)));
        }
        if !(s.tol_unique > 0.0) {
            return Err(field_err("solve.tol_unique", "must be positive"));
        }
        if !(self.eigen.tol_eig > 0.0) {
            return Err(field_err("eigen.tol_eig", "must be positive"));
        }
        if self.eigen.max_iters < 1 {
            return Err(field_err("eigen.max_iters", "must be at least 1"));
        }
        if self.quad.diag_order < 3 {
            return Err(field_err(
                "quad.diag_order",
                format!("must be at least 3, got {}", self.quad.diag_order),
            ));
        }
        if self.quad.far_order < 3 {
            return Err(field_err(
                "quad.far_order",
                format!("must be at least 3, got {}", self.quad.far_order),
            ));
        }
        if let Some(f) = self
            .output
            .formats
            .iter()
            .find(|f| !matches!(f.as_str(), "csv" | "json"))
        {
            return Err(field_err("output.formats", format!("unknown format `{f}`")));
        }
        Ok(())
    }

    pub fn space(&self) -> FeSpace {
        build_space(self.n_cells, self.p, self.s).expect("validated spec")
    }

    pub fn context(&self) -> FormContext {
        FormContext::new(self.space(), self.quad).expect("validated spec")
    }

    pub fn model(&self) -> Result<NonlinearityModel, crate::nonlinearity::ModelError> {
        let n = &self.nonlinearity;
        let coeff = |v: f64, nodes: &Option<Vec<f64>>| match nodes {
            Some(s) => Coefficient::Nodal(s.clone()),
            None => Coefficient::Constant(v),
        };
        NonlinearityModel::new(
            coeff(n.c, &n.c_nodes),
            n.theta,
            n.lambda_lin,
            coeff(n.b, &n.b_nodes),
            n.q,
            self.p,
        )
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol_res: self.solve.tol_res,
            max_iters: self.solve.max_iters,
            ..SolveOptions::for_p(self.p)
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol_eig: self.eigen.tol_eig,
            max_iters: self.eigen.max_iters,
        }
    }

    /// The configured bounded weight `a`.
    pub fn weight(&self, space: &FeSpace) -> WeightFn {
        match &self.eigen.weight_nodes {
            Some(v) => WeightFn::from_samples(space, v.clone()).expect("validated length"),
            None => WeightFn::constant(space, self.eigen.weight),
        }
    }

    /// Copy with one sweepable parameter replaced, revalidated.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, ConfigError> {
        let mut out = self.clone();
        match name {
            "lambda_lin" => out.nonlinearity.lambda_lin = value,
            "s" => out.s = value,
            "p" => {
                out.p = value;
                let d = SolveOptions::for_p(self.p);
                if self.solve.tol_res == d.tol_res {
                    out.solve.tol_res = SolveOptions::for_p(value).tol_res;
                }
                if self.eigen.tol_eig == EigenOptions::for_p(self.p).tol_eig {
                    out.eigen.tol_eig = EigenOptions::for_p(value).tol_eig;
                }
            }
            "n_cells" => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(field_err("n_cells", format!("must be a whole number, got {value}")));
                }
                out.n_cells = value as usize;
            }
            other => {
                return Err(field_err(
                    "param",
                    format!("unknown sweep parameter `{other}`; expected one of {SWEEP_PARAMS:?}"),
                ))
            }
        }
        out.validate()?;
        Ok(out)
    }
}
