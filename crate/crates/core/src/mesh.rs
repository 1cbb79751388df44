//! Uniform P1 finite-element space on `(0, 1)` with zero extension to the real line.
//!
//! A discrete function is stored by its values at the interior nodes
//! `x_i = i h`, `i = 1..n_cells-1`. The boundary values at `0` and `1` are
//! implicitly zero and the function vanishes identically outside `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::GaussRule;

/// Points per cell used for all `L^q` integrals over `Omega`.
pub const CELL_GAUSS_POINTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("mesh too coarse: n_cells = {0}, need at least 4")]
    MeshTooCoarse(usize),
    #[error("exponent p must be greater than 1, got {0}")]
    InvalidExponent(f64),
    #[error("fractional order s must lie in (0, 1), got {0}")]
    InvalidOrder(f64),
    #[error("integrability exponent q must be at least 1, got {0}")]
    InvalidNormExponent(f64),
}

/// Discrete analogue of the space of `W^{1,p}` functions vanishing off `Omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeSpace {
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
    p: f64,
    s: f64,
}

pub fn build_space(n_cells: usize, p: f64, s: f64) -> Result<FeSpace, SpaceError> {
    if n_cells < 4 {
        return Err(SpaceError::MeshTooCoarse(n_cells));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(SpaceError::InvalidExponent(p));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(SpaceError::InvalidOrder(s));
    }
    let h = 1.0 / n_cells as f64;
    let nodes = (1..n_cells).map(|i| i as f64 / n_cells as f64).collect();
    Ok(FeSpace {
        n_cells,
        h,
        nodes,
        p,
        s,
    })
}

impl FeSpace {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior node coordinates.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Number of interior nodes (degrees of freedom).
    pub fn dim(&self) -> usize {
        self.n_cells - 1
    }

    /// Coordinate of node `i` in `0..=n_cells`, boundary nodes included.
    pub fn node_x(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    pub fn zeros(&self) -> CoeffVec {
        CoeffVec(vec![0.0; self.dim()])
    }

    pub fn constant(&self, value: f64) -> CoeffVec {
        CoeffVec(vec![value; self.dim()])
    }

    /// Nodal interpolant of `g` at the interior nodes.
    pub fn interpolate(&self, g: impl Fn(f64) -> f64) -> CoeffVec {
        CoeffVec(self.nodes.iter().map(|&x| g(x)).collect())
    }

    /// Wraps raw nodal values; panics on a length mismatch.
    pub fn coeffs(&self, values: Vec<f64>) -> CoeffVec {
        assert_eq!(values.len(), self.dim(), "coefficient vector length mismatch");
        CoeffVec(values)
    }

    pub(crate) fn check(&self, u: &CoeffVec) {
        assert_eq!(
            u.len(),
            self.dim(),
            "coefficient vector does not belong to this space"
        );
    }

    /// Value of `u` at node `i` in `0..=n_cells` (zero at the boundary).
    #[inline]
    pub fn node_value(&self, u: &CoeffVec, i: usize) -> f64 {
        if i == 0 || i >= self.n_cells {
            0.0
        } else {
            u.0[i - 1]
        }
    }

    /// `(left, right)` nodal values of `u` on cell `cell`.
    #[inline]
    pub fn cell_values(&self, u: &CoeffVec, cell: usize) -> (f64, f64) {
        (self.node_value(u, cell), self.node_value(u, cell + 1))
    }

    /// Slope of `u` on each cell.
    pub fn slopes(&self, u: &CoeffVec) -> Vec<f64> {
        self.check(u);
        (0..self.n_cells)
            .map(|c| {
                let (l, r) = self.cell_values(u, c);
                (r - l) / self.h
            })
            .collect()
    }

    /// Same parameters on a mesh with twice as many cells.
    pub fn refined(&self) -> FeSpace {
        build_space(2 * self.n_cells, self.p, self.s).expect("refining a valid space")
    }

    /// Exact representation of `u` on the refined mesh (P1 spaces are nested).
    pub fn prolongate(&self, u: &CoeffVec) -> (FeSpace, CoeffVec) {
        self.check(u);
        let fine = self.refined();
        let values = (1..fine.n_cells)
            .map(|j| {
                if j % 2 == 0 {
                    self.node_value(u, j / 2)
                } else {
                    let (l, r) = self.cell_values(u, j / 2);
                    0.5 * (l + r)
                }
            })
            .collect();
        (fine, CoeffVec(values))
    }

    /// CSV profile with header `x,value`, boundary rows included.
    pub fn profile_csv(&self, u: &CoeffVec) -> String {
        self.check(u);
        let mut out = String::from("x,value\n");
        for i in 0..=self.n_cells {
            out.push_str(&format!("{},{}\n", self.node_x(i), self.node_value(u, i)));
        }
        out
    }
}

/// Interior nodal coefficients of a discrete function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffVec(pub Vec<f64>);

impl CoeffVec {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> CoeffVec {
        CoeffVec(self.0.iter().map(|v| c * v).collect())
    }

    pub fn positive_part(&self) -> CoeffVec {
        CoeffVec(self.0.iter().map(|v| v.max(0.0)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_i |self_i - other_i|`.
    pub fn max_diff(&self, other: &CoeffVec) -> f64 {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Piecewise-linear evaluation; zero outside `(0, 1)`.
pub fn evaluate(space: &FeSpace, u: &CoeffVec, x: f64) -> f64 {
    space.check(u);
    if !(x > 0.0 && x < 1.0) {
        return 0.0;
    }
    let n = space.n_cells;
    let cell = ((x * n as f64).floor() as usize).min(n - 1);
    let (l, r) = space.cell_values(u, cell);
    let t = x * n as f64 - cell as f64;
    l + (r - l) * t
}

/// `||u||_{L^q(0,1)}` by 5-point Gauss quadrature on each cell.
pub fn lp_norm(space: &FeSpace, u: &CoeffVec, q: f64) -> Result<f64, SpaceError> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(SpaceError::InvalidNormExponent(q));
    }
    Ok(lp_norm_pow(space, u, q).powf(1.0 / q))
}

/// `int_Omega |u|^q dx`, the `q`-th power of [`lp_norm`].
pub fn lp_norm_pow(space: &FeSpace, u: &CoeffVec, q: f64) -> f64 {
    space.check(u);
    let rule = GaussRule::new(CELL_GAUSS_POINTS);
    let h = space.h;
    let mut total = 0.0;
    for cell in 0..space.n_cells {
        let (l, r) = space.cell_values(u, cell);
        if l == 0.0 && r == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * (l + (r - l) * t).abs().powf(q);
        }
        total += h * acc;
    }
    total
}
