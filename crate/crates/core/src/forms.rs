//! Local and nonlocal energies of P1 functions, their gradients, and the weak
//! residual.
//!
//! The nonlocal energy of a function vanishing off `Omega = (0,1)` splits as
//!
//! ```text
//! int_R int_R |u(x)-u(y)|^p |x-y|^(-1-ps)
//!     = int_Omega int_Omega |u(x)-u(y)|^p |x-y|^(-1-ps) + 2 int_Omega |u|^p omega,
//! omega(x) = (x^(-ps) + (1-x)^(-ps)) / (ps).
//! ```
//!
//! The interior double integral is a sum over cell pairs:
//! * identical cells: `|u(x)-u(y)| = |slope| |x-y|`, integrated in closed form;
//! * cells sharing a vertex: the integrand is homogeneous in the distances to the
//!   shared vertex, so a Duffy split collapses the radial direction exactly and
//!   leaves a smooth one-dimensional integral for Gauss–Legendre (`diag_order`);
//! * separated cells: tensor Gauss–Legendre with kernel weights that depend only
//!   on the cell offset; `diag_order` for offset 2 (nearly singular), `far_order`
//!   beyond.
//!
//! The tail term `x^(-ps)` on the two boundary cells is integrated exactly as well.
//!
//! Every gradient here is the exact derivative of the corresponding discrete
//! energy divided by `p`, so `residual` is the gradient of the discrete version
//! of `E(u) = Q(u)/p - int F(x, u)`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{CoeffVec, FeSpace, CELL_GAUSS_POINTS};
use crate::nonlinearity::NonlinearityModel;
use crate::quadrature::GaussRule;

/// Largest interior dimension for which the `p = 2` matrices are cached.
const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("quadrature order `{name}` must be at least 3, got {order}")]
    OrderTooLow { name: &'static str, order: usize },
    #[error("picone_gap needs a > 0 and b > 0, got a = {a}, b = {b}")]
    NonPositiveBase { a: f64, b: f64 },
    #[error("picone_gap needs c >= 0 and d >= 0, got c = {c}, d = {d}")]
    NegativeArgument { c: f64, d: f64 },
    #[error("vectors must have equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadOrders {
    pub diag_order: usize,
    pub far_order: usize,
}

impl Default for QuadOrders {
    fn default() -> Self {
        Self {
            diag_order: 6,
            far_order: 4,
        }
    }
}

/// Gradient of a discrete energy with respect to the interior nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientVec(pub Vec<f64>);

impl GradientVec {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `J_p(t) = |t|^(p-2) t`, extended by `J_p(0) = 0`.
#[inline]
pub fn jp(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 1.0).copysign(t)
    }
}

#[inline]
fn abs_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else {
        t.abs().powf(p)
    }
}

/// Assembled `p = 2` operators.
#[derive(Debug, Clone)]
pub struct DenseForms {
    pub a_loc: DMatrix<f64>,
    pub a_nl: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

#[derive(Debug)]
pub struct FormContext {
    space: FeSpace,
    orders: QuadOrders,
    far_rule: GaussRule,
    diag_rule: GaussRule,
    cell_rule: GaussRule,
    /// Cell offset 2, a row-major `k_d x k_d` block on the diagonal rule.
    near_weights: Vec<f64>,
    /// Offsets `d = 3..n_cells-1`, each a row-major `k_f x k_f` block.
    far_weights: Vec<f64>,
    same_cell_coeff: f64,
    touch_coeff: f64,
    /// `w_k (1 + t_k)^(-1-ps)` on the diagonal rule.
    touch_kernel: Vec<f64>,
    /// `h w_k omega(x)` at the tail points of every cell (singular boundary parts removed).
    tail_weights: Vec<f64>,
    boundary_tail_coeff: f64,
    dense: OnceLock<Option<DenseForms>>,
}

impl Clone for FormContext {
    fn clone(&self) -> Self {
        Self::new(self.space.clone(), self.orders).expect("orders were validated")
    }
}

impl FormContext {
    pub fn new(space: FeSpace, orders: QuadOrders) -> Result<Self, FormError> {
        if orders.diag_order < 3 {
            return Err(FormError::OrderTooLow {
                name: "diag_order",
                order: orders.diag_order,
            });
        }
        if orders.far_order < 3 {
            return Err(FormError::OrderTooLow {
                name: "far_order",
                order: orders.far_order,
            });
        }
        let (p, s) = (space.p(), space.s());
        let ps = p * s;
        let h = space.h();
        let n = space.n_cells();
        let far_rule = GaussRule::new(orders.far_order);
        let diag_rule = GaussRule::new(orders.diag_order);
        let cell_rule = GaussRule::new(CELL_GAUSS_POINTS);

        let offset_block = |rule: &GaussRule, d: usize| {
            let k = rule.len();
            let mut block = Vec::with_capacity(k * k);
            for a in 0..k {
                for b in 0..k {
                    let dist = (d as f64 + rule.nodes[b] - rule.nodes[a]) * h;
                    block.push(h * h * rule.weights[a] * rule.weights[b] * dist.powf(-1.0 - ps));
                }
            }
            block
        };
        let near_weights = offset_block(&diag_rule, 2);
        let far_weights: Vec<f64> = (3..n).flat_map(|d| offset_block(&far_rule, d)).collect();

        let alpha = p - 1.0 - ps;
        let same_cell_coeff = 2.0 * h.powf(alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0));
        let beta = p - ps + 1.0;
        let touch_coeff = h.powf(beta) / beta;
        let touch_kernel = diag_rule
            .nodes
            .iter()
            .zip(&diag_rule.weights)
            .map(|(&t, &w)| w * (1.0 + t).powf(-1.0 - ps))
            .collect();

        let kt = diag_rule.len();
        let mut tail_weights = Vec::with_capacity(n * kt);
        for cell in 0..n {
            for k in 0..kt {
                let x = (cell as f64 + diag_rule.nodes[k]) * h;
                let mut omega = 0.0;
                if cell != 0 {
                    omega += x.powf(-ps);
                }
                if cell != n - 1 {
                    omega += (1.0 - x).powf(-ps);
                }
                tail_weights.push(h * diag_rule.weights[k] * omega / ps);
            }
        }
        let boundary_tail_coeff = h.powf(beta) / (beta * ps);

        Ok(Self {
            space,
            orders,
            far_rule,
            diag_rule,
            cell_rule,
            near_weights,
            far_weights,
            same_cell_coeff,
            touch_coeff,
            touch_kernel,
            tail_weights,
            boundary_tail_coeff,
            dense: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn orders(&self) -> QuadOrders {
        self.orders
    }

    pub fn p(&self) -> f64 {
        self.space.p()
    }

    /// Exterior kernel integral `omega(x) = int_{R \ (0,1)} |x-y|^(-1-ps) dy`.
    pub fn tail_weight(&self, x: f64) -> f64 {
        let ps = self.space.p() * self.space.s();
        (x.powf(-ps) + (1.0 - x).powf(-ps)) / ps
    }

    /// Cached `p = 2` matrices, `None` for `p != 2` or very large meshes.
    pub fn dense_forms(&self) -> Option<&DenseForms> {
        self.dense
            .get_or_init(|| {
                (self.space.p() == 2.0 && self.space.dim() <= DENSE_LIMIT)
                    .then(|| self.assemble_dense())
            })
            .as_ref()
    }

    fn assemble_dense(&self) -> DenseForms {
        let dim = self.space.dim();
        let h = self.space.h();
        let mut a_loc = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            a_loc[(i, i)] = 2.0 / h;
            if i + 1 < dim {
                a_loc[(i, i + 1)] = -1.0 / h;
                a_loc[(i + 1, i)] = -1.0 / h;
            }
        }
        // at p = 2 the nonlocal gradient is linear, so columns are images of unit vectors
        let cols: Vec<Vec<f64>> = (0..dim)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                self.nonlocal_gradient_matrix_free(&CoeffVec(e)).0
            })
            .collect();
        let mut a_nl = DMatrix::zeros(dim, dim);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                a_nl[(i, j)] = *v;
            }
        }
        let mass = self.weighted_mass_matrix(&vec![1.0; self.space.n_cells() + 1]);
        DenseForms { a_loc, a_nl, mass }
    }

    /// `M_a[i][j] = int a phi_i phi_j` for a nodal weight (`n_cells + 1` samples).
    pub fn weighted_mass_matrix(&self, weight: &[f64]) -> DMatrix<f64> {
        let n = self.space.n_cells();
        assert_eq!(weight.len(), n + 1, "weight needs one sample per mesh node");
        let dim = self.space.dim();
        let h = self.space.h();
        let mut m = DMatrix::zeros(dim, dim);
        for cell in 0..n {
            let (mut mll, mut mlr, mut mrr) = (0.0, 0.0, 0.0);
            for (&t, &w) in self.cell_rule.nodes.iter().zip(&self.cell_rule.weights) {
                let a = weight[cell] + (weight[cell + 1] - weight[cell]) * t;
                let (pl, pr) = (1.0 - t, t);
                mll += h * w * a * pl * pl;
                mlr += h * w * a * pl * pr;
                mrr += h * w * a * pr * pr;
            }
            let l = cell.checked_sub(1);
            let r = (cell + 1 < n).then_some(cell);
            if let Some(l) = l {
                m[(l, l)] += mll;
            }
            if let Some(r) = r {
                m[(r, r)] += mrr;
            }
            if let (Some(l), Some(r)) = (l, r) {
                m[(l, r)] += mlr;
                m[(r, l)] += mlr;
            }
        }
        m
    }

    /// `int_Omega |grad u|^p`, exact for P1.
    pub fn local_energy(&self, u: &CoeffVec) -> f64 {
        let p = self.space.p();
        let h = self.space.h();
        self.space.slopes(u).iter().map(|&g| h * abs_pow(g, p)).sum()
    }

    /// Gradient of `local_energy / p`.
    pub fn local_gradient(&self, u: &CoeffVec) -> GradientVec {
        let p = self.space.p();
        let g = self.space.slopes(u);
        GradientVec(
            (1..self.space.n_cells())
                .map(|i| jp(g[i - 1], p) - jp(g[i], p))
                .collect(),
        )
    }

    /// Gagliardo energy over `R x R`.
    pub fn nonlocal_energy(&self, u: &CoeffVec) -> f64 {
        self.space.check(u);
        if let Some(d) = self.dense_forms() {
            let v = DVector::from_column_slice(u.values());
            return v.dot(&(&d.a_nl * &v));
        }
        self.nonlocal_energy_matrix_free(u)
    }

    /// Gradient of `nonlocal_energy / p`.
    pub fn nonlocal_gradient(&self, u: &CoeffVec) -> GradientVec {
        self.space.check(u);
        if let Some(d) = self.dense_forms() {
            let v = DVector::from_column_slice(u.values());
            return GradientVec((&d.a_nl * &v).as_slice().to_vec());
        }
        self.nonlocal_gradient_matrix_free(u)
    }

    fn point_values(&self, u: &CoeffVec, rule: &GaussRule) -> Vec<f64> {
        let n = self.space.n_cells();
        let mut vals = Vec::with_capacity(n * rule.len());
        for cell in 0..n {
            let (l, r) = self.space.cell_values(u, cell);
            for &t in &rule.nodes {
                vals.push(l + (r - l) * t);
            }
        }
        vals
    }

    /// Kernel block for cell offset `d >= 2` and the rule it lives on.
    #[inline]
    fn offset_block(&self, d: usize) -> (&[f64], usize) {
        if d == 2 {
            (&self.near_weights, self.diag_rule.len())
        } else {
            let k = self.far_rule.len();
            let kk = k * k;
            (&self.far_weights[(d - 3) * kk..(d - 2) * kk], k)
        }
    }

    /// Diagonal-rule nodes with kernel-weighted weights for `int_0^1 G(t) (1+t)^(-1-ps) dt`.
    ///
    /// The nodes stay fixed (no split at a sign change of the integrand) so that
    /// the analytic gradient is the exact derivative of the discrete energy.
    fn touch_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.diag_rule.nodes.iter().copied().zip(self.touch_kernel.iter().copied())
    }

    fn touch_integral(&self, g1: f64, g2: f64, p: f64) -> f64 {
        self.touch_nodes()
            .map(|(t, w)| w * abs_pow(g1 + g2 * t, p))
            .sum()
    }

    /// Nonlocal energy by quadrature, never using the cached matrix.
    pub fn nonlocal_energy_matrix_free(&self, u: &CoeffVec) -> f64 {
        self.space.check(u);
        let p = self.space.p();
        let n = self.space.n_cells();
        let g = self.space.slopes(u);
        let far_vals = self.point_values(u, &self.far_rule);
        let near_vals = self.point_values(u, &self.diag_rule);

        let same: f64 = g.iter().map(|&gi| self.same_cell_coeff * abs_pow(gi, p)).sum();
        let touch: f64 = (0..n - 1)
            .map(|i| {
                2.0 * self.touch_coeff
                    * (self.touch_integral(g[i], g[i + 1], p)
                        + self.touch_integral(g[i + 1], g[i], p))
            })
            .sum();
        let separated: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in (i + 2)..n {
                    let (w, k) = self.offset_block(j - i);
                    let vals = if j - i == 2 { &near_vals } else { &far_vals };
                    let ui = &vals[i * k..(i + 1) * k];
                    let uj = &vals[j * k..(j + 1) * k];
                    for a in 0..k {
                        let row = &w[a * k..(a + 1) * k];
                        for b in 0..k {
                            acc += row[b] * abs_pow(ui[a] - uj[b], p);
                        }
                    }
                }
                acc
            })
            .collect();
        let separated: f64 = 2.0 * separated.iter().sum::<f64>();
        same + touch + separated + 2.0 * self.tail_energy(u, &g)
    }

    fn tail_energy(&self, u: &CoeffVec, g: &[f64]) -> f64 {
        let p = self.space.p();
        let n = self.space.n_cells();
        let kt = self.diag_rule.len();
        let mut acc = 0.0;
        for cell in 0..n {
            let (l, r) = self.space.cell_values(u, cell);
            if l == 0.0 && r == 0.0 {
                continue;
            }
            let w = &self.tail_weights[cell * kt..(cell + 1) * kt];
            for (k, &t) in self.diag_rule.nodes.iter().enumerate() {
                acc += w[k] * abs_pow(l + (r - l) * t, p);
            }
        }
        acc + self.boundary_tail_coeff * (abs_pow(g[0], p) + abs_pow(g[n - 1], p))
    }

    /// Gradient of `nonlocal_energy / p` by quadrature, never using the cached matrix.
    pub fn nonlocal_gradient_matrix_free(&self, u: &CoeffVec) -> GradientVec {
        self.space.check(u);
        let p = self.space.p();
        let n = self.space.n_cells();
        let h = self.space.h();
        let kf = self.far_rule.len();
        let kd = self.diag_rule.len();
        let g = self.space.slopes(u);
        let far_vals = self.point_values(u, &self.far_rule);
        let near_vals = self.point_values(u, &self.diag_rule);

        // derivative with respect to the cell slopes
        let mut dg = vec![0.0; n];
        for i in 0..n {
            dg[i] += self.same_cell_coeff * jp(g[i], p);
        }
        for i in 0..n - 1 {
            let (gi, gj) = (g[i], g[i + 1]);
            let (mut di, mut dj) = (0.0, 0.0);
            for (t, w) in self.touch_nodes() {
                let a = jp(gi + gj * t, p);
                di += w * a;
                dj += w * a * t;
            }
            for (t, w) in self.touch_nodes() {
                let b = jp(gj + gi * t, p);
                di += w * b * t;
                dj += w * b;
            }
            dg[i] += 2.0 * self.touch_coeff * di;
            dg[i + 1] += 2.0 * self.touch_coeff * dj;
        }
        dg[0] += 2.0 * self.boundary_tail_coeff * jp(g[0], p);
        dg[n - 1] += 2.0 * self.boundary_tail_coeff * jp(g[n - 1], p);

        // derivative with respect to the quadrature point values, row by row:
        // (far-rule values, diagonal-rule values of the offset-2 pairs)
        let point_grads: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut far = vec![0.0; kf];
                let mut near = vec![0.0; kd];
                for j in 0..n {
                    let d = i.abs_diff(j);
                    if d < 2 {
                        continue;
                    }
                    let (w, k) = self.offset_block(d);
                    let (vals, out) = if d == 2 {
                        (&near_vals, &mut near)
                    } else {
                        (&far_vals, &mut far)
                    };
                    let ui = &vals[i * k..(i + 1) * k];
                    let uj = &vals[j * k..(j + 1) * k];
                    for a in 0..k {
                        let mut acc = 0.0;
                        for b in 0..k {
                            let wab = if j > i { w[a * k + b] } else { w[b * k + a] };
                            acc += wab * jp(ui[a] - uj[b], p);
                        }
                        out[a] += 2.0 * acc;
                    }
                }
                (far, near)
            })
            .collect();

        // nodal accumulation over 0..=n, boundary entries dropped at the end
        let mut nodal = vec![0.0; n + 1];
        for cell in 0..n {
            nodal[cell + 1] += dg[cell] / h;
            nodal[cell] -= dg[cell] / h;
            let (far, near) = &point_grads[cell];
            for (a, &t) in self.far_rule.nodes.iter().enumerate() {
                nodal[cell] += far[a] * (1.0 - t);
                nodal[cell + 1] += far[a] * t;
            }
            for (a, &t) in self.diag_rule.nodes.iter().enumerate() {
                nodal[cell] += near[a] * (1.0 - t);
                nodal[cell + 1] += near[a] * t;
            }
        }
        for cell in 0..n {
            let (l, r) = self.space.cell_values(u, cell);
            if l == 0.0 && r == 0.0 {
                continue;
            }
            let w = &self.tail_weights[cell * kd..(cell + 1) * kd];
            for (k, &t) in self.diag_rule.nodes.iter().enumerate() {
                let v = 2.0 * w[k] * jp(l + (r - l) * t, p);
                nodal[cell] += v * (1.0 - t);
                nodal[cell + 1] += v * t;
            }
        }
        GradientVec(nodal[1..n].to_vec())
    }

    /// Gradient of `q_form / p`.
    pub fn q_gradient(&self, u: &CoeffVec) -> GradientVec {
        let mut g = self.local_gradient(u);
        for (a, b) in g.0.iter_mut().zip(self.nonlocal_gradient(u).0) {
            *a += b;
        }
        g
    }

    /// `int_Omega F(x, u+)` on the cell rule.
    pub fn potential(&self, m: &NonlinearityModel, u: &CoeffVec) -> f64 {
        self.space.check(u);
        let h = self.space.h();
        let mut acc = 0.0;
        for cell in 0..self.space.n_cells() {
            let (l, r) = self.space.cell_values(u, cell);
            let x0 = cell as f64 * h;
            for (&t, &w) in self.cell_rule.nodes.iter().zip(&self.cell_rule.weights) {
                let v = l + (r - l) * t;
                if v > 0.0 {
                    acc += h * w * m.big_f_raw(x0 + t * h, v);
                }
            }
        }
        acc
    }

    /// `int_Omega f(x, u+) phi_i`, with `f` switched off where `u < 0`.
    pub fn load(&self, m: &NonlinearityModel, u: &CoeffVec) -> GradientVec {
        self.space.check(u);
        let n = self.space.n_cells();
        let h = self.space.h();
        let mut nodal = vec![0.0; n + 1];
        for cell in 0..n {
            let (l, r) = self.space.cell_values(u, cell);
            let x0 = cell as f64 * h;
            for (&t, &w) in self.cell_rule.nodes.iter().zip(&self.cell_rule.weights) {
                let v = l + (r - l) * t;
                if v >= 0.0 {
                    let fv = h * w * m.f_raw(x0 + t * h, v);
                    nodal[cell] += fv * (1.0 - t);
                    nodal[cell + 1] += fv * t;
                }
            }
        }
        GradientVec(nodal[1..n].to_vec())
    }

    /// `int_Omega a |u|^p` for nodal weight samples (`n_cells + 1` values).
    pub fn weighted_power(&self, weight: &[f64], u: &CoeffVec) -> f64 {
        self.space.check(u);
        let p = self.space.p();
        let h = self.space.h();
        let mut acc = 0.0;
        for cell in 0..self.space.n_cells() {
            let (l, r) = self.space.cell_values(u, cell);
            if l == 0.0 && r == 0.0 {
                continue;
            }
            for (&t, &w) in self.cell_rule.nodes.iter().zip(&self.cell_rule.weights) {
                let a = weight[cell] + (weight[cell + 1] - weight[cell]) * t;
                acc += h * w * a * abs_pow(l + (r - l) * t, p);
            }
        }
        acc
    }

    /// Gradient of `weighted_power / p`.
    pub fn weighted_power_gradient(&self, weight: &[f64], u: &CoeffVec) -> GradientVec {
        self.space.check(u);
        let p = self.space.p();
        let n = self.space.n_cells();
        let h = self.space.h();
        let mut nodal = vec![0.0; n + 1];
        for cell in 0..n {
            let (l, r) = self.space.cell_values(u, cell);
            for (&t, &w) in self.cell_rule.nodes.iter().zip(&self.cell_rule.weights) {
                let a = weight[cell] + (weight[cell + 1] - weight[cell]) * t;
                let v = h * w * a * jp(l + (r - l) * t, p);
                nodal[cell] += v * (1.0 - t);
                nodal[cell + 1] += v * t;
            }
        }
        GradientVec(nodal[1..n].to_vec())
    }
}

pub fn local_energy(ctx: &FormContext, u: &CoeffVec) -> f64 {
    ctx.local_energy(u)
}

pub fn nonlocal_energy(ctx: &FormContext, u: &CoeffVec) -> f64 {
    ctx.nonlocal_energy(u)
}

/// `Q_{p,s}(u)`: local plus nonlocal energy.
pub fn q_form(ctx: &FormContext, u: &CoeffVec) -> f64 {
    ctx.local_energy(u) + ctx.nonlocal_energy(u)
}

/// Weak residual: `a_loc(u, phi_i) + a_nl(u, phi_i) - int f(x, u) phi_i`.
pub fn residual(ctx: &FormContext, u: &CoeffVec, m: &NonlinearityModel) -> GradientVec {
    let mut r = ctx.q_gradient(u);
    for (a, b) in r.0.iter_mut().zip(ctx.load(m, u).0) {
        *a -= b;
    }
    r
}

/// `|v|^p + (p-1)|w|^p - p |w|^(p-2) <v, w>`, nonnegative for all `v, w`.
pub fn ap_gap(v: &[f64], w: &[f64], p: f64) -> Result<f64, FormError> {
    if v.len() != w.len() {
        return Err(FormError::LengthMismatch(v.len(), w.len()));
    }
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    let cross = if nw == 0.0 {
        0.0
    } else {
        nw.powf(p - 2.0) * dot
    };
    Ok(nv.powf(p) + (p - 1.0) * nw.powf(p) - p * cross)
}

/// `|c-d|^p - J_p(a-b) (c^p / a^(p-1) - d^p / b^(p-1))`, zero iff `ad = bc`.
pub fn picone_gap(a: f64, b: f64, c: f64, d: f64, p: f64) -> Result<f64, FormError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(FormError::NonPositiveBase { a, b });
    }
    if !(c >= 0.0 && d >= 0.0) {
        return Err(FormError::NegativeArgument { c, d });
    }
    let lhs = (c - d).abs().powf(p);
    let rhs = jp(a - b, p) * (c.powf(p) / a.powf(p - 1.0) - d.powf(p) / b.powf(p - 1.0));
    Ok(lhs - rhs)
}
