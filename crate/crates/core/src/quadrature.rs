//! Gauss–Legendre rules mapped to the unit interval.

use std::f64::consts::PI;

/// A Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `k`-point rule by Newton iteration on the Legendre recurrence.
    ///
    /// Exact for polynomials of degree `2k - 1`.
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "a Gauss rule needs at least one point");
        let mut nodes = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let kf = k as f64;
        for i in 0..k.div_ceil(2) {
            // Chebyshev-like initial guess for the i-th root on [-1, 1]
            let mut z = (PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (pk, dpk) = legendre(k, z);
                dp = dpk;
                let dz = pk / dpk;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dpk) = legendre(k, z);
            dp = if dpk != 0.0 { dpk } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - z);
            nodes[k - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[k - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `g` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(a + len * t))
            .sum::<f64>()
            * len
    }
}

/// Legendre polynomial `P_k(z)` and its derivative.
fn legendre(k: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = k as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}
