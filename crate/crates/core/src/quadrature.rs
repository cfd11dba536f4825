//! Gauss-Hermite quadrature and the reference triple-product tensor.
//!
//! Rules are stored for the weight `exp(-z^2)`. Alongside the classical
//! weights `w_j` each rule keeps `w_j exp(z_j^2)`, computed from the
//! Christoffel function of the orthonormal Hermite functions, so integrals of
//! unweighted integrands never form `exp(z^2)` explicitly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::basis::{ghf_at_reference, index_scale, BasisParams};
use crate::error::{Error, Result};

/// Largest node count accepted by [`gauss_hermite`]. Beyond this the
/// outermost nodes pass `|z| ~ 31` where the classical weights underflow.
pub const MAX_NODES: usize = 500;

/// Node stretch for integrals of `f * H_n`, with `H_n ~ exp(-z^2/2)`.
pub const PROJECTION_STRETCH: f64 = std::f64::consts::SQRT_2;

/// Node stretch for integrals of three basis functions, `~ exp(-3 z^2 / 2)`.
pub const TRIPLE_STRETCH: f64 = 0.816_496_580_927_726; // sqrt(2/3)

/// Node count used for projections and source coefficients at truncation `n`.
pub fn projection_nodes(n_modes: usize) -> usize {
    2 * n_modes + 32
}

/// Node count that integrates every triple product up to order `n` exactly.
pub fn triple_product_nodes(n_modes: usize) -> usize {
    (3 * n_modes).div_ceil(2) + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scaled_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// Abscissae `z_j` for the weight `exp(-z^2)`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_j exp(z_j^2)`.
    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    /// Physical nodes and `dx` weights for the map `z = stretch * node`,
    /// `x = z / alpha + beta`.
    ///
    /// With `stretch = s`, `sum_j w_j g(x_j)` is exact for
    /// `g = poly(z) exp(-z^2 / s^2)` up to degree `2q - 1`.
    pub fn map(&self, params: &BasisParams, stretch: f64) -> MappedRule {
        let reference: Vec<f64> = self.nodes.iter().map(|&y| stretch * y).collect();
        let points = reference.iter().map(|&z| params.to_physical(z)).collect();
        let weights = self
            .scaled_weights
            .iter()
            .map(|&w| stretch * w / params.alpha)
            .collect();
        MappedRule {
            reference,
            points,
            weights,
        }
    }
}

/// A rule carried over to physical coordinates; integrates `g(x) dx`.
#[derive(Debug, Clone)]
pub struct MappedRule {
    /// `z_j = alpha (x_j - beta)`.
    pub reference: Vec<f64>,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MappedRule {
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &w) in self.points.iter().zip(&self.weights) {
            let v = g(x);
            if !v.is_finite() {
                return Err(Error::Integration { node: x });
            }
            sum += w * v;
        }
        Ok(sum)
    }
}

/// The `q`-point Gauss-Hermite rule for the weight `exp(-z^2)`.
///
/// Golub-Welsch supplies the starting nodes; each is then polished by
/// Newton's method on the normalized recurrence, and weights are taken from
/// the Christoffel function so the smallest weights keep relative accuracy.
pub fn gauss_hermite(q: usize) -> Result<QuadratureRule> {
    if q == 0 {
        return Err(Error::Parameter("quadrature needs at least one node".into()));
    }
    if q > MAX_NODES {
        return Err(Error::Capability(format!(
            "{q} nodes requested; rules above {MAX_NODES} nodes lose weight accuracy"
        )));
    }
    let (mut nodes, _) = golub_welsch(q);

    let mut psi = vec![0.0; q + 1];
    for z in nodes.iter_mut() {
        for _ in 0..3 {
            ghf_at_reference(*z, 1.0, &mut psi);
            let deriv = (2.0 * q as f64).sqrt() * psi[q - 1];
            if deriv == 0.0 {
                break;
            }
            let step = psi[q] / deriv;
            *z -= step;
            if step.abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
                break;
            }
        }
    }
    for i in 0..q / 2 {
        let m = 0.5 * (nodes[q - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[q - 1 - i] = m;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }

    let mut weights = Vec::with_capacity(q);
    let mut scaled_weights = Vec::with_capacity(q);
    let mut psi = vec![0.0; q];
    for &z in &nodes {
        ghf_at_reference(z, 1.0, &mut psi);
        let christoffel: f64 = psi.iter().map(|v| v * v).sum();
        let scaled = 1.0 / christoffel;
        scaled_weights.push(scaled);
        weights.push(scaled * (-z * z).exp());
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        scaled_weights,
    })
}

/// Eigen-decomposition of the symmetric Jacobi matrix with off-diagonals
/// `sqrt(k/2)`; weights are `sqrt(pi) v_0^2`.
pub(crate) fn golub_welsch(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(q, q);
    for k in 1..q {
        let b = index_scale(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `int f(x) dx` for `f` decaying like `exp(-alpha^2 (x - beta)^2)`.
pub fn integrate(
    f: impl FnMut(f64) -> f64,
    rule: &QuadratureRule,
    params: &BasisParams,
) -> Result<f64> {
    params.validate()?;
    rule.map(params, 1.0).integrate(f)
}

/// `int smooth(x) exp(-alpha^2 (x - beta)^2) dx`, with the Gaussian factor
/// supplied analytically by the rule's weight.
pub fn integrate_weighted(
    mut smooth: impl FnMut(f64) -> f64,
    rule: &QuadratureRule,
    params: &BasisParams,
) -> Result<f64> {
    params.validate()?;
    let mut sum = 0.0;
    for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
        let x = params.to_physical(z);
        let v = smooth(x);
        if !v.is_finite() {
            return Err(Error::Integration { node: x });
        }
        sum += w * v;
    }
    Ok(sum / params.alpha)
}

/// Reference values `T[l][n][m] = int psi_l psi_n psi_m dz` for the
/// `alpha = 1, beta = 0` basis.
///
/// For any `(alpha, beta)` the physical triple integral equals
/// `sqrt(alpha) T[l][n][m]`, so a single tensor serves every time level.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleProductTensor {
    order: usize,
    entries: Vec<f64>,
}

impl TripleProductTensor {
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, l: usize, n: usize, m: usize) -> f64 {
        let s = self.order + 1;
        self.entries[(l * s + n) * s + m]
    }

    /// Row-major `(l, n, m)` storage of side `order + 1`.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }
}

pub fn triple_product_tensor(n_modes: usize) -> Result<TripleProductTensor> {
    let side = n_modes + 1;
    let rule = gauss_hermite(triple_product_nodes(n_modes))?;
    let mapped = rule.map(&BasisParams::fixed(1.0, 0.0)?, TRIPLE_STRETCH);

    let mut values = vec![0.0; side * mapped.points.len()];
    for (j, &z) in mapped.reference.iter().enumerate() {
        ghf_at_reference(z, 1.0, &mut values[j * side..(j + 1) * side]);
    }

    let mut entries = vec![0.0; side * side * side];
    let idx = |l: usize, n: usize, m: usize| (l * side + n) * side + m;
    for l in 0..side {
        for n in l..side {
            for m in n..side {
                if (l + n + m) % 2 == 1 {
                    continue;
                }
                let mut acc = 0.0;
                for (j, &w) in mapped.weights.iter().enumerate() {
                    let v = &values[j * side..(j + 1) * side];
                    acc += w * v[l] * v[n] * v[m];
                }
                for (a, b, c) in [(l, n, m), (l, m, n), (n, l, m), (n, m, l), (m, l, n), (m, n, l)] {
                    entries[idx(a, b, c)] = acc;
                }
            }
        }
    }
    Ok(TripleProductTensor {
        order: n_modes,
        entries,
    })
}
