//! Coefficient-space operators of the semi-discrete Galerkin system
//!
//! ```text
//! du/dt + A u + B(u) = f,    A = A1 + a2 A3 - a3 A4
//! ```
//!
//! Row `i` of every matrix is the test function `H_i`, column `j` the trial
//! function `H_j`:
//!
//! * `A1(i, j) = <d/dt H_j, H_i>` from the moving basis,
//! * `A3(i, j) = <d/dx H_j, d/dx H_i>` (diffusion, symmetric PSD),
//! * `A4(i, j) = <d2/dx2 H_j, d/dx H_i>` (dispersion, skew-symmetric).
//!
//! `A4` carries three spatial derivatives and so scales as `alpha^3`.

use crate::banded::BandedMatrix;
use crate::basis::{check_alpha, dt_coupling, ghf_at_reference, index_scale, BasisParams};
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, TripleProductTensor, TRIPLE_STRETCH};
use crate::spectral::{project_coeffs, SpectralState};

pub use crate::banded::{banded_solve, BandedLu};

/// Basis-drift matrix `A1`.
pub fn assemble_a1(n_modes: usize, params: &BasisParams) -> Result<BandedMatrix> {
    params.validate()?;
    let size = n_modes + 1;
    let d = index_scale;
    let ratio = params.alpha_dot / params.alpha;
    let shift = params.alpha * params.beta_dot;
    let mut a1 = BandedMatrix::zeros(size, 2);
    for i in 0..size {
        for j in i.saturating_sub(2)..(i + 3).min(size) {
            let v = if i == j + 2 {
                -ratio * d(i) * d(i - 1)
            } else if i == j + 1 {
                shift * d(i)
            } else if j == i + 1 {
                -shift * d(j)
            } else if j == i + 2 {
                ratio * d(j) * d(j - 1)
            } else {
                0.0
            };
            a1.set(i, j, v);
        }
    }
    debug_assert!(a1.max_abs_diff(&dt_coupling(n_modes, params)?) <= 1e-14 * (1.0 + a1.max_abs()));
    Ok(a1)
}

/// Diffusion matrix `A3`; nonzero only on offsets `0` and `±2`.
pub fn assemble_a3(n_modes: usize, alpha: f64) -> Result<BandedMatrix> {
    check_alpha(alpha)?;
    let size = n_modes + 1;
    let a2 = alpha * alpha;
    let d = index_scale;
    let mut m = BandedMatrix::zeros(size, 2);
    for i in 0..size {
        m.set(i, i, a2 * (d(i + 1).powi(2) + d(i).powi(2)));
        if i + 2 < size {
            let v = -a2 * d(i + 1) * d(i + 2);
            m.set(i, i + 2, v);
            m.set(i + 2, i, v);
        }
    }
    Ok(m)
}

/// Dispersion matrix `A4`; nonzero only on offsets `±1` and `±3`.
pub fn assemble_a4(n_modes: usize, alpha: f64) -> Result<BandedMatrix> {
    check_alpha(alpha)?;
    let size = n_modes + 1;
    let a3 = alpha.powi(3);
    let d = index_scale;
    let mut m = BandedMatrix::zeros(size, 3);
    for j in 0..size {
        // (i = j + 1) and its mirror (i = j - 1) share one expression.
        if j + 1 < size {
            let v = a3 * (d(j + 1).powi(3) + d(j).powi(2) * d(j + 1) + d(j + 1) * d(j + 2).powi(2));
            m.set(j + 1, j, -v);
            m.set(j, j + 1, v);
        }
        if j + 3 < size {
            let v = a3 * d(j + 1) * d(j + 2) * d(j + 3);
            m.set(j + 3, j, v);
            m.set(j, j + 3, -v);
        }
    }
    Ok(m)
}

/// `A = A1 + a2 A3 - a3 A4` at one time level.
///
/// The result's half-bandwidth is the smallest that holds the nonzero terms:
/// 1 or 2 without dispersion, 3 with it.
pub fn assemble_linear(
    n_modes: usize,
    params: &BasisParams,
    diffusion: f64,
    dispersion: f64,
) -> Result<BandedMatrix> {
    let mut a = if params.alpha_dot != 0.0 || params.beta_dot != 0.0 {
        assemble_a1(n_modes, params)?
    } else {
        BandedMatrix::zeros(n_modes + 1, 0)
    };
    if diffusion != 0.0 {
        a = a.add_scaled(&assemble_a3(n_modes, params.alpha)?, diffusion);
    }
    if dispersion != 0.0 {
        a = a.add_scaled(&assemble_a4(n_modes, params.alpha)?, -dispersion);
    }
    Ok(a)
}

/// `S_k = <u_N^2, H_k>` for `k = 0..=N+1` by tensor contraction.
pub fn square_moments(state: &SpectralState, tensor: &TripleProductTensor) -> Result<Vec<f64>> {
    let n = state.n_modes();
    if tensor.order() < n + 1 {
        return Err(Error::Capability(format!(
            "triple-product tensor of order {} cannot serve N = {n}; order N + 1 is required",
            tensor.order()
        )));
    }
    let side = tensor.order() + 1;
    let t = tensor.as_slice();
    let u = state.coeffs();
    let mut s = vec![0.0; n + 2];
    for l in 0..=n {
        if u[l] == 0.0 {
            continue;
        }
        for m in l..=n {
            let c = if m == l { u[l] * u[m] } else { 2.0 * u[l] * u[m] };
            if c == 0.0 {
                continue;
            }
            let row = &t[(l * side + m) * side..(l * side + m) * side + n + 2];
            // Parity: only k with l + m + k even survive.
            let mut k = (l + m) % 2;
            while k < n + 2 {
                s[k] += c * row[k];
                k += 2;
            }
        }
    }
    let scale = state.params().alpha.sqrt();
    s.iter_mut().for_each(|v| *v *= scale);
    Ok(s)
}

/// Maps flux moments `G_k = <G(u_N), H_k>`, `k = 0..=N+1`, to
/// `<d/dx G(u_N), H_m> = alpha [d(m+1) G_{m+1} - d(m) G_{m-1}]`.
fn flux_divergence(moments: &[f64], alpha: f64, scale: f64) -> Vec<f64> {
    let n_out = moments.len() - 1;
    (0..n_out)
        .map(|m| {
            let lower = if m > 0 { index_scale(m) * moments[m - 1] } else { 0.0 };
            scale * alpha * (index_scale(m + 1) * moments[m + 1] - lower)
        })
        .collect()
}

/// Convection vector `B(u)_m = a1 <d/dx (u_N^2 / 2), H_m>` via the tensor.
pub fn nonlinear_rhs(
    state: &SpectralState,
    tensor: &TripleProductTensor,
    a1: f64,
) -> Result<Vec<f64>> {
    if a1 == 0.0 {
        return Ok(vec![0.0; state.coeffs().len()]);
    }
    let s = square_moments(state, tensor)?;
    Ok(flux_divergence(&s, state.params().alpha, 0.5 * a1))
}

/// Convection vector `a1 <d/dx G(u_N), H_m>` for an arbitrary flux `G`,
/// with the flux moments integrated at quadrature nodes.
///
/// The rule's nodes are stretched for integrands decaying like
/// `exp(-3 z^2 / 2)`; for the quadratic flux a rule of
/// `triple_product_nodes(N + 1)` points is exact.
pub fn nonlinear_rhs_nodal(
    state: &SpectralState,
    flux: impl Fn(f64) -> f64,
    a1: f64,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    let n = state.n_modes();
    if a1 == 0.0 {
        return Ok(vec![0.0; n + 1]);
    }
    let params = state.params();
    let mapped = rule.map(params, TRIPLE_STRETCH);
    let mut h = vec![0.0; n + 2];
    let mut moments = vec![0.0; n + 2];
    for (&z, &w) in mapped.reference.iter().zip(&mapped.weights) {
        ghf_at_reference(z, params.alpha, &mut h);
        let u: f64 = state.coeffs().iter().zip(&h).map(|(c, v)| c * v).sum();
        let g = flux(u);
        if !g.is_finite() {
            return Err(Error::Integration {
                node: params.to_physical(z),
            });
        }
        let wg = w * g;
        for (mk, hk) in moments.iter_mut().zip(&h) {
            *mk += wg * hk;
        }
    }
    Ok(flux_divergence(&moments, params.alpha, a1))
}

/// Source coefficients `<f(., t), H_m>` in the basis `params` of time `t`.
pub fn source_coeffs(
    f: impl Fn(f64, f64) -> f64,
    t: f64,
    n_modes: usize,
    params: &BasisParams,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    project_coeffs(|x| f(x, t), n_modes, params, rule)
}
