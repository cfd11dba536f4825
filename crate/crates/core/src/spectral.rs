//! Fourier-Hermite analysis and synthesis, weighted norms, and error metrics.

use serde::{Deserialize, Serialize};

use crate::basis::{eigenvalue, ghf_at_reference, BasisParams};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite, QuadratureRule, PROJECTION_STRETCH};

/// Coefficients `u_0 .. u_N` of a member of `R_N(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    coeffs: Vec<f64>,
    time: f64,
    params: BasisParams,
}

impl SpectralState {
    pub fn new(coeffs: Vec<f64>, time: f64, params: BasisParams) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Input("a spectral state needs at least one mode".into()));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Input(format!("coefficient {i} is not finite")));
        }
        params.validate()?;
        Ok(Self {
            coeffs,
            time,
            params,
        })
    }

    pub fn zeros(n_modes: usize, time: f64, params: BasisParams) -> Result<Self> {
        Self::new(vec![0.0; n_modes + 1], time, params)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Truncation index `N`; the state holds `N + 1` coefficients.
    pub fn n_modes(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn params(&self) -> &BasisParams {
        &self.params
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Euclidean norm of the coefficients, equal to the `L^2` norm of the
    /// synthesized function.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// `<u, H_n>` for `n = 0..=n_modes`.
pub(crate) fn project_coeffs(
    mut u: impl FnMut(f64) -> f64,
    n_modes: usize,
    params: &BasisParams,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    params.validate()?;
    let mapped = rule.map(params, PROJECTION_STRETCH);
    let mut coeffs = vec![0.0; n_modes + 1];
    let mut h = vec![0.0; n_modes + 1];
    for ((&z, &x), &w) in mapped.reference.iter().zip(&mapped.points).zip(&mapped.weights) {
        let v = u(x);
        if !v.is_finite() {
            return Err(Error::Integration { node: x });
        }
        if v == 0.0 {
            continue;
        }
        ghf_at_reference(z, params.alpha, &mut h);
        let wv = w * v;
        for (c, hn) in coeffs.iter_mut().zip(&h) {
            *c += wv * hn;
        }
    }
    Ok(coeffs)
}

/// Orthogonal projection onto `R_N` under `params`, stamped at `t = 0`.
pub fn project(
    u: impl FnMut(f64) -> f64,
    n_modes: usize,
    params: &BasisParams,
    rule: &QuadratureRule,
) -> Result<SpectralState> {
    let coeffs = project_coeffs(u, n_modes, params, rule)?;
    SpectralState::new(coeffs, 0.0, *params)
}

/// Point values `sum_n u_n H_n(x)`.
pub fn synthesize(state: &SpectralState, xs: &[f64]) -> Result<Vec<f64>> {
    let mut h = vec![0.0; state.coeffs.len()];
    xs.iter()
        .map(|&x| {
            if !x.is_finite() {
                return Err(Error::Input(format!("synthesis point must be finite, got {x}")));
            }
            Ok(eval_at(state, x, &mut h))
        })
        .collect()
}

#[inline]
fn eval_at(state: &SpectralState, x: f64, scratch: &mut [f64]) -> f64 {
    ghf_at_reference(state.params.to_reference(x), state.params.alpha, scratch);
    state.coeffs.iter().zip(scratch.iter()).map(|(c, h)| c * h).sum()
}

/// `(sum_k lambda_{k+1}^r u_k^2)^(1/2)` over the stored modes.
pub fn sobolev_norm(state: &SpectralState, r: u32) -> f64 {
    let alpha = state.params.alpha;
    state
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| eigenvalue(k + 1, alpha).powi(r as i32) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Accuracy of a numerical state against a reference solution.
///
/// `l2_error` is the continuous `L^2` distance, integrated by quadrature.
/// `nodal_l2_error` is the discrete root-sum-square of the pointwise error
/// over the `N + 1` Hermite-Gauss points mapped by the state's parameters,
/// which is the quantity published convergence tables for this scheme
/// report as `E_N`. `rel_linf_error` is the maximum pointwise error at the
/// same points relative to the maximum of the reference there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub nodal_l2_error: f64,
    pub rel_linf_error: f64,
    pub at_time: f64,
    pub n_modes: usize,
    pub dt: Option<f64>,
}

/// Node count for the continuous error integral at truncation `n`.
pub fn error_nodes(n_modes: usize) -> usize {
    2 * n_modes + 64
}

pub fn errors_against(
    state: &SpectralState,
    mut exact: impl FnMut(f64) -> f64,
    rule: &QuadratureRule,
) -> Result<ErrorReport> {
    let mut h = vec![0.0; state.coeffs.len()];
    let mapped = rule.map(&state.params, 1.0);
    let mut l2 = 0.0;
    for (&x, &w) in mapped.points.iter().zip(&mapped.weights) {
        let e = eval_at(state, x, &mut h) - exact(x);
        if !e.is_finite() {
            return Err(Error::Integration { node: x });
        }
        l2 += w * e * e;
    }

    let nodal = gauss_hermite(state.coeffs.len())?.map(&state.params, 1.0);
    let mut sum_sq = 0.0;
    let mut max_err = 0.0_f64;
    let mut max_ref = 0.0_f64;
    for &x in &nodal.points {
        let reference = exact(x);
        let e = eval_at(state, x, &mut h) - reference;
        if !e.is_finite() {
            return Err(Error::Integration { node: x });
        }
        sum_sq += e * e;
        max_err = max_err.max(e.abs());
        max_ref = max_ref.max(reference.abs());
    }
    if max_ref == 0.0 {
        return Err(Error::DivisionByZero(
            "reference solution vanishes at every Hermite-Gauss point".into(),
        ));
    }
    Ok(ErrorReport {
        l2_error: l2.max(0.0).sqrt(),
        nodal_l2_error: sum_sq.sqrt(),
        rel_linf_error: max_err / max_ref,
        at_time: state.time,
        n_modes: state.n_modes(),
        dt: None,
    })
}
