//! Crank-Nicolson / forward-Euler time stepping of the Galerkin system.
//!
//! One step from `t` to `t + dt` solves
//!
//! ```text
//! (I + dt/2 A(t+dt)) u_new = (I - dt/2 A(t)) u - dt B(u, t) + dt/2 (f(t) + f(t+dt))
//! ```
//!
//! where `A(s)` and `f(s)` are assembled in the basis of time `s`. The
//! coefficient vector is carried across steps unchanged; the drift of the
//! basis enters only through `A1`.

use std::sync::Arc;

use crate::assembly::{assemble_linear, nonlinear_rhs, nonlinear_rhs_nodal, source_coeffs};
use crate::banded::{BandedLu, BandedMatrix};
use crate::basis::{BasisParams, ParamSchedule};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::quadrature::{
    gauss_hermite, projection_nodes, triple_product_nodes, triple_product_tensor, QuadratureRule,
    TripleProductTensor,
};
use crate::spectral::{error_nodes, errors_against, project, ErrorReport, SpectralState};

pub use crate::banded::banded_solve;

/// Growth factor over the initial norm at which a run is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// How the convection vector is evaluated each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearMethod {
    /// Contraction with the cached triple-product tensor (quadratic flux only).
    #[default]
    Tensor,
    /// Nodal quadrature of the flux; works for any flux.
    Nodal,
}

#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_final: f64,
    pub schedule: ParamSchedule,
    pub n_modes: usize,
    /// Evaluate the implicit operator at `t` instead of `t + dt`.
    pub frozen_coefficients: bool,
    pub nonlinear: NonlinearMethod,
}

impl StepperConfig {
    pub fn new(dt: f64, t_final: f64, schedule: ParamSchedule, n_modes: usize) -> Self {
        Self {
            dt,
            t_final,
            schedule,
            n_modes,
            frozen_coefficients: false,
            nonlinear: NonlinearMethod::default(),
        }
    }

    /// Number of steps; `dt` must divide `t_final` to 1e-12 relative.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "final time must be non-negative, got {}",
                self.t_final
            )));
        }
        let steps = (self.t_final / self.dt).round();
        if (self.t_final - steps * self.dt).abs() > 1e-12 * self.t_final {
            return Err(Error::Config(format!(
                "dt = {} does not divide t_final = {}",
                self.dt, self.t_final
            )));
        }
        Ok(steps as usize)
    }
}

/// Per-integration caches and scratch buffers. Never shared between runs;
/// the tensor and rules inside are immutable and may be.
pub struct Workspace {
    n_modes: usize,
    tensor: Option<Arc<TripleProductTensor>>,
    projection_rule: Arc<QuadratureRule>,
    nodal_rule: Option<Arc<QuadratureRule>>,
    method: NonlinearMethod,
    frozen: bool,
    static_basis: bool,
    source: Option<(f64, Vec<f64>)>,
    operator: Option<(f64, BandedMatrix)>,
    factor: Option<(f64, BandedLu)>,
}

impl Workspace {
    pub fn new(
        n_modes: usize,
        problem: &ProblemSpec,
        schedule: &ParamSchedule,
        method: NonlinearMethod,
    ) -> Result<Self> {
        let mut ws = Self {
            n_modes,
            tensor: None,
            projection_rule: Arc::new(gauss_hermite(projection_nodes(n_modes))?),
            nodal_rule: None,
            method,
            frozen: false,
            static_basis: schedule.is_static(),
            source: None,
            operator: None,
            factor: None,
        };
        if problem.a1 != 0.0 {
            match (method, &problem.flux) {
                (NonlinearMethod::Tensor, crate::problems::Flux::Quadratic) => {
                    ws.tensor = Some(Arc::new(triple_product_tensor(n_modes + 1)?));
                }
                _ => {
                    ws.method = NonlinearMethod::Nodal;
                    let q = (2 * triple_product_nodes(n_modes + 1)).min(crate::quadrature::MAX_NODES);
                    ws.nodal_rule = Some(Arc::new(gauss_hermite(q)?));
                }
            }
        }
        Ok(ws)
    }

    /// Reuses an existing tensor instead of building one.
    pub fn with_tensor(mut self, tensor: Arc<TripleProductTensor>) -> Result<Self> {
        if tensor.order() < self.n_modes + 1 {
            return Err(Error::Capability(format!(
                "tensor order {} below required {}",
                tensor.order(),
                self.n_modes + 1
            )));
        }
        if self.tensor.is_some() {
            self.tensor = Some(tensor);
        }
        Ok(self)
    }

    pub fn frozen(mut self, frozen: bool) -> Self {
        self.frozen = frozen;
        self
    }

    pub fn projection_rule(&self) -> &QuadratureRule {
        &self.projection_rule
    }

    fn source_at(&mut self, problem: &ProblemSpec, t: f64, params: &BasisParams) -> Result<Vec<f64>> {
        if let Some((ts, v)) = &self.source {
            if same_time(*ts, t) {
                return Ok(v.clone());
            }
        }
        let f = &problem.source;
        let v = source_coeffs(|x, s| f(x, s), t, self.n_modes, params, &self.projection_rule)?;
        self.source = Some((t, v.clone()));
        Ok(v)
    }

    fn operator_at(&mut self, problem: &ProblemSpec, t: f64, params: &BasisParams) -> Result<BandedMatrix> {
        if let Some((ts, a)) = &self.operator {
            if same_time(*ts, t) || self.static_basis {
                return Ok(a.clone());
            }
        }
        let a = assemble_linear(self.n_modes, params, problem.a2, problem.a3)?;
        self.operator = Some((t, a.clone()));
        Ok(a)
    }

    fn convection(&self, state: &SpectralState, problem: &ProblemSpec) -> Result<Vec<f64>> {
        if problem.a1 == 0.0 {
            return Ok(vec![0.0; state.coeffs().len()]);
        }
        match (self.method, &self.tensor, &self.nodal_rule) {
            (NonlinearMethod::Tensor, Some(t), _) => nonlinear_rhs(state, t, problem.a1),
            (_, _, Some(rule)) => {
                nonlinear_rhs_nodal(state, |u| problem.flux.flux(u), problem.a1, rule)
            }
            _ => Err(Error::Capability("workspace has no convection evaluator".into())),
        }
    }
}

#[inline]
fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// Advances `state` by one step of size `dt`.
pub fn step(
    state: &SpectralState,
    dt: f64,
    problem: &ProblemSpec,
    schedule: &ParamSchedule,
    ws: &mut Workspace,
) -> Result<SpectralState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    if state.n_modes() != ws.n_modes {
        return Err(Error::Input(format!(
            "state has N = {}, workspace was built for N = {}",
            state.n_modes(),
            ws.n_modes
        )));
    }
    let t0 = state.time();
    let t1 = t0 + dt;
    let p0 = *state.params();
    let p1 = schedule.at(t1)?;
    let u = state.coeffs();
    let n = u.len();

    let a0 = ws.operator_at(problem, t0, &p0)?;
    let b = ws.convection(state, problem)?;
    let f0 = ws.source_at(problem, t0, &p0)?;
    let f1 = ws.source_at(problem, t1, &p1)?;

    let au = a0.mul_vec(u);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        rhs[i] = u[i] - 0.5 * dt * au[i] - dt * b[i] + 0.5 * dt * (f0[i] + f1[i]);
    }

    let cached = ws.static_basis && matches!(&ws.factor, Some((h, _)) if *h == dt);
    if !cached {
        let implicit = if ws.frozen {
            a0
        } else {
            ws.operator_at(problem, t1, &p1)?
        };
        let lu = BandedLu::factor(&implicit.shifted_identity(0.5 * dt))
            .map_err(|_| Error::Solver { t: t0, dt })?;
        ws.factor = Some((dt, lu));
    }
    let (_, lu) = ws.factor.as_ref().expect("factor populated above");
    lu.solve_in_place(&mut rhs);
    SpectralState::new(rhs, t1, p1)
}

/// Final state of a run and any error samples taken along the way.
#[derive(Debug, Clone)]
pub struct Run {
    pub state: SpectralState,
    pub samples: Vec<ErrorReport>,
    pub steps: usize,
}

/// Projects `initial` at `t = 0` and steps to `config.t_final`.
pub fn integrate(
    initial: impl Fn(f64) -> f64,
    config: &StepperConfig,
    problem: &ProblemSpec,
) -> Result<Run> {
    integrate_sampled(initial, config, problem, &[])
}

/// As [`integrate`], recording errors against `problem.exact` at the step
/// nearest each requested time.
pub fn integrate_sampled(
    initial: impl Fn(f64) -> f64,
    config: &StepperConfig,
    problem: &ProblemSpec,
    sample_times: &[f64],
) -> Result<Run> {
    let ws = Workspace::new(config.n_modes, problem, &config.schedule, config.nonlinear)?
        .frozen(config.frozen_coefficients);
    integrate_with_workspace(initial, config, problem, sample_times, ws)
}

pub fn integrate_with_workspace(
    initial: impl Fn(f64) -> f64,
    config: &StepperConfig,
    problem: &ProblemSpec,
    sample_times: &[f64],
    mut ws: Workspace,
) -> Result<Run> {
    let steps = config.steps()?;
    let p0 = config.schedule.at(0.0)?;
    let mut state = project(initial, config.n_modes, &p0, ws.projection_rule())?;
    let reference = if state.norm() > 0.0 { state.norm() } else { 1.0 };

    let mut pending: Vec<(usize, usize)> = sample_times
        .iter()
        .enumerate()
        .map(|(i, &ts)| (((ts / config.dt).round().max(0.0) as usize).min(steps), i))
        .collect();
    pending.sort_unstable();
    let mut samples: Vec<Option<ErrorReport>> = vec![None; sample_times.len()];
    let error_rule = if sample_times.is_empty() {
        None
    } else {
        Some(gauss_hermite(error_nodes(config.n_modes))?)
    };
    let mut record = |k: usize, state: &SpectralState| -> Result<()> {
        while let Some(&(at, idx)) = pending.first() {
            if at != k {
                break;
            }
            pending.remove(0);
            if let (Some(exact), Some(rule)) = (&problem.exact, &error_rule) {
                let t = state.time();
                let mut r = errors_against(state, |x| exact(x, t), rule)?;
                r.dt = Some(config.dt);
                samples[idx] = Some(r);
            }
        }
        Ok(())
    };

    record(0, &state)?;
    for k in 0..steps {
        let t = (k + 1) as f64 * config.dt;
        state = match step(&state, config.dt, problem, &config.schedule, &mut ws) {
            Ok(s) => s,
            Err(Error::Input(_)) => return Err(Error::Divergence { step: k + 1, t }),
            Err(e) => return Err(e),
        };
        // Re-stamp with the exact grid time so long runs do not drift.
        state = SpectralState::new(state.into_coeffs(), t, config.schedule.at(t)?)?;
        if state.norm() > DIVERGENCE_FACTOR * reference {
            return Err(Error::Divergence { step: k + 1, t });
        }
        record(k + 1, &state)?;
    }
    Ok(Run {
        state,
        samples: samples.into_iter().flatten().collect(),
        steps,
    })
}
