//! Manufactured-solution benchmarks for
//!
//! ```text
//! u_t + a1 g(u) u_x - a2 u_xx + a3 u_xxx = f(x, t),   x in R
//! ```
//!
//! All three presets use the Burgers nonlinearity `g(u) u_x = (u^2 / 2)_x`.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::Arc;

use crate::basis::{ParamSchedule, Schedule};
use crate::error::{Error, Result};

pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Constant scaling factor of the time-invariant heat run.
pub const HEAT_CONST_ALPHA: f64 = SQRT_2 / 2.0;
/// Constant scaling factor used for every KdVB run.
pub const KDVB_ALPHA: f64 = 2.0 * SQRT_2;

/// Convective nonlinearity: wave speed `g` and flux `G` with `G' = g`.
#[derive(Clone)]
pub enum Flux {
    /// `g(u) = u`, `G(u) = u^2 / 2`.
    Quadratic,
    Custom { speed: SpaceFn, flux: SpaceFn },
}

impl Flux {
    pub fn speed(&self, u: f64) -> f64 {
        match self {
            Flux::Quadratic => u,
            Flux::Custom { speed, .. } => speed(u),
        }
    }

    pub fn flux(&self, u: f64) -> f64 {
        match self {
            Flux::Quadratic => 0.5 * u * u,
            Flux::Custom { flux, .. } => flux(u),
        }
    }
}

impl fmt::Debug for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flux::Quadratic => write!(f, "Quadratic"),
            Flux::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Coefficients, data and (optionally) the exact solution of one problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub flux: Flux,
    pub source: SpaceTimeFn,
    pub initial: SpaceFn,
    pub exact: Option<SpaceTimeFn>,
    /// Growth exponent `s` in `|g(u)| <~ 1 + |u|^s`. Documentation only.
    pub growth_exponent: f64,
    /// Basis schedule used when a run does not override it.
    pub default_schedule: ParamSchedule,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("a1", &self.a1)
            .field("a2", &self.a2)
            .field("a3", &self.a3)
            .field("flux", &self.flux)
            .field("has_exact", &self.exact.is_some())
            .field("default_schedule", &self.default_schedule)
            .finish()
    }
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        a1: f64,
        a2: f64,
        a3: f64,
        flux: Flux,
        source: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        initial: impl Fn(f64) -> f64 + Send + Sync + 'static,
        default_schedule: ParamSchedule,
    ) -> Result<Self> {
        if !(a2 >= 0.0) {
            return Err(Error::Parameter(format!("diffusion coefficient a2 must be >= 0, got {a2}")));
        }
        if !(a1.is_finite() && a2.is_finite() && a3.is_finite()) {
            return Err(Error::Parameter("non-finite PDE coefficient".into()));
        }
        Ok(Self {
            name: name.into(),
            a1,
            a2,
            a3,
            flux,
            source: Arc::new(source),
            initial: Arc::new(initial),
            exact: None,
            growth_exponent: 1.0,
            default_schedule,
        })
    }

    pub fn with_exact(mut self, exact: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn source_at(&self, x: f64, t: f64) -> f64 {
        (self.source)(x, t)
    }

    pub fn initial_at(&self, x: f64) -> f64 {
        (self.initial)(x)
    }

    pub fn exact_at(&self, x: f64, t: f64) -> Option<f64> {
        self.exact.as_ref().map(|e| e(x, t))
    }
}

#[inline]
fn sech(v: f64) -> f64 {
    1.0 / v.cosh()
}

/// Forced heat equation with `u = sin(x) (t+1)^(-1/2) exp(-x^2 / (4(t+1)))`.
pub fn heat_problem() -> ProblemSpec {
    let exact = |x: f64, t: f64| x.sin() / (t + 1.0).sqrt() * (-x * x / (4.0 * (t + 1.0))).exp();
    ProblemSpec::new(
        "heat",
        0.0,
        1.0,
        0.0,
        Flux::Quadratic,
        |x: f64, t: f64| {
            let s = t + 1.0;
            (x * x.cos() + s * x.sin()) * s.powf(-1.5) * (-x * x / (4.0 * s)).exp()
        },
        move |x| exact(x, 0.0),
        ParamSchedule::new(Schedule::InverseSqrtShift, Schedule::Constant(0.0)),
    )
    .expect("heat coefficients are valid")
    .with_exact(exact)
}

const BURGERS_A: f64 = 0.3;
const BURGERS_B: f64 = 0.5;
const BURGERS_C: f64 = -3.0;

/// Travelling-profile phase of the Burgers benchmark.
pub fn burgers_phase(x: f64, t: f64) -> f64 {
    BURGERS_A * x / (2.0 * (1.0 + t)) - BURGERS_B * (1.0 + t).ln() - BURGERS_C
}

/// Viscous Burgers with `u = exp(-x^2 / (4(1+t))) sech^2(xi)`.
pub fn burgers_problem() -> ProblemSpec {
    let exact = |x: f64, t: f64| {
        (-x * x / (4.0 * (1.0 + t))).exp() * sech(burgers_phase(x, t)).powi(2)
    };
    let source = |x: f64, t: f64| {
        let s = 1.0 + t;
        let xi = burgers_phase(x, t);
        let th = xi.tanh();
        let s2 = sech(xi).powi(2);
        let a = BURGERS_A;
        -(-x * x / (2.0 * s)).exp() * s2 * s2 / s * (0.5 * x + a * th)
            + (-x * x / (4.0 * s)).exp() * s2 / s
                * ((s + a * a) / (2.0 * s) + 2.0 * BURGERS_B * th - th * th * 3.0 * a * a / (2.0 * s))
    };
    ProblemSpec::new(
        "burgers",
        1.0,
        1.0,
        0.0,
        Flux::Quadratic,
        source,
        move |x| exact(x, 0.0),
        ParamSchedule::new(Schedule::InverseSqrtShift, Schedule::Constant(0.0)),
    )
    .expect("burgers coefficients are valid")
    .with_exact(exact)
}

/// KdV-Burgers with the left-moving soliton `u = sech^2(2 (x + t))`.
pub fn kdvb_problem() -> ProblemSpec {
    let exact = |x: f64, t: f64| sech(2.0 * (x + t)).powi(2);
    let source = |x: f64, t: f64| {
        let xi = 2.0 * (x + t);
        let s2 = sech(xi).powi(2);
        -8.0 * s2 * (2.0 - 3.0 * s2 + 2.0 * xi.tanh() * s2)
    };
    ProblemSpec::new(
        "kdvb",
        1.0,
        1.0,
        -1.0 / 16.0,
        Flux::Quadratic,
        source,
        move |x| exact(x, 0.0),
        ParamSchedule::fixed(KDVB_ALPHA, 0.0),
    )
    .expect("kdvb coefficients are valid")
    .with_exact(exact)
}

pub const PRESET_NAMES: [&str; 3] = ["heat", "burgers", "kdvb"];

/// Looks up a benchmark by name.
pub fn preset(name: &str) -> Result<ProblemSpec> {
    match name.trim().to_ascii_lowercase().as_str() {
        "heat" => Ok(heat_problem()),
        "burgers" => Ok(burgers_problem()),
        "kdvb" => Ok(kdvb_problem()),
        other => Err(Error::Config(format!(
            "unknown problem `{other}`; expected one of {PRESET_NAMES:?}"
        ))),
    }
}
