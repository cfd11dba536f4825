//! Generalized Hermite functions with time-dependent scaling and translation.
//!
//! For scaling `alpha(t) > 0` and translation `beta(t)` the basis is
//!
//! ```text
//! H_n(x, t) = (alpha / (2^n n! sqrt(pi)))^(1/2) Hphys_n(z) exp(-z^2 / 2),   z = alpha (x - beta)
//! ```
//!
//! which is orthonormal in plain `L^2(R)` at every `t`. Values are produced
//! by the normalized three-term recurrence
//!
//! ```text
//! d(n+1) H_{n+1} = z H_n - d(n) H_{n-1},   d(n) = sqrt(n / 2)
//! ```
//!
//! seeded with the Gaussian already folded into `H_0`, so neither `2^n n!`
//! nor `exp(z^2)` is ever formed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};

/// `d(n) = sqrt(n / 2)`.
#[inline]
pub fn index_scale(n: usize) -> f64 {
    (n as f64 * 0.5).sqrt()
}

/// Sturm-Liouville eigenvalue `lambda_n = 2 alpha^2 n` of the n-th function.
#[inline]
pub fn eigenvalue(n: usize, alpha: f64) -> f64 {
    2.0 * alpha * alpha * n as f64
}

/// Scaling/translation factors and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BasisParams {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
}

impl BasisParams {
    pub fn new(alpha: f64, beta: f64, alpha_dot: f64, beta_dot: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            alpha_dot,
            beta_dot,
        };
        p.validate()?;
        Ok(p)
    }

    /// Time-independent basis.
    pub fn fixed(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.beta.is_finite() && self.alpha_dot.is_finite() && self.beta_dot.is_finite()) {
            return Err(Error::Parameter(format!("non-finite basis parameters {self:?}")));
        }
        Ok(())
    }

    /// Maps a physical point to the reference coordinate `alpha (x - beta)`.
    #[inline]
    pub fn to_reference(&self, x: f64) -> f64 {
        self.alpha * (x - self.beta)
    }

    #[inline]
    pub fn to_physical(&self, z: f64) -> f64 {
        z / self.alpha + self.beta
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "scaling factor must be positive and finite, got {alpha}"
        )))
    }
}

/// Closed-form time law for one basis parameter.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    /// `1 / sqrt(2 (t + 1))`.
    InverseSqrtShift,
    /// `offset + rate * t`.
    LinearDrift { offset: f64, rate: f64 },
    Custom(CustomSchedule),
}

/// User-supplied law returning `(value, d value / dt)`.
#[derive(Clone)]
pub struct CustomSchedule {
    pub name: String,
    pub eval: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
}

impl Schedule {
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Schedule::Custom(CustomSchedule {
            name: name.into(),
            eval: Arc::new(eval),
        })
    }

    /// Value and exact time derivative at `t`.
    pub fn value_and_rate(&self, t: f64) -> (f64, f64) {
        match self {
            Schedule::Constant(c) => (*c, 0.0),
            Schedule::InverseSqrtShift => {
                let s = 2.0 * (t + 1.0);
                (1.0 / s.sqrt(), -1.0 / (s * s.sqrt()))
            }
            Schedule::LinearDrift { offset, rate } => (offset + rate * t, *rate),
            Schedule::Custom(c) => (c.eval)(t),
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Schedule::Constant(_))
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(c) => write!(f, "const:{c}"),
            Schedule::InverseSqrtShift => write!(f, "inv-sqrt-shift"),
            Schedule::LinearDrift { offset, rate } if *offset == 0.0 => write!(f, "drift:{rate}"),
            Schedule::LinearDrift { offset, rate } => write!(f, "drift:{rate}:{offset}"),
            Schedule::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// Accepts `const:<v>`, `inv-sqrt-shift`, `drift:<rate>` and
    /// `drift:<rate>:<offset>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unrecognized schedule `{s}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let mut parts = s.split(':');
        match parts.next().ok_or_else(bad)? {
            "const" | "constant" => {
                let v = num(parts.next().ok_or_else(bad)?)?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Schedule::Constant(v))
            }
            "inv-sqrt-shift" if parts.next().is_none() => Ok(Schedule::InverseSqrtShift),
            "drift" => {
                let rate = num(parts.next().ok_or_else(bad)?)?;
                let offset = match parts.next() {
                    Some(v) => num(v)?,
                    None => 0.0,
                };
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Schedule::LinearDrift { offset, rate })
            }
            _ => Err(bad()),
        }
    }
}

/// Joint time law for `(alpha, beta)`.
#[derive(Debug, Clone)]
pub struct ParamSchedule {
    pub alpha: Schedule,
    pub beta: Schedule,
}

impl ParamSchedule {
    pub fn new(alpha: Schedule, beta: Schedule) -> Self {
        Self { alpha, beta }
    }

    pub fn fixed(alpha: f64, beta: f64) -> Self {
        Self::new(Schedule::Constant(alpha), Schedule::Constant(beta))
    }

    pub fn at(&self, t: f64) -> Result<BasisParams> {
        let (alpha, alpha_dot) = self.alpha.value_and_rate(t);
        let (beta, beta_dot) = self.beta.value_and_rate(t);
        BasisParams::new(alpha, beta, alpha_dot, beta_dot).map_err(|e| match e {
            Error::Parameter(msg) => Error::Parameter(format!("{msg} (schedule at t = {t})")),
            other => other,
        })
    }

    pub fn is_static(&self) -> bool {
        self.alpha.is_static() && self.beta.is_static()
    }
}

/// Writes `H_0(z) .. H_{out.len()-1}(z)` for reference coordinate `z`.
///
/// `out` is zero-filled when the Gaussian seed underflows.
#[inline]
pub(crate) fn ghf_at_reference(z: f64, alpha: f64, out: &mut [f64]) {
    let Some(first) = out.first_mut() else {
        return;
    };
    *first = (alpha / std::f64::consts::PI.sqrt()).sqrt() * (-0.5 * z * z).exp();
    if out.len() == 1 {
        return;
    }
    out[1] = z * out[0] / index_scale(1);
    let mut d_prev = index_scale(1);
    for n in 1..out.len() - 1 {
        let d_next = index_scale(n + 1);
        out[n + 1] = (z * out[n] - d_prev * out[n - 1]) / d_next;
        d_prev = d_next;
    }
}

/// Values `[H_0(x), ..., H_N(x)]` of the basis at one point.
pub fn eval_ghf_all(n_modes: usize, x: f64, params: &BasisParams) -> Result<Vec<f64>> {
    check_alpha(params.alpha)?;
    if !x.is_finite() {
        return Err(Error::Input(format!("evaluation point must be finite, got {x}")));
    }
    let mut out = vec![0.0; n_modes + 1];
    ghf_at_reference(params.to_reference(x), params.alpha, &mut out);
    Ok(out)
}

/// Coefficient-space image of `d/dx` on `R_N`:
/// `(D u)_m = alpha [-d(m) u_{m-1} + d(m+1) u_{m+1}]`.
pub fn dx_operator(n_modes: usize, alpha: f64) -> Result<BandedMatrix> {
    check_alpha(alpha)?;
    let size = n_modes + 1;
    let mut d = BandedMatrix::zeros(size, 1);
    for m in 0..size {
        if m > 0 {
            d.set(m, m - 1, -alpha * index_scale(m));
        }
        if m + 1 < size {
            d.set(m, m + 1, alpha * index_scale(m + 1));
        }
    }
    Ok(d)
}

/// Matrix `M(m, n) = <d/dt H_n, H_m>` produced by the drifting basis.
///
/// Row `m` is the test index, column `n` the trial index. The matrix is
/// skew-symmetric because the basis stays orthonormal in time.
pub fn dt_coupling(n_modes: usize, params: &BasisParams) -> Result<BandedMatrix> {
    params.validate()?;
    let size = n_modes + 1;
    let ratio = params.alpha_dot / params.alpha;
    let shift = params.alpha * params.beta_dot;
    let d = index_scale;
    let mut m = BandedMatrix::zeros(size, 2);
    for i in 0..size {
        if i >= 2 {
            m.set(i, i - 2, -ratio * d(i) * d(i - 1));
        }
        if i >= 1 {
            m.set(i, i - 1, shift * d(i));
        }
        if i + 1 < size {
            m.set(i, i + 1, -shift * d(i + 1));
        }
        if i + 2 < size {
            m.set(i, i + 2, ratio * d(i + 2) * d(i + 1));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn index_scale_squares_exactly() {
        assert_eq!(index_scale(0), 0.0);
        for n in 0..64 {
            approx::assert_relative_eq!(index_scale(n).powi(2), n as f64 / 2.0, max_relative = 4.0 * f64::EPSILON);
        }
        assert_eq!(eigenvalue(3, 0.5), 1.5);
        assert_eq!(eigenvalue(0, 7.0), 0.0);
    }

    #[test]
    fn ground_state_at_origin() {
        let p = BasisParams::fixed(1.0, 0.0).unwrap();
        let h = eval_ghf_all(0, 0.0, &p).unwrap();
        assert_eq!(h.len(), 1);
        assert_abs_diff_eq!(h[0], PI.powf(-0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(h[0], 0.7511255, epsilon = 1e-7);
        let h = eval_ghf_all(1, 0.0, &p).unwrap();
        assert_eq!(h[1], 0.0);
    }

    #[test]
    fn second_function_at_center() {
        for &(alpha, beta) in &[(1.0, 0.0), (0.3, -2.0), (2.5, 1.25)] {
            let p = BasisParams::fixed(alpha, beta).unwrap();
            let h = eval_ghf_all(2, beta, &p).unwrap();
            let h0 = (alpha / PI.sqrt()).sqrt();
            assert_abs_diff_eq!(h[0], h0, epsilon = 1e-15);
            assert_abs_diff_eq!(h[2], -h0 / SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn matches_physical_hermite_formula_for_small_n() {
        // Hphys: 1, 2z, 4z^2-2, 8z^3-12z, 16z^4-48z^2+12
        let p = BasisParams::fixed(1.7, 0.4).unwrap();
        let x = 0.93;
        let z = p.to_reference(x);
        let phys = [
            1.0,
            2.0 * z,
            4.0 * z * z - 2.0,
            8.0 * z.powi(3) - 12.0 * z,
            16.0 * z.powi(4) - 48.0 * z * z + 12.0,
        ];
        let h = eval_ghf_all(4, x, &p).unwrap();
        let mut fact = 1.0;
        for n in 0..5 {
            if n > 0 {
                fact *= n as f64;
            }
            let norm = (p.alpha / (2f64.powi(n as i32) * fact * PI.sqrt())).sqrt();
            let expect = norm * phys[n] * (-0.5 * z * z).exp();
            assert_abs_diff_eq!(h[n], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn far_tail_underflows_to_zero_without_nan() {
        let p = BasisParams::fixed(1.0, 0.0).unwrap();
        let h = eval_ghf_all(300, 60.0, &p).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
        let h = eval_ghf_all(400, 20.0, &p).unwrap();
        assert!(h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(BasisParams::fixed(0.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(BasisParams::fixed(-1.0, 0.0), Err(Error::Parameter(_))));
        let bad = BasisParams {
            alpha: -1.0,
            beta: 0.0,
            alpha_dot: 0.0,
            beta_dot: 0.0,
        };
        assert!(matches!(eval_ghf_all(3, 0.0, &bad), Err(Error::Parameter(_))));
        let p = BasisParams::fixed(1.0, 0.0).unwrap();
        assert!(matches!(eval_ghf_all(3, f64::NAN, &p), Err(Error::Input(_))));
        assert!(dx_operator(3, 0.0).is_err());
        assert!(dt_coupling(3, &bad).is_err());
    }

    #[test]
    fn dx_operator_examples() {
        let d = dx_operator(1, 1.0).unwrap();
        let out = d.mul_vec(&[1.0, 0.0]);
        assert_abs_diff_eq!(out[0], 0.0);
        assert_abs_diff_eq!(out[1], -(0.5f64).sqrt(), epsilon = 1e-15);
        assert_eq!(d.mul_vec(&[0.0, 0.0]), vec![0.0, 0.0]);

        let n = 9;
        let d = dx_operator(n, 1.3).unwrap();
        for m in 0..n {
            assert_eq!(d.get(m, m + 1), -d.get(m + 1, m));
        }
    }

    #[test]
    fn dt_coupling_examples() {
        let p = BasisParams::fixed(2.0, 1.0).unwrap();
        assert_eq!(dt_coupling(6, &p).unwrap().max_abs(), 0.0);

        let alpha = 1.0 / SQRT_2;
        let p = BasisParams::new(alpha, 0.0, -1.0 / (2.0 * SQRT_2), 0.0).unwrap();
        let m = dt_coupling(4, &p).unwrap();
        assert_abs_diff_eq!(m.get(2, 0), 0.5 * (0.5f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(2, 0), 0.35355, epsilon = 1e-5);
        assert_abs_diff_eq!(m.get(0, 2), -0.35355, epsilon = 1e-5);

        let p = BasisParams::new(2.0 * SQRT_2, 0.0, 0.0, -1.0).unwrap();
        let m = dt_coupling(4, &p).unwrap();
        assert_abs_diff_eq!(m.get(1, 0), -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.get(0, 1), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.max_abs_diff(&m.transpose().scaled(-1.0)), 0.0);
    }

    #[test]
    fn constant_schedule_has_zero_rate() {
        let s = ParamSchedule::fixed(0.7, -3.0);
        let p = s.at(2.5).unwrap();
        assert_eq!((p.alpha, p.beta, p.alpha_dot, p.beta_dot), (0.7, -3.0, 0.0, 0.0));
        assert!(s.is_static());
    }

    #[test]
    fn schedule_rates_match_central_differences() {
        let laws = [
            Schedule::InverseSqrtShift,
            Schedule::LinearDrift {
                offset: 0.3,
                rate: -1.0,
            },
            Schedule::custom("cos", |t: f64| (2.0 + t.cos(), -t.sin())),
        ];
        for law in &laws {
            for &t in &[0.0, 0.37, 1.0, 2.9] {
                let (_, rate) = law.value_and_rate(t);
                let mut prev = f64::INFINITY;
                for &h in &[1e-2, 5e-3] {
                    let fd = (law.value_and_rate(t + h).0 - law.value_and_rate(t - h).0) / (2.0 * h);
                    let err = (fd - rate).abs();
                    // O(h^2): halving h cuts the error by ~4.
                    assert!(err < 1e-3, "{law} at {t}: {err}");
                    if prev.is_finite() && prev > 1e-12 {
                        assert!(err < prev / 3.0, "{law} at {t}: {prev} -> {err}");
                    }
                    prev = err;
                }
            }
        }
        let (a, ad) = Schedule::InverseSqrtShift.value_and_rate(1.0);
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ad, -0.125, epsilon = 1e-15);
    }

    #[test]
    fn schedule_strings_round_trip() {
        for s in ["const:2.8284", "inv-sqrt-shift", "drift:-1", "drift:0.5:2"] {
            let parsed: Schedule = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("wobble".parse::<Schedule>().is_err());
        assert!("const:abc".parse::<Schedule>().is_err());
        assert!("const:1:2".parse::<Schedule>().is_err());
    }

    #[test]
    fn schedule_with_nonpositive_alpha_fails_at_evaluation() {
        let s = ParamSchedule::new(
            Schedule::LinearDrift {
                offset: 1.0,
                rate: -1.0,
            },
            Schedule::Constant(0.0),
        );
        assert!(s.at(0.5).is_ok());
        assert!(matches!(s.at(1.5), Err(Error::Parameter(_))));
    }
}
