//! Convergence-study runner: sweeps over `N` and `dt`, error tables, and
//! CSV / JSON / SVG output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{eval_ghf_all, ParamSchedule, Schedule};
use crate::error::{Error, Result};
use crate::problems::{preset, Flux, ProblemSpec};
use crate::quadrature::triple_product_tensor;
use crate::spectral::ErrorReport;
use crate::stepper::{integrate_with_workspace, NonlinearMethod, StepperConfig, Workspace};

/// Which `L^2`-type error fills the `E_N` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMetric {
    /// Root-sum-square over the `N + 1` mapped Hermite-Gauss points.
    #[default]
    Nodal,
    /// Continuous `L^2` norm by oversampled quadrature.
    Quadrature,
}

impl ErrorMetric {
    pub fn pick(self, r: &ErrorReport) -> f64 {
        match self {
            ErrorMetric::Nodal => r.nodal_l2_error,
            ErrorMetric::Quadrature => r.l2_error,
        }
    }
}

impl FromStr for ErrorMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nodal" => Ok(Self::Nodal),
            "quadrature" => Ok(Self::Quadrature),
            _ => Err(Error::Config(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            _ => Err(Error::Config(format!("unknown output format `{s}`"))),
        }
    }
}

/// One convergence study. Every `(N, dt)` pair of the two sweeps is run,
/// `N`-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub n_modes: Vec<usize>,
    pub dt: Vec<f64>,
    pub t_final: f64,
    /// Schedule strings such as `const:2.8284`, `inv-sqrt-shift`, `drift:-1`.
    /// `None` keeps the problem's default.
    #[serde(default)]
    pub alpha: Option<String>,
    #[serde(default)]
    pub beta: Option<String>,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Amplitude of a seeded random perturbation added to the initial data.
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub metric: ErrorMetric,
    #[serde(default)]
    pub frozen_coefficients: bool,
}

impl ExperimentConfig {
    pub fn new(problem: &str, n_modes: Vec<usize>, dt: Vec<f64>, t_final: f64) -> Self {
        Self {
            problem: problem.to_string(),
            n_modes,
            dt,
            t_final,
            alpha: None,
            beta: None,
            sample_times: Vec::new(),
            format: OutputFormat::Csv,
            output: None,
            seed: 0,
            perturbation: None,
            metric: ErrorMetric::Nodal,
            frozen_coefficients: false,
        }
    }

    pub fn with_alpha(mut self, spec: &str) -> Self {
        self.alpha = Some(spec.to_string());
        self
    }

    pub fn with_beta(mut self, spec: &str) -> Self {
        self.beta = Some(spec.to_string());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config json: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Resolves the problem and basis schedule, checking every invariant.
    pub fn resolve(&self) -> Result<(ProblemSpec, ParamSchedule)> {
        if self.n_modes.is_empty() || self.dt.is_empty() {
            return Err(Error::Config("N and dt sweeps must be non-empty".into()));
        }
        let problem = preset(&self.problem)?;
        if problem.exact.is_none() {
            return Err(Error::Config(format!("problem `{}` has no exact solution", problem.name)));
        }
        let mut schedule = problem.default_schedule.clone();
        if let Some(a) = &self.alpha {
            schedule.alpha = a.parse::<Schedule>()?;
        }
        if let Some(b) = &self.beta {
            schedule.beta = b.parse::<Schedule>()?;
        }
        for &dt in &self.dt {
            StepperConfig::new(dt, self.t_final, schedule.clone(), 0).steps()?;
        }
        schedule.at(0.0).map_err(|e| Error::Config(e.to_string()))?;
        schedule
            .at(self.t_final)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(eps) = self.perturbation {
            if !eps.is_finite() {
                return Err(Error::Config("perturbation must be finite".into()));
            }
        }
        Ok((problem, schedule))
    }
}

/// One sweep point. Errors are absent when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n_modes: usize,
    pub dt: f64,
    pub e_n: Option<f64>,
    pub e_n_inf: Option<f64>,
    pub l2_error: Option<f64>,
    pub nodal_l2_error: Option<f64>,
    pub order: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub problem: String,
    pub alpha: String,
    pub beta: String,
    pub t_final: f64,
    pub metric: ErrorMetric,
    /// Which parameter varies between successive rows: `dt`, `N`, or `mixed`.
    pub sweep: String,
    /// Least-squares slope of `log E_N` against `log` of the sweep variable.
    pub global_order: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
    pub metadata: TableMetadata,
}

impl ConvergenceTable {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }
}

/// Successive-pair orders `log(e_{k-1}/e_k) / log(p_{k-1}/p_k)`; the first
/// entry, and any pair with a non-positive value, is `None`.
pub fn convergence_order(errors: &[f64], params: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), params.len(), "errors and parameters must pair up");
    let mut out = vec![None; errors.len()];
    for k in 1..errors.len() {
        let (e0, e1, p0, p1) = (errors[k - 1], errors[k], params[k - 1], params[k]);
        let usable = [e0, e1, p0, p1].iter().all(|v| *v > 0.0 && v.is_finite());
        if usable && p0 != p1 {
            out[k] = Some((e0 / e1).ln() / (p0 / p1).ln());
        }
    }
    out
}

/// Least-squares slope of `log e` on `log p`, or `None` with fewer than two
/// usable points.
pub fn least_squares_order(errors: &[f64], params: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .zip(params)
        .filter(|(e, p)| **e > 0.0 && **p > 0.0 && e.is_finite())
        .map(|(e, p)| (p.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn perturbed_initial(
    problem: &ProblemSpec,
    schedule: &ParamSchedule,
    n_modes: usize,
    eps: f64,
    seed: u64,
) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
    let base = problem.initial.clone();
    if eps == 0.0 {
        return Ok(base);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..=n_modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p0 = schedule.at(0.0)?;
    Ok(Arc::new(move |x: f64| {
        let h = eval_ghf_all(noise.len() - 1, x, &p0).unwrap_or_default();
        base(x) + eps * noise.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>()
    }))
}

/// Runs every sweep point and tabulates errors at `t_final`.
///
/// A failing run is recorded in its row; only configuration problems abort
/// the whole experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let started = Instant::now();
    let (problem, schedule) = config.resolve()?;

    let points: Vec<(usize, f64)> = config
        .n_modes
        .iter()
        .flat_map(|&n| config.dt.iter().map(move |&dt| (n, dt)))
        .collect();

    let mut distinct_n: Vec<usize> = config.n_modes.clone();
    distinct_n.sort_unstable();
    distinct_n.dedup();
    let needs_tensor = problem.a1 != 0.0 && matches!(problem.flux, Flux::Quadratic);
    let tensors: Vec<(usize, Arc<_>)> = if needs_tensor {
        distinct_n
            .par_iter()
            .map(|&n| triple_product_tensor(n + 1).map(|t| (n, Arc::new(t))))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let reports: Vec<std::result::Result<ErrorReport, String>> = points
        .par_iter()
        .map(|&(n, dt)| {
            let run = || -> Result<ErrorReport> {
                let mut cfg = StepperConfig::new(dt, config.t_final, schedule.clone(), n);
                cfg.frozen_coefficients = config.frozen_coefficients;
                let mut ws = Workspace::new(n, &problem, &schedule, NonlinearMethod::Tensor)?
                    .frozen(config.frozen_coefficients);
                if let Some((_, t)) = tensors.iter().find(|(m, _)| *m == n) {
                    ws = ws.with_tensor(t.clone())?;
                }
                let initial = perturbed_initial(
                    &problem,
                    &schedule,
                    n,
                    config.perturbation.unwrap_or(0.0),
                    config.seed,
                )?;
                let run = integrate_with_workspace(
                    |x| initial(x),
                    &cfg,
                    &problem,
                    &[config.t_final],
                    ws,
                )?;
                run.samples
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Config("no error sample recorded".into()))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let mut rows: Vec<TableRow> = points
        .iter()
        .zip(&reports)
        .map(|(&(n, dt), r)| match r {
            Ok(rep) => TableRow {
                n_modes: n,
                dt,
                e_n: Some(config.metric.pick(rep)),
                e_n_inf: Some(rep.rel_linf_error),
                l2_error: Some(rep.l2_error),
                nodal_l2_error: Some(rep.nodal_l2_error),
                order: None,
                failure: None,
            },
            Err(msg) => TableRow {
                n_modes: n,
                dt,
                e_n: None,
                e_n_inf: None,
                l2_error: None,
                nodal_l2_error: None,
                order: None,
                failure: Some(msg.clone()),
            },
        })
        .collect();

    for k in 1..rows.len() {
        let (a, b) = (&rows[k - 1], &rows[k]);
        let param = if a.n_modes == b.n_modes && a.dt != b.dt {
            Some((a.dt, b.dt))
        } else if a.dt == b.dt && a.n_modes != b.n_modes {
            Some((a.n_modes as f64, b.n_modes as f64))
        } else {
            None
        };
        if let (Some((p0, p1)), Some(e0), Some(e1)) = (param, a.e_n, b.e_n) {
            rows[k].order = convergence_order(&[e0, e1], &[p0, p1])[1];
        }
    }

    let sweep = match (config.n_modes.len() > 1, config.dt.len() > 1) {
        (false, true) => "dt",
        (true, false) => "N",
        (false, false) => "single",
        (true, true) => "mixed",
    };
    let global_order = {
        let ok: Vec<&TableRow> = rows.iter().filter(|r| r.e_n.is_some()).collect();
        let errs: Vec<f64> = ok.iter().filter_map(|r| r.e_n).collect();
        match sweep {
            "dt" => least_squares_order(&errs, &ok.iter().map(|r| r.dt).collect::<Vec<_>>()),
            "N" => least_squares_order(&errs, &ok.iter().map(|r| r.n_modes as f64).collect::<Vec<_>>()),
            _ => None,
        }
    };

    Ok(ConvergenceTable {
        rows,
        metadata: TableMetadata {
            problem: problem.name.clone(),
            alpha: schedule.alpha.to_string(),
            beta: schedule.beta.to_string(),
            t_final: config.t_final,
            metric: config.metric,
            sweep: sweep.to_string(),
            global_order,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    })
}

fn sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.5e}")).unwrap_or_default()
}

pub fn render_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("N,dt,E_N,E_N_inf,order\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n_modes,
            sci(Some(r.dt)),
            sci(r.e_n),
            sci(r.e_n_inf),
            sci(r.order)
        );
    }
    out
}

pub fn render_json(table: &ConvergenceTable) -> Result<String> {
    Ok(serde_json::to_string_pretty(table)?)
}

pub fn parse_json(text: &str) -> Result<ConvergenceTable> {
    Ok(serde_json::from_str(text)?)
}

/// Log-log plot of `E_N` and `E_N_inf` against the sweep variable.
pub fn render_svg(table: &ConvergenceTable) -> String {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const PAD: f64 = 70.0;
    let by_n = table.metadata.sweep == "N";
    let xlabel = if by_n { "N" } else { "dt" };
    type Getter = fn(&TableRow) -> Option<f64>;
    type Series<'a> = (&'a str, &'a str, Vec<(f64, f64)>);
    let getters: [(&str, &str, Getter); 2] = [
        ("E_N", "#1f77b4", |r| r.e_n),
        ("E_N_inf", "#d62728", |r| r.e_n_inf),
    ];
    let series: Vec<Series> = getters
    .into_iter()
    .map(|(name, colour, get)| {
        let pts = table
            .rows
            .iter()
            .filter_map(|r| {
                let x = if by_n { r.n_modes as f64 } else { r.dt };
                get(r).filter(|e| *e > 0.0).map(|e| (x.log10(), e.log10()))
            })
            .collect();
        (name, colour, pts)
    })
    .collect();

    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.2.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in &all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} errors at T = {}</text>"#,
        W / 2.0,
        table.metadata.problem,
        table.metadata.t_final
    );
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for e in (x0 as i32)..=(x1 as i32) {
        let x = sx(e as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{PAD}" x2="{x}" y2="{}" stroke="#ddd"/><text x="{x}" y="{}" text-anchor="middle">1e{e}</text>"##,
            H - PAD,
            H - PAD + 18.0
        );
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = sy(e as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{PAD}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">1e{e}</text>"##,
            W - PAD,
            PAD - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        W / 2.0,
        H - 20.0
    );
    for (i, (name, colour, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for (x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        let ly = PAD + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{colour}">{name}</text>"#,
            W - PAD - 70.0
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render(table: &ConvergenceTable, format: OutputFormat) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Input("cannot emit an empty table".into()));
    }
    Ok(match format {
        OutputFormat::Csv => render_csv(table),
        OutputFormat::Json => render_json(table)?,
        OutputFormat::Svg => render_svg(table),
    })
}

pub fn emit_table(table: &ConvergenceTable, format: OutputFormat, path: &Path) -> Result<()> {
    let text = render(table, format)?;
    std::fs::write(path, text)?;
    Ok(())
}
