//! Subcommands other than the scenario tables: fitting a data file and the
//! single-point theory checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{linspace, DesignKind, RunConfig, ScenarioSpec};
use super::io::{create_dir, fmt_f64, load_sample_csv, write_csv, write_json};
use super::scenarios::resolve_table;
use crate::clipping::{ClipSpec, DEFAULT_C, DEFAULT_T0};
use crate::error::{Error, Result};
use crate::estimators::{nw_estimate, BandwidthPlan, VbFit};
use crate::kernels::{Kernel, KernelKind};
use crate::simulate::{
    cv_grid, nw_cv_bandwidth, BiasCheck, BiasSlopeReport, CltCheck, Design, Distribution, EstimatorKind, Regression,
    ScenarioConfig,
};
use crate::theory::{
    asymptotic_variance, bandwidth_integrals, default_fd_step, expansion_check, loglog_slope, optimal_bandwidth,
    theta_coefficient, ExpansionReport,
};

const FIT_GRID_POINTS: usize = 200;
const BIAS_H_GRID: [f64; 5] = [0.5, 0.35, 0.25, 0.18, 0.12];
const EXPANSION_H_GRID: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const THEORY_QUAD_TOL: f64 = 1e-10;

/// Fits both estimators to the sample in `cfg.input_path` and writes
/// `t,vkre,nwe,vkre_ok,nwe_ok` to `cfg.output_path`.
///
/// The variable-bandwidth fit uses the two-stage estimator with the default
/// bandwidth rule for the sample size unless overridden. The Nadaraya–Watson
/// column uses the baseline kernel with a cross-validated bandwidth, or `h2`
/// when no candidate bandwidth leaves any leave-one-out window non-empty.
pub fn run_fit(cfg: &RunConfig) -> Result<String> {
    let input = cfg.input_path.as_deref().ok_or_else(|| Error::Config("fit needs an input file".into()))?;
    let sample = load_sample_csv(input)?;
    let o = &cfg.overrides;
    let mut plan = BandwidthPlan::default_for(sample.len());
    if let Some(h) = o.h1 {
        plan.h1 = h;
    }
    if let Some(h) = o.h2 {
        plan.h2 = h;
    }
    plan.validate()?;
    let clip = ClipSpec::with_t0(o.clip_c.unwrap_or(DEFAULT_C), o.clip_t0.unwrap_or(DEFAULT_T0))?;
    let kernel = Kernel::new(o.kernel.unwrap_or(KernelKind::Tricube));
    let grid = match &o.grid {
        Some(g) => g.points()?,
        None => linspace(sample.min_x(), sample.max_x(), FIT_GRID_POINTS),
    };

    let fit = VbFit::two_stage(&sample, plan, kernel, &clip)?;
    let nw_kernel = Kernel::GAUSSIAN_TRUNCATED;
    let (nw_h, nw_note) = match nw_cv_bandwidth(&sample, nw_kernel, &cv_grid(&sample, 20)) {
        Ok(h) => (h, "cross-validated"),
        Err(_) => (plan.h2, "h2; cross-validation had no usable bandwidth"),
    };
    let rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&t| {
            let v = fit.estimate(t);
            let w = nw_estimate(&sample, t, nw_h, nw_kernel);
            vec![fmt_f64(t), fmt_f64(v.value), fmt_f64(w.value), v.ok.to_string(), w.ok.to_string()]
        })
        .collect();
    write_csv(&cfg.output_path, &["t", "vkre", "nwe", "vkre_ok", "nwe_ok"], &rows)?;
    Ok(format!(
        "n = {}, h1 = {}, h2 = {}, NW bandwidth = {} ({nw_note})\nwrote {} rows to {}\n",
        sample.len(),
        plan.h1,
        plan.h2,
        nw_h,
        rows.len(),
        cfg.output_path.display()
    ))
}

/// The single scenario a check runs on: the configured one, or `default`.
fn single_scenario(cfg: &RunConfig, default: ScenarioConfig) -> Result<ScenarioConfig> {
    let mut c = cfg.clone();
    if c.scenario.is_none() {
        c.scenario = Some(ScenarioSpec::Custom(Box::new(default)));
    }
    let mut table = resolve_table(&c)?;
    if table.rows.len() != 1 {
        return Err(Error::Config(format!(
            "{} needs a single scenario but '{}' has {} rows; select one with rows",
            cfg.subcommand.as_str(),
            table.id,
            table.rows.len()
        )));
    }
    Ok(table.rows.remove(0).config)
}

fn h_grid(cfg: &RunConfig, default: &[f64]) -> Result<Vec<f64>> {
    match &cfg.overrides.grid {
        Some(g) => g.points(),
        None => Ok(default.to_vec()),
    }
}

fn finish(dir: &Path, name: &str, json: &impl Serialize, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    create_dir(dir)?;
    write_json(&dir.join(format!("{name}.json")), json)?;
    write_csv(&dir.join(format!("{name}.csv")), header, rows)
}

#[derive(Serialize)]
struct BiasOutput<'a> {
    scenario: &'a ScenarioConfig,
    design: DesignKind,
    estimator: EstimatorKind,
    t: f64,
    report: &'a BiasSlopeReport,
}

/// Noiseless regression `2 + sin(0.75x)` on a standard normal design of
/// 20000 points: the default setting of the bias-order check.
pub fn bias_default_scenario() -> ScenarioConfig {
    ScenarioConfig {
        reg: Regression::Sine,
        x_dist: Distribution::Normal { mu: 0.0, sd: 1.0 },
        noise_scale: 0.0,
        n: 20000,
        reps: 1,
        ..Default::default()
    }
}

/// Empirical bias order in `h`. Writes `bias-check.json` and
/// `bias-check.csv` (`h,bias,se,used,flagged`).
pub fn run_bias_check(cfg: &RunConfig) -> Result<String> {
    let sc = single_scenario(cfg, bias_default_scenario())?;
    let o = &cfg.overrides;
    let design_kind = o.design.unwrap_or(DesignKind::Quantile);
    let design = match design_kind {
        DesignKind::Quantile => Design::Quantile(sc.x_dist),
        DesignKind::Random => Design::Random(sc.x_dist),
    };
    let kind = o.estimator.unwrap_or(EstimatorKind::IdealVb);
    let t = o.t.unwrap_or(1.0);
    let check = BiasCheck {
        n: sc.n,
        reps: sc.reps,
        seed: sc.seed,
        kernel: sc.vb_kernel(),
        clip: sc.clip()?,
        ..BiasCheck::new(sc.true_model()?, design, t, h_grid(cfg, &BIAS_H_GRID)?, kind)
    };
    let report = check.run()?;
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| vec![fmt_f64(p.h), fmt_f64(p.bias), fmt_f64(p.se), p.used.to_string(), p.flagged.to_string()])
        .collect();
    let out = BiasOutput { scenario: &sc, design: design_kind, estimator: kind, t, report: &report };
    finish(&cfg.output_path, "bias-check", &out, &["h", "bias", "se", "used", "flagged"], &rows)?;

    let mut s = format!("{:>10}  {:>14}  {:>12}  used\n", "h", "bias", "se");
    for p in &report.points {
        let _ = writeln!(s, "{:>10.4}  {:>14.6e}  {:>12.3e}  {}", p.h, p.bias, p.se, p.used);
    }
    let _ = writeln!(s, "log-log bias slope: {:.4}", report.slope);
    Ok(s)
}

/// The default setting of the normal-limit check: the standard scenario with
/// `n = 4000` and 500 replications.
pub fn clt_default_scenario() -> ScenarioConfig {
    ScenarioConfig { n: 4000, reps: 500, ..Default::default() }
}

#[derive(Serialize)]
struct CltOutput<'a> {
    scenario: &'a ScenarioConfig,
    estimator: EstimatorKind,
    t: f64,
    h: f64,
    diagnostics: &'a BTreeMap<String, f64>,
}

/// Normal limit of the scaled error at one point, with `h = h2`. Writes
/// `clt-check.json` and `clt-check.csv` (one `z` per replication).
pub fn run_clt_check(cfg: &RunConfig) -> Result<String> {
    let sc = single_scenario(cfg, clt_default_scenario())?;
    let o = &cfg.overrides;
    let kind = o.estimator.unwrap_or(EstimatorKind::IdealVb);
    let t = o.t.unwrap_or(1.0);
    let h = sc.bandwidths().h2;
    let check = CltCheck {
        model: sc.true_model()?,
        x_dist: sc.x_dist,
        eps_dist: sc.eps_dist,
        noise_scale: sc.noise_scale,
        t,
        n: sc.n,
        h,
        reps: sc.reps,
        seed: sc.seed,
        kind,
        kernel: sc.vb_kernel(),
        clip: sc.clip()?,
    };
    let report = check.run()?;
    let rows: Vec<Vec<String>> = report.z.iter().map(|&z| vec![fmt_f64(z)]).collect();
    let out = CltOutput { scenario: &sc, estimator: kind, t, h, diagnostics: &report.diagnostics };
    finish(&cfg.output_path, "clt-check", &out, &["z"], &rows)?;

    let mut s = String::new();
    for (k, v) in &report.diagnostics {
        let _ = writeln!(s, "{k:<18} {v:.6}");
    }
    Ok(s)
}

#[derive(Serialize)]
struct ExpansionVariant {
    slope: f64,
    reports: Vec<ExpansionReport>,
}

#[derive(Serialize)]
struct ExpansionOutput<'a> {
    scenario: &'a ScenarioConfig,
    t: f64,
    kernel: KernelKind,
    eta: &'static str,
    xi: &'static str,
    k: ExpansionVariant,
    k_squared: ExpansionVariant,
}

/// Quadrature against truncated series for `η = N(0,1)` density and
/// `ξ = α∘q` of the scenario. Writes `expansion-check.json` and
/// `expansion-check.csv` (`variant,h,lhs,series,residual`).
pub fn run_expansion_check(cfg: &RunConfig) -> Result<String> {
    let sc = single_scenario(cfg, ScenarioConfig::default())?;
    let t = cfg.overrides.t.unwrap_or(1.0);
    let hs = h_grid(cfg, &EXPANSION_H_GRID)?;
    let model = sc.true_model()?;
    let clip = sc.clip()?;
    let kernel = sc.vb_kernel();
    let normal = Distribution::Normal { mu: 0.0, sd: 1.0 };
    let eta = |s: f64| normal.pdf(s);
    let xi = |s: f64| clip.alpha(model.q(s));

    let variant = |squared: bool| -> Result<ExpansionVariant> {
        let reports =
            hs.iter().map(|&h| expansion_check(eta, xi, t, h, kernel, squared)).collect::<Result<Vec<_>>>()?;
        let res: Vec<f64> = reports.iter().map(|r| r.residual.abs()).collect();
        Ok(ExpansionVariant { slope: loglog_slope(&hs, &res), reports })
    };
    let out = ExpansionOutput {
        scenario: &sc,
        t,
        kernel: kernel.kind(),
        eta: "N(0,1) density",
        xi: "alpha(q)",
        k: variant(false)?,
        k_squared: variant(true)?,
    };
    let mut rows = Vec::new();
    for (name, v) in [("K", &out.k), ("K2", &out.k_squared)] {
        for r in &v.reports {
            rows.push(vec![name.to_string(), fmt_f64(r.h), fmt_f64(r.lhs), fmt_f64(r.series), fmt_f64(r.residual)]);
        }
    }
    finish(&cfg.output_path, "expansion-check", &out, &["variant", "h", "lhs", "series", "residual"], &rows)?;
    Ok(format!("residual slope, K:  {:.4}\nresidual slope, K2: {:.4}\n", out.k.slope, out.k_squared.slope))
}

#[derive(Serialize)]
struct TheoryPoint {
    t: f64,
    q: f64,
    in_region: bool,
    theta: Option<f64>,
    variance: Option<f64>,
}

#[derive(Serialize)]
struct TheoryOutput<'a> {
    scenario: &'a ScenarioConfig,
    kernel: KernelKind,
    points: Vec<TheoryPoint>,
    region: (f64, f64),
    variance_integral: Option<f64>,
    theta_squared_integral: Option<f64>,
    optimal_bandwidth: Option<f64>,
    rule_bandwidth: f64,
    notes: Vec<String>,
}

/// Bias coefficient, asymptotic variance and optimal final bandwidth of a
/// scenario. The bandwidth integrals run over the span of the grid (default
/// nine points on `[0.6, 1.4]`). Writes `theory-report.json` and
/// `theory-report.csv` (`t,q,in_region,theta,variance`).
pub fn run_theory_report(cfg: &RunConfig) -> Result<String> {
    let sc = single_scenario(cfg, ScenarioConfig::default())?;
    let pts = match &cfg.overrides.grid {
        Some(g) => g.points()?,
        None => linspace(0.6, 1.4, 9),
    };
    let model = sc.true_model()?;
    let clip = sc.clip()?;
    let kernel = sc.vb_kernel();
    let mut notes = Vec::new();
    let points: Vec<TheoryPoint> = pts
        .iter()
        .map(|&t| {
            let q = model.q(t);
            let theta = theta_coefficient(&model, t, default_fd_step(t), kernel)
                .map_err(|e| notes.push(format!("theta at {t}: {e}")))
                .ok();
            let variance =
                asymptotic_variance(&model, t, kernel).map_err(|e| notes.push(format!("variance at {t}: {e}"))).ok();
            TheoryPoint { t, q, in_region: clip.in_region(q), theta, variance }
        })
        .collect();
    let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let region = (lo, hi);
    let (mut vi, mut bi, mut hopt) = (None, None, None);
    if lo < hi {
        match bandwidth_integrals(&model, kernel, region, THEORY_QUAD_TOL) {
            Ok(ints) => {
                vi = Some(ints.variance);
                bi = Some(ints.bias);
            }
            Err(e) => notes.push(format!("bandwidth integrals: {e}")),
        }
        match optimal_bandwidth(&model, kernel, sc.n as u64, region, THEORY_QUAD_TOL) {
            Ok(h) => hopt = Some(h),
            Err(e) => notes.push(format!("optimal bandwidth: {e}")),
        }
    } else {
        notes.push("a single grid point spans no region; no optimal bandwidth".into());
    }
    let out = TheoryOutput {
        scenario: &sc,
        kernel: kernel.kind(),
        points,
        region,
        variance_integral: vi,
        theta_squared_integral: bi,
        optimal_bandwidth: hopt,
        rule_bandwidth: sc.bandwidths().h2,
        notes,
    };
    let opt = |v: Option<f64>| v.map_or_else(String::new, fmt_f64);
    let rows: Vec<Vec<String>> = out
        .points
        .iter()
        .map(|p| vec![fmt_f64(p.t), fmt_f64(p.q), p.in_region.to_string(), opt(p.theta), opt(p.variance)])
        .collect();
    finish(&cfg.output_path, "theory-report", &out, &["t", "q", "in_region", "theta", "variance"], &rows)?;

    let mut s = format!("{:>10}  {:>14}  {:>14}\n", "t", "theta", "variance");
    for p in &out.points {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(s, "{:>10.4}  {:>14}  {:>14}", p.t, f(p.theta), f(p.variance));
    }
    match out.optimal_bandwidth {
        Some(h) => {
            let _ = writeln!(s, "optimal h on [{lo}, {hi}] for n = {}: {h:.6} (rule: {:.6})", sc.n, out.rule_bandwidth);
        }
        None => s.push_str("optimal h: unavailable\n"),
    }
    for n in &out.notes {
        let _ = writeln!(s, "note: {n}");
    }
    Ok(s)
}
