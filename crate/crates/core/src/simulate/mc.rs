//! Monte Carlo comparison of the two-stage variable-bandwidth estimator with
//! the cross-validated Nadaraya–Watson baseline.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cv_grid, nw_cv_bandwidth};
use super::scenario::{gen_regression_sample, ScenarioConfig};
use crate::error::{Error, Result};
use crate::estimators::{nw_estimate, EstimateAtPoint, VbFit};

/// Root mean squared deviation over pairs whose estimate is not NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub value: f64,
    /// Number of pairs left out because the estimate was flagged.
    pub excluded: usize,
}

pub fn rmse(truth: &[f64], est: &[f64]) -> Result<Rmse> {
    if truth.len() != est.len() {
        return Err(Error::InvalidParameter(format!("truth has {} entries, estimates {}", truth.len(), est.len())));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (&r, &e) in truth.iter().zip(est) {
        if e.is_nan() {
            continue;
        }
        sum += (r - e) * (r - e);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Simulation("every estimate was excluded".into()));
    }
    Ok(Rmse { value: (sum / used as f64).sqrt(), excluded: truth.len() - used })
}

/// Monte Carlo mean squared error at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMse {
    pub t: f64,
    pub nwe_mse: f64,
    pub vkre_mse: f64,
    /// Replications in which each estimate was usable.
    pub nwe_count: usize,
    pub vkre_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub scenario: ScenarioConfig,
    /// Mean over replications of the per-sample RMSE; absent for point runs.
    pub nwe_rmse: Option<f64>,
    pub vkre_rmse: Option<f64>,
    pub per_point_mse: Option<Vec<PointMse>>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Both estimators fitted to one sample.
struct RepFit<'a> {
    vb: VbFit<'a>,
    nw_h: f64,
}

fn fit_rep<'a>(cfg: &ScenarioConfig, sample: &'a crate::estimators::Sample) -> Result<RepFit<'a>> {
    let clip = cfg.clip()?;
    let vb = VbFit::two_stage(sample, cfg.bandwidths(), cfg.vb_kernel(), &clip)?;
    let nw_h = nw_cv_bandwidth(sample, cfg.nw_kernel(), &cv_grid(sample, cfg.cv_grid_size))?;
    Ok(RepFit { vb, nw_h })
}

fn value(e: EstimateAtPoint) -> f64 {
    if e.ok {
        e.value
    } else {
        f64::NAN
    }
}

struct RmseRep {
    nwe: Rmse,
    vkre: Rmse,
    nw_h: f64,
}

fn rmse_rep(cfg: &ScenarioConfig, rep: u64) -> Result<RmseRep> {
    let sample = gen_regression_sample(cfg, rep)?;
    let fit = fit_rep(cfg, &sample)?;
    let nwk = cfg.nw_kernel();
    let truth: Vec<f64> = sample.x().iter().map(|&x| cfg.reg.eval(x)).collect();
    let vk: Vec<f64> = sample.x().iter().map(|&x| value(fit.vb.estimate(x))).collect();
    let nw: Vec<f64> = sample.x().iter().map(|&x| value(nw_estimate(&sample, x, fit.nw_h, nwk))).collect();
    Ok(RmseRep { nwe: rmse(&truth, &nw)?, vkre: rmse(&truth, &vk)?, nw_h: fit.nw_h })
}

/// Runs `f` for every replication in parallel and returns the results in
/// replication order, so any later reduction is independent of scheduling.
fn run_reps<T: Send>(reps: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Vec<Result<T>> {
    (0..reps as u64).into_par_iter().map(f).collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (m, sd)
}

fn split_failures<T>(results: Vec<Result<T>>) -> Result<(Vec<T>, usize)> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    let mut first_err = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        let e = first_err.map(|e| e.to_string()).unwrap_or_default();
        return Err(Error::Simulation(format!("all {total} replications failed; first error: {e}")));
    }
    let failed = total - ok.len();
    Ok((ok, failed))
}

fn base_diagnostics(cfg: &ScenarioConfig, ok: usize, failed: usize) -> BTreeMap<String, f64> {
    let plan = cfg.bandwidths();
    BTreeMap::from([
        ("reps_ok".to_string(), ok as f64),
        ("reps_failed".to_string(), failed as f64),
        ("h1".to_string(), plan.h1),
        ("h2".to_string(), plan.h2),
    ])
}

/// Average RMSE of both estimators at the sample points, over `cfg.reps`
/// replications.
pub fn mc_rmse(cfg: &ScenarioConfig) -> Result<MCReport> {
    cfg.validate()?;
    let (reps, failed) = split_failures(run_reps(cfg.reps, |j| rmse_rep(cfg, j)))?;
    let nwe: Vec<f64> = reps.iter().map(|r| r.nwe.value).collect();
    let vkre: Vec<f64> = reps.iter().map(|r| r.vkre.value).collect();
    let cvh: Vec<f64> = reps.iter().map(|r| r.nw_h).collect();
    let (nwe_mean, nwe_sd) = mean_sd(&nwe);
    let (vkre_mean, vkre_sd) = mean_sd(&vkre);
    let mut diag = base_diagnostics(cfg, reps.len(), failed);
    diag.insert("nwe_rmse_sd".into(), nwe_sd);
    diag.insert("vkre_rmse_sd".into(), vkre_sd);
    diag.insert("cv_bandwidth_mean".into(), mean_sd(&cvh).0);
    diag.insert("nwe_excluded_points".into(), reps.iter().map(|r| r.nwe.excluded as f64).sum());
    diag.insert("vkre_excluded_points".into(), reps.iter().map(|r| r.vkre.excluded as f64).sum());
    Ok(MCReport {
        scenario: cfg.clone(),
        nwe_rmse: Some(nwe_mean),
        vkre_rmse: Some(vkre_mean),
        per_point_mse: None,
        diagnostics: diag,
    })
}

/// Monte Carlo MSE of both estimators at fixed points.
pub fn mc_mse_points(cfg: &ScenarioConfig, points: &[f64]) -> Result<MCReport> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidParameter("no evaluation points".into()));
    }
    if let Some(t) = points.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("evaluation point {t} is not finite")));
    }
    let results = run_reps(cfg.reps, |j| {
        let sample = gen_regression_sample(cfg, j)?;
        let fit = fit_rep(cfg, &sample)?;
        let nwk = cfg.nw_kernel();
        let errs: Vec<(f64, f64)> = points
            .iter()
            .map(|&t| {
                let r = cfg.reg.eval(t);
                (value(nw_estimate(&sample, t, fit.nw_h, nwk)) - r, value(fit.vb.estimate(t)) - r)
            })
            .collect();
        Ok((errs, fit.nw_h))
    });
    let (reps, failed) = split_failures(results)?;
    let mut table = Vec::with_capacity(points.len());
    for (k, &t) in points.iter().enumerate() {
        let (mut nsum, mut ncount, mut vsum, mut vcount) = (0.0, 0usize, 0.0, 0usize);
        for (errs, _) in &reps {
            let (ne, ve) = errs[k];
            if !ne.is_nan() {
                nsum += ne * ne;
                ncount += 1;
            }
            if !ve.is_nan() {
                vsum += ve * ve;
                vcount += 1;
            }
        }
        let avg = |s: f64, c: usize| if c > 0 { s / c as f64 } else { f64::NAN };
        table.push(PointMse {
            t,
            nwe_mse: avg(nsum, ncount),
            vkre_mse: avg(vsum, vcount),
            nwe_count: ncount,
            vkre_count: vcount,
        });
    }
    let mut diag = base_diagnostics(cfg, reps.len(), failed);
    let cvh: Vec<f64> = reps.iter().map(|r| r.1).collect();
    diag.insert("cv_bandwidth_mean".into(), mean_sd(&cvh).0);
    Ok(MCReport {
        scenario: cfg.clone(),
        nwe_rmse: None,
        vkre_rmse: None,
        per_point_mse: Some(table),
        diagnostics: diag,
    })
}

/// `count` equally spaced points spanning the range of all design points
/// drawn over every replication of `cfg`.
pub fn evenly_spaced_points(cfg: &ScenarioConfig, count: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    let ranges = run_reps(cfg.reps, |j| {
        let s = gen_regression_sample(cfg, j)?;
        Ok((s.min_x(), s.max_x()))
    });
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in ranges {
        let (a, b) = r?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok(match count {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    })
}
