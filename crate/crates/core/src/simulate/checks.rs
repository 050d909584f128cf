//! Empirical checks of the asymptotic theory: the order of the pointwise
//! bias in `h`, and the normal limit of the scaled estimation error.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::distributions::{rep_rng, Distribution};
use crate::clipping::ClipSpec;
use crate::error::{Error, Result};
use crate::estimators::{nw_estimate, BandwidthPlan, Sample, VbFit};
use crate::kernels::Kernel;
use crate::theory::{asymptotic_variance, default_fd_step, loglog_slope, theta_coefficient, TrueModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Variable bandwidth with the true local scale `q`.
    IdealVb,
    /// Variable bandwidth with a pilot estimate of `q`; `h` is the final
    /// bandwidth and the pilot uses the default rule.
    TrueVb,
    Nw,
}

/// How design points are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum Design {
    /// i.i.d. draws from the distribution.
    Random(Distribution),
    /// The fixed points `F⁻¹((i − ½)/n)`, `i = 1..n`.
    Quantile(Distribution),
}

impl Design {
    fn points<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Design::Random(d) => (0..n).map(|_| d.draw(rng)).collect(),
            Design::Quantile(d) => (0..n).map(|i| d.quantile((i as f64 + 0.5) / n as f64)).collect(),
        }
    }
}

/// Single-point estimate of `r(t)` with bandwidth `h` (NaN when flagged).
pub fn point_estimate(
    kind: EstimatorKind,
    sample: &Sample,
    model: &TrueModel,
    t: f64,
    h: f64,
    kernel: Kernel,
    clip: &ClipSpec,
) -> Result<f64> {
    let e = match kind {
        EstimatorKind::Nw => nw_estimate(sample, t, h, kernel),
        EstimatorKind::IdealVb => VbFit::ideal(sample, h, kernel, clip, |x| model.q(x))?.estimate(t),
        EstimatorKind::TrueVb => {
            let plan = BandwidthPlan::new(BandwidthPlan::default_for(sample.len()).h1, h)?;
            VbFit::two_stage(sample, plan, kernel, clip)?.estimate(t)
        }
    };
    Ok(if e.ok { e.value } else { f64::NAN })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub h: f64,
    pub bias: f64,
    /// Monte Carlo standard error of `bias`; 0 with one replication.
    pub se: f64,
    /// Whether the point entered the slope fit (`|bias| ≥ 10·se`, nonzero).
    pub used: bool,
    /// Replications whose estimate was flagged.
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSlopeReport {
    pub slope: f64,
    pub points: Vec<BiasPoint>,
}

/// Bias of an estimator at `t` across a bandwidth grid. Responses are
/// `r(X) + σ(X)·Z` with `Z` standard normal; replications share design and
/// noise across bandwidths.
#[derive(Debug, Clone)]
pub struct BiasCheck {
    pub model: TrueModel,
    pub design: Design,
    pub t: f64,
    pub h_grid: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub kind: EstimatorKind,
    pub kernel: Kernel,
    pub clip: ClipSpec,
}

impl BiasCheck {
    pub fn new(model: TrueModel, design: Design, t: f64, h_grid: Vec<f64>, kind: EstimatorKind) -> Self {
        BiasCheck {
            model,
            design,
            t,
            h_grid,
            n: 1000,
            reps: 1,
            seed: 1,
            kind,
            kernel: Kernel::TRICUBE,
            clip: ClipSpec::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut g = self.h_grid.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        if g.len() < 4 || g.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidParameter("bandwidth grid needs at least 4 distinct positive values".into()));
        }
        if self.n < 2 || self.reps < 1 {
            return Err(Error::InvalidParameter("need n >= 2 and reps >= 1".into()));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<BiasSlopeReport> {
        self.validate()?;
        let r_t = self.model.r(self.t);
        let per_rep: Vec<Result<Vec<f64>>> = (0..self.reps as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = rep_rng(self.seed, j);
                let x = self.design.points(self.n, &mut rng);
                let y: Vec<f64> = x
                    .iter()
                    .map(|&v| {
                        let s = self.model.sigma2(v).max(0.0).sqrt();
                        let z: f64 = if s > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                        self.model.r(v) + s * z
                    })
                    .collect();
                let sample = Sample::new(x, y)?;
                self.h_grid
                    .iter()
                    .map(|&h| point_estimate(self.kind, &sample, &self.model, self.t, h, self.kernel, &self.clip))
                    .collect()
            })
            .collect();
        let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_>>()?;

        let mut points = Vec::with_capacity(self.h_grid.len());
        for (k, &h) in self.h_grid.iter().enumerate() {
            let errs: Vec<f64> = per_rep.iter().map(|e| e[k] - r_t).filter(|e| !e.is_nan()).collect();
            let flagged = per_rep.len() - errs.len();
            if errs.is_empty() {
                points.push(BiasPoint { h, bias: f64::NAN, se: f64::NAN, used: false, flagged });
                continue;
            }
            let m = errs.len() as f64;
            let bias = errs.iter().sum::<f64>() / m;
            let se = if errs.len() > 1 {
                (errs.iter().map(|e| (e - bias) * (e - bias)).sum::<f64>() / (m - 1.0) / m).sqrt()
            } else {
                0.0
            };
            let used = bias != 0.0 && bias.abs() >= 10.0 * se;
            points.push(BiasPoint { h, bias, se, used, flagged });
        }
        let (hs, bs): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.used).map(|p| (p.h, p.bias.abs())).unzip();
        if hs.len() < 3 {
            return Err(Error::Simulation(format!(
                "only {} bandwidths have a bias clearly above Monte Carlo noise",
                hs.len()
            )));
        }
        Ok(BiasSlopeReport { slope: loglog_slope(&hs, &bs), points })
    }
}

/// Least-squares slope of `log|bias|` against `log h` for i.i.d. design from
/// `x_dist`, tricube kernel and default clipping.
#[allow(clippy::too_many_arguments)]
pub fn bias_slope(
    model: &TrueModel,
    x_dist: Distribution,
    t: f64,
    h_grid: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
    kind: EstimatorKind,
) -> Result<f64> {
    let check =
        BiasCheck { n, reps, seed, ..BiasCheck::new(model.clone(), Design::Random(x_dist), t, h_grid.to_vec(), kind) };
    Ok(check.run()?.slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    /// `√(nh)(r̂_j(t) − r(t))` for every replication with a usable estimate.
    pub z: Vec<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Distribution of `√(nh)(r̂(t) − r(t))` over replications, where
/// `Y = r(X) + noise_scale·ε` with `X ~ x_dist`, `ε ~ eps_dist`. The model's
/// `σ²` should be `noise_scale²·Var(ε)`.
#[derive(Debug, Clone)]
pub struct CltCheck {
    pub model: TrueModel,
    pub x_dist: Distribution,
    pub eps_dist: Distribution,
    pub noise_scale: f64,
    pub t: f64,
    pub n: usize,
    pub h: f64,
    pub reps: usize,
    pub seed: u64,
    pub kind: EstimatorKind,
    pub kernel: Kernel,
    pub clip: ClipSpec,
}

impl CltCheck {
    /// Reports, among others: `mean_z`, `mean_theory = λ̂·θ(t)` with
    /// `λ̂ = h⁴√(nh)`, `var_z`, `var_theory`, `var_ratio`, `ks` (against the
    /// normal law with the sample mean and variance), `ks_theory` (against
    /// the normal law with the theoretical moments) and `ks_critical_1pct`.
    pub fn run(&self) -> Result<CltReport> {
        crate::estimators::check_bandwidth(self.h)?;
        if self.n < 2 || self.reps < 2 {
            return Err(Error::InvalidParameter("need n >= 2 and reps >= 2".into()));
        }
        let r_t = self.model.r(self.t);
        let scale = (self.n as f64 * self.h).sqrt();
        let est: Vec<Result<f64>> = (0..self.reps as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = rep_rng(self.seed, j);
                let x: Vec<f64> = (0..self.n).map(|_| self.x_dist.draw(&mut rng)).collect();
                let y: Vec<f64> =
                    x.iter().map(|&v| self.model.r(v) + self.noise_scale * self.eps_dist.draw(&mut rng)).collect();
                let sample = Sample::new(x, y)?;
                point_estimate(self.kind, &sample, &self.model, self.t, self.h, self.kernel, &self.clip)
            })
            .collect();
        let est: Vec<f64> = est.into_iter().collect::<Result<_>>()?;
        let z: Vec<f64> = est.iter().filter(|e| !e.is_nan()).map(|e| scale * (e - r_t)).collect();
        if z.len() < 2 {
            return Err(Error::Simulation("fewer than two usable replications".into()));
        }

        let theta = theta_coefficient(&self.model, self.t, default_fd_step(self.t), self.kernel)?;
        let lambda = self.h.powi(4) * scale;
        let var_theory = asymptotic_variance(&self.model, self.t, self.kernel)?;
        let m = z.len() as f64;
        let mean_z = z.iter().sum::<f64>() / m;
        let var_z = z.iter().map(|v| (v - mean_z) * (v - mean_z)).sum::<f64>() / (m - 1.0);
        let mean_theory = lambda * theta;

        let diagnostics = BTreeMap::from([
            ("reps_used".to_string(), m),
            ("reps_flagged".to_string(), (est.len() - z.len()) as f64),
            ("theta".to_string(), theta),
            ("lambda_hat".to_string(), lambda),
            ("mean_z".to_string(), mean_z),
            ("mean_theory".to_string(), mean_theory),
            ("var_z".to_string(), var_z),
            ("var_theory".to_string(), var_theory),
            ("var_ratio".to_string(), var_z / var_theory),
            ("ks".to_string(), ks_normal(&z, mean_z, var_z.sqrt())),
            ("ks_theory".to_string(), ks_normal(&z, mean_theory, var_theory.sqrt())),
            ("ks_critical_1pct".to_string(), 1.63 / m.sqrt()),
        ]);
        Ok(CltReport { z, diagnostics })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn clt_check(
    model: &TrueModel,
    x_dist: Distribution,
    eps_dist: Distribution,
    t: f64,
    n: usize,
    h: f64,
    reps: usize,
    seed: u64,
    kind: EstimatorKind,
) -> Result<BTreeMap<String, f64>> {
    let check = CltCheck {
        model: model.clone(),
        x_dist,
        eps_dist,
        noise_scale: 1.0,
        t,
        n,
        h,
        reps,
        seed,
        kind,
        kernel: Kernel::TRICUBE,
        clip: ClipSpec::default(),
    };
    Ok(check.run()?.diagnostics)
}

/// Kolmogorov–Smirnov distance between the empirical law of `z` and
/// `N(mean, sd²)`; `sd = 0` means a point mass.
pub fn ks_normal(z: &[f64], mean: f64, sd: f64) -> f64 {
    let m = z.len() as f64;
    if !(sd > 0.0) {
        let below = z.iter().filter(|&&v| v < mean).count() as f64;
        let above = z.iter().filter(|&&v| v > mean).count() as f64;
        return (below / m).max(above / m);
    }
    let mut s = z.to_vec();
    s.sort_by(f64::total_cmp);
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2));
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Continuous, Normal};

    fn sine_model(sigma2: f64) -> TrueModel {
        TrueModel::homoscedastic(
            |x| Normal::standard().pdf(x),
            |x| 2.0 + (0.75 * x).sin(),
            |x| 0.75 * (0.75 * x).cos(),
            sigma2,
        )
    }

    #[test]
    fn nw_bias_is_quadratic() {
        let check = BiasCheck {
            n: 20000,
            ..BiasCheck::new(
                sine_model(0.0),
                Design::Quantile(Distribution::Normal { mu: 0.0, sd: 1.0 }),
                1.0,
                vec![0.5, 0.35, 0.25, 0.18, 0.12],
                EstimatorKind::Nw,
            )
        };
        let rep = check.run().unwrap();
        assert!((1.5..=2.5).contains(&rep.slope), "{rep:?}");
    }

    #[test]
    fn zero_bias_is_excluded() {
        // linear r under a flat design: no leading bias term
        let m = TrueModel::homoscedastic(|_| 0.25, |x| 2.0 * x + 1.0, |_| 2.0, 0.01);
        let r = bias_slope(
            &m,
            Distribution::Uniform { a: -2.0, b: 2.0 },
            0.0,
            &[0.4, 0.3, 0.2, 0.1],
            400,
            30,
            3,
            EstimatorKind::IdealVb,
        );
        assert!(matches!(r, Err(Error::Simulation(_))), "{r:?}");
    }

    #[test]
    fn grid_validation() {
        let r = bias_slope(
            &sine_model(0.0),
            Distribution::Normal { mu: 0.0, sd: 1.0 },
            1.0,
            &[0.1, 0.2, 0.2],
            100,
            1,
            1,
            EstimatorKind::Nw,
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn ks_examples() {
        let z: Vec<f64> = (0..1000)
            .map(|i| {
                let p = (i as f64 + 0.5) / 1000.0;
                statrs::distribution::ContinuousCDF::inverse_cdf(&Normal::standard(), p)
            })
            .collect();
        assert!(ks_normal(&z, 0.0, 1.0) <= 0.0005 + 1e-9);
        assert!(ks_normal(&z, 1.0, 1.0) > 0.3);
        assert_eq!(ks_normal(&[0.0, 0.0], 0.0, 0.0), 0.0);
        assert_eq!(ks_normal(&[0.0, 1.0], 0.0, 0.0), 0.5);
    }

    #[test]
    fn noiseless_flat_model_concentrates_at_zero() {
        let m = TrueModel::homoscedastic(|_| 0.25, |x| 2.0 * x + 1.0, |_| 2.0, 0.0);
        let check = CltCheck {
            model: m,
            x_dist: Distribution::Uniform { a: -2.0, b: 2.0 },
            eps_dist: Distribution::Uniform { a: 0.0, b: 1e-300 },
            noise_scale: 1.0,
            t: 0.0,
            n: 4000,
            h: 0.05,
            reps: 20,
            seed: 2,
            kind: EstimatorKind::IdealVb,
            kernel: Kernel::TRICUBE,
            clip: ClipSpec::default(),
        };
        let rep = check.run().unwrap();
        // Only the design randomness remains; it contributes O(h) to z.
        assert!(rep.z.iter().all(|z| z.abs() < 0.25), "{:?}", rep.z);
        assert_eq!(rep.diagnostics["var_theory"], 0.0);
        assert!(rep.diagnostics["theta"].abs() < 1e-9);
    }

    #[test]
    fn clt_is_reproducible() {
        let model = sine_model(0.01);
        let run = || {
            clt_check(
                &model,
                Distribution::Normal { mu: 0.0, sd: 1.0 },
                Distribution::Normal { mu: 0.0, sd: 0.1 },
                0.5,
                300,
                0.4,
                10,
                5,
                EstimatorKind::TrueVb,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }
}
