//! Regression scenarios: the three test functions, the sampling design and
//! all tuning knobs of one Monte Carlo experiment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distributions::{rep_rng, Distribution};
use crate::clipping::{ClipSpec, DEFAULT_C, DEFAULT_T0};
use crate::error::{Error, Result};
use crate::estimators::{BandwidthPlan, Sample};
use crate::kernels::{Kernel, KernelKind};
use crate::theory::TrueModel;

/// Regression function `r(x) = E(Y | X = x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegressionRepr", into = "RegressionRepr")]
pub enum Regression {
    /// `2 + sin(0.75x)`
    Sine,
    /// `1/(1 + x²)`
    Reciprocal,
    /// `log|x|`
    LogAbs,
    /// `r ≡ c`, for noiseless sanity checks.
    Constant(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RegressionRepr {
    Id(u8),
    Constant { constant: f64 },
}

impl TryFrom<RegressionRepr> for Regression {
    type Error = String;

    fn try_from(r: RegressionRepr) -> Result<Self, String> {
        match r {
            RegressionRepr::Id(id) => Regression::from_id(id).map_err(|e| e.to_string()),
            RegressionRepr::Constant { constant } => Ok(Regression::Constant(constant)),
        }
    }
}

impl From<Regression> for RegressionRepr {
    fn from(r: Regression) -> Self {
        match r {
            Regression::Sine => RegressionRepr::Id(1),
            Regression::Reciprocal => RegressionRepr::Id(2),
            Regression::LogAbs => RegressionRepr::Id(3),
            Regression::Constant(c) => RegressionRepr::Constant { constant: c },
        }
    }
}

impl Regression {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Regression::Sine),
            2 => Ok(Regression::Reciprocal),
            3 => Ok(Regression::LogAbs),
            _ => Err(Error::InvalidParameter(format!("regression id {id} (expected 1, 2 or 3)"))),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Regression::Sine => 2.0 + (0.75 * x).sin(),
            Regression::Reciprocal => 1.0 / (1.0 + x * x),
            Regression::LogAbs => x.abs().ln(),
            Regression::Constant(c) => c,
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Regression::Sine => 0.75 * (0.75 * x).cos(),
            Regression::Reciprocal => -2.0 * x / (1.0 + x * x).powi(2),
            Regression::LogAbs => 1.0 / x,
            Regression::Constant(_) => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Regression::Sine => "2+sin(0.75x)".into(),
            Regression::Reciprocal => "1/(1+x^2)".into(),
            Regression::LogAbs => "log|x|".into(),
            Regression::Constant(c) => format!("{c}"),
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub reg: Regression,
    pub x_dist: Distribution,
    pub eps_dist: Distribution,
    /// `Y = r(X) + noise_scale·ε`.
    pub noise_scale: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Pilot and final bandwidths; `None` uses [`BandwidthPlan::default_for`].
    pub plan: Option<BandwidthPlan>,
    pub clip_c: f64,
    pub clip_t0: f64,
    pub kernel: KernelKind,
    /// Kernel of the cross-validated Nadaraya–Watson baseline.
    pub baseline_kernel: KernelKind,
    /// Number of log-spaced candidate bandwidths for the baseline.
    pub cv_grid_size: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            reg: Regression::Reciprocal,
            x_dist: Distribution::StudentT { df: 4 },
            eps_dist: Distribution::Uniform { a: -0.5, b: 0.5 },
            noise_scale: 0.3,
            n: 5000,
            reps: 250,
            seed: 1,
            plan: None,
            clip_c: DEFAULT_C,
            clip_t0: DEFAULT_T0,
            kernel: KernelKind::Tricube,
            baseline_kernel: KernelKind::GaussianTruncated,
            cv_grid_size: 20,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidParameter(format!("n = {} (need n >= 10)", self.n)));
        }
        if self.reps < 1 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::InvalidParameter(format!("noise_scale = {}", self.noise_scale)));
        }
        if self.cv_grid_size == 0 {
            return Err(Error::InvalidParameter("cv_grid_size must be positive".into()));
        }
        self.x_dist.validate()?;
        self.eps_dist.validate()?;
        self.bandwidths().validate()?;
        self.clip()?;
        Ok(())
    }

    pub fn bandwidths(&self) -> BandwidthPlan {
        self.plan.unwrap_or_else(|| BandwidthPlan::default_for(self.n))
    }

    pub fn clip(&self) -> Result<ClipSpec> {
        ClipSpec::with_t0(self.clip_c, self.clip_t0)
    }

    pub fn vb_kernel(&self) -> Kernel {
        Kernel::new(self.kernel)
    }

    pub fn nw_kernel(&self) -> Kernel {
        Kernel::new(self.baseline_kernel)
    }

    /// Noise variance `σ² = noise_scale²·Var(ε)`, when finite.
    pub fn noise_variance(&self) -> Option<f64> {
        self.eps_dist.variance().map(|v| self.noise_scale * self.noise_scale * v)
    }

    /// The model the data are drawn from. The noise is taken centred; a
    /// non-zero `E ε` shifts every estimator alike and is not modelled.
    pub fn true_model(&self) -> Result<TrueModel> {
        let s2 = self
            .noise_variance()
            .ok_or_else(|| Error::Model(format!("noise distribution {} has no finite variance", self.eps_dist)))?;
        let (x, reg) = (self.x_dist, self.reg);
        Ok(TrueModel::homoscedastic(move |t| x.pdf(t), move |t| reg.eval(t), move |t| reg.deriv(t), s2))
    }
}

/// The sample of replication `rep_index`: `n` draws of `X`, then `n` draws of
/// `ε`, from the stream of `(seed, rep_index)`.
pub fn gen_regression_sample(cfg: &ScenarioConfig, rep_index: u64) -> Result<Sample> {
    cfg.validate()?;
    let mut rng = rep_rng(cfg.seed, rep_index);
    let x = draw_design(cfg, &mut rng);
    let y = responses(cfg, &x, &mut rng);
    Sample::new(x, y)
}

fn draw_design<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<f64> {
    (0..cfg.n)
        .map(|_| loop {
            let x = cfg.x_dist.draw(rng);
            // log|x| is undefined at 0
            if !(cfg.reg == Regression::LogAbs && x == 0.0) {
                break x;
            }
        })
        .collect()
}

/// `r(x_i) + noise_scale·ε_i` with fresh noise from `rng`.
pub fn responses<R: Rng>(cfg: &ScenarioConfig, x: &[f64], rng: &mut R) -> Vec<f64> {
    x.iter().map(|&v| cfg.reg.eval(v) + cfg.noise_scale * cfg.eps_dist.draw(rng)).collect()
}
