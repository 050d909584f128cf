//! Point estimators: Parzen–Rosenblatt density, Nadaraya–Watson regression
//! and its derivative, the pilot local scale `q̂`, and the variable-bandwidth
//! regression estimator in its ideal (true `q`) and two-stage (pilot `q̂`)
//! forms.
//!
//! Every regression estimate is a ratio of kernel sums. When the averaged
//! denominator falls below [`DENOM_FLOOR`] the estimate is flagged with
//! `ok = false` and its value is NaN.

use serde::{Deserialize, Serialize};

use crate::clipping::{q_of, ClipSpec};
use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// Smallest averaged denominator accepted before an estimate is flagged.
pub const DENOM_FLOOR: f64 = 1e-12;

/// Paired observations `(X_i, Y_i)`, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
    // copies ordered by x, used to restrict sums to the kernel window
    sorted_x: Vec<f64>,
    sorted_y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidSample(format!("x has {} entries but y has {}", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidSample(format!("non-finite value at row {i}")));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let sorted_x = order.iter().map(|&i| x[i]).collect();
        let sorted_y = order.iter().map(|&i| y[i]).collect();
        Ok(Sample { x, y, sorted_x, sorted_y })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let (x, y) = pairs.iter().copied().unzip();
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn min_x(&self) -> f64 {
        self.sorted_x[0]
    }

    pub fn max_x(&self) -> f64 {
        self.sorted_x[self.sorted_x.len() - 1]
    }

    /// Observations with `lo ≤ X_i ≤ hi`, in increasing order of `X`.
    pub(crate) fn window(&self, lo: f64, hi: f64) -> (&[f64], &[f64]) {
        let start = self.sorted_x.partition_point(|&v| v < lo);
        let end = self.sorted_x.partition_point(|&v| v <= hi);
        let end = end.max(start);
        (&self.sorted_x[start..end], &self.sorted_y[start..end])
    }
}

/// Pilot and final bandwidths of the two-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPlan {
    pub h1: f64,
    pub h2: f64,
}

impl BandwidthPlan {
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        let plan = BandwidthPlan { h1, h2 };
        plan.validate()?;
        Ok(plan)
    }

    /// `h1 = 0.6·n^{-1/7}`, `h2 = n^{-1/9}/4`.
    pub fn default_for(n: usize) -> Self {
        let n = n as f64;
        BandwidthPlan { h1: 0.6 * n.powf(-1.0 / 7.0), h2: n.powf(-1.0 / 9.0) / 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_bandwidth(self.h1)?;
        check_bandwidth(self.h2)
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bandwidth {h} must be positive and finite")))
    }
}

/// Result of evaluating a ratio estimator at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateAtPoint {
    pub t: f64,
    pub value: f64,
    /// The averaged density-type denominator that was used.
    pub denom: f64,
    pub ok: bool,
}

impl EstimateAtPoint {
    fn ratio(t: f64, numer: f64, denom: f64) -> Self {
        if denom >= DENOM_FLOOR {
            EstimateAtPoint { t, value: numer / denom, denom, ok: true }
        } else {
            EstimateAtPoint { t, value: f64::NAN, denom, ok: false }
        }
    }

    /// The value if the estimate is usable.
    pub fn get(&self) -> Option<f64> {
        self.ok.then_some(self.value)
    }
}

/// Fixed-bandwidth kernel sums at one point, already divided by `n·h`
/// (or `n·h²` for the derivative sums).
#[derive(Debug, Clone, Copy, Default)]
struct FixedSums {
    f: f64,
    g: f64,
    df: f64,
    dg: f64,
}

fn fixed_sums(sample: &Sample, t: f64, h: f64, kernel: Kernel, with_deriv: bool) -> FixedSums {
    let reach = kernel.support() * h;
    let (xs, ys) = sample.window(t - reach, t + reach);
    let mut s = FixedSums::default();
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (t - x) / h;
        let k = kernel.eval(u);
        s.f += k;
        s.g += k * y;
        if with_deriv {
            let d = kernel.deriv(u);
            s.df += d;
            s.dg += d * y;
        }
    }
    let nh = sample.len() as f64 * h;
    s.f /= nh;
    s.g /= nh;
    s.df /= nh * h;
    s.dg /= nh * h;
    s
}

/// Parzen–Rosenblatt density estimate `(n h)^{-1} Σ K((t − X_i)/h)`.
pub fn pr_density(sample: &Sample, t: f64, h: f64, kernel: Kernel) -> f64 {
    fixed_sums(sample, t, h, kernel, false).f
}

/// Nadaraya–Watson estimate of `r(t)`.
pub fn nw_estimate(sample: &Sample, t: f64, h: f64, kernel: Kernel) -> EstimateAtPoint {
    let s = fixed_sums(sample, t, h, kernel, false);
    EstimateAtPoint::ratio(t, s.g, s.f)
}

/// Derivative of the Nadaraya–Watson curve, `(f̂ ĝ' − ĝ f̂') / f̂²`.
pub fn nw_derivative(sample: &Sample, t: f64, h: f64, kernel: Kernel) -> EstimateAtPoint {
    let s = fixed_sums(sample, t, h, kernel, true);
    derivative_from_sums(t, &s)
}

fn derivative_from_sums(t: f64, s: &FixedSums) -> EstimateAtPoint {
    if s.f >= DENOM_FLOOR {
        let value = (s.f * s.dg - s.g * s.df) / (s.f * s.f);
        EstimateAtPoint { t, value, denom: s.f, ok: true }
    } else {
        EstimateAtPoint { t, value: f64::NAN, denom: s.f, ok: false }
    }
}

/// Pilot local scale `q̂(x; h1) = f̂(x; h1)·√|r̂'(x; h1)|`.
pub fn pilot_q_hat(sample: &Sample, x: f64, h1: f64, kernel: Kernel) -> EstimateAtPoint {
    let s = fixed_sums(sample, x, h1, kernel, true);
    let d = derivative_from_sums(x, &s);
    if d.ok {
        EstimateAtPoint { t: x, value: q_of(s.f, d.value), denom: s.f, ok: true }
    } else {
        d
    }
}

/// `α(q̂(X_i; h1))` for every observation, in sample order. Observations whose
/// pilot is degenerate get `q̂ = 0`, i.e. the clipping floor.
pub fn pilot_alphas(sample: &Sample, h1: f64, kernel: Kernel, clip: &ClipSpec) -> Vec<f64> {
    sample
        .x()
        .iter()
        .map(|&x| {
            let q = pilot_q_hat(sample, x, h1, kernel).get().unwrap_or(0.0);
            clip.alpha(q)
        })
        .collect()
}

/// Variable-bandwidth kernel sums with fixed per-observation factors
/// `α_i`. Observation `i` has effective bandwidth `h/α_i`.
///
/// Observations are split by `α`: the common ones are kept sorted by `X` and
/// restricted to a window, the rare small-`α` (wide) ones are always scanned.
#[derive(Debug, Clone)]
pub struct VbFit<'a> {
    sample: &'a Sample,
    alphas: Vec<f64>,
    h: f64,
    kernel: Kernel,
    // (x, y, alpha) with alpha >= split, sorted by x
    narrow: Vec<(f64, f64, f64)>,
    // (x, y, alpha) with alpha < split, in sample order
    wide: Vec<(f64, f64, f64)>,
    split: f64,
}

impl<'a> VbFit<'a> {
    /// Uses the given `α_i` directly.
    pub fn from_alphas(sample: &'a Sample, h: f64, kernel: Kernel, alphas: Vec<f64>) -> Result<Self> {
        check_bandwidth(h)?;
        if alphas.len() != sample.len() {
            return Err(Error::InvalidParameter(format!(
                "{} alpha values for a sample of size {}",
                alphas.len(),
                sample.len()
            )));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha value {a} must be positive")));
        }
        let mut sorted_alpha = alphas.clone();
        sorted_alpha.sort_by(f64::total_cmp);
        // Observations below the 5% quantile of alpha are scanned exhaustively.
        let split = sorted_alpha[sorted_alpha.len() / 20];
        let mut narrow = Vec::with_capacity(alphas.len());
        let mut wide = Vec::new();
        for ((&x, &y), &a) in sample.x().iter().zip(sample.y()).zip(&alphas) {
            if a >= split {
                narrow.push((x, y, a));
            } else {
                wide.push((x, y, a));
            }
        }
        narrow.sort_by(|p, q| p.0.total_cmp(&q.0));
        Ok(VbFit { sample, alphas, h, kernel, narrow, wide, split })
    }

    /// Ideal estimator: `α_i = α(q(X_i))` with the true local scale `q`.
    pub fn ideal<Q: Fn(f64) -> f64>(
        sample: &'a Sample,
        h: f64,
        kernel: Kernel,
        clip: &ClipSpec,
        q_true: Q,
    ) -> Result<Self> {
        let alphas = sample.x().iter().map(|&x| clip.alpha(q_true(x))).collect();
        Self::from_alphas(sample, h, kernel, alphas)
    }

    /// Two-stage estimator: pilot `q̂` with `h1`, final bandwidth `h2`.
    pub fn two_stage(sample: &'a Sample, plan: BandwidthPlan, kernel: Kernel, clip: &ClipSpec) -> Result<Self> {
        plan.validate()?;
        let alphas = pilot_alphas(sample, plan.h1, kernel, clip);
        Self::from_alphas(sample, plan.h2, kernel, alphas)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    /// Averaged sums `(f̄(t), ḡ(t))`.
    fn sums(&self, t: f64) -> (f64, f64) {
        let h = self.h;
        let kern = self.kernel;
        let reach = kern.support() * h / self.split;
        let start = self.narrow.partition_point(|p| p.0 < t - reach);
        let end = self.narrow.partition_point(|p| p.0 <= t + reach).max(start);
        let mut f = 0.0;
        let mut g = 0.0;
        for &(x, y, a) in self.narrow[start..end].iter().chain(self.wide.iter()) {
            let w = kern.eval((t - x) * a / h) * a;
            f += w;
            g += w * y;
        }
        let nh = self.sample.len() as f64 * h;
        (f / nh, g / nh)
    }

    pub fn estimate(&self, t: f64) -> EstimateAtPoint {
        let (f, g) = self.sums(t);
        EstimateAtPoint::ratio(t, g, f)
    }

    /// Variable-bandwidth density `(n h)^{-1} Σ K((t − X_i) α_i / h) α_i`.
    pub fn density(&self, t: f64) -> f64 {
        self.sums(t).0
    }

    /// Normalized weights `w_i` (sample order) with `Σ w_i = 1`.
    pub fn weights(&self, t: f64) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self
            .sample
            .x()
            .iter()
            .zip(&self.alphas)
            .map(|(&x, &a)| self.kernel.eval((t - x) * a / self.h) * a)
            .collect();
        let total: f64 = raw.iter().sum();
        let denom = total / (self.sample.len() as f64 * self.h);
        if !(denom >= DENOM_FLOOR) {
            return Err(Error::DegenerateDenominator { t });
        }
        Ok(raw.into_iter().map(|w| w / total).collect())
    }
}

/// Ideal variable-bandwidth estimate at `t`, using the true local scale.
pub fn ideal_vb_estimate<Q: Fn(f64) -> f64>(
    sample: &Sample,
    t: f64,
    h: f64,
    kernel: Kernel,
    clip: &ClipSpec,
    q_true: Q,
) -> Result<EstimateAtPoint> {
    Ok(VbFit::ideal(sample, h, kernel, clip, q_true)?.estimate(t))
}

/// Two-stage variable-bandwidth estimate at `t`. Builds the pilot for every
/// observation; use [`VbFit::two_stage`] to evaluate many points.
pub fn true_vb_estimate(
    sample: &Sample,
    t: f64,
    plan: BandwidthPlan,
    kernel: Kernel,
    clip: &ClipSpec,
) -> Result<EstimateAtPoint> {
    Ok(VbFit::two_stage(sample, plan, kernel, clip)?.estimate(t))
}

pub fn vb_weights(sample: &Sample, t: f64, h: f64, kernel: Kernel, alpha_vals: &[f64]) -> Result<Vec<f64>> {
    VbFit::from_alphas(sample, h, kernel, alpha_vals.to_vec())?.weights(t)
}

pub fn vb_density(sample: &Sample, t: f64, h: f64, kernel: Kernel, clip: &ClipSpec, q_vals: &[f64]) -> Result<f64> {
    let alphas = q_vals.iter().map(|&q| clip.alpha(q)).collect();
    Ok(VbFit::from_alphas(sample, h, kernel, alphas)?.density(t))
}
