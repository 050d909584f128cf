//! Asymptotic quantities of the variable-bandwidth estimator under a known
//! model: the `h⁴` bias coefficient `θ(t)`, the limiting variance, the
//! MSE-optimal final bandwidth, and a numerical check of the kernel-integral
//! expansions the bias and variance formulas rest on.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diff::{central_derivative, OFFSETS};
use crate::error::{Error, Result};
use crate::estimators::DENOM_FLOOR;
use crate::kernels::Kernel;
use crate::quadrature::{composite_gauss_legendre, integrate_with_breaks};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// True design density `f`, regression `r` with derivative `r'`, and
/// conditional variance `σ²(t) = E(Y²|X=t) − r(t)²`.
#[derive(Clone)]
pub struct TrueModel {
    f: ScalarFn,
    r: ScalarFn,
    rprime: ScalarFn,
    sigma2: ScalarFn,
}

impl fmt::Debug for TrueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrueModel").finish_non_exhaustive()
    }
}

impl TrueModel {
    pub fn new<F, R, D, S>(f: F, r: R, rprime: D, sigma2: S) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TrueModel { f: Arc::new(f), r: Arc::new(r), rprime: Arc::new(rprime), sigma2: Arc::new(sigma2) }
    }

    /// Model with constant noise variance.
    pub fn homoscedastic<F, R, D>(f: F, r: R, rprime: D, sigma2: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(f, r, rprime, move |_| sigma2)
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn r(&self, x: f64) -> f64 {
        (self.r)(x)
    }

    pub fn rprime(&self, x: f64) -> f64 {
        (self.rprime)(x)
    }

    pub fn sigma2(&self, x: f64) -> f64 {
        (self.sigma2)(x)
    }

    /// Local scale `q(x) = f(x)·√|r'(x)|`.
    pub fn q(&self, x: f64) -> f64 {
        crate::clipping::q_of(self.f(x), self.rprime(x))
    }

    /// Same model with `σ²` multiplied by `a`.
    pub fn scale_noise(&self, a: f64) -> Self {
        let s = self.sigma2.clone();
        TrueModel { sigma2: Arc::new(move |x| a * s(x)), ..self.clone() }
    }
}

/// Finite-difference step used when none is given: `1e-2·max(1, |t|)`.
pub fn default_fd_step(t: f64) -> f64 {
    1e-2 * t.abs().max(1.0)
}

/// Leading bias coefficient `θ(t)`: the ideal estimator satisfies
/// `E r̄(t) − r(t) ≈ θ(t)·h⁴`.
///
/// `θ = μ₄,₁/(24 f(t))·[D⁴(r/(f|r'|)) − r·D⁴(1/(f|r'|))](t)`, with the
/// fourth derivatives taken by a nine-point central stencil of width `fd_step`.
pub fn theta_coefficient(model: &TrueModel, t: f64, fd_step: f64, kernel: Kernel) -> Result<f64> {
    if !(fd_step > 0.0) || !fd_step.is_finite() {
        return Err(Error::InvalidParameter(format!("finite-difference step {fd_step} must be positive")));
    }
    for k in OFFSETS {
        let x = t + k as f64 * fd_step;
        let fx = model.f(x);
        if !(fx >= DENOM_FLOOR) {
            return Err(Error::Model(format!("density {fx:e} below floor at x = {x}")));
        }
        let d = model.rprime(x);
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Model(format!("r'({x}) = {d}; θ needs r' ≠ 0 near t")));
        }
    }
    let inv = |x: f64| 1.0 / (model.f(x) * model.rprime(x).abs());
    let d_ratio = central_derivative(|x| model.r(x) * inv(x), t, 4, fd_step);
    let d_inv = central_derivative(inv, t, 4, fd_step);
    Ok(kernel.moment(4, 1) / (24.0 * model.f(t)) * (d_ratio - model.r(t) * d_inv))
}

/// Variance of the limiting normal law of `√(nh)(r̄(t) − r(t))`:
/// `μ₀,₂·|r'(t)|^{1/4}·σ²(t)/√f(t)`.
pub fn asymptotic_variance(model: &TrueModel, t: f64, kernel: Kernel) -> Result<f64> {
    let f = model.f(t);
    if !(f > 0.0) {
        return Err(Error::Model(format!("density f({t}) = {f} must be positive")));
    }
    Ok(kernel.moment(0, 2) * model.rprime(t).abs().powf(0.25) * model.sigma2(t) / f.sqrt())
}

/// The two integrals that determine the optimal bandwidth over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthIntegrals {
    /// `∫ σ²(t)|r'(t)|^{1/4}/√f(t) dt`
    pub variance: f64,
    /// `∫ θ(t)² dt`
    pub bias: f64,
}

impl BandwidthIntegrals {
    /// `[μ₀,₂·variance / (8·bias)]`, the quantity raised to `1/9`.
    pub fn bracket(&self, kernel: Kernel) -> f64 {
        kernel.moment(0, 2) * self.variance / (8.0 * self.bias)
    }

    /// `n^{-1/9}·bracket^{1/9}`.
    pub fn bandwidth(&self, kernel: Kernel, n: u64) -> f64 {
        (n as f64).powf(-1.0 / 9.0) * self.bracket(kernel).powf(1.0 / 9.0)
    }
}

const REGION_PANELS: usize = 16;
/// Relative accuracy of `θ` from nine-point fourth differences.
const THETA_REL_NOISE: f64 = 1e-6;

fn region_breaks(region: (f64, f64)) -> Vec<f64> {
    let (a, b) = region;
    (0..=REGION_PANELS).map(|i| a + (b - a) * i as f64 / REGION_PANELS as f64).collect()
}

/// Computes both integrals of the optimal-bandwidth formula over `region`.
pub fn bandwidth_integrals(
    model: &TrueModel,
    kernel: Kernel,
    region: (f64, f64),
    quad_tol: f64,
) -> Result<BandwidthIntegrals> {
    let (a, b) = region;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("region [{a}, {b}] must be a finite interval")));
    }
    // θ carries finite-difference rounding noise, so a fixed rule is used
    // and checked against one with half the panels.
    let breaks = region_breaks(region);
    let theta_err = RefCell::new(None);
    let theta_sq = |t: f64| match theta_coefficient(model, t, default_fd_step(t), kernel) {
        Ok(v) => v * v,
        Err(e) => {
            theta_err.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let coarse = composite_gauss_legendre(theta_sq, &breaks, 1);
    let bias = composite_gauss_legendre(theta_sq, &breaks, 2);
    if let Some(e) = theta_err.into_inner() {
        return Err(e);
    }
    let change = (bias - coarse).abs();
    if change > quad_tol.max(THETA_REL_NOISE * bias) {
        return Err(Error::QuadratureNonConvergence { a, b, change });
    }
    let variance = integrate_with_breaks(
        |t| {
            let f = model.f(t);
            if f > 0.0 {
                model.sigma2(t) * model.rprime(t).abs().powf(0.25) / f.sqrt()
            } else {
                f64::NAN
            }
        },
        &breaks,
        quad_tol,
    )?;
    if !variance.is_finite() {
        return Err(Error::Model(format!("density vanishes inside region [{a}, {b}]")));
    }
    Ok(BandwidthIntegrals { variance, bias })
}

/// MSE-optimal final bandwidth
/// `h* = n^{-1/9}·[μ₀,₂∫σ²|r'|^{1/4}/√f / (8∫θ²)]^{1/9}` over `region`.
///
/// `σ²(t)` sits inside the first integral, which is the constant-variance
/// formula when `σ²` is constant.
pub fn optimal_bandwidth(model: &TrueModel, kernel: Kernel, n: u64, region: (f64, f64), quad_tol: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let ints = bandwidth_integrals(model, kernel, region, quad_tol)?;
    if ints.bias < quad_tol {
        return Err(Error::Model(format!(
            "∫θ² = {:e} is below the quadrature tolerance; the optimal bandwidth is unbounded",
            ints.bias
        )));
    }
    Ok(ints.bandwidth(kernel, n))
}

/// Quadrature value of a kernel integral next to its truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub lhs: f64,
    pub series: f64,
    /// `lhs − series`
    pub residual: f64,
    pub h: f64,
}

/// Highest power of `h` kept in the series.
pub const EXPANSION_ORDER: u32 = 4;

/// Controls for [`expansion_check_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    /// Integration range for the left-hand side. Must contain every `s` at
    /// which the integrand is non-negligible.
    pub domain: (f64, f64),
    /// Number of equal initial quadrature panels on `domain`.
    pub panels: usize,
    pub quad_tol: f64,
    pub fd_step: f64,
}

impl ExpansionOptions {
    pub fn around(t: f64) -> Self {
        ExpansionOptions { domain: (t - 12.0, t + 12.0), panels: 2400, quad_tol: 1e-14, fd_step: default_fd_step(t) }
    }
}

/// Compares `(1/h)∫K((t−s)ξ(s)/h)ξ(s)η(s)ds` with
/// `Σ_{k≤4} (−1)^k μ_{k,1}/k!·D^k(η/ξ^k)(t)·h^k`, or, when `squared`,
/// `(1/h)∫K²((t−s)ξ(s)/h)ξ²(s)η(s)ds` with
/// `Σ_{2k≤4} μ_{2k,2}/(2k)!·D^{2k}(η/ξ^{2k−1})(t)·h^{2k}`.
///
/// Uses [`ExpansionOptions::around`]`(t)`.
pub fn expansion_check<E, X>(eta: E, xi: X, t: f64, h: f64, kernel: Kernel, squared: bool) -> Result<ExpansionReport>
where
    E: Fn(f64) -> f64,
    X: Fn(f64) -> f64,
{
    expansion_check_with(eta, xi, t, h, kernel, squared, &ExpansionOptions::around(t))
}

pub fn expansion_check_with<E, X>(
    eta: E,
    xi: X,
    t: f64,
    h: f64,
    kernel: Kernel,
    squared: bool,
    opts: &ExpansionOptions,
) -> Result<ExpansionReport>
where
    E: Fn(f64) -> f64,
    X: Fn(f64) -> f64,
{
    crate::estimators::check_bandwidth(h)?;
    let (lo, hi) = opts.domain;
    if !(lo < t && t < hi) || opts.panels == 0 {
        return Err(Error::InvalidParameter(format!("domain [{lo}, {hi}] must contain t = {t}")));
    }
    let xt = xi(t);
    if !(xt > 0.0) {
        return Err(Error::Model(format!("ξ({t}) = {xt} must be positive")));
    }

    let mut breaks: Vec<f64> = (0..=opts.panels).map(|i| lo + (hi - lo) * i as f64 / opts.panels as f64).collect();
    // Kernel window around t, to first order in ξ.
    let half = kernel.support() * h / xt;
    breaks.extend([t - half, t, t + half]);
    breaks.retain(|s| (lo..=hi).contains(s));

    let lhs = integrate_with_breaks(
        |s| {
            let x = xi(s);
            let u = (t - s) * x / h;
            if squared {
                let k = kernel.eval(u);
                k * k * x * x * eta(s)
            } else {
                kernel.eval(u) * x * eta(s)
            }
        },
        &breaks,
        opts.quad_tol,
    )? / h;

    let mut series = 0.0;
    for k in (0..=EXPANSION_ORDER).step_by(2) {
        let (coef, power) = if squared { (kernel.moment(k, 2), k as i32 - 1) } else { (kernel.moment(k, 1), k as i32) };
        let g = |s: f64| eta(s) / xi(s).powi(power);
        let d = central_derivative(g, t, k as usize, opts.fd_step);
        series += coef / factorial(k) * d * h.powi(k as i32);
    }
    Ok(ExpansionReport { lhs, series, residual: lhs - series, h })
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
