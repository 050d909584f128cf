//! Compactly supported smoothing kernels, their derivatives and moments.
//!
//! All kernels are symmetric, nonnegative and integrate to one over their
//! support `[-T, T]`. Moments `μ_{k,p} = ∫ u^k K(u)^p du` are computed by
//! adaptive quadrature once per `(kernel, k, p)` and cached process-wide.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::quadrature::integrate_with_breaks;

const TRICUBE_NORM: f64 = 70.0 / 81.0;
const GAUSS_CUTOFF: f64 = 4.0;
/// `2Φ(4) − 1`, the standard normal mass on `[-4, 4]`.
const GAUSS_TRUNCATED_MASS: f64 = 0.999_936_657_516_333_8;
const MOMENT_TOL: f64 = 1e-12;

type MomentCache = Mutex<HashMap<(KernelKind, u32, u32), f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Tricube,
    Epanechnikov,
    GaussianTruncated,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Tricube => "tricube",
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::GaussianTruncated => "gaussian_truncated",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tricube" => Ok(KernelKind::Tricube),
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            "gaussian_truncated" => Ok(KernelKind::GaussianTruncated),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel '{other}' (expected tricube, epanechnikov or gaussian_truncated)"
            ))),
        }
    }
}

/// A symmetric kernel with support `[-T, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Kernel {
    kind: KernelKind,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::TRICUBE
    }
}

impl From<KernelKind> for Kernel {
    fn from(kind: KernelKind) -> Self {
        Kernel { kind }
    }
}

impl Kernel {
    pub const TRICUBE: Kernel = Kernel { kind: KernelKind::Tricube };
    pub const EPANECHNIKOV: Kernel = Kernel { kind: KernelKind::Epanechnikov };
    /// Standard normal density restricted to `|u| ≤ 4` and rescaled to unit mass.
    pub const GAUSSIAN_TRUNCATED: Kernel = Kernel { kind: KernelKind::GaussianTruncated };

    pub fn new(kind: KernelKind) -> Self {
        Kernel { kind }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Support half-width `T`.
    pub fn support(&self) -> f64 {
        match self.kind {
            KernelKind::Tricube | KernelKind::Epanechnikov => 1.0,
            KernelKind::GaussianTruncated => GAUSS_CUTOFF,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        match self.kind {
            KernelKind::Tricube => {
                if a > 1.0 {
                    0.0
                } else {
                    let v = 1.0 - a * a * a;
                    TRICUBE_NORM * v * v * v
                }
            }
            KernelKind::Epanechnikov => {
                if a > 1.0 {
                    0.0
                } else {
                    0.75 * (1.0 - u * u)
                }
            }
            KernelKind::GaussianTruncated => {
                if a > GAUSS_CUTOFF {
                    0.0
                } else {
                    (-0.5 * u * u).exp() / ((2.0 * std::f64::consts::PI).sqrt() * GAUSS_TRUNCATED_MASS)
                }
            }
        }
    }

    /// `K'(u)`; zero outside the support. At the support edge of kernels that
    /// jump there (Epanechnikov, truncated Gaussian) the one-sided interior
    /// derivative is returned.
    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        let a = u.abs();
        match self.kind {
            KernelKind::Tricube => {
                if a > 1.0 {
                    0.0
                } else {
                    let v = 1.0 - a * a * a;
                    // d/du (1 - |u|^3)^3 = 3 (1 - |u|^3)^2 * (-3 u |u|)
                    TRICUBE_NORM * 3.0 * v * v * (-3.0 * u * a)
                }
            }
            KernelKind::Epanechnikov => {
                if a > 1.0 {
                    0.0
                } else {
                    -1.5 * u
                }
            }
            KernelKind::GaussianTruncated => -u * self.eval(u),
        }
    }

    /// `μ_{k,p} = ∫ u^k K(u)^p du`.
    ///
    /// Panics if `p == 0`.
    pub fn moment(&self, k: u32, p: u32) -> f64 {
        assert!(p >= 1, "kernel moment power must be at least 1");
        if k % 2 == 1 {
            // Odd moments of a symmetric kernel vanish; the quadrature value
            // would only add rounding noise.
            return 0.0;
        }
        static CACHE: OnceLock<MomentCache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().unwrap().get(&(self.kind, k, p)) {
            return *v;
        }
        let value = self.moment_uncached(k, p);
        cache.lock().unwrap().insert((self.kind, k, p), value);
        value
    }

    fn moment_uncached(&self, k: u32, p: u32) -> f64 {
        let t = self.support();
        let kern = *self;
        integrate_with_breaks(
            |u| u.powi(k as i32) * kern.eval(u).powi(p as i32),
            &[-t, -0.5 * t, 0.0, 0.5 * t, t],
            MOMENT_TOL,
        )
        .expect("kernel moment integrand is bounded and piecewise smooth")
    }
}

/// Free-function form of [`Kernel::eval`].
pub fn eval_kernel(kernel: Kernel, u: f64) -> f64 {
    kernel.eval(u)
}

/// Free-function form of [`Kernel::deriv`].
pub fn eval_kernel_derivative(kernel: Kernel, u: f64) -> f64 {
    kernel.deriv(u)
}

/// Free-function form of [`Kernel::moment`].
pub fn kernel_moment(kernel: Kernel, k: u32, p: u32) -> f64 {
    kernel.moment(k, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    const ALL: [Kernel; 3] = [Kernel::TRICUBE, Kernel::EPANECHNIKOV, Kernel::GAUSSIAN_TRUNCATED];

    #[test]
    fn tricube_values() {
        assert!((Kernel::TRICUBE.eval(0.0) - 70.0 / 81.0).abs() < 1e-15);
        assert!((Kernel::TRICUBE.eval(0.0) - 0.864198).abs() < 1e-6);
        assert_eq!(Kernel::TRICUBE.eval(1.5), 0.0);
        let expected = 70.0 / 81.0 * 0.669921875;
        assert!((Kernel::TRICUBE.eval(-0.5) - expected).abs() < 1e-15);
    }

    #[test]
    fn tricube_derivative_values() {
        assert_eq!(Kernel::TRICUBE.deriv(0.0), 0.0);
        assert_eq!(Kernel::TRICUBE.deriv(2.0), 0.0);
        let u: f64 = 0.5;
        let closed = 70.0 / 81.0 * 3.0 * (1.0 - u.powi(3)).powi(2) * (-3.0 * u * u);
        assert!((Kernel::TRICUBE.deriv(u) - closed).abs() < 1e-15);
        let fd = (Kernel::TRICUBE.eval(u + 1e-6) - Kernel::TRICUBE.eval(u - 1e-6)) / 2e-6;
        assert!((Kernel::TRICUBE.deriv(u) - fd).abs() < 1e-8);
    }

    #[test]
    fn kernels_integrate_to_one() {
        for k in ALL {
            let t = k.support();
            let m = integrate_with_breaks(|u| k.eval(u), &[-t, 0.0, t], 1e-13).unwrap();
            assert!((m - 1.0).abs() < 1e-10, "{:?}: {m}", k.kind());
            assert!((k.moment(0, 1) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn truncated_gaussian_mass_constant() {
        let m =
            integrate(|u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(), -4.0, 4.0, 1e-15).unwrap();
        assert!((m - GAUSS_TRUNCATED_MASS).abs() < 1e-15);
        let erf = statrs::function::erf::erf(4.0 / 2f64.sqrt());
        assert!((erf - GAUSS_TRUNCATED_MASS).abs() < 1e-14, "{erf:e}");
    }

    #[test]
    fn tricube_moments() {
        let k = Kernel::TRICUBE;
        assert!((k.moment(2, 1) - 35.0 / 243.0).abs() < 1e-10);
        assert!((k.moment(2, 1) - 0.1440329).abs() < 1e-7);
        assert!((k.moment(4, 1) - 1.0 / 22.0).abs() < 1e-12);
        // Frozen from a 30-digit quadrature: (70/81)^2 * 2 * ∫_0^1 (1-u^3)^6 du = 175/247.
        assert!((k.moment(0, 2) - 175.0 / 247.0).abs() < 1e-12);
        for j in 0..3 {
            assert!(k.moment(2 * j + 1, 1).abs() < 1e-12);
        }
    }

    #[test]
    fn epanechnikov_moments() {
        let k = Kernel::EPANECHNIKOV;
        assert!((k.moment(2, 1) - 0.2).abs() < 1e-12);
        assert!((k.moment(0, 2) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn odd_quadrature_moments_vanish() {
        for k in ALL {
            for j in 0..3 {
                assert!(k.moment_uncached(2 * j + 1, 1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences_on_interior_points() {
        for k in ALL {
            let t = k.support();
            for i in 0..100 {
                // interior points, away from the support edge where two
                // kernels are discontinuous
                let u = -0.95 * t + 1.9 * t * (i as f64 + 0.5) / 100.0;
                let fd = (k.eval(u + 1e-6) - k.eval(u - 1e-6)) / 2e-6;
                assert!((k.deriv(u) - fd).abs() < 1e-7, "{:?} at {u}: {} vs {fd}", k.kind(), k.deriv(u));
            }
        }
    }

    #[test]
    fn kernel_ids_parse() {
        for k in ALL {
            assert_eq!(k.kind().as_str().parse::<KernelKind>().unwrap(), k.kind());
        }
        assert!("gaussian".parse::<KernelKind>().is_err());
    }

    proptest! {
        #[test]
        fn symmetry_and_nonnegativity(frac in 0.0f64..1.0, which in 0usize..3) {
            let k = ALL[which];
            let t = k.support();
            let u = -t - 1.0 + frac * (2.0 * t + 2.0);
            prop_assert!(k.eval(u) >= 0.0);
            prop_assert_eq!(k.eval(u), k.eval(-u));
            prop_assert_eq!(k.deriv(u), -k.deriv(-u));
            if u.abs() > t {
                prop_assert_eq!(k.eval(u), 0.0);
                prop_assert_eq!(k.deriv(u), 0.0);
            }
        }
    }
}
