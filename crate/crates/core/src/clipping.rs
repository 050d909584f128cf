//! Clipping polynomial `p`, the square-root-law map `α(w) = c·√p(w/c²)`,
//! the local scale `q = f·√|r'|`, and membership in the estimation region
//! `{t : q(t) ≥ 2·t0·c²}`.

use std::fmt;
use std::sync::Arc;

use num_traits::{FromPrimitive, Num};

use crate::error::{Error, Result};

/// Default clipping constant used by the reference simulation design.
pub const DEFAULT_C: f64 = 1e-6;
/// Junction point of the built-in clipping polynomial.
pub const DEFAULT_T0: f64 = 2.0;

type ClipFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Polynomial {
    /// Five-times differentiable polynomial with junction at 2.
    Standard,
    Custom(ClipFn),
}

/// Clipping function `p` together with the constants `c` and `t0`.
#[derive(Clone)]
pub struct ClipSpec {
    c: f64,
    t0: f64,
    poly: Polynomial,
    smoothness: u32,
}

impl fmt::Debug for ClipSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClipSpec")
            .field("c", &self.c)
            .field("t0", &self.t0)
            .field("custom", &matches!(self.poly, Polynomial::Custom(_)))
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl Default for ClipSpec {
    fn default() -> Self {
        ClipSpec { c: DEFAULT_C, t0: DEFAULT_T0, poly: Polynomial::Standard, smoothness: 5 }
    }
}

/// The built-in clipping polynomial: 1 on `(-∞, 0]`, identity on `[2, ∞)`,
/// and a degree-10 bridge in between.
pub fn standard_p(u: f64) -> f64 {
    standard_p_generic(u)
}

/// [`standard_p`] over any ordered numeric type; all constants are dyadic so
/// the conversion from `f64` is exact for rational types.
pub fn standard_p_generic<T>(u: T) -> T
where
    T: Num + PartialOrd + Clone + FromPrimitive,
{
    if u <= T::zero() {
        T::one()
    } else if u >= T::from_f64(2.0).expect("dyadic constant") {
        u
    } else {
        standard_bridge(u)
    }
}

/// The degree-10 polynomial that [`standard_p`] uses on `(0, 2)`, evaluated
/// without branching: `1 + u⁶/64·(1 − 2d + 9/4·d² − 7/4·d³ + 7/8·d⁴)`,
/// `d = u − 2`.
pub fn standard_bridge<T>(u: T) -> T
where
    T: Num + Clone + FromPrimitive,
{
    let c = |v: f64| T::from_f64(v).expect("dyadic constant");
    let d = u.clone() - c(2.0);
    let bracket =
        T::one() + d.clone() * (c(-2.0) + d.clone() * (c(9.0 / 4.0) + d.clone() * (c(-7.0 / 4.0) + d * c(7.0 / 8.0))));
    let u3 = u.clone() * u.clone() * u;
    T::one() + u3.clone() * u3 / c(64.0) * bracket
}

impl ClipSpec {
    /// Built-in polynomial (junction `t0 = 2`) with clipping constant `c`.
    pub fn new(c: f64) -> Result<Self> {
        Self::check_c(c)?;
        Ok(ClipSpec { c, ..Default::default() })
    }

    /// Built-in polynomial with constants `c` and `t0 ≥ 2`. The bridge stays
    /// on `[0, 2]` and `p` is the identity beyond it, so `p(u) = u` for
    /// `u ≥ t0` holds for any such `t0`; only the region threshold moves.
    pub fn with_t0(c: f64, t0: f64) -> Result<Self> {
        Self::check_c(c)?;
        if !(t0 >= DEFAULT_T0) || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t0 = {t0} not supported by the built-in polynomial (needs t0 >= 2)"
            )));
        }
        Ok(ClipSpec { c, t0, poly: Polynomial::Standard, smoothness: 5 })
    }

    /// User-supplied clipping function. `p` must satisfy `p(u) ≥ 1` everywhere
    /// and `p(u) = u` for `u ≥ t0`; both are spot-checked on a grid.
    pub fn with_polynomial<F>(c: f64, t0: f64, smoothness: u32, p: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::check_c(c)?;
        if !(t0 >= 1.0) || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!("t0 = {t0} must be finite and >= 1")));
        }
        if smoothness < 4 {
            return Err(Error::InvalidParameter(format!(
                "clipping function must have at least 4 derivatives, got {smoothness}"
            )));
        }
        for i in 0..=400 {
            let u = -2.0 * t0 + 5.0 * t0 * i as f64 / 400.0;
            let v = p(u);
            if !(v >= 1.0) {
                return Err(Error::InvalidParameter(format!("p({u}) = {v} < 1")));
            }
            if u >= t0 && (v - u).abs() > 1e-12 * u.max(1.0) {
                return Err(Error::InvalidParameter(format!("p({u}) = {v} differs from identity beyond t0")));
            }
        }
        Ok(ClipSpec { c, t0, poly: Polynomial::Custom(Arc::new(p)), smoothness })
    }

    fn check_c(c: f64) -> Result<()> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("clipping constant c = {c} must be positive")));
        }
        Ok(())
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of continuous derivatives guaranteed for `p`.
    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.poly, Polynomial::Standard)
    }

    #[inline]
    pub fn p(&self, u: f64) -> f64 {
        match &self.poly {
            Polynomial::Standard => standard_p(u),
            Polynomial::Custom(p) => {
                if u >= self.t0 {
                    u
                } else {
                    p(u)
                }
            }
        }
    }

    /// `α(w) = c·√p(w/c²)`; exactly `√w` once `w ≥ t0·c²`.
    #[inline]
    pub fn alpha(&self, w: f64) -> f64 {
        let knee = self.t0 * self.c * self.c;
        if w >= knee {
            w.sqrt()
        } else {
            self.c * self.p(w / (self.c * self.c)).sqrt()
        }
    }

    /// Whether a point with local scale `q_val` lies in the estimation region.
    #[inline]
    pub fn in_region(&self, q_val: f64) -> bool {
        q_val >= 2.0 * self.t0 * self.c * self.c
    }
}

pub fn clip_p(spec: &ClipSpec, u: f64) -> f64 {
    spec.p(u)
}

pub fn clip_alpha(spec: &ClipSpec, w: f64) -> f64 {
    spec.alpha(w)
}

/// `q = f·√|r'|`.
#[inline]
pub fn q_of(f_val: f64, rprime_val: f64) -> f64 {
    f_val * rprime_val.abs().sqrt()
}

pub fn in_region_drf(spec: &ClipSpec, q_val: f64) -> bool {
    spec.in_region(q_val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::central_derivative;
    use proptest::prelude::*;

    fn unit() -> ClipSpec {
        ClipSpec::new(1.0).unwrap()
    }

    #[test]
    fn p_branches() {
        let s = ClipSpec::default();
        assert_eq!(s.p(0.0), 1.0);
        assert_eq!(s.p(-3.0), 1.0);
        assert_eq!(s.p(2.0), 2.0);
        assert_eq!(s.p(5.0), 5.0);
        assert!((s.p(1.0) - 1.123046875).abs() < 1e-15);
    }

    #[test]
    fn p_bridge_meets_identity_at_two() {
        // Left limit of the polynomial branch at u = 2 is 1 + 64/64 = 2.
        let d = 2.0 - 1e-12;
        assert!((standard_p(d) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn alpha_values() {
        let s = unit();
        assert_eq!(s.alpha(4.0), 2.0);
        assert_eq!(s.alpha(0.0), 1.0);
        assert!((s.alpha(1.0) - 1.123046875f64.sqrt()).abs() < 1e-15);
        assert!((s.alpha(1.0) - 1.0597).abs() < 1e-4);
    }

    #[test]
    fn alpha_with_tiny_c_never_overflows() {
        let s = ClipSpec::default();
        assert_eq!(s.alpha(0.25), 0.5);
        assert_eq!(s.alpha(1e300), 1e150);
        assert_eq!(s.alpha(0.0), 1e-6);
        assert!(s.alpha(1e-13).is_finite());
    }

    #[test]
    fn q_values() {
        assert_eq!(q_of(1.0, 4.0), 2.0);
        assert_eq!(q_of(0.5, 0.0), 0.0);
        assert!((q_of(0.2420, -0.5) - 0.17112).abs() < 1e-5);
    }

    #[test]
    fn region_membership() {
        assert!(ClipSpec::default().in_region(0.17));
        assert!(!unit().in_region(3.9));
        assert!(unit().in_region(4.0));
    }

    #[test]
    fn junction_smoothness_orders_one_to_three_in_f64() {
        let s = ClipSpec::default();
        let h = 1e-3;
        for junction in [0.0, 2.0] {
            for order in 1..=3 {
                // nine-point stencils touching the junction from each side
                let left = central_derivative(|u| s.p(u), junction - 4.0 * h, order, h);
                let right = central_derivative(|u| s.p(u), junction + 4.0 * h, order, h);
                assert!((left - right).abs() < 1e-4, "order {order} at {junction}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn custom_polynomial_is_validated() {
        assert!(ClipSpec::with_polynomial(1.0, 2.0, 5, standard_p).is_ok());
        assert!(ClipSpec::with_polynomial(1.0, 2.0, 5, |u| u).is_err());
        assert!(ClipSpec::with_polynomial(1.0, 2.0, 3, standard_p).is_err());
        assert!(ClipSpec::new(0.0).is_err());
        assert!(ClipSpec::with_t0(1.0, 1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn p_at_least_one(u in -5.0f64..5.0) {
            prop_assert!(ClipSpec::default().p(u) >= 1.0);
        }

        #[test]
        fn alpha_floor_and_square_root_branch(w in 0.0f64..50.0, cexp in -6i32..1) {
            let c = 10f64.powi(cexp);
            let s = ClipSpec::new(c).unwrap();
            let a = s.alpha(w);
            prop_assert!(a >= c);
            if w >= s.t0() * c * c {
                prop_assert!((a - w.sqrt()).abs() <= 1e-12);
            }
        }
    }
}
