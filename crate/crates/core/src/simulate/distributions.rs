//! Design and noise distributions, with seeded per-replication streams.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Random stream of replication `rep` under `seed`. Streams for different
/// `rep` are independent, so replications can run in any order.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sd: f64 },
    StudentT { df: u32 },
    Cauchy { loc: f64, scale: f64 },
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::Uniform { a, b } => write!(f, "U[{a},{b}]"),
            Distribution::Normal { mu, sd } => write!(f, "N({mu},{sd})"),
            Distribution::StudentT { df } => write!(f, "T(df={df})"),
            Distribution::Cauchy { loc, scale } => write!(f, "Cauchy({loc},{scale})"),
        }
    }
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = Distribution::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn normal(mu: f64, sd: f64) -> Result<Self> {
        let d = Distribution::Normal { mu, sd };
        d.validate()?;
        Ok(d)
    }

    pub fn student_t(df: u32) -> Result<Self> {
        let d = Distribution::StudentT { df };
        d.validate()?;
        Ok(d)
    }

    pub fn cauchy(loc: f64, scale: f64) -> Result<Self> {
        let d = Distribution::Cauchy { loc, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Uniform { a, b } => a.is_finite() && b.is_finite() && b > a,
            Distribution::Normal { mu, sd } => mu.is_finite() && sd.is_finite() && sd > 0.0,
            Distribution::StudentT { df } => df >= 1,
            Distribution::Cauchy { loc, scale } => loc.is_finite() && scale.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid distribution {self:?}")))
        }
    }

    /// One variate. Student-t is `Z/√(V/df)` with `V` a sum of `df` squared
    /// normals; Cauchy is `loc + scale·tan(π(U − ½))`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Distribution::Normal { mu, sd } => mu + sd * rng.sample::<f64, _>(StandardNormal),
            Distribution::StudentT { df } => {
                let z: f64 = rng.sample(StandardNormal);
                let v: f64 = (0..df)
                    .map(|_| {
                        let g: f64 = rng.sample(StandardNormal);
                        g * g
                    })
                    .sum();
                z / (v / df as f64).sqrt()
            }
            Distribution::Cauchy { loc, scale } => {
                let u: f64 = rng.sample(Open01);
                loc + scale * (PI * (u - 0.5)).tan()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Distribution::Normal { mu, sd } => Normal::new(mu, sd).map(|d| d.pdf(x)).unwrap_or(f64::NAN),
            Distribution::StudentT { df } => student(df).pdf(x),
            Distribution::Cauchy { loc, scale } => {
                let z = (x - loc) / scale;
                1.0 / (PI * scale * (1.0 + z * z))
            }
        }
    }

    /// Inverse distribution function at `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => a + (b - a) * p,
            Distribution::Normal { mu, sd } => Normal::new(mu, sd).map(|d| d.inverse_cdf(p)).unwrap_or(f64::NAN),
            Distribution::StudentT { df } => student(df).inverse_cdf(p),
            Distribution::Cauchy { loc, scale } => loc + scale * (PI * (p - 0.5)).tan(),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            Distribution::Uniform { a, b } => Some(0.5 * (a + b)),
            Distribution::Normal { mu, .. } => Some(mu),
            Distribution::StudentT { df } => (df > 1).then_some(0.0),
            Distribution::Cauchy { .. } => None,
        }
    }

    /// Variance, when finite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Distribution::Uniform { a, b } => Some((b - a) * (b - a) / 12.0),
            Distribution::Normal { sd, .. } => Some(sd * sd),
            Distribution::StudentT { df } => (df > 2).then(|| df as f64 / (df as f64 - 2.0)),
            Distribution::Cauchy { .. } => None,
        }
    }
}

fn student(df: u32) -> StudentsT {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1")
}
