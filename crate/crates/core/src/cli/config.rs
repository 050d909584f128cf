//! Run configuration: which subcommand, where to read and write, and the
//! parameter overrides shared by every subcommand.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::simulate::{EstimatorKind, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Fit,
    Simulate,
    MsePoints,
    BiasCheck,
    CltCheck,
    ExpansionCheck,
    TheoryReport,
}

impl Subcommand {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subcommand::Fit => "fit",
            Subcommand::Simulate => "simulate",
            Subcommand::MsePoints => "mse-points",
            Subcommand::BiasCheck => "bias-check",
            Subcommand::CltCheck => "clt-check",
            Subcommand::ExpansionCheck => "expansion-check",
            Subcommand::TheoryReport => "theory-report",
        }
    }
}

/// Evaluation points: an explicit list, or `lo:hi:count` for `count`
/// equally spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Spec(String),
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            GridSpec::Points(p) => p.clone(),
            GridSpec::Spec(s) => parse_grid(s)?,
        };
        if pts.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if let Some(v) = pts.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("grid value {v} is not finite")));
        }
        Ok(pts)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let g = GridSpec::Spec(s.to_string());
        g.points()?;
        Ok(g)
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse '{v}' in grid '{s}'")));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize =
                count.trim().parse().map_err(|_| Error::Config(format!("bad point count in grid '{s}'")))?;
            Ok(linspace(lo, hi, count))
        }
        [_] => s.split(',').filter(|v| !v.trim().is_empty()).map(num).collect(),
        _ => Err(Error::Config(format!("grid '{s}' is neither a list nor lo:hi:count"))),
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Parameter overrides; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub clip_c: Option<f64>,
    pub clip_t0: Option<f64>,
    pub kernel: Option<KernelKind>,
    pub grid: Option<GridSpec>,
    /// Rows of a built-in table to run (1-based).
    pub rows: Option<Vec<usize>>,
    /// Evaluation point of the single-point checks.
    pub t: Option<f64>,
    pub estimator: Option<EstimatorKind>,
    /// Regression function id (1, 2 or 3).
    pub reg: Option<u8>,
    pub design: Option<DesignKind>,
}

/// Design of the bias check: i.i.d. draws or fixed quantile points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Random,
    Quantile,
}

impl Overrides {
    /// Applies the overrides that belong to a scenario.
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if self.h1.is_some() || self.h2.is_some() {
            let mut plan = cfg.bandwidths();
            if let Some(h) = self.h1 {
                plan.h1 = h;
            }
            if let Some(h) = self.h2 {
                plan.h2 = h;
            }
            plan.validate()?;
            cfg.plan = Some(plan);
        }
        if let Some(v) = self.clip_c {
            cfg.clip_c = v;
        }
        if let Some(v) = self.clip_t0 {
            cfg.clip_t0 = v;
        }
        if let Some(v) = self.kernel {
            cfg.kernel = v;
        }
        if let Some(id) = self.reg {
            cfg.reg = crate::simulate::Regression::from_id(id)?;
        }
        cfg.validate()
    }
}

/// A built-in scenario id or a complete scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Id(String),
    Custom(Box<ScenarioConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    #[serde(default)]
    pub input_path: Option<PathBuf>,
    pub output_path: PathBuf,
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    #[serde(default)]
    pub overrides: Overrides,
}

impl RunConfig {
    pub fn new(subcommand: Subcommand, output_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            subcommand,
            input_path: None,
            output_path: output_path.into(),
            scenario: None,
            overrides: Overrides::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(GridSpec::Spec("0".into()).points().unwrap(), vec![0.0]);
        assert_eq!(GridSpec::Spec("1, 2.5,-3".into()).points().unwrap(), vec![1.0, 2.5, -3.0]);
        assert_eq!(GridSpec::Spec("0:1:5".into()).points().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(GridSpec::Spec("a,b".into()).points().is_err());
        assert!(GridSpec::Spec("0:1".into()).points().is_err());
        assert!(GridSpec::Spec("0:1:2:3".into()).points().is_err());
        assert!(GridSpec::Points(vec![]).points().is_err());
        assert!("inf".parse::<GridSpec>().is_err());
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let ok = r#"{"subcommand":"simulate","output_path":"out","scenario":"table1-row1",
                     "overrides":{"seed":3,"n":100,"clip-c":0.001,"grid":[0,1]}}"#;
        let cfg = RunConfig::from_json(ok).unwrap();
        assert_eq!(cfg.subcommand, Subcommand::Simulate);
        assert_eq!(cfg.overrides.clip_c, Some(0.001));
        assert_eq!(cfg.scenario, Some(ScenarioSpec::Id("table1-row1".into())));
        assert!(RunConfig::from_json(r#"{"subcommand":"fit","output_path":"o","colour":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"subcommand":"fit","output_path":"o","overrides":{"sed":1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"subcommand":"plot","output_path":"o"}"#).is_err());
    }

    #[test]
    fn custom_scenario_in_config() {
        let text = r#"{"subcommand":"simulate","output_path":"o","scenario":{"reg":1,"n":50,"reps":2}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        match cfg.scenario {
            Some(ScenarioSpec::Custom(s)) => assert_eq!((s.n, s.reps), (50, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ScenarioConfig::default();
        let o = Overrides { n: Some(300), h2: Some(0.2), kernel: Some(KernelKind::Epanechnikov), ..Default::default() };
        o.apply(&mut cfg).unwrap();
        assert_eq!(cfg.n, 300);
        assert_eq!(cfg.bandwidths().h2, 0.2);
        assert_eq!(cfg.bandwidths().h1, crate::estimators::BandwidthPlan::default_for(300).h1);
        assert!(Overrides { h1: Some(-1.0), ..Default::default() }.apply(&mut cfg).is_err());
        assert!(Overrides { n: Some(3), ..Default::default() }.apply(&mut cfg).is_err());
    }
}
