//! Built-in scenario tables and the table runner.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{Overrides, RunConfig, ScenarioSpec, Subcommand};
use super::io::{create_dir, fmt_f64, write_csv, write_json};
use crate::error::{Error, Result};
use crate::simulate::{mc_mse_points, mc_rmse, Distribution, MCReport, Regression, ScenarioConfig};

const T4_POINTS: [f64; 10] =
    [-7.161518, -5.593896, -4.026274, -2.458652, -0.89103, 0.676592, 2.244214, 3.811836, 5.379458, 6.94708];
const NORMAL_POINTS: [f64; 10] = [
    -3.166296,
    -2.476748778,
    -1.787201556,
    -1.097654333,
    -0.408107111,
    0.281440111,
    0.970987333,
    1.660534556,
    2.350081778,
    3.039629,
];

/// What a table reports.
#[derive(Debug, Clone, PartialEq)]
pub enum TableKind {
    /// Average RMSE over the sample points, one line per row.
    Rmse,
    /// Per-point MSE at these points, one column pair per row.
    Points(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTable {
    pub id: String,
    pub kind: TableKind,
    pub rows: Vec<TableRow>,
}

fn row(label: impl Into<String>, config: ScenarioConfig) -> TableRow {
    TableRow { label: label.into(), config }
}

fn uniform(a: f64) -> Distribution {
    Distribution::Uniform { a: -a, b: a }
}

fn table1() -> Vec<TableRow> {
    [0.5, 1.0, 2.0]
        .into_iter()
        .map(|a| {
            let eps = uniform(a);
            row(eps.to_string(), ScenarioConfig { eps_dist: eps, ..Default::default() })
        })
        .collect()
}

fn table2() -> Vec<TableRow> {
    [
        Distribution::StudentT { df: 1 },
        Distribution::StudentT { df: 4 },
        Distribution::StudentT { df: 8 },
        Distribution::Cauchy { loc: 3.0, scale: 4.0 },
        Distribution::Cauchy { loc: 5.0, scale: 7.0 },
        Distribution::Normal { mu: 0.0, sd: 1.0 },
        Distribution::Normal { mu: 5.0, sd: 10.0 },
    ]
    .into_iter()
    .map(|x| row(x.to_string(), ScenarioConfig { x_dist: x, ..Default::default() }))
    .collect()
}

fn table3() -> Vec<TableRow> {
    [500, 1000, 2000, 5000, 8000, 10000]
        .into_iter()
        .map(|n| row(n.to_string(), ScenarioConfig { n, ..Default::default() }))
        .collect()
}

fn mse_rows(x: Distribution, eps: Distribution) -> Vec<TableRow> {
    [(2, "bounded"), (3, "unbounded")]
        .into_iter()
        .map(|(id, label)| {
            let reg = Regression::from_id(id).expect("built-in regression id");
            row(label, ScenarioConfig { reg, x_dist: x, eps_dist: eps, ..Default::default() })
        })
        .collect()
}

/// Ids accepted by [`builtin_table`].
pub fn builtin_ids() -> Vec<String> {
    let mut ids = Vec::new();
    for (t, rows) in [("table1", 3), ("table2", 7), ("table3", 6)] {
        ids.push(t.to_string());
        ids.extend((1..=rows).map(|r| format!("{t}-row{r}")));
    }
    ids.extend((4..=7).map(|t| format!("table{t}")));
    ids
}

/// Looks up a built-in table. `tableK-rowR` is the single row `R` of table `K`.
pub fn builtin_table(id: &str) -> Result<ScenarioTable> {
    let unknown = || Error::Config(format!("unknown scenario '{id}'; known: {}", builtin_ids().join(", ")));
    let (base, row_index) = match id.split_once("-row") {
        Some((b, r)) => (b, Some(r.parse::<usize>().map_err(|_| unknown())?)),
        None => (id, None),
    };
    let t4 = Distribution::StudentT { df: 4 };
    let z = Distribution::Normal { mu: 0.0, sd: 1.0 };
    let (kind, rows) = match base {
        "table1" => (TableKind::Rmse, table1()),
        "table2" => (TableKind::Rmse, table2()),
        "table3" => (TableKind::Rmse, table3()),
        "table4" => (TableKind::Points(T4_POINTS.to_vec()), mse_rows(t4, z)),
        "table5" => (TableKind::Points(T4_POINTS.to_vec()), mse_rows(t4, uniform(1.0))),
        "table6" => (TableKind::Points(NORMAL_POINTS.to_vec()), mse_rows(z, z)),
        "table7" => (TableKind::Points(NORMAL_POINTS.to_vec()), mse_rows(z, uniform(1.0))),
        _ => return Err(unknown()),
    };
    let rows = match row_index {
        None => rows,
        Some(r) if kind == TableKind::Rmse && (1..=rows.len()).contains(&r) => vec![rows[r - 1].clone()],
        Some(_) => return Err(unknown()),
    };
    Ok(ScenarioTable { id: id.to_string(), kind, rows })
}

/// Resolves the scenario of a run: a built-in table or a single custom
/// scenario, with the overrides applied to every row.
pub fn resolve_table(cfg: &RunConfig) -> Result<ScenarioTable> {
    let mut table = match &cfg.scenario {
        None => return Err(Error::Config("no scenario given".into())),
        Some(ScenarioSpec::Id(id)) => builtin_table(id)?,
        Some(ScenarioSpec::Custom(c)) => {
            let kind = match cfg.subcommand {
                Subcommand::MsePoints => TableKind::Points(vec![]),
                _ => TableKind::Rmse,
            };
            ScenarioTable { id: "custom".into(), kind, rows: vec![row("custom", (**c).clone())] }
        }
    };
    let o: &Overrides = &cfg.overrides;
    if let Some(sel) = &o.rows {
        let n = table.rows.len();
        if sel.is_empty() || sel.iter().any(|&r| r == 0 || r > n) {
            return Err(Error::Config(format!("rows {sel:?} out of range 1..={n}")));
        }
        table.rows = sel.iter().map(|&r| table.rows[r - 1].clone()).collect();
    }
    for r in &mut table.rows {
        o.apply(&mut r.config)?;
    }
    if let Some(g) = &o.grid {
        table.kind = TableKind::Points(g.points()?);
    } else if cfg.subcommand == Subcommand::MsePoints && table.kind == TableKind::Rmse {
        table.kind = TableKind::Points(vec![]);
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelledReport {
    pub label: String,
    pub report: MCReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableReport {
    pub table: String,
    pub rows: Vec<LabelledReport>,
}

/// Runs every row of the table.
pub fn run_table(table: &ScenarioTable) -> Result<TableReport> {
    let mut rows = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let report = match &table.kind {
            TableKind::Rmse => mc_rmse(&r.config)?,
            TableKind::Points(p) if p.is_empty() => {
                let pts = crate::simulate::mc::evenly_spaced_points(&r.config, 10)?;
                mc_mse_points(&r.config, &pts)?
            }
            TableKind::Points(p) => mc_mse_points(&r.config, p)?,
        };
        rows.push(LabelledReport { label: r.label.clone(), report });
    }
    Ok(TableReport { table: table.id.clone(), rows })
}

/// CSV rows of a table report: `label,nwe_rmse,vkre_rmse` for RMSE tables,
/// `label,t,nwe_mse,vkre_mse,nwe_count,vkre_count` otherwise.
pub fn table_csv(report: &TableReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let pointwise = report.rows.iter().any(|r| r.report.per_point_mse.is_some());
    if !pointwise {
        let rows = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    fmt_f64(r.report.nwe_rmse.unwrap_or(f64::NAN)),
                    fmt_f64(r.report.vkre_rmse.unwrap_or(f64::NAN)),
                ]
            })
            .collect();
        return (vec!["label", "nwe_rmse", "vkre_rmse"], rows);
    }
    let mut rows = Vec::new();
    for r in &report.rows {
        for p in r.report.per_point_mse.iter().flatten() {
            rows.push(vec![
                r.label.clone(),
                fmt_f64(p.t),
                fmt_f64(p.nwe_mse),
                fmt_f64(p.vkre_mse),
                p.nwe_count.to_string(),
                p.vkre_count.to_string(),
            ]);
        }
    }
    (vec!["label", "t", "nwe_mse", "vkre_mse", "nwe_count", "vkre_count"], rows)
}

/// Plain-text summary: one line per row with NWE and VKRE columns, or for
/// pointwise tables one line per point with an NWE/VKRE pair per row.
pub fn summary(report: &TableReport) -> String {
    let mut out = String::new();
    let pointwise = report.rows.iter().any(|r| r.report.per_point_mse.is_some());
    if !pointwise {
        let w = report.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(8);
        let _ = writeln!(out, "{:<w$}  {:>14}  {:>14}", "scenario", "NWE RMSE", "VKRE RMSE");
        for r in &report.rows {
            let _ = writeln!(
                out,
                "{:<w$}  {:>14.8}  {:>14.8}",
                r.label,
                r.report.nwe_rmse.unwrap_or(f64::NAN),
                r.report.vkre_rmse.unwrap_or(f64::NAN)
            );
        }
        return out;
    }
    let _ = write!(out, "{:>12}", "t");
    for r in &report.rows {
        let _ = write!(out, "  {:>14}  {:>14}", format!("NWE {}", r.label), format!("VKRE {}", r.label));
    }
    out.push('\n');
    let tables: Vec<_> = report.rows.iter().map(|r| r.report.per_point_mse.as_deref().unwrap_or(&[])).collect();
    let npts = tables.iter().map(|t| t.len()).max().unwrap_or(0);
    for k in 0..npts {
        let t = tables.iter().find_map(|tab| tab.get(k)).map_or(f64::NAN, |p| p.t);
        let _ = write!(out, "{t:>12.6}");
        for tab in &tables {
            match tab.get(k) {
                Some(p) => {
                    let _ = write!(out, "  {:>14.9}  {:>14.9}", p.nwe_mse, p.vkre_mse);
                }
                None => {
                    let _ = write!(out, "  {:>14}  {:>14}", "", "");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Runs the configured table, writes `<output>/<table>.json` and
/// `<output>/<table>.csv`, and returns the text summary.
pub fn run_scenario_table(cfg: &RunConfig) -> Result<String> {
    let table = resolve_table(cfg)?;
    let report = run_table(&table)?;
    let dir: &Path = &cfg.output_path;
    create_dir(dir)?;
    write_json(&dir.join(format!("{}.json", table.id)), &report)?;
    let (header, rows) = table_csv(&report);
    write_csv(&dir.join(format!("{}.csv", table.id)), &header, &rows)?;
    Ok(summary(&report))
}
