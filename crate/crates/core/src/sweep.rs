//! Cartesian sweeps over a [`RunConfig`] and their CSV, markdown and plot
//! data renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CodePair, RunConfig};
use crate::error::Result;
use crate::hybrid::HybridPolicy;
use crate::pipeline::{compile, simulate, Architecture, Machine, Workload};
use crate::sim::{mean_std, SimReport};

/// One point of the sweep's Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub benchmark: String,
    /// `None` keeps the benchmark's own precision.
    pub precision: Option<f64>,
    pub codes: CodePair,
    pub architecture: Architecture,
    pub factories: u32,
    /// Set for hybrid cells only.
    pub hybrid_k: Option<u32>,
    pub hybrid_policy: Option<HybridPolicy>,
}

impl Cell {
    pub fn label(&self) -> String {
        let mut s = format!("{} {} F={}", self.benchmark, self.architecture, self.factories);
        if let Some(eps) = self.precision {
            let _ = write!(s, " eps={eps:e}");
        }
        let _ = write!(s, " codes={}", self.codes.label());
        if let (Some(k), Some(p)) = (self.hybrid_k, self.hybrid_policy) {
            let _ = write!(s, " K={k} {p:?}");
        }
        s
    }
}

/// Seed-replicated results of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub cell: Cell,
    pub qubits: u64,
    pub days: f64,
    pub days_std: f64,
    pub success_pct: f64,
    pub success_std: f64,
    pub spacetime: f64,
    pub stalls: f64,
    pub overhead_frac: f64,
    pub utilization: f64,
    pub timesteps: f64,
    pub t_states: f64,
    pub seed_count: u32,
}

impl CellResult {
    pub fn from_reports(cell: Cell, reports: &[SimReport]) -> Self {
        let col = |f: &dyn Fn(&SimReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
        let (days, days_std) = mean_std(&col(&|r| r.days));
        let (success, success_std) = mean_std(&col(&|r| 100.0 * r.success_probability));
        let mean = |f: &dyn Fn(&SimReport) -> f64| mean_std(&col(f)).0;
        CellResult {
            cell,
            qubits: reports.first().map_or(0, |r| r.physical_qubits),
            days,
            days_std,
            success_pct: success,
            success_std,
            spacetime: mean(&|r| r.spacetime),
            stalls: mean(&|r| r.stall_timesteps),
            overhead_frac: mean(&|r| r.gate_shuttle_overhead_fraction),
            utilization: mean(&|r| r.module_utilization),
            timesteps: mean(&|r| r.timesteps),
            t_states: mean(&|r| r.t_states),
            seed_count: reports.len() as u32,
        }
    }
}

/// Expands the axes in a fixed order: benchmark, precision, code pair,
/// architecture, hybrid K, hybrid policy, factories. Hybrid axes only
/// multiply hybrid cells.
pub fn plan(cfg: &RunConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let s = &cfg.sweep;
    let precisions: Vec<Option<f64>> = if s.precisions.is_empty() {
        vec![None]
    } else {
        s.precisions.iter().copied().map(Some).collect()
    };
    let ks = if s.hybrid_k.is_empty() {
        vec![cfg.hybrid.k]
    } else {
        s.hybrid_k.clone()
    };
    let policies = if s.hybrid_policies.is_empty() {
        vec![cfg.hybrid.policy]
    } else {
        s.hybrid_policies.clone()
    };
    let mut cells = Vec::new();
    for b in &s.benchmarks {
        for &precision in &precisions {
            for codes in cfg.code_pairs()? {
                for &arch in &s.architectures {
                    let hybrid: Vec<(Option<u32>, Option<HybridPolicy>)> = if arch == Architecture::Hybrid {
                        ks.iter()
                            .flat_map(|&k| policies.iter().map(move |&p| (Some(k), Some(p))))
                            .collect()
                    } else {
                        vec![(None, None)]
                    };
                    for (hybrid_k, hybrid_policy) in hybrid {
                        for &factories in &s.factories {
                            cells.push(Cell {
                                benchmark: b.clone(),
                                precision,
                                codes: codes.clone(),
                                architecture: arch,
                                factories,
                                hybrid_k,
                                hybrid_policy,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Builds the workload for a benchmark at an optional precision override.
pub fn workload(cfg: &RunConfig, benchmark: &str, precision: Option<f64>) -> Result<Workload> {
    let spec = cfg.benchmark_spec(benchmark)?;
    let g = spec.generate_at(precision.unwrap_or(spec.precision), &cfg.synthesis)?;
    Ok(Workload {
        name: spec.name,
        circuit: g.circuit,
        scale_factor: g.scale_factor,
    })
}

fn cell_machine(cfg: &RunConfig, cell: &Cell) -> Result<Machine> {
    let mut m = cfg.machine(&cell.codes)?;
    if let Some(k) = cell.hybrid_k {
        m.hybrid.k = k;
    }
    if let Some(p) = cell.hybrid_policy {
        m.hybrid.policy = p;
    }
    Ok(m)
}

/// Compiles the cell once and simulates it for `seeds` consecutive seeds.
pub fn run_cell(cfg: &RunConfig, w: &Workload, cell: &Cell) -> Result<CellResult> {
    let m = cell_machine(cfg, cell)?;
    let compiled = compile(w, cell.architecture, &m, cell.factories)?;
    let reports = (0..cfg.seeds as u64)
        .map(|i| simulate(&compiled, w, &m, cfg.seed + i))
        .collect::<Result<Vec<_>>>()?;
    log::info!(
        "{}: {:.3} days",
        cell.label(),
        reports.iter().map(|r| r.days).sum::<f64>() / reports.len() as f64
    );
    Ok(CellResult::from_reports(cell.clone(), &reports))
}

/// Runs every cell of the plan. Workloads are generated once per
/// (benchmark, precision); results come back in plan order.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<CellResult>> {
    let cells = plan(cfg)?;
    let mut workloads: BTreeMap<(String, Option<u64>), Workload> = BTreeMap::new();
    for c in &cells {
        let key = (c.benchmark.clone(), c.precision.map(f64::to_bits));
        if let std::collections::btree_map::Entry::Vacant(e) = workloads.entry(key) {
            e.insert(workload(cfg, &c.benchmark, c.precision)?);
        }
    }
    let one = |c: &Cell| {
        let w = &workloads[&(c.benchmark.clone(), c.precision.map(f64::to_bits))];
        run_cell(cfg, w, c)
    };
    if cfg.sweep.parallel {
        cells.par_iter().map(one).collect()
    } else {
        cells.iter().map(one).collect()
    }
}

pub const CSV_HEADER: &str =
    "benchmark,architecture,factories,qubits,days,success_pct,spacetime,stalls,overhead_frac,seed_count,\
days_std,success_std,precision,codes,hybrid_k,hybrid_policy,timesteps,t_states,utilization";

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn to_csv(results: &[CellResult]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in results {
        let c = &r.cell;
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.4},{:.6e},{:.1},{:.6},{},{:.6},{:.4},{},{},{},{},{:.1},{:.1},{:.6}",
            c.benchmark,
            c.architecture,
            c.factories,
            r.qubits,
            r.days,
            r.success_pct,
            r.spacetime,
            r.stalls,
            r.overhead_frac,
            r.seed_count,
            r.days_std,
            r.success_std,
            opt(c.precision.map(|e| format!("{e:e}"))),
            c.codes.label(),
            opt(c.hybrid_k),
            opt(c.hybrid_policy.map(|p| format!("{p:?}"))),
            r.timesteps,
            r.t_states,
            r.utilization,
        );
    }
    s
}

/// One table per (benchmark, precision, code pair): a row per factory
/// count, and qubits, days and success columns per architecture.
pub fn to_markdown(results: &[CellResult]) -> String {
    type Key = (String, String, String);
    let mut groups: Vec<(Key, Vec<&CellResult>)> = Vec::new();
    for r in results {
        let c = &r.cell;
        let key = (
            c.benchmark.clone(),
            opt(c.precision.map(|e| format!("{e:e}"))),
            c.codes.label(),
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut s = String::new();
    for ((bench, eps, codes), rows) in groups {
        let _ = write!(s, "## {bench}");
        if !eps.is_empty() {
            let _ = write!(s, " (ε = {eps})");
        }
        let _ = writeln!(s, " [{codes}]\n");
        let mut columns: Vec<String> = Vec::new();
        let mut factories: Vec<u32> = Vec::new();
        for r in &rows {
            let col = column_name(&r.cell);
            if !columns.contains(&col) {
                columns.push(col);
            }
            if !factories.contains(&r.cell.factories) {
                factories.push(r.cell.factories);
            }
        }
        s.push_str("| Factories |");
        for c in &columns {
            let _ = write!(s, " {c} Qubits | {c} Days | {c} Success (%) |");
        }
        s.push_str("\n|---:|");
        for _ in &columns {
            s.push_str("---:|---:|---:|");
        }
        s.push('\n');
        for f in factories {
            let _ = write!(s, "| {f} |");
            for c in &columns {
                match rows
                    .iter()
                    .find(|r| r.cell.factories == f && column_name(&r.cell) == *c)
                {
                    Some(r) => {
                        let _ = write!(s, " {} | {:.2} | {:.1} |", r.qubits, r.days, r.success_pct);
                    }
                    None => s.push_str(" | | |"),
                }
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}

fn column_name(c: &Cell) -> String {
    match (c.hybrid_k, c.hybrid_policy) {
        (Some(k), Some(p)) => format!("{} {p:?} K={k}", c.architecture),
        _ => c.architecture.to_string(),
    }
}

/// Long-format series for charting: days and spacetime against factory
/// count, spacetime against precision, and timesteps against K.
pub fn to_plot_data(results: &[CellResult]) -> String {
    let mut s = String::from("series,x_name,x,y_name,y\n");
    let mut rows: Vec<(String, &str, String, &str, String)> = Vec::new();
    for r in results {
        let c = &r.cell;
        let mut series = format!("{}/{}/{}", c.benchmark, column_name(c), c.codes.label());
        if let Some(e) = c.precision {
            let _ = write!(series, "/eps={e:e}");
        }
        let f = c.factories.to_string();
        rows.push((series.clone(), "factories", f.clone(), "days", format!("{:.6}", r.days)));
        rows.push((
            series.clone(),
            "factories",
            f.clone(),
            "spacetime",
            format!("{:.6e}", r.spacetime),
        ));
        if let Some(e) = c.precision {
            let s2 = format!(
                "{}/{}/{}/F={}",
                c.benchmark,
                column_name(c),
                c.codes.label(),
                c.factories
            );
            rows.push((
                s2,
                "precision",
                format!("{e:e}"),
                "spacetime",
                format!("{:.6e}", r.spacetime),
            ));
        }
        if let (Some(k), Some(p)) = (c.hybrid_k, c.hybrid_policy) {
            let s3 = format!("{}/hybrid {p:?}/{}/F={}", c.benchmark, c.codes.label(), c.factories);
            rows.push((
                s3.clone(),
                "hybrid_k",
                k.to_string(),
                "timesteps",
                format!("{:.1}", r.timesteps),
            ));
            rows.push((
                s3,
                "hybrid_k",
                k.to_string(),
                "spacetime",
                format!("{:.6e}", r.spacetime),
            ));
        }
    }
    for (series, xn, x, yn, y) in rows {
        let _ = writeln!(s, "{series},{xn},{x},{yn},{y}");
    }
    s
}

/// Writes `results.csv`, `results.md` and `plot_data.csv` under `dir` and
/// returns their paths.
pub fn write_outputs(results: &[CellResult], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("results.csv", to_csv(results)),
        ("results.md", to_markdown(results)),
        ("plot_data.csv", to_plot_data(results)),
    ];
    let mut paths = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::from_toml(
            r#"
seeds = 2
[sweep]
benchmarks = ["toy"]
architectures = ["extractor-base", "hybrid"]
factories = [1, 2]
hybrid_k = [2, 3]
[[benchmark]]
name = "toy"
model = "tfim_nn2d"
rows = 2
cols = 2
trotter_order = 2
trotter_steps = 1
evolution_time = 1.0
precision = 1e-3
"#,
        )
        .unwrap();
        c.sweep.parallel = false;
        c
    }

    #[test]
    fn plan_shape() {
        let cells = plan(&small()).unwrap();
        // base: 2 factory counts; hybrid: 2 K × 1 policy × 2 factory counts.
        assert_eq!(cells.len(), 6);
        assert!(cells[..2].iter().all(|c| c.hybrid_k.is_none()));
        assert_eq!(cells[2].hybrid_k, Some(2));
    }

    #[test]
    fn csv_header_and_rows() {
        let res = run_sweep(&small()).unwrap();
        let csv = to_csv(&res);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with(
            "benchmark,architecture,factories,qubits,days,success_pct,spacetime,stalls,overhead_frac,seed_count"
        ));
        assert_eq!(lines.count(), 6);
        assert!(to_markdown(&res).contains("| Factories |"));
    }
}
