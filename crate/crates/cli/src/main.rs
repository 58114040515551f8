use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use atomarch_core::config::RunConfig;
use atomarch_core::extractor::map_qubits;
use atomarch_core::layout::{anneal_placement, shuttle_time, InteractionGraph};
use atomarch_core::pipeline::{compile, simulate, Architecture, Workload};
use atomarch_core::sim::{self, SimParams};
use atomarch_core::sweep::{self, Cell};
use atomarch_core::synthesis::qualify_extractor;
use atomarch_core::trace::InstructionTrace;
use atomarch_core::{circuit::LogicalCircuit, Error};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "atomarch",
    version,
    about = "Compile and simulate fault-tolerant neutral-atom architectures"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Seed replicates per cell, overriding the config.
    #[arg(long, global = true)]
    seeds: Option<u32>,
    /// Output file or directory; stdout when omitted (sweep writes to the
    /// config's output directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print what would run and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a benchmark circuit and report its T count.
    Generate {
        #[arg(long)]
        benchmark: String,
        /// Synthesis precision override.
        #[arg(long)]
        precision: Option<f64>,
    },
    /// Compile a circuit to an instruction trace.
    Compile {
        #[command(flatten)]
        source: Source,
        /// extractor-base, extractor-parallel, transversal or hybrid.
        #[arg(long)]
        arch: Architecture,
        /// Cultivation factories; also caps concurrent injection sites.
        #[arg(long, default_value_t = 1)]
        factories: u32,
    },
    /// Simulate one configuration and print a JSON report per seed.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Replay a saved trace instead of compiling.
        #[arg(long, conflicts_with_all = ["benchmark", "circuit"])]
        trace: Option<PathBuf>,
        /// Architecture; the first configured one when omitted.
        #[arg(long)]
        arch: Option<Architecture>,
        /// Factory count; the first configured one when omitted.
        #[arg(long)]
        factories: Option<u32>,
    },
    /// Run the configured sweep and write CSV, markdown and plot data.
    Sweep,
    /// Anneal an interaction graph onto the tweezer grid.
    Layout {
        /// Graph file (JSON); the built-in two-gross fixture when omitted.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        rows: Option<u32>,
        #[arg(long)]
        cols: Option<u32>,
    },
    /// Check whether a circuit favours an extractor backend.
    Qualify {
        #[command(flatten)]
        source: Source,
    },
    /// Inspect trace files.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Print a trace one record per line.
    Dump { file: PathBuf },
}

#[derive(Args)]
struct Source {
    /// Benchmark preset or custom benchmark name from the config.
    #[arg(long, conflicts_with = "circuit")]
    benchmark: Option<String>,
    /// Circuit file written by `generate`.
    #[arg(long)]
    circuit: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let user = e.downcast_ref::<Error>().is_some_and(Error::is_user_error);
            ExitCode::from(if user { 2 } else { 1 })
        }
    }
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(n) = g.seeds {
        cfg.seeds = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes `text` to `--out` when given, else stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            // A closed pipe (e.g. `| head`) is not a failure.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => Ok(other?),
        },
    }
}

fn workload(cfg: &RunConfig, src: &Source) -> Result<Workload> {
    match (&src.benchmark, &src.circuit) {
        (_, Some(path)) => Ok(Workload {
            name: path.display().to_string(),
            circuit: LogicalCircuit::load(path)?,
            scale_factor: 1.0,
        }),
        (Some(b), None) => Ok(sweep::workload(cfg, b, None)?),
        (None, None) => Ok(sweep::workload(cfg, &cfg.sweep.benchmarks[0], None)?),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = load_config(g)?;
    match cli.command {
        Command::Generate { benchmark, precision } => {
            let spec = cfg.benchmark_spec(&benchmark)?;
            if g.dry_run {
                eprintln!("would generate {benchmark} with {} qubits", spec.num_qubits());
                return Ok(());
            }
            let gen = spec.generate_at(precision.unwrap_or(spec.precision), &cfg.synthesis)?;
            eprintln!(
                "{benchmark}: {} qubits, {} rotations in {} layers, circuit T {}, full-workload T {:.4e}, scale {:.4}",
                gen.circuit.num_qubits,
                gen.circuit.rotation_count(),
                gen.circuit.layers.len(),
                gen.circuit_t_count,
                gen.circuit_t_count as f64 * gen.scale_factor,
                gen.scale_factor
            );
            emit(g.out.as_deref(), &gen.circuit.to_json()?)
        }
        Command::Compile {
            source,
            arch,
            factories,
        } => {
            let w = workload(&cfg, &source)?;
            if g.dry_run {
                eprintln!("would compile {} for {arch} with {factories} factories", w.name);
                return Ok(());
            }
            let m = cfg.machine(&cfg.codes)?;
            let c = compile(&w, arch, &m, factories)?;
            eprintln!(
                "{arch}: {} records, {} timesteps, {} injection lanes, {} physical qubits",
                c.trace.records.len(),
                c.trace.timesteps(),
                c.trace.injection_lanes,
                c.physical_qubits
            );
            emit(g.out.as_deref(), &c.trace.to_json()?)
        }
        Command::Simulate {
            source,
            trace,
            arch,
            factories,
        } => {
            let factories = factories.unwrap_or(cfg.sweep.factories[0]);
            let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|i| cfg.seed + i).collect();
            let m = cfg.machine(&cfg.codes)?;
            if g.dry_run {
                eprintln!("would simulate {} seeds starting at {}", seeds.len(), cfg.seed);
                return Ok(());
            }
            let reports = if let Some(path) = trace {
                let t = InstructionTrace::load(&path)?;
                seeds
                    .iter()
                    .map(|&s| sim::run(&t, &SimParams::new(m.cost.clone(), m.factory.clone(), factories, s)))
                    .collect::<atomarch_core::Result<Vec<_>>>()?
            } else {
                let w = workload(&cfg, &source)?;
                let arch = arch.unwrap_or(cfg.sweep.architectures[0]);
                let c = compile(&w, arch, &m, factories)?;
                seeds
                    .iter()
                    .map(|&s| simulate(&c, &w, &m, s))
                    .collect::<atomarch_core::Result<Vec<_>>>()?
            };
            let mut text = String::new();
            for r in &reports {
                text.push_str(&serde_json::to_string(r)?);
                text.push('\n');
            }
            let (mean, std) = sim::mean_std(&reports.iter().map(|r| r.days).collect::<Vec<_>>());
            eprintln!("days {mean:.4} ± {std:.4} over {} seeds", reports.len());
            emit(g.out.as_deref(), &text)
        }
        Command::Sweep => {
            let cells = sweep::plan(&cfg)?;
            if g.dry_run {
                let mut text = format!("{} cells × {} seeds\n", cells.len(), cfg.seeds);
                for c in &cells {
                    text.push_str(&Cell::label(c));
                    text.push('\n');
                }
                return emit(None, &text);
            }
            let results = sweep::run_sweep(&cfg)?;
            let dir = g.out.clone().unwrap_or_else(|| cfg.out.clone());
            for p in sweep::write_outputs(&results, &dir)? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Layout { graph, rows, cols } => {
            let graph = match graph {
                Some(p) => InteractionGraph::load(&p)?,
                None => InteractionGraph::two_gross_fixture(),
            };
            let (rows, cols) = (rows.unwrap_or(cfg.layout.rows), cols.unwrap_or(cfg.layout.cols));
            if g.dry_run {
                eprintln!("would anneal {} vertices onto {rows}×{cols}", graph.len());
                return Ok(());
            }
            let r = anneal_placement(&graph, rows, cols, &cfg.layout.anneal, cfg.seed)?;
            let cap = cfg.hardware.max_interaction_distance;
            let report = serde_json::json!({
                "vertices": graph.len(),
                "edges": graph.edges.len(),
                "rows": rows,
                "cols": cols,
                "seed": cfg.seed,
                "max_distance": r.max_distance,
                "total_distance": r.total_distance,
                "max_interaction_distance": cap,
                "within_cap": r.max_distance <= cap,
                "shuttle_ms_per_module": shuttle_time(1, &cfg.costs)?,
                "kinematic_ms_per_module": cfg.hardware.kinematic_shuttle_ms_per_module(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(p) = &g.out {
                std::fs::write(p, serde_json::to_string(&r.placement)?)?;
                eprintln!("wrote {}", p.display());
            }
            if r.max_distance > cap {
                anyhow::bail!("max distance {:.3} exceeds the interaction cap {cap}", r.max_distance);
            }
            Ok(())
        }
        Command::Qualify { source } => {
            let w = workload(&cfg, &source)?;
            if g.dry_run {
                eprintln!("would qualify {}", w.name);
                return Ok(());
            }
            let m = cfg.machine(&cfg.codes)?;
            let map = map_qubits(w.circuit.num_qubits as u32, &m.code, m.extractor.reserve_pivot)?;
            let mut xp = m.extractor.clone();
            xp.synthesis = m.synthesis;
            let q = qualify_extractor(&w.circuit, &map, &xp)?;
            emit(g.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&q)?))
        }
        Command::Trace {
            command: TraceCommand::Dump { file },
        } => {
            let t = InstructionTrace::load(&file)?;
            emit(g.out.as_deref(), &t.dump())
        }
    }
}
