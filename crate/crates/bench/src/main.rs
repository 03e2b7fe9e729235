use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use offload_core::evaluator::{brute_force_best, OracleOutcome};
use offload_core::heft::{derive_deadlines, heft_schedule, DeadlinePolicy};
use offload_core::model::{load_environment, load_workloads, write_environment, write_workloads};
use offload_core::model::presets::{self, Arch};
use offload_core::preprocess::merge;
use offload_bench::config::{ExperimentConfig, Preset};
use offload_bench::experiment::{solve, with_deadlines};
use offload_bench::report::{displayed_cost, emit_results};
use offload_bench::run_experiment;

#[derive(Parser)]
#[command(name = "offload-opt", version, about = "Cost-driven DAG offloading optimizer and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a deadline sweep and write results.csv, trials.csv and results.svg.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Exhaustive optimum for each deadline ratio, next to each configured algorithm (small instances only).
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cut-edge merge report for every DAG of a workload file.
    Merge {
        #[arg(long)]
        workload: PathBuf,
        /// Also write the merged workloads here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// HEFT makespan and derived deadlines for every DAG of a workload file.
    Heft {
        #[arg(long)]
        workload: PathBuf,
        /// Environment file; the 20-server pool is used when omitted.
        #[arg(long)]
        environment: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
    },
    /// Write the bundled environments and workloads as JSON files.
    ExportPresets {
        #[arg(long, default_value = "data")]
        dir: PathBuf,
    },
}

fn run(config: &Path, output_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let table = run_experiment(&cfg)?;
    println!("{:<8} {:>6} {:>14} {:>9} {:>12} {:>10}", "algo", "ratio", "mean_cost", "feasible", "makespan", "wall_ms");
    for r in &table.rows {
        let cost = displayed_cost(r, cfg.signed_infeasible).map_or("-".to_string(), |c| format!("{c:.6}"));
        println!(
            "{:<8} {:>6} {:>14} {:>9.2} {:>12.4} {:>10.1}",
            r.algorithm.name(),
            r.ratio,
            cost,
            r.feasible_rate,
            r.mean_makespan,
            r.mean_wall_ms
        );
    }
    for path in emit_results(&table, &cfg.output_dir, cfg.signed_infeasible)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn oracle(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let env = cfg.build_environment()?;
    let dags = cfg.build_workloads(&env)?;
    let h = dags
        .iter()
        .map(|d| heft_schedule(d, &env).map(|p| p.makespan))
        .collect::<Result<Vec<_>, _>>()?;
    println!("ratio,source,feasible,cost");
    for &ratio in &cfg.deadline_ratios {
        let inst = with_deadlines(&dags, &h, ratio);
        match brute_force_best(&inst, &env)? {
            OracleOutcome::Optimal { cost, .. } => println!("{ratio},oracle,true,{}", cost.total),
            OracleOutcome::NoneFeasible => println!("{ratio},oracle,false,"),
        }
        for &alg in &cfg.algorithms {
            let s = solve(alg, &inst, &env, &cfg, cfg.seed)?;
            println!("{ratio},{alg},{},{}", s.feasible, s.cost.total);
        }
    }
    Ok(())
}

fn merge_report(workload: &Path, output: Option<PathBuf>) -> Result<()> {
    let dags = load_workloads(workload)?;
    let mut merged = Vec::new();
    let mut reports = Vec::new();
    for d in &dags {
        let (m, r) = merge(d);
        reports.push(serde_json::json!({
            "dag": d.id,
            "original_layer_count": r.original_layer_count,
            "merged_layer_count": r.merged_layer_count,
            "compression": r.compression(),
            "merge_map": r.merge_map,
            "refused": r.refused,
        }));
        merged.push(m);
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    if let Some(path) = output {
        write_workloads(&merged, &path)?;
    }
    Ok(())
}

fn heft_table(workload: &Path, environment: Option<PathBuf>, ratios: Option<Vec<f64>>) -> Result<()> {
    let env = match environment {
        Some(p) => load_environment(p)?,
        None => presets::standard_environment(),
    };
    let policy = match ratios {
        Some(r) => DeadlinePolicy::new(r)?,
        None => DeadlinePolicy::standard(),
    };
    let dags = load_workloads(workload)?;
    let cols: Vec<String> = policy.ratios.iter().map(|r| format!("r={r}")).collect();
    println!("dag,heft_makespan,{}", cols.join(","));
    for d in &dags {
        let h = heft_schedule(d, &env)?.makespan;
        let deadlines: Vec<String> = derive_deadlines(h, &policy).iter().map(f64::to_string).collect();
        println!("{},{h},{}", d.id, deadlines.join(","));
    }
    Ok(())
}

fn export_presets(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, preset) in [("standard", Preset::Standard), ("desk", Preset::Desk), ("tiny", Preset::Tiny), ("quad", Preset::Quad)] {
        write_environment(&preset.environment(), dir.join(format!("{name}_environment.json")))?;
    }
    write_workloads(&[presets::tiny_dag(3.0)], dir.join("tiny_workload.json"))?;
    write_workloads(&[presets::quad_dag()], dir.join("quad_workload.json"))?;
    for arch in Arch::ALL {
        let file = format!("{}_workload.json", arch.name().replace('-', "_"));
        write_workloads(&[presets::generate_workload(arch, 0, 7)], dir.join(file))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output_dir } => run(&config, output_dir),
        Command::Oracle { config } => oracle(&config),
        Command::Merge { workload, output } => merge_report(&workload, output),
        Command::Heft { workload, environment, ratios } => heft_table(&workload, environment, ratios),
        Command::ExportPresets { dir } => export_presets(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
