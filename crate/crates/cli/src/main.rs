//! `platoon` — command-line front end for the matching benchmark harness.
//!
//! Every subcommand is a thin adapter over the library: it parses flags,
//! calls the corresponding library function, writes machine-readable output
//! to `--out` and prints a one-line human summary. Exit codes: 0 success,
//! 1 usage error, 2 data/format error, 3 cap/config error.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use platoon_core::bench::{
    self, BenchConfig, BenchResult, GridKind, InstanceSpec, SolverSpec, TableFormat,
};
use platoon_core::error::{Error, Result};
use platoon_core::model::{self, GenRanges, Instance};
use platoon_core::qubo::Assignment;
use platoon_core::savings::eta_report;
use platoon_core::{ising, matching, qubo};

#[derive(Parser)]
#[command(
    name = "platoon",
    version,
    about = "Surfer-breaker platoon matching benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// Directory holding the <prefix>-breakers.npy / <prefix>-surfers.npy pair.
    #[arg(long)]
    instance: PathBuf,
    /// File prefix when the directory holds several instances.
    #[arg(long)]
    prefix: Option<String>,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance> {
        model::load_instance_dir(&self.instance, self.prefix.as_deref())
    }
}

#[derive(Args)]
struct WeightArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda2: f64,
    /// Safety factor of the penalty calibration.
    #[arg(long, default_value_t = 1.1)]
    safety: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance and write its NPY pair.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the edge-weight matrix as CSV (columns s, b, w).
    Weights {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda1: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda2: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the penalized QUBO and write it as JSON.
    Qubo {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the Ising form for external annealers.
    ExportIsing {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        weights: WeightArgs,
        /// Rescale coefficients to unit max magnitude.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver on one instance and write the result row as JSON.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        weights: WeightArgs,
        /// hungarian | brute | sa | tabu | lrqaoa | ceqaoa
        #[arg(long)]
        solver: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        reads: Option<usize>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        tenure: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// QAOA depth.
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        shots: Option<usize>,
        /// Calibration grid resolution for the QAOA solvers: coarse | fine.
        #[arg(long, default_value = "coarse")]
        grid: String,
        /// Skip QAOA runs on instances larger than this.
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the energy-savings hierarchy for a solved assignment.
    Savings {
        #[command(flatten)]
        instance: InstanceArgs,
        /// result.json written by `platoon solve`.
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured solver zoo and emit all tables.
    Bench {
        /// TOML config; defaults to $PLATOON_CONFIG.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// csv | json | both
        #[arg(long, default_value = "both")]
        format: String,
    },
    /// LR-QAOA depth sweep; emits figure data (p, p_succ, STS, TTS).
    QaoaSweep {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let kind = err.kind();
            let _ = err.print();
            if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                std::process::exit(0);
            }
            std::process::exit(1);
        }
    };
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen { n, seed, out } => {
            let instance = model::generate_instance(n, seed, &GenRanges::default())?;
            model::save_instance(&out, &instance)?;
            println!(
                "wrote {}/{{{label}-breakers.npy, {label}-surfers.npy}} (n={n}, seed={seed})",
                out.display(),
                label = instance.label()
            );
            Ok(())
        }
        Command::Weights {
            instance,
            lambda1,
            lambda2,
            out,
        } => {
            let inst = instance.load()?;
            let w = matching::weight_matrix(&inst, lambda1, lambda2)?;
            let mut csv = String::from("s,b,w\n");
            for s in 0..w.n() {
                for b in 0..w.n() {
                    csv.push_str(&format!("{s},{b},{}\n", w.get(s, b)));
                }
            }
            std::fs::write(&out, csv)?;
            println!("wrote {} ({}x{} weights)", out.display(), w.n(), w.n());
            Ok(())
        }
        Command::Qubo {
            instance,
            weights,
            out,
        } => {
            let inst = instance.load()?;
            let w = matching::weight_matrix(&inst, weights.lambda1, weights.lambda2)?;
            let lambda3 = qubo::calibrate_penalty(&w, weights.safety)?;
            let q = qubo::build_qubo(&w, lambda3)?;
            write_json(&out, &q)?;
            println!(
                "wrote {} (N={}, lambda3={lambda3}, offset={})",
                out.display(),
                q.num_vars(),
                q.const_offset()
            );
            Ok(())
        }
        Command::ExportIsing {
            instance,
            weights,
            normalize,
            out,
        } => {
            let inst = instance.load()?;
            let w = matching::weight_matrix(&inst, weights.lambda1, weights.lambda2)?;
            let lambda3 = qubo::calibrate_penalty(&w, weights.safety)?;
            let q = qubo::build_qubo(&w, lambda3)?;
            let mut m = ising::to_ising(&q);
            if normalize {
                m = ising::normalize_ising(&m)?;
            }
            ising::export_ising_file(&m, &out)?;
            println!(
                "wrote {} ({} spins, {} couplings, scale={})",
                out.display(),
                m.n_vars(),
                m.couplings().len(),
                m.scale()
            );
            Ok(())
        }
        Command::Solve {
            instance,
            weights,
            solver,
            seed,
            reads,
            sweeps,
            tenure,
            max_iters,
            p,
            gamma,
            beta,
            shots,
            grid,
            max_n,
            rel_tol,
            out,
        } => {
            let grid: GridKind = grid.parse()?;
            let spec = match solver.as_str() {
                "hungarian" => SolverSpec::Hungarian,
                "brute" => SolverSpec::Brute,
                "sa" => SolverSpec::Sa { seed, reads, sweeps },
                "tabu" => SolverSpec::Tabu {
                    seed,
                    reads,
                    tenure,
                    max_iters,
                },
                "lrqaoa" => SolverSpec::Lrqaoa {
                    p,
                    seed,
                    shots,
                    grid: Some(grid),
                    max_n,
                },
                "ceqaoa" => SolverSpec::Ceqaoa {
                    p,
                    seed,
                    shots,
                    gamma,
                    beta,
                    grid: Some(grid),
                    max_n,
                },
                other => {
                    return Err(Error::Config(format!(
                        "unknown solver {other:?} (expected hungarian, brute, sa, tabu, lrqaoa or ceqaoa)"
                    )))
                }
            };
            let cfg = BenchConfig {
                instances: vec![InstanceSpec::Dir {
                    path: instance.instance.clone(),
                    prefix: instance.prefix.clone(),
                }],
                solvers: vec![spec],
                lambda1: weights.lambda1,
                lambda2: weights.lambda2,
                safety: weights.safety,
                rel_tol,
                store_batches: true,
            };
            let result = bench::run_zoo(&cfg)?;
            let row = &result.rows[0];
            if let Some(reason) = &row.skip_reason {
                // A skipped single run is a hard failure at the CLI level;
                // skip reasons are always cap/config problems.
                eprintln!("error: {reason}");
                std::process::exit(3);
            }
            write_json(&out, row)?;
            let metrics = row.metrics.as_ref().expect("unskipped row has metrics");
            println!(
                "wrote {} (solver={}, n={}, hungarian_cost={}, e_star={}, e_best={}, p_succ={})",
                out.display(),
                row.solver,
                row.n,
                row.hungarian_cost,
                row.e_star,
                metrics.e_best,
                metrics.p_succ_tol
            );
            Ok(())
        }
        Command::Savings {
            instance,
            assignment,
            out,
        } => {
            let inst = instance.load()?;
            let text = std::fs::read_to_string(&assignment)?;
            let row: bench::BenchRow = serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("bad result file: {e}")))?;
            let assignment: Assignment = row
                .best_assignment
                .ok_or_else(|| Error::Format("result file holds no feasible assignment".into()))?;
            let report = eta_report(&inst, &assignment)?;
            let csv = format!(
                "F_ref,F_ref_vel,F1,F1_mod,eta_speed,eta_F1,eta_F1mod\n{},{},{},{},{},{},{}\n",
                report.f_ref,
                report.f_ref_vel,
                report.f1,
                report.f1_mod,
                report.eta_speed,
                report.eta_f1,
                report.eta_f1_mod
            );
            std::fs::write(&out, csv)?;
            println!(
                "wrote {} (eta_speed={}%, eta_F1={}%, eta_F1mod={}%)",
                out.display(),
                report.eta_speed,
                report.eta_f1,
                report.eta_f1_mod
            );
            Ok(())
        }
        Command::Bench {
            config,
            out,
            format,
        } => {
            let config_path = config
                .or_else(|| std::env::var_os("PLATOON_CONFIG").map(PathBuf::from))
                .ok_or_else(|| Error::Config("pass --config or set PLATOON_CONFIG".into()))?;
            let text = std::fs::read_to_string(&config_path)?;
            let cfg: BenchConfig = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("bad bench config: {e}")))?;
            let result = bench::run_zoo(&cfg)?;
            let mut written = Vec::new();
            match format.as_str() {
                "csv" => written.extend(bench::emit_tables(&result, TableFormat::Csv, &out)?),
                "json" => written.extend(bench::emit_tables(&result, TableFormat::Json, &out)?),
                "both" => {
                    written.extend(bench::emit_tables(&result, TableFormat::Csv, &out)?);
                    written.extend(bench::emit_tables(&result, TableFormat::Json, &out)?);
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown format {other:?} (expected csv, json or both)"
                    )))
                }
            }
            print_bench_summary(&result);
            println!("wrote {} files under {}", written.len(), out.display());
            Ok(())
        }
        Command::QaoaSweep {
            instance,
            weights,
            p_list,
            seeds,
            shots,
            rel_tol,
            out,
        } => {
            let inst = instance.load()?;
            let rows = bench::qaoa_sweep(
                &inst,
                &p_list,
                &seeds,
                shots,
                weights.lambda1,
                weights.lambda2,
                weights.safety,
                rel_tol,
            )?;
            bench::write_sweep_csv(&rows, &inst, &out)?;
            for row in &rows {
                println!(
                    "p={} p_succ={} sts={} tts_s={}",
                    row.p, row.p_succ, row.sts, row.tts_seconds
                );
            }
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn print_bench_summary(result: &BenchResult) {
    for row in &result.rows {
        match (&row.metrics, &row.skip_reason) {
            (Some(m), _) => println!(
                "{} n={} {}: e_best={} gap_best={} p_succ={} sts={}",
                row.instance, row.n, row.solver, m.e_best, m.gap_best, m.p_succ_tol, m.sts
            ),
            (None, Some(reason)) => {
                println!(
                    "{} n={} {}: skipped ({reason})",
                    row.instance, row.n, row.solver
                )
            }
            (None, None) => {}
        }
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("serialization failed: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
