//! Solver-zoo orchestration: run configured solvers over configured
//! instances, score every batch against the shared Hungarian reference, and
//! emit the CSV/JSON result tables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::heuristics::{self, SaConfig, SampleBatch, TabuConfig};
use crate::ising;
use crate::matching::{self, WeightMatrix};
use crate::metrics::{evaluate_batch, MetricsReport};
use crate::model::{self, GenRanges, Instance};
use crate::qaoa;
use crate::qubo::{build_qubo, calibrate_penalty, decode, Assignment, DecodeOutcome, Qubo, Sample};
use crate::savings::{eta_report, SavingsReport};

/// Where an instance comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InstanceSpec {
    /// NPY pair inside a directory (optionally disambiguated by prefix).
    Dir {
        path: PathBuf,
        #[serde(default)]
        prefix: Option<String>,
    },
    /// Synthetic instance from the seeded generator.
    Generated { n: usize, seed: u64 },
}

impl InstanceSpec {
    pub fn load(&self) -> Result<Instance> {
        match self {
            InstanceSpec::Dir { path, prefix } => model::load_instance_dir(path, prefix.as_deref()),
            InstanceSpec::Generated { n, seed } => {
                model::generate_instance(*n, *seed, &GenRanges::default())
            }
        }
    }
}

fn default_seed() -> u64 {
    1
}

/// One solver entry of the zoo.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SolverSpec {
    Hungarian,
    Brute,
    Sa {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default)]
        reads: Option<usize>,
        #[serde(default)]
        sweeps: Option<usize>,
    },
    Tabu {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default)]
        reads: Option<usize>,
        #[serde(default)]
        tenure: Option<usize>,
        #[serde(default)]
        max_iters: Option<usize>,
    },
    /// Linear-ramp QAOA, grid-calibrated on the exact distribution.
    Lrqaoa {
        p: usize,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default)]
        shots: Option<usize>,
        #[serde(default)]
        grid: Option<GridKind>,
        /// Skip instances above this size (full-state calibration cost
        /// grows as 2^(n^2)).
        #[serde(default)]
        max_n: Option<usize>,
    },
    /// Constraint-enhanced QAOA; fixed angles when given, otherwise a grid
    /// search picks them.
    Ceqaoa {
        p: usize,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default)]
        shots: Option<usize>,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        grid: Option<GridKind>,
        /// Skip instances above this size (subspace cost grows as n^n).
        #[serde(default)]
        max_n: Option<usize>,
    },
}

/// Calibration grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    #[default]
    Coarse,
    Fine,
}

impl std::str::FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(GridKind::Coarse),
            "fine" => Ok(GridKind::Fine),
            other => Err(Error::Config(format!(
                "unknown grid {other:?} (expected coarse or fine)"
            ))),
        }
    }
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Hungarian => "hungarian",
            SolverSpec::Brute => "brute",
            SolverSpec::Sa { .. } => "sa",
            SolverSpec::Tabu { .. } => "tabu",
            SolverSpec::Lrqaoa { .. } => "lrqaoa",
            SolverSpec::Ceqaoa { .. } => "ceqaoa",
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}

fn default_safety() -> f64 {
    1.1
}

fn default_rel_tol() -> f64 {
    1e-6
}

fn default_store_batches() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub instances: Vec<InstanceSpec>,
    pub solvers: Vec<SolverSpec>,
    #[serde(default = "default_lambda")]
    pub lambda1: f64,
    #[serde(default = "default_lambda")]
    pub lambda2: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_store_batches")]
    pub store_batches: bool,
}

/// One (instance, solver) result row. Every numeric column is re-derivable
/// from the stored batch plus the instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub solver: String,
    /// Circuit depth for the QAOA solvers.
    pub p: Option<usize>,
    pub lambda3: f64,
    pub hungarian_cost: f64,
    /// Reference energy in the QUBO frame: Hungarian cost - 2 n lambda3.
    pub e_star: f64,
    pub metrics: Option<MetricsReport>,
    pub savings: Option<SavingsReport>,
    pub best_assignment: Option<Assignment>,
    pub skip_reason: Option<String>,
    pub wall_time: f64,
    pub batch: Option<SampleBatch>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
}

fn hungarian_batch(
    q: &Qubo,
    assignment: &Assignment,
    wall_time: f64,
    name: &str,
    n_reads: usize,
) -> Result<SampleBatch> {
    let sample = Sample::evaluate(q, assignment.to_bits(), wall_time)?;
    Ok(SampleBatch {
        samples: vec![sample; n_reads],
        n_reads,
        solver_name: name.into(),
        seed: 0,
        total_wall_time: wall_time,
    })
}

fn check_max_n(n: usize, max_n: Option<usize>) -> Result<()> {
    match max_n {
        Some(cap) if n > cap => Err(Error::Cap(format!(
            "n = {n} exceeds the configured max_n = {cap}"
        ))),
        _ => Ok(()),
    }
}

/// Run one solver against one prepared instance. Returns the batch and the
/// depth column for QAOA rows.
fn run_solver(
    spec: &SolverSpec,
    w: &WeightMatrix,
    q: &Qubo,
) -> Result<(SampleBatch, Option<usize>)> {
    match spec {
        SolverSpec::Hungarian => {
            let started = std::time::Instant::now();
            let (assignment, _) = exact::hungarian(w)?;
            let batch = hungarian_batch(
                q,
                &assignment,
                started.elapsed().as_secs_f64(),
                "hungarian",
                1,
            )?;
            Ok((batch, None))
        }
        SolverSpec::Brute => {
            let started = std::time::Instant::now();
            let (assignment, _) = exact::brute_force_assignment(w)?;
            let batch =
                hungarian_batch(q, &assignment, started.elapsed().as_secs_f64(), "brute", 1)?;
            Ok((batch, None))
        }
        SolverSpec::Sa {
            seed,
            reads,
            sweeps,
        } => {
            let mut cfg = SaConfig::default_for(q, *seed);
            if let Some(r) = reads {
                cfg.n_reads = *r;
            }
            if let Some(s) = sweeps {
                cfg.sweeps = *s;
            }
            Ok((heuristics::simulated_annealing(q, &cfg)?, None))
        }
        SolverSpec::Tabu {
            seed,
            reads,
            tenure,
            max_iters,
        } => {
            let mut cfg = TabuConfig::default_for(q, *seed);
            if let Some(r) = reads {
                cfg.n_reads = *r;
            }
            if let Some(t) = tenure {
                cfg.tenure = *t;
            }
            if let Some(m) = max_iters {
                cfg.max_iters = *m;
            }
            Ok((heuristics::tabu_search(q, &cfg)?, None))
        }
        SolverSpec::Lrqaoa {
            p,
            seed,
            shots,
            grid,
            max_n,
        } => {
            check_max_n(q.n(), *max_n)?;
            let shots = shots.unwrap_or_else(|| heuristics::default_reads(q.n()));
            let calibration_grid = match grid.unwrap_or_default() {
                GridKind::Coarse => qaoa::default_lr_grid(),
                GridKind::Fine => qaoa::fine_lr_grid(),
            };
            let model = ising::normalize_ising(&ising::to_ising(q))?;
            let cal = qaoa::calibrate_lr(&model, *p, &calibration_grid)?;
            let schedule = qaoa::lr_schedule(*p, cal.dgamma, cal.dbeta)?;
            let dist = qaoa::simulate_qaoa_full(&model, &schedule.gammas, &schedule.betas)?;
            let out = qaoa::feasibility_filter(&dist, q, shots, *seed, "lrqaoa")?;
            Ok((out.batch, Some(*p)))
        }
        SolverSpec::Ceqaoa {
            p,
            seed,
            shots,
            gamma,
            beta,
            grid,
            max_n,
        } => {
            check_max_n(q.n(), *max_n)?;
            let shots = shots.unwrap_or_else(|| heuristics::default_reads(q.n()));
            let out = match (gamma, beta) {
                (Some(g), Some(b)) => {
                    let cfg = qaoa::CEConfig {
                        gamma: *g,
                        beta: *b,
                        p: *p,
                        shots,
                        seed: *seed,
                    };
                    let dist = qaoa::ce_qaoa_simulate(q, &cfg)?;
                    qaoa::feasibility_filter(&dist, q, shots, *seed, "ceqaoa")?
                }
                (None, None) => {
                    let angle_grid = match grid.unwrap_or_default() {
                        GridKind::Coarse => qaoa::default_ce_grid(),
                        GridKind::Fine => qaoa::fine_ce_grid(),
                    };
                    qaoa::ce_grid_search(q, &angle_grid, *p, shots, *seed)?.outcome
                }
                _ => return Err(Error::Config("pass both gamma and beta, or neither".into())),
            };
            Ok((out.batch, Some(*p)))
        }
    }
}

/// Best feasible sample of a batch, decoded.
fn best_feasible_assignment(batch: &SampleBatch, n: usize) -> Result<Option<Assignment>> {
    let mut best: Option<&Sample> = None;
    for s in &batch.samples {
        if s.is_feasible() && best.is_none_or(|b| s.energy < b.energy) {
            best = Some(s);
        }
    }
    match best {
        None => Ok(None),
        Some(s) => match decode(&s.bits, n)? {
            DecodeOutcome::Feasible(a) => Ok(Some(a)),
            DecodeOutcome::Infeasible(_) => Err(Error::Domain(
                "sample with zero penalty failed to decode".into(),
            )),
        },
    }
}

/// Run every configured solver on every configured instance. Solver cap
/// and configuration failures become per-row skip markers; data errors
/// (unreadable instances) abort the run.
pub fn run_zoo(cfg: &BenchConfig) -> Result<BenchResult> {
    if cfg.instances.is_empty() {
        return Err(Error::Config("no instances configured".into()));
    }
    if cfg.solvers.is_empty() {
        return Err(Error::Config("no solvers configured".into()));
    }

    let mut rows = Vec::new();
    for ispec in &cfg.instances {
        let instance = ispec.load()?;
        let n = instance.n();
        let w = matching::weight_matrix(&instance, cfg.lambda1, cfg.lambda2)?;
        let lambda3 = calibrate_penalty(&w, cfg.safety)?;
        let q = build_qubo(&w, lambda3)?;
        let (_, hungarian_cost) = exact::hungarian(&w)?;
        let e_star = hungarian_cost - q.const_offset();

        for spec in &cfg.solvers {
            let started = std::time::Instant::now();
            let mut row = BenchRow {
                instance: instance.label().to_string(),
                n,
                solver: spec.name().to_string(),
                p: None,
                lambda3,
                hungarian_cost,
                e_star,
                metrics: None,
                savings: None,
                best_assignment: None,
                skip_reason: None,
                wall_time: 0.0,
                batch: None,
            };
            match run_solver(spec, &w, &q) {
                Ok((batch, p)) => {
                    row.p = p;
                    row.metrics = Some(evaluate_batch(&batch, e_star, cfg.rel_tol)?);
                    if let Some(assignment) = best_feasible_assignment(&batch, n)? {
                        row.savings = Some(eta_report(&instance, &assignment)?);
                        row.best_assignment = Some(assignment);
                    }
                    if cfg.store_batches {
                        row.batch = Some(batch);
                    }
                }
                Err(err @ (Error::Cap(_) | Error::Config(_))) => {
                    row.skip_reason = Some(err.to_string());
                }
                Err(other) => return Err(other),
            }
            row.wall_time = started.elapsed().as_secs_f64();
            rows.push(row);
        }
    }
    Ok(BenchResult { rows })
}

/// Depth-sweep row for the LR-QAOA figure data; success statistics are
/// averaged over the given seeds (infinities propagate).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub p_succ: f64,
    #[serde(with = "crate::metrics::infinite_f64")]
    pub sts: f64,
    #[serde(with = "crate::metrics::infinite_f64")]
    pub tts_seconds: f64,
}

/// Calibrate and sample LR-QAOA at each depth in `p_list`.
#[allow(clippy::too_many_arguments)]
pub fn qaoa_sweep(
    instance: &Instance,
    p_list: &[usize],
    seeds: &[u64],
    shots: Option<usize>,
    lambda1: f64,
    lambda2: f64,
    safety: f64,
    rel_tol: f64,
) -> Result<Vec<SweepRow>> {
    if p_list.is_empty() || seeds.is_empty() {
        return Err(Error::Config(
            "p list and seed list must be non-empty".into(),
        ));
    }
    let w = matching::weight_matrix(instance, lambda1, lambda2)?;
    let lambda3 = calibrate_penalty(&w, safety)?;
    let q = build_qubo(&w, lambda3)?;
    let (_, hungarian_cost) = exact::hungarian(&w)?;
    let e_star = hungarian_cost - q.const_offset();
    let shots = shots.unwrap_or_else(|| heuristics::default_reads(q.n()));
    let model = ising::normalize_ising(&ising::to_ising(&q))?;

    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let cal = qaoa::calibrate_lr(&model, p, &qaoa::default_lr_grid())?;
        let schedule = qaoa::lr_schedule(p, cal.dgamma, cal.dbeta)?;
        let dist = qaoa::simulate_qaoa_full(&model, &schedule.gammas, &schedule.betas)?;
        let mut p_succ = 0.0;
        let mut sts = 0.0;
        let mut tts = 0.0;
        for &seed in seeds {
            let out = qaoa::feasibility_filter(&dist, &q, shots, seed, "lrqaoa")?;
            let report = evaluate_batch(&out.batch, e_star, rel_tol)?;
            p_succ += report.p_succ_tol;
            sts += report.sts;
            tts += report.tts_seconds;
        }
        let k = seeds.len() as f64;
        rows.push(SweepRow {
            p,
            p_succ: p_succ / k,
            sts: sts / k,
            tts_seconds: tts / k,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

pub const METRICS_HEADER: &str = "solver,n,instance,p,e_star,e_best,e_mean,gap_best,gap_mean,variance,p_feas,p_succ_exact,p_succ_tol,sts,n_reads,n_unique,n_feas,n_succ_exact,n_succ_tol,skip_reason,tts_s,wall_time_s";
pub const SAVINGS_HEADER: &str =
    "solver,n,instance,F_ref,F_ref_vel,F1,F1_mod,eta_speed,eta_F1,eta_F1mod,wall_time_s";
pub const SWEEP_HEADER: &str = "solver,n,instance,p,p_succ,sts,tts_s";

fn metrics_line(row: &BenchRow) -> String {
    let m = row.metrics.as_ref();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.solver,
        row.n,
        row.instance,
        row.p.map_or(String::new(), |p| p.to_string()),
        row.e_star,
        fmt_opt(m.map(|m| m.e_best)),
        fmt_opt(m.map(|m| m.e_mean)),
        fmt_opt(m.map(|m| m.gap_best)),
        fmt_opt(m.map(|m| m.gap_mean)),
        fmt_opt(m.map(|m| m.variance)),
        fmt_opt(m.map(|m| m.p_feas)),
        fmt_opt(m.map(|m| m.p_succ_exact)),
        fmt_opt(m.map(|m| m.p_succ_tol)),
        fmt_opt(m.map(|m| m.sts)),
        m.map_or(String::new(), |m| m.n_reads.to_string()),
        m.map_or(String::new(), |m| m.n_unique.to_string()),
        m.map_or(String::new(), |m| m.n_feas.to_string()),
        m.map_or(String::new(), |m| m.n_succ_exact.to_string()),
        m.map_or(String::new(), |m| m.n_succ_tol.to_string()),
        row.skip_reason
            .clone()
            .unwrap_or_default()
            .replace(',', ";"),
        fmt_opt(m.map(|m| m.tts_seconds)),
        row.wall_time,
    )
}

fn savings_line(row: &BenchRow) -> Option<String> {
    let s = row.savings.as_ref()?;
    Some(format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        row.solver,
        row.n,
        row.instance,
        s.f_ref,
        s.f_ref_vel,
        s.f1,
        s.f1_mod,
        s.eta_speed,
        s.eta_f1,
        s.eta_f1_mod,
        row.wall_time,
    ))
}

/// Write the per-solver metrics and savings tables plus the QAOA depth
/// table (when any depth column is present) into `out_dir`. Returns the
/// written paths.
pub fn emit_tables(result: &BenchResult, fmt: TableFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if result.rows.is_empty() {
        return Err(Error::Config("empty bench result".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    match fmt {
        TableFormat::Json => {
            let path = out_dir.join("bench.json");
            std::fs::write(&path, serde_json::to_string_pretty(result).map_err(io_err)?)?;
            written.push(path);
        }
        TableFormat::Csv => {
            let mut solvers: Vec<String> = result.rows.iter().map(|r| r.solver.clone()).collect();
            solvers.sort();
            solvers.dedup();
            for solver in &solvers {
                let rows: Vec<&BenchRow> =
                    result.rows.iter().filter(|r| &r.solver == solver).collect();

                let mut metrics_csv = String::from(METRICS_HEADER);
                metrics_csv.push('\n');
                for row in &rows {
                    metrics_csv.push_str(&metrics_line(row));
                    metrics_csv.push('\n');
                }
                let mpath = out_dir.join(format!("metrics_{solver}.csv"));
                std::fs::write(&mpath, metrics_csv)?;
                written.push(mpath);

                let mut savings_csv = String::from(SAVINGS_HEADER);
                savings_csv.push('\n');
                for row in &rows {
                    if let Some(line) = savings_line(row) {
                        savings_csv.push_str(&line);
                        savings_csv.push('\n');
                    }
                }
                let spath = out_dir.join(format!("savings_{solver}.csv"));
                std::fs::write(&spath, savings_csv)?;
                written.push(spath);
            }

            let qaoa_rows: Vec<&BenchRow> = result.rows.iter().filter(|r| r.p.is_some()).collect();
            if !qaoa_rows.is_empty() {
                let mut sweep = String::from(SWEEP_HEADER);
                sweep.push('\n');
                for row in qaoa_rows {
                    if let Some(m) = &row.metrics {
                        sweep.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            row.solver,
                            row.n,
                            row.instance,
                            row.p.unwrap(),
                            m.p_succ_tol,
                            m.sts,
                            m.tts_seconds,
                        ));
                    }
                }
                let qpath = out_dir.join("qaoa_sweep.csv");
                std::fs::write(&qpath, sweep)?;
                written.push(qpath);
            }
        }
    }
    Ok(written)
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Write the depth-sweep table produced by [`qaoa_sweep`].
pub fn write_sweep_csv(rows: &[SweepRow], instance: &Instance, path: &Path) -> Result<()> {
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&format!(
            "lrqaoa,{},{},{},{},{},{}\n",
            instance.n(),
            instance.label(),
            r.p,
            r.p_succ,
            r.sts,
            r.tts_seconds,
        ));
    }
    std::fs::write(path, csv)?;
    Ok(())
}
