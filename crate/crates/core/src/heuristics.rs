//! Metaheuristic QUBO samplers: simulated annealing and tabu search.
//!
//! Both samplers produce a [`SampleBatch`] of independent reads. Read `k`
//! is a pure function of `(qubo, config, seed ^ k)`, so batches are
//! reproducible no matter how the reads are scheduled across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{penalty_count, qubo_energy, Qubo, Sample};
use crate::rng::SplitMix64;

/// Raw reads of one solver call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub samples: Vec<Sample>,
    pub n_reads: usize,
    pub solver_name: String,
    pub seed: u64,
    pub total_wall_time: f64,
}

impl SampleBatch {
    pub fn best_energy(&self) -> Option<f64> {
        self.samples
            .iter()
            .map(|s| s.energy)
            .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.min(e))))
    }

    pub fn mean_sample_seconds(&self) -> f64 {
        if self.n_reads == 0 {
            0.0
        } else {
            self.total_wall_time / self.n_reads as f64
        }
    }
}

/// Default read budget, matching the published read counts (50 n^3).
pub fn default_reads(n: usize) -> usize {
    50 * n * n * n
}

/// Geometric-cooling annealer configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub n_reads: usize,
    /// Sweeps per read; each sweep proposes N single-bit flips.
    pub sweeps: usize,
    pub t_initial: f64,
    pub t_final: f64,
    /// Geometric cooling ratio applied per sweep.
    pub ratio: f64,
    pub seed: u64,
}

impl SaConfig {
    /// Derive a schedule from the problem: the initial temperature accepts
    /// the worst probed single-flip move with probability ~0.8, the final
    /// temperature is 1e-3 of that, and the ratio traverses the range over
    /// the sweep budget.
    pub fn default_for(q: &Qubo, seed: u64) -> Self {
        let nv = q.num_vars();
        let sweeps = 100 * nv;
        let mut max_delta = 0.0f64;
        let mut rng = SplitMix64::new(seed ^ 0xA5A5_A5A5_5A5A_5A5A);
        for _ in 0..100 {
            let bits = rng.next_bits(nv);
            for i in 0..nv {
                max_delta = max_delta.max(q.flip_delta(&bits, i).abs());
            }
        }
        let t_initial = if max_delta > 0.0 {
            max_delta / (1.0f64 / 0.8).ln()
        } else {
            1.0
        };
        let t_final = 1e-3 * t_initial;
        let ratio = if sweeps > 1 {
            (t_final / t_initial).powf(1.0 / (sweeps - 1) as f64)
        } else {
            0.5
        };
        Self {
            n_reads: default_reads(q.n()),
            sweeps,
            t_initial,
            t_final,
            ratio,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_reads == 0 || self.sweeps == 0 {
            return Err(Error::Config("n_reads and sweeps must be positive".into()));
        }
        if self.ratio.is_nan() || self.ratio <= 0.0 || self.ratio >= 1.0 {
            return Err(Error::Config(format!(
                "cooling ratio {} must lie in (0, 1)",
                self.ratio
            )));
        }
        if self.t_initial.is_nan()
            || self.t_final.is_nan()
            || self.t_final <= 0.0
            || self.t_initial < self.t_final
        {
            return Err(Error::Config(format!(
                "temperatures must satisfy t_initial >= t_final > 0, got {} and {}",
                self.t_initial, self.t_final
            )));
        }
        Ok(())
    }
}

/// Tabu search configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabuConfig {
    pub n_reads: usize,
    /// FIFO tabu tenure.
    pub tenure: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl TabuConfig {
    pub fn default_for(q: &Qubo, seed: u64) -> Self {
        let nv = q.num_vars();
        Self {
            n_reads: default_reads(q.n()),
            tenure: nv.min(20),
            max_iters: 50 * nv,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_reads == 0 || self.tenure == 0 || self.max_iters == 0 {
            return Err(Error::Config(
                "n_reads, tenure and max_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Local fields for O(1) flip deltas: `local[i] = sum_{j != i} Q_ij x_j`.
struct FieldState<'a> {
    q: &'a Qubo,
    bits: Vec<u8>,
    local: Vec<f64>,
    diag: Vec<f64>,
}

impl<'a> FieldState<'a> {
    fn new(q: &'a Qubo, bits: Vec<u8>) -> Self {
        let nv = q.num_vars();
        let mut local = vec![0.0; nv];
        for (i, slot) in local.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &bj) in bits.iter().enumerate() {
                if j != i && bj == 1 {
                    acc += q.entry(i, j);
                }
            }
            *slot = acc;
        }
        let diag = (0..nv).map(|i| q.entry(i, i)).collect();
        Self {
            q,
            bits,
            local,
            diag,
        }
    }

    fn flip_delta(&self, i: usize) -> f64 {
        let sign = 1.0 - 2.0 * self.bits[i] as f64;
        sign * (self.diag[i] + 2.0 * self.local[i])
    }

    fn flip(&mut self, i: usize) {
        let delta = if self.bits[i] == 0 { 1.0 } else { -1.0 };
        self.bits[i] ^= 1;
        let nv = self.q.num_vars();
        // Q is symmetric, so column i can be read as the contiguous row i.
        let row = &self.q.matrix()[i * nv..(i + 1) * nv];
        for (j, (slot, &qij)) in self.local.iter_mut().zip(row).enumerate() {
            if j != i {
                *slot += delta * qij;
            }
        }
    }
}

fn run_reads<F>(n_reads: usize, solver_name: &str, seed: u64, read_fn: F) -> Result<SampleBatch>
where
    F: Fn(u64) -> Result<Sample> + Sync,
{
    let started = std::time::Instant::now();
    let samples: Vec<Sample> = (0..n_reads as u64)
        .into_par_iter()
        .map(&read_fn)
        .collect::<Result<_>>()?;
    Ok(SampleBatch {
        samples,
        n_reads,
        solver_name: solver_name.into(),
        seed,
        total_wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Single-spin-flip Metropolis chains under geometric cooling; the final
/// state of each read is its sample.
pub fn simulated_annealing(q: &Qubo, cfg: &SaConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let nv = q.num_vars();
    run_reads(cfg.n_reads, "sa", cfg.seed, |k| {
        let read_start = std::time::Instant::now();
        let mut rng = SplitMix64::stream(cfg.seed, k);
        let mut state = FieldState::new(q, rng.next_bits(nv));
        let mut temp = cfg.t_initial;
        for _sweep in 0..cfg.sweeps {
            let t = temp.max(cfg.t_final);
            for _ in 0..nv {
                let i = rng.next_index(nv);
                let delta = state.flip_delta(i);
                let accept = delta <= 0.0 || rng.next_f64() < (-delta / t).exp();
                if accept {
                    state.flip(i);
                }
            }
            temp *= cfg.ratio;
        }
        let mut sample = Sample::evaluate(q, state.bits, 0.0)?;
        sample.wall_time = read_start.elapsed().as_secs_f64();
        Ok(sample)
    })
}

/// Pick the move for one tabu iteration: the admissible (non-tabu or
/// aspirational) flip with the lowest resulting energy, ties to the lowest
/// index; with every move tabu and none aspirational, the best tabu move
/// keeps the walk going.
fn select_tabu_move(
    deltas: &[f64],
    current_energy: f64,
    best_energy: f64,
    is_tabu: &[bool],
) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for (i, &delta) in deltas.iter().enumerate() {
        let resulting = current_energy + delta;
        let admissible = !is_tabu[i] || resulting < best_energy;
        if admissible && best.is_none_or(|(e, _)| resulting < e) {
            best = Some((resulting, i));
        }
    }
    if let Some((_, i)) = best {
        return i;
    }
    let mut fallback = (f64::INFINITY, 0);
    for (i, &delta) in deltas.iter().enumerate() {
        let resulting = current_energy + delta;
        if resulting < fallback.0 {
            fallback = (resulting, i);
        }
    }
    fallback.1
}

/// Best-improvement tabu search over Hamming-1 moves with a FIFO tabu list
/// and a best-energy aspiration criterion; the best visited state of each
/// read is its sample.
pub fn tabu_search(q: &Qubo, cfg: &TabuConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let nv = q.num_vars();
    run_reads(cfg.n_reads, "tabu", cfg.seed, |k| {
        let read_start = std::time::Instant::now();
        let mut rng = SplitMix64::stream(cfg.seed, k);
        let mut state = FieldState::new(q, rng.next_bits(nv));
        let mut energy = qubo_energy(q, &state.bits)?;
        let mut best_bits = state.bits.clone();
        let mut best_energy = energy;

        let mut is_tabu = vec![false; nv];
        let mut fifo = std::collections::VecDeque::with_capacity(cfg.tenure + 1);
        let mut deltas = vec![0.0; nv];

        for _ in 0..cfg.max_iters {
            for (i, delta) in deltas.iter_mut().enumerate() {
                *delta = state.flip_delta(i);
            }
            let mv = select_tabu_move(&deltas, energy, best_energy, &is_tabu);
            energy += deltas[mv];
            state.flip(mv);
            fifo.push_back(mv);
            is_tabu[mv] = true;
            if fifo.len() > cfg.tenure {
                let old = fifo.pop_front().unwrap();
                if !fifo.contains(&old) {
                    is_tabu[old] = false;
                }
            }
            if energy < best_energy {
                best_energy = energy;
                best_bits.copy_from_slice(&state.bits);
            }
        }
        let mut sample = Sample::evaluate(q, best_bits, 0.0)?;
        sample.wall_time = read_start.elapsed().as_secs_f64();
        Ok(sample)
    })
}

/// Tamper check: every stored sample energy and penalty count must match a
/// re-evaluation of its bitstring.
pub fn verify_batch(q: &Qubo, batch: &SampleBatch) -> Result<()> {
    if batch.samples.len() != batch.n_reads {
        return Err(Error::Shape(format!(
            "batch holds {} samples but claims {} reads",
            batch.samples.len(),
            batch.n_reads
        )));
    }
    for (k, sample) in batch.samples.iter().enumerate() {
        let energy = qubo_energy(q, &sample.bits)?;
        if (energy - sample.energy).abs() > 1e-9 * energy.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "sample {k}: stored energy {} != recomputed {energy}",
                sample.energy
            )));
        }
        let penalty = penalty_count(&sample.bits, q.n())?;
        if penalty != sample.penalty_count {
            return Err(Error::Domain(format!(
                "sample {k}: stored penalty {} != recomputed {penalty}",
                sample.penalty_count
            )));
        }
    }
    Ok(())
}
