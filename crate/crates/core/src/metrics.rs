//! Quality metrics of a sample batch against an exact reference energy.
//!
//! All energies live in the QUBO frame (`x^T Q x`), so the reference for a
//! matching instance is the Hungarian cost minus the constant offset
//! `2 n lambda3`. "Success" always requires feasibility; the exact and
//! tolerance-based counts differ only in the energy window.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::SampleBatch;

/// Relative window of the exact-success count.
pub const EXACT_MATCH_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub e_star: f64,
    pub e_best: f64,
    pub e_mean: f64,
    pub gap_best: f64,
    pub gap_mean: f64,
    /// Population variance of the batch energies.
    pub variance: f64,
    pub p_feas: f64,
    pub p_succ_exact: f64,
    pub p_succ_tol: f64,
    /// Samples-to-solution, `1 / p_succ_tol`; infinite when nothing
    /// succeeded.
    #[serde(with = "infinite_f64")]
    pub sts: f64,
    /// `sts` times the batch's mean seconds per sample.
    #[serde(with = "infinite_f64")]
    pub tts_seconds: f64,
    pub n_reads: usize,
    pub n_unique: usize,
    pub n_feas: usize,
    pub n_succ_exact: usize,
    pub n_succ_tol: usize,
    /// Set when `e_star` is zero and gaps fall back to absolute differences.
    pub gaps_absolute: bool,
}

/// Evaluate the full quality battery for one batch.
pub fn evaluate_batch(batch: &SampleBatch, e_star: f64, rel_tol: f64) -> Result<MetricsReport> {
    if batch.samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !e_star.is_finite() {
        return Err(Error::Domain(format!(
            "reference energy {e_star} not finite"
        )));
    }
    if !rel_tol.is_finite() || rel_tol < 0.0 {
        return Err(Error::Config(format!("rel_tol {rel_tol} must be >= 0")));
    }

    let n = batch.samples.len();
    let mut e_best = f64::INFINITY;
    let mut sum = 0.0;
    for s in &batch.samples {
        e_best = e_best.min(s.energy);
        sum += s.energy;
    }
    let e_mean = sum / n as f64;
    let variance = batch
        .samples
        .iter()
        .map(|s| (s.energy - e_mean).powi(2))
        .sum::<f64>()
        / n as f64;

    let gaps_absolute = e_star == 0.0;
    let gap = |e: f64| {
        if gaps_absolute {
            e - e_star
        } else {
            (e - e_star) / e_star.abs()
        }
    };

    let tol_window = rel_tol * e_star.abs().max(if gaps_absolute { 1.0 } else { 0.0 });
    let exact_window =
        EXACT_MATCH_REL_TOL * e_star.abs().max(if gaps_absolute { 1.0 } else { 0.0 });

    let mut n_feas = 0;
    let mut n_succ_exact = 0;
    let mut n_succ_tol = 0;
    let mut unique = HashSet::new();
    for s in &batch.samples {
        unique.insert(s.bits.clone());
        if s.is_feasible() {
            n_feas += 1;
            let dev = (s.energy - e_star).abs();
            if dev <= tol_window {
                n_succ_tol += 1;
            }
            if dev <= exact_window {
                n_succ_exact += 1;
            }
        }
    }

    let p_succ_tol = n_succ_tol as f64 / n as f64;
    let sts = if p_succ_tol > 0.0 {
        1.0 / p_succ_tol
    } else {
        f64::INFINITY
    };

    Ok(MetricsReport {
        e_star,
        e_best,
        e_mean,
        gap_best: gap(e_best),
        gap_mean: gap(e_mean),
        variance,
        p_feas: n_feas as f64 / n as f64,
        p_succ_exact: n_succ_exact as f64 / n as f64,
        p_succ_tol,
        sts,
        tts_seconds: tts(sts, batch.mean_sample_seconds()),
        n_reads: n,
        n_unique: unique.len(),
        n_feas,
        n_succ_exact,
        n_succ_tol,
        gaps_absolute,
    })
}

/// Expected wall time to one success: samples-to-solution times seconds per
/// sample. Infinity propagates, even against a zero sample time.
pub fn tts(sts: f64, mean_sample_seconds: f64) -> f64 {
    if sts.is_infinite() {
        return f64::INFINITY;
    }
    sts * mean_sample_seconds
}

/// JSON codec for columns that are legitimately infinite: plain numbers
/// when finite, the strings "inf"/"-inf" otherwise (serde_json would
/// silently write `null` for non-finite floats).
pub mod infinite_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            ser.serialize_f64(*v)
        } else if *v > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        struct NumOrInf;
        impl Visitor<'_> for NumOrInf {
            type Value = f64;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"inf\"/\"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => other.parse().map_err(E::custom),
                }
            }
        }
        de.deserialize_any(NumOrInf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::Sample;

    fn batch_of(samples: Vec<Sample>) -> SampleBatch {
        SampleBatch {
            n_reads: samples.len(),
            samples,
            solver_name: "test".into(),
            seed: 0,
            total_wall_time: 0.0,
        }
    }

    fn sample(bits: Vec<u8>, energy: f64, penalty: usize) -> Sample {
        Sample {
            bits,
            energy,
            penalty_count: penalty,
            wall_time: 0.0,
        }
    }

    #[test]
    fn all_hits_batch() {
        let b = batch_of(vec![
            sample(vec![1, 0, 0, 1], -5.0, 0),
            sample(vec![1, 0, 0, 1], -5.0, 0),
            sample(vec![0, 1, 1, 0], -5.0, 0),
            sample(vec![1, 0, 0, 1], -5.0, 0),
        ]);
        let r = evaluate_batch(&b, -5.0, 1e-6).unwrap();
        assert_eq!(r.p_succ_tol, 1.0);
        assert_eq!(r.p_succ_exact, 1.0);
        assert_eq!(r.sts, 1.0);
        assert_eq!(r.gap_best, 0.0);
        assert_eq!(r.gap_mean, 0.0);
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.n_unique, 2);
    }

    #[test]
    fn quarter_success_gives_sts_four() {
        let b = batch_of(vec![
            sample(vec![1, 0, 0, 1], -5.0, 0),
            sample(vec![0, 0, 0, 0], 0.0, 4),
            sample(vec![1, 1, 0, 0], -1.0, 2),
            sample(vec![1, 0, 1, 0], -2.0, 4),
        ]);
        let r = evaluate_batch(&b, -5.0, 1e-6).unwrap();
        assert_eq!(r.p_succ_tol, 0.25);
        assert_eq!(r.sts, 4.0);
        assert_eq!(r.n_feas, 1);
    }

    #[test]
    fn infeasible_batch_has_infinite_sts() {
        let b = batch_of(vec![
            sample(vec![0, 0, 0, 0], 0.0, 4),
            sample(vec![1, 1, 0, 0], -1.0, 2),
        ]);
        let r = evaluate_batch(&b, -5.0, 1e-6).unwrap();
        assert_eq!(r.p_feas, 0.0);
        assert_eq!(r.p_succ_tol, 0.0);
        assert!(r.sts.is_infinite());
        assert!(r.tts_seconds.is_infinite());
    }

    #[test]
    fn feasible_at_reference_counts_even_when_degenerate() {
        // Two distinct bitstrings at the reference energy both count.
        let b = batch_of(vec![
            sample(vec![1, 0, 0, 1], -5.0, 0),
            sample(vec![0, 1, 1, 0], -5.0, 0),
        ]);
        let r = evaluate_batch(&b, -5.0, 1e-6).unwrap();
        assert_eq!(r.n_succ_exact, 2);
    }

    #[test]
    fn zero_reference_switches_to_absolute_gaps() {
        let b = batch_of(vec![sample(vec![1, 0, 0, 1], 3.0, 0)]);
        let r = evaluate_batch(&b, 0.0, 1e-6).unwrap();
        assert!(r.gaps_absolute);
        assert_eq!(r.gap_best, 3.0);
    }

    #[test]
    fn ordering_invariants() {
        let b = batch_of(vec![
            sample(vec![1, 0, 0, 1], -5.0, 0),
            sample(vec![0, 1, 1, 0], -4.9999999, 0),
            sample(vec![0, 0, 0, 0], 0.0, 4),
        ]);
        let r = evaluate_batch(&b, -5.0, 1e-4).unwrap();
        assert!(r.p_succ_exact <= r.p_succ_tol);
        assert!(r.p_succ_tol <= r.p_feas);
        assert_eq!(r.n_succ_tol, 2);
        assert_eq!(r.n_succ_exact, 1);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let b = batch_of(vec![]);
        assert!(matches!(
            evaluate_batch(&b, -1.0, 1e-6),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn tts_propagates_infinity() {
        assert_eq!(tts(4.0, 0.5), 2.0);
        assert!(tts(f64::INFINITY, 0.5).is_infinite());
        assert_eq!(tts(1.0, 0.0), 0.0);
    }

    #[test]
    fn infinite_sts_survives_json() {
        let b = batch_of(vec![sample(vec![0, 0, 0, 0], 0.0, 4)]);
        let r = evaluate_batch(&b, -5.0, 1e-6).unwrap();
        assert!(r.sts.is_infinite());
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"inf\""));
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert!(back.sts.is_infinite());
        assert_eq!(back.e_best, r.e_best);
    }
}
