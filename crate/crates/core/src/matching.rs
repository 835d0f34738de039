//! Edge weights of the bipartite surfer-breaker graph.
//!
//! The weight of pairing surfer `s` with breaker `b` is
//! `c_s * V_b^2 * (1 - f(C_b - c_s)) + lambda1 * dT + lambda2 * dV`,
//! where `f` is the slipstream efficiency and `dT`/`dV` are the timing and
//! velocity mismatches after the surfer's flexibility window is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Breaker, Instance, Surfer, CLASS_DIFF_LIMIT};

/// Slipstream efficiency `f(d) = (d + 4) / 24` for a class difference
/// `d = C_b - c_s` in `[-4, 4]`; ranges from 0 to 1/3.
pub fn slipstream_efficiency(d: i64) -> Result<f64> {
    if d.abs() > CLASS_DIFF_LIMIT {
        return Err(Error::Domain(format!(
            "class difference {d} outside [-4, 4]"
        )));
    }
    Ok((d + 4) as f64 / 24.0)
}

/// Timing mismatch: the full gap `|t_s - T_b|` once it exceeds half the
/// surfer's flexibility window, zero otherwise.
pub fn time_mismatch(surfer: &Surfer, breaker: &Breaker) -> f64 {
    let gap = (surfer.departure - breaker.departure).abs();
    if gap > surfer.dt_flex / 2.0 {
        gap
    } else {
        0.0
    }
}

/// Velocity mismatch, same rule with `(v_s, V_b, dv_flex)`.
pub fn velocity_mismatch(surfer: &Surfer, breaker: &Breaker) -> f64 {
    let gap = (surfer.pref_velocity - breaker.velocity).abs();
    if gap > surfer.dv_flex / 2.0 {
        gap
    } else {
        0.0
    }
}

pub fn edge_weight(surfer: &Surfer, breaker: &Breaker, lambda1: f64, lambda2: f64) -> Result<f64> {
    let f = slipstream_efficiency(breaker.class_id - surfer.class_id)?;
    let aero = surfer.class_id as f64 * breaker.velocity * breaker.velocity * (1.0 - f);
    Ok(aero
        + lambda1 * time_mismatch(surfer, breaker)
        + lambda2 * velocity_mismatch(surfer, breaker))
}

/// Dense n-by-n weight matrix; row = surfer, column = breaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    weights: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
}

impl WeightMatrix {
    /// Wrap a raw row-major matrix (used by tests and file loaders).
    pub fn from_raw(n: usize, weights: Vec<f64>, lambda1: f64, lambda2: f64) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {} weights for n={n}, got {}",
                n * n,
                weights.len()
            )));
        }
        let scale_ok = |l: f64| l.is_finite() && l >= 0.0;
        if !scale_ok(lambda1) || !scale_ok(lambda2) {
            return Err(Error::Domain("lambda1 and lambda2 must be >= 0".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("weight matrix has non-finite entries".into()));
        }
        Ok(Self {
            n,
            weights,
            lambda1,
            lambda2,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, b: usize) -> f64 {
        self.weights[s * self.n + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.weights
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &w in &self.weights {
            min = min.min(w);
            max = max.max(w);
        }
        (min, max)
    }
}

/// Evaluate the edge weight over all `(s, b)` pairs of an instance.
pub fn weight_matrix(instance: &Instance, lambda1: f64, lambda2: f64) -> Result<WeightMatrix> {
    let n = instance.n();
    let mut weights = Vec::with_capacity(n * n);
    for s in instance.surfers() {
        for b in instance.breakers() {
            weights.push(edge_weight(s, b, lambda1, lambda2)?);
        }
    }
    WeightMatrix::from_raw(n, weights, lambda1, lambda2)
}
