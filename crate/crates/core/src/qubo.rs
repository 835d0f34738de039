//! Penalized QUBO built from a weight matrix.
//!
//! The matching variables are vectorized row-major: pair `(s, b)` becomes
//! variable `e = n * s + b`. Violating a row or column one-hot constraint
//! costs `lambda3` per squared penalty term; expanding those squares over
//! binary variables yields the symmetric matrix
//!
//! `Q = diag(w - 4*lambda3) + lambda3 * (I (x) J + J (x) I)`
//!
//! with `I`/`J` the n-by-n identity and all-ones matrices, plus a dropped
//! additive constant `2 * n * lambda3` kept in `const_offset`. For every
//! permutation bitstring, `x^T Q x + const_offset` equals the assignment
//! cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::WeightMatrix;

/// Symmetric QUBO matrix with its penalty weight and constant offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qubo {
    n: usize,
    lambda3: f64,
    const_offset: f64,
    /// Dense row-major N x N matrix, N = n^2.
    q: Vec<f64>,
}

impl Qubo {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of binary variables, `n^2`.
    pub fn num_vars(&self) -> usize {
        self.n * self.n
    }

    pub fn lambda3(&self) -> f64 {
        self.lambda3
    }

    /// The additive constant `2 * n * lambda3` dropped when the penalized
    /// objective is written as `x^T Q x`.
    pub fn const_offset(&self) -> f64 {
        self.const_offset
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.num_vars() + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    /// Energy change of flipping bit `i`:
    /// `(1 - 2 x_i) * (Q_ii + 2 * sum_{j != i} Q_ij x_j)`.
    pub fn flip_delta(&self, bits: &[u8], i: usize) -> f64 {
        let nv = self.num_vars();
        let row = &self.q[i * nv..(i + 1) * nv];
        let mut local = 0.0;
        for (j, (&qij, &xj)) in row.iter().zip(bits).enumerate() {
            if j != i && xj == 1 {
                local += qij;
            }
        }
        let sign = 1.0 - 2.0 * bits[i] as f64;
        sign * (row[i] + 2.0 * local)
    }

    /// Equivalent upper-triangular convention: off-diagonal mass folded
    /// into `j > i` entries (doubled), diagonal unchanged. Energies under
    /// `sum_i U_ii x_i + sum_{i<j} U_ij x_i x_j` match `x^T Q x`.
    pub fn upper_triangular(&self) -> Vec<f64> {
        let nv = self.num_vars();
        let mut u = vec![0.0; nv * nv];
        for i in 0..nv {
            u[i * nv + i] = self.entry(i, i);
            for j in (i + 1)..nv {
                u[i * nv + j] = 2.0 * self.entry(i, j);
            }
        }
        u
    }
}

/// Penalty weight from the spread of the cost matrix:
/// `lambda3 = safety * n * (max w - min w)`, with a positive fallback when
/// the matrix is constant so the penalty never degenerates to zero.
pub fn calibrate_penalty(w: &WeightMatrix, safety: f64) -> Result<f64> {
    if !safety.is_finite() || safety <= 1.0 {
        return Err(Error::Config(format!("safety factor {safety} must be > 1")));
    }
    let (min, max) = w.min_max();
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::Domain("non-finite weights".into()));
    }
    if max == min {
        Ok(safety * max.abs().max(1.0))
    } else {
        Ok(safety * w.n() as f64 * (max - min))
    }
}

/// Assemble the symmetric QUBO for a weight matrix and penalty weight.
pub fn build_qubo(w: &WeightMatrix, lambda3: f64) -> Result<Qubo> {
    if !lambda3.is_finite() || lambda3 <= 0.0 {
        return Err(Error::Config(format!("lambda3 {lambda3} must be positive")));
    }
    let n = w.n();
    let nv = n * n;
    let mut q = vec![0.0; nv * nv];
    for e in 0..nv {
        let (s, b) = (e / n, e % n);
        for e2 in 0..nv {
            let (s2, b2) = (e2 / n, e2 % n);
            let same_row = s == s2;
            let same_col = b == b2;
            q[e * nv + e2] = if e == e2 {
                // Diagonal of the tensor form: both Kronecker terms hit.
                (w.get(s, b) - 4.0 * lambda3) + 2.0 * lambda3
            } else if same_row || same_col {
                lambda3
            } else {
                0.0
            };
        }
    }
    Ok(Qubo {
        n,
        lambda3,
        const_offset: 2.0 * n as f64 * lambda3,
        q,
    })
}

/// `x^T Q x` over the canonical symmetric matrix.
pub fn qubo_energy(q: &Qubo, bits: &[u8]) -> Result<f64> {
    let nv = q.num_vars();
    if bits.len() != nv {
        return Err(Error::Shape(format!(
            "bitstring length {} != {}",
            bits.len(),
            nv
        )));
    }
    let ones: Vec<usize> = (0..nv).filter(|&i| bits[i] == 1).collect();
    let mut e = 0.0;
    for (k, &i) in ones.iter().enumerate() {
        e += q.entry(i, i);
        for &j in &ones[k + 1..] {
            e += 2.0 * q.entry(i, j);
        }
    }
    Ok(e)
}

fn row_col_counts(bits: &[u8], n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if bits.len() != n * n {
        return Err(Error::Shape(format!(
            "bitstring length {} != n^2 = {}",
            bits.len(),
            n * n
        )));
    }
    let mut rows = vec![0usize; n];
    let mut cols = vec![0usize; n];
    for (e, &x) in bits.iter().enumerate() {
        if x == 1 {
            rows[e / n] += 1;
            cols[e % n] += 1;
        }
    }
    Ok((rows, cols))
}

/// Number of violated one-hot constraints: rows plus columns whose
/// popcount differs from one. Zero iff `bits` is a permutation matrix.
pub fn penalty_count(bits: &[u8], n: usize) -> Result<usize> {
    let (rows, cols) = row_col_counts(bits, n)?;
    Ok(rows.iter().filter(|&&c| c != 1).count() + cols.iter().filter(|&&c| c != 1).count())
}

/// Violated row constraints only (the constraints a block one-hot encoding
/// satisfies by construction).
pub fn row_violations(bits: &[u8], n: usize) -> Result<usize> {
    let (rows, _) = row_col_counts(bits, n)?;
    Ok(rows.iter().filter(|&&c| c != 1).count())
}

/// A feasible matching: surfer `s` drafts behind breaker `perm[s]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    perm: Vec<usize>,
}

impl Assignment {
    /// Validates that `perm` is a bijection on `0..n`.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &b in &perm {
            if b >= n || seen[b] {
                return Err(Error::Domain(format!("perm {perm:?} is not a bijection")));
            }
            seen[b] = true;
        }
        Ok(Self { perm })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn breaker_for(&self, s: usize) -> usize {
        self.perm[s]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Row-major permutation bitstring of length `n^2`.
    pub fn to_bits(&self) -> Vec<u8> {
        let n = self.perm.len();
        let mut bits = vec![0u8; n * n];
        for (s, &b) in self.perm.iter().enumerate() {
            bits[n * s + b] = 1;
        }
        bits
    }

    /// Assignment cost under a weight matrix.
    pub fn cost(&self, w: &WeightMatrix) -> f64 {
        self.perm
            .iter()
            .enumerate()
            .map(|(s, &b)| w.get(s, b))
            .sum()
    }
}

/// Rows/columns whose one-hot constraint fails, with their popcounts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibleReport {
    pub bad_rows: Vec<(usize, usize)>,
    pub bad_cols: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecodeOutcome {
    Feasible(Assignment),
    Infeasible(InfeasibleReport),
}

/// Decode a bitstring into an assignment, or report which constraints fail.
pub fn decode(bits: &[u8], n: usize) -> Result<DecodeOutcome> {
    let (rows, cols) = row_col_counts(bits, n)?;
    let bad_rows: Vec<_> = rows
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 1)
        .map(|(i, &c)| (i, c))
        .collect();
    let bad_cols: Vec<_> = cols
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 1)
        .map(|(i, &c)| (i, c))
        .collect();
    if !bad_rows.is_empty() || !bad_cols.is_empty() {
        return Ok(DecodeOutcome::Infeasible(InfeasibleReport {
            bad_rows,
            bad_cols,
        }));
    }
    let mut perm = vec![0usize; n];
    for (e, &x) in bits.iter().enumerate() {
        if x == 1 {
            perm[e / n] = e % n;
        }
    }
    Ok(DecodeOutcome::Feasible(Assignment::new(perm)?))
}

/// One raw solver read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(with = "bitstring")]
    pub bits: Vec<u8>,
    pub energy: f64,
    pub penalty_count: usize,
    pub wall_time: f64,
}

impl Sample {
    pub fn evaluate(q: &Qubo, bits: Vec<u8>, wall_time: f64) -> Result<Self> {
        let energy = qubo_energy(q, &bits)?;
        let penalty = penalty_count(&bits, q.n())?;
        Ok(Self {
            bits,
            energy,
            penalty_count: penalty,
            wall_time,
        })
    }

    pub fn is_feasible(&self) -> bool {
        self.penalty_count == 0
    }
}

/// Serialize bit vectors as compact "0101..." strings.
pub(crate) mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        let s: String = bits
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect();
        ser.serialize_str(&s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(serde::de::Error::custom(format!("bad bit {other:?}"))),
            })
            .collect()
    }
}
