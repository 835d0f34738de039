//! Shared oracles for the integration suites. Everything here recomputes
//! results through routes that are independent of the library kernels they
//! check: dense Taylor matrix exponentials instead of spectral closed
//! forms, full-hypercube tensor evolution instead of subspace evolution,
//! and direct textbook formulas instead of incremental updates.
//!
//! Each integration test binary compiles this module and uses a subset.
#![allow(dead_code)]

use num_complex::Complex64;

use platoon_core::ising::IsingModel;
use platoon_core::matching::WeightMatrix;
use platoon_core::model::{generate_instance, GenRanges, Instance};
use platoon_core::qubo::Qubo;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Canonical generated stand-ins for the published instances: one per
/// size n in 3..=12, fixed seeds.
pub fn acceptance_instance(n: usize) -> Instance {
    generate_instance(n, 1000 + n as u64, &GenRanges::default()).unwrap()
}

/// Dense matrix product, row-major square matrices.
pub fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

/// Matrix exponential by scaling-and-squaring with a Taylor series.
pub fn matexp(a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let norm: f64 = (0..dim)
        .map(|i| (0..dim).map(|j| a[i * dim + j].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2.0f64.powi(squarings as i32);
    let scaled: Vec<Complex64> = a.iter().map(|v| v / scale).collect();

    let mut result: Vec<Complex64> = (0..dim * dim)
        .map(|idx| if idx % (dim + 1) == 0 { ONE } else { ZERO })
        .collect();
    let mut term = result.clone();
    for m in 1..=64 {
        term = matmul(&term, &scaled, dim);
        for t in term.iter_mut() {
            *t /= m as f64;
        }
        let mut biggest = 0.0f64;
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
            biggest = biggest.max(t.norm());
        }
        if biggest < 1e-30 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, dim);
    }
    result
}

/// `(1/(S-1)) * sum_{a<b} (X_a X_b + Y_a Y_b)` on S qubits, as a dense
/// 2^S x 2^S matrix built from the Pauli hopping elements.
pub fn dense_block_xy(s: usize) -> Vec<Complex64> {
    let dim = 1usize << s;
    let mut h = vec![ZERO; dim * dim];
    let norm = 1.0 / (s as f64 - 1.0);
    for u in 0..dim {
        for a in 0..s {
            for b in (a + 1)..s {
                let ua = (u >> a) & 1;
                let ub = (u >> b) & 1;
                // XX flips both bits with +1; YY flips with -1 on equal
                // bits and +1 on unequal bits. They cancel unless the two
                // bits differ, where the sum is 2.
                if ua != ub {
                    let v = u ^ (1 << a) ^ (1 << b);
                    h[v * dim + u] += Complex64::new(2.0 * norm, 0.0);
                }
            }
        }
    }
    h
}

/// Restriction of the block XY Hamiltonian to the one-hot subspace: pure
/// hopping with a constant rate.
pub fn restricted_block_xy(s: usize) -> Vec<Complex64> {
    let rate = 2.0 / (s as f64 - 1.0);
    let mut h = vec![ZERO; s * s];
    for a in 0..s {
        for b in 0..s {
            if a != b {
                h[a * s + b] = Complex64::new(rate, 0.0);
            }
        }
    }
    h
}

/// Full 2^(n*n)-qubit reference simulation of the CE circuit: per-block
/// one-hot initial states, diagonal phases from the normalized Ising
/// energies, and per-block mixers applied as dense 2^n x 2^n exponentials.
/// Returns the measurement probabilities over every hypercube state.
pub fn full_ce_reference(
    q: &Qubo,
    model: &IsingModel,
    gamma: f64,
    beta: f64,
    p: usize,
) -> Vec<f64> {
    let n = q.n();
    let n_vars = n * n;
    let states = 1usize << n_vars;
    let block_dim = 1usize << n;

    let energies: Vec<f64> = (0..states)
        .map(|idx| {
            let bits: Vec<u8> = (0..n_vars).map(|v| ((idx >> v) & 1) as u8).collect();
            model.energy_of_bits(&bits).unwrap()
        })
        .collect();

    // Initial state: every block in (1/sqrt(n)) sum_j |e_j>.
    let amp = (1.0 / (n as f64).sqrt()).powi(n as i32);
    let mut psi = vec![ZERO; states];
    'outer: for (idx, slot) in psi.iter_mut().enumerate() {
        for s in 0..n {
            let block = (idx >> (n * s)) & (block_dim - 1);
            if (block as u64).count_ones() != 1 {
                continue 'outer;
            }
        }
        *slot = Complex64::new(amp, 0.0);
    }

    // exp(-i beta H_XY) on one block, from the dense Taylor exponential.
    let h = dense_block_xy(n);
    let a: Vec<Complex64> = h.iter().map(|v| v * Complex64::new(0.0, -beta)).collect();
    let u = matexp(&a, block_dim);

    let mut gathered = vec![ZERO; block_dim];
    for _ in 0..p {
        for (a, &e) in psi.iter_mut().zip(&energies) {
            *a *= Complex64::from_polar(1.0, -gamma * e);
        }
        for s in 0..n {
            let shift = n * s;
            let block_mask = (block_dim - 1) << shift;
            for rest in 0..states {
                if rest & block_mask != 0 {
                    continue;
                }
                for (g, slot) in gathered.iter_mut().enumerate() {
                    *slot = psi[rest | (g << shift)];
                }
                for g in 0..block_dim {
                    let mut acc = ZERO;
                    for (gp, &val) in gathered.iter().enumerate() {
                        acc += u[g * block_dim + gp] * val;
                    }
                    psi[rest | (g << shift)] = acc;
                }
            }
        }
    }
    psi.iter().map(|a| a.norm_sqr()).collect()
}

/// Direct evaluation of the penalized matching objective: selected weights
/// plus lambda3 times both families of squared one-hot penalties.
pub fn penalized_objective(w: &WeightMatrix, lambda3: f64, bits: &[u8]) -> f64 {
    let n = w.n();
    let mut total = 0.0;
    for (e, &x) in bits.iter().enumerate() {
        if x == 1 {
            total += w.get(e / n, e % n);
        }
    }
    for s in 0..n {
        let row: i64 = (0..n).map(|b| bits[n * s + b] as i64).sum();
        total += lambda3 * ((1 - row) * (1 - row)) as f64;
    }
    for b in 0..n {
        let col: i64 = (0..n).map(|s| bits[n * s + b] as i64).sum();
        total += lambda3 * ((1 - col) * (1 - col)) as f64;
    }
    total
}

/// Materialized tensor expression `diag(w - 4 L) + L * (I (x) J + J (x) I)`
/// with n x n Kronecker factors.
pub fn tensor_form_qubo(w: &WeightMatrix, lambda3: f64) -> Vec<f64> {
    let n = w.n();
    let nv = n * n;
    let eye = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let ones = |_i: usize, _j: usize| 1.0;

    let mut kron_sum = vec![0.0; nv * nv];
    for s in 0..n {
        for b in 0..n {
            for s2 in 0..n {
                for b2 in 0..n {
                    let row = n * s + b;
                    let col = n * s2 + b2;
                    kron_sum[row * nv + col] = eye(s, s2) * ones(b, b2) + ones(s, s2) * eye(b, b2);
                }
            }
        }
    }

    let mut out = vec![0.0; nv * nv];
    for row in 0..nv {
        for col in 0..nv {
            let diag_term = if row == col {
                w.get(row / n, row % n) - 4.0 * lambda3
            } else {
                0.0
            };
            out[row * nv + col] = diag_term + lambda3 * kron_sum[row * nv + col];
        }
    }
    out
}

/// Every bitstring of length `len`, as an iterator of Vec<u8>.
pub fn all_bitstrings(len: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u64..(1u64 << len)).map(move |code| (0..len).map(|i| ((code >> i) & 1) as u8).collect())
}
