//! Exact baselines: Hungarian assignment, permutation branch-and-bound and
//! exhaustive hypercube enumeration.

use crate::error::{Error, Result};
use crate::matching::WeightMatrix;
use crate::qubo::{qubo_energy, Assignment, Qubo};

/// Permutations beyond this size are refused by the branch-and-bound oracle.
pub const BRUTE_FORCE_ASSIGNMENT_CAP: usize = 12;
/// Hypercube enumeration is capped at 2^20 states.
pub const BRUTE_FORCE_QUBO_CAP: usize = 20;

/// Minimum-cost perfect matching via shortest augmenting paths with dual
/// potentials, O(n^3). Ties during augmentation resolve to the smallest
/// column index, so the returned assignment is deterministic.
pub fn hungarian(w: &WeightMatrix) -> Result<(Assignment, f64)> {
    if w.entries().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("cost matrix has non-finite entries".into()));
    }
    let n = w.n();

    // job[c] = row assigned to column c; column n is the virtual start.
    let mut job = vec![usize::MAX; n + 1];
    let mut row_pot = vec![0.0; n];
    let mut col_pot = vec![0.0; n + 1];

    for row in 0..n {
        let mut cur_col = n;
        job[cur_col] = row;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prev = vec![n; n + 1];
        let mut visited = vec![false; n + 1];

        while job[cur_col] != usize::MAX {
            visited[cur_col] = true;
            let r = job[cur_col];
            let mut delta = f64::INFINITY;
            let mut next_col = n;
            for c in 0..n {
                if !visited[c] {
                    let reduced = w.get(r, c) - row_pot[r] - col_pot[c];
                    if reduced < min_to[c] {
                        min_to[c] = reduced;
                        prev[c] = cur_col;
                    }
                    if min_to[c] < delta {
                        delta = min_to[c];
                        next_col = c;
                    }
                }
            }
            for c in 0..=n {
                if visited[c] {
                    if job[c] != usize::MAX {
                        row_pot[job[c]] += delta;
                    }
                    col_pot[c] -= delta;
                } else {
                    min_to[c] -= delta;
                }
            }
            cur_col = next_col;
        }
        // Walk the alternating path back, reassigning columns.
        while cur_col != n {
            let p = prev[cur_col];
            job[cur_col] = job[p];
            cur_col = p;
        }
    }

    let mut perm = vec![0usize; n];
    for c in 0..n {
        perm[job[c]] = c;
    }
    let assignment = Assignment::new(perm)?;
    let cost = assignment.cost(w);
    Ok((assignment, cost))
}

/// Exhaustive minimum over all permutations with branch-and-bound pruning
/// (partial cost plus the sum of unassigned row minima). Rows are explored
/// in order with columns ascending, and only strict improvements replace
/// the incumbent, so the result is the lexicographically smallest optimal
/// permutation.
pub fn brute_force_assignment(w: &WeightMatrix) -> Result<(Assignment, f64)> {
    let n = w.n();
    if n > BRUTE_FORCE_ASSIGNMENT_CAP {
        return Err(Error::Cap(format!(
            "n = {n} exceeds the brute-force cap of {BRUTE_FORCE_ASSIGNMENT_CAP}"
        )));
    }
    if w.entries().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("cost matrix has non-finite entries".into()));
    }

    // suffix_min[s] = sum of row minima for rows s..n.
    let mut suffix_min = vec![0.0; n + 1];
    for s in (0..n).rev() {
        let row_min = (0..n).map(|b| w.get(s, b)).fold(f64::INFINITY, f64::min);
        suffix_min[s] = suffix_min[s + 1] + row_min;
    }

    struct Search<'a> {
        w: &'a WeightMatrix,
        n: usize,
        suffix_min: Vec<f64>,
        used: Vec<bool>,
        current: Vec<usize>,
        best_perm: Vec<usize>,
        best_cost: f64,
    }

    impl Search<'_> {
        fn descend(&mut self, row: usize, cost: f64) {
            if row == self.n {
                if cost < self.best_cost {
                    self.best_cost = cost;
                    self.best_perm = self.current.clone();
                }
                return;
            }
            if cost + self.suffix_min[row] >= self.best_cost {
                return;
            }
            for col in 0..self.n {
                if !self.used[col] {
                    self.used[col] = true;
                    self.current.push(col);
                    self.descend(row + 1, cost + self.w.get(row, col));
                    self.current.pop();
                    self.used[col] = false;
                }
            }
        }
    }

    let mut search = Search {
        w,
        n,
        suffix_min,
        used: vec![false; n],
        current: Vec::with_capacity(n),
        best_perm: (0..n).collect(),
        best_cost: f64::INFINITY,
    };
    search.descend(0, 0.0);

    let assignment = Assignment::new(search.best_perm)?;
    let cost = assignment.cost(w);
    Ok((assignment, cost))
}

/// Global minimum of `x^T Q x` over all bitstrings, walked in Gray-code
/// order with incremental energy updates. Only strict improvements replace
/// the incumbent, so a zero matrix returns the all-zeros state.
pub fn brute_force_qubo(q: &Qubo) -> Result<(Vec<u8>, f64)> {
    let nv = q.num_vars();
    if nv > BRUTE_FORCE_QUBO_CAP {
        return Err(Error::Cap(format!(
            "N = {nv} exceeds the hypercube cap of 2^{BRUTE_FORCE_QUBO_CAP}"
        )));
    }
    let mut bits = vec![0u8; nv];
    let mut energy = 0.0;
    let mut best_bits = bits.clone();
    let mut best_energy = 0.0;

    for k in 1u64..(1u64 << nv) {
        // Gray codes of consecutive integers differ in exactly one bit.
        let flip = k.trailing_zeros() as usize;
        energy += q.flip_delta(&bits, flip);
        bits[flip] ^= 1;
        if energy < best_energy {
            best_energy = energy;
            best_bits.copy_from_slice(&bits);
        }
    }
    // Incremental updates drift; report the exact energy of the minimizer.
    let exact = qubo_energy(q, &best_bits)?;
    Ok((best_bits, exact))
}
