//! Ising form of the QUBO, for spin-based solvers and the QAOA simulators.
//!
//! Bits map to spins through `z_i = 1 - 2 x_i`. Expanding `x^T Q x` in the
//! spins gives fields `h_i = -Q_ii/2 - sum_{j != i} Q_ij / 2`, couplings
//! `J_ij = Q_ij / 2` (i < j) and an identity part collected in
//! `energy_offset`, so that for every bitstring
//!
//! `scale * (E_ising(z(x)) + energy_offset) = x^T Q x`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::Qubo;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    n_vars: usize,
    h: Vec<f64>,
    /// Upper-triangular couplings, sorted by (i, j), zeros omitted.
    j: Vec<(usize, usize, f64)>,
    energy_offset: f64,
    scale: f64,
}

impl IsingModel {
    pub fn new(
        h: Vec<f64>,
        j: Vec<(usize, usize, f64)>,
        energy_offset: f64,
        scale: f64,
    ) -> Result<Self> {
        let n_vars = h.len();
        for &(a, b, _) in &j {
            if a >= b || b >= n_vars {
                return Err(Error::Shape(format!(
                    "coupling ({a}, {b}) out of order or out of range for {n_vars} spins"
                )));
            }
        }
        Ok(Self {
            n_vars,
            h,
            j,
            energy_offset,
            scale,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.j
    }

    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `sum h_i z_i + sum J_ij z_i z_j` (no offset, no rescaling).
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n_vars {
            return Err(Error::Shape(format!(
                "spin vector length {} != {}",
                spins.len(),
                self.n_vars
            )));
        }
        let mut e = 0.0;
        for (hi, zi) in self.h.iter().zip(spins) {
            e += hi * *zi as f64;
        }
        for &(a, b, jab) in &self.j {
            e += jab * (spins[a] * spins[b]) as f64;
        }
        Ok(e)
    }

    /// Ising energy of a bitstring under `z_i = 1 - 2 x_i`.
    pub fn energy_of_bits(&self, bits: &[u8]) -> Result<f64> {
        let spins: Vec<i8> = bits.iter().map(|&x| 1 - 2 * x as i8).collect();
        self.energy(&spins)
    }

    /// Reconstruct `x^T Q x` from a bitstring: undoes offset and scale.
    pub fn qubo_frame_energy(&self, bits: &[u8]) -> Result<f64> {
        Ok(self.scale * (self.energy_of_bits(bits)? + self.energy_offset))
    }

    /// Largest coefficient magnitude over fields and couplings.
    pub fn max_coefficient(&self) -> f64 {
        let hm = self.h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let jm = self.j.iter().fold(0.0f64, |m, &(_, _, v)| m.max(v.abs()));
        hm.max(jm)
    }
}

/// Expand a QUBO into its Ising form (scale 1).
pub fn to_ising(q: &Qubo) -> IsingModel {
    let nv = q.num_vars();
    let mut h = Vec::with_capacity(nv);
    let mut j = Vec::new();
    let mut offset = 0.0;
    for i in 0..nv {
        let qii = q.entry(i, i);
        offset += qii / 2.0;
        let mut hi = -qii / 2.0;
        for k in 0..nv {
            if k != i {
                hi -= q.entry(i, k) / 2.0;
            }
        }
        h.push(hi);
        for k in (i + 1)..nv {
            let qik = q.entry(i, k);
            if qik != 0.0 {
                offset += qik / 2.0;
                j.push((i, k, qik / 2.0));
            }
        }
    }
    IsingModel {
        n_vars: nv,
        h,
        j,
        energy_offset: offset,
        scale: 1.0,
    }
}

/// Divide all coefficients by the largest field/coupling magnitude so the
/// model is O(1); the divisor is folded into `scale`.
pub fn normalize_ising(m: &IsingModel) -> Result<IsingModel> {
    let divisor = m.max_coefficient();
    if divisor == 0.0 {
        return Err(Error::Degenerate("all-zero Ising model".into()));
    }
    Ok(IsingModel {
        n_vars: m.n_vars,
        h: m.h.iter().map(|v| v / divisor).collect(),
        j: m.j.iter().map(|&(a, b, v)| (a, b, v / divisor)).collect(),
        energy_offset: m.energy_offset / divisor,
        scale: m.scale * divisor,
    })
}

/// Plain-text export: header line, then one `h` line per spin, then one
/// `J` line per non-zero coupling. Values round-trip exactly.
pub fn export_ising(m: &IsingModel, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "ising N {} scale {} offset {}",
        m.n_vars, m.scale, m.energy_offset
    )?;
    for (i, hv) in m.h.iter().enumerate() {
        writeln!(out, "h {i} {hv}")?;
    }
    for &(a, b, v) in &m.j {
        writeln!(out, "J {a} {b} {v}")?;
    }
    Ok(())
}

pub fn export_ising_file(m: &IsingModel, path: &std::path::Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    export_ising(m, &mut file)
}

pub fn import_ising(input: &mut dyn BufRead) -> Result<IsingModel> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty ising file".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 7
        || parts[0] != "ising"
        || parts[1] != "N"
        || parts[3] != "scale"
        || parts[5] != "offset"
    {
        return Err(Error::Format(format!("bad ising header: {header:?}")));
    }
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::Format("bad N in header".into()))?;
    let scale: f64 = parts[4]
        .parse()
        .map_err(|_| Error::Format("bad scale in header".into()))?;
    let offset: f64 = parts[6]
        .parse()
        .map_err(|_| Error::Format("bad offset in header".into()))?;

    let mut h = vec![0.0; n];
    let mut j = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["h", i, v] => {
                let i: usize = i
                    .parse()
                    .map_err(|_| Error::Format(format!("bad h line: {line:?}")))?;
                if i >= n {
                    return Err(Error::Format(format!("h index {i} out of range")));
                }
                h[i] = v
                    .parse()
                    .map_err(|_| Error::Format(format!("bad h value: {line:?}")))?;
            }
            ["J", a, b, v] => {
                let a: usize = a
                    .parse()
                    .map_err(|_| Error::Format(format!("bad J line: {line:?}")))?;
                let b: usize = b
                    .parse()
                    .map_err(|_| Error::Format(format!("bad J line: {line:?}")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| Error::Format(format!("bad J value: {line:?}")))?;
                j.push((a, b, v));
            }
            _ => return Err(Error::Format(format!("unrecognized line: {line:?}"))),
        }
    }
    IsingModel::new(h, j, offset, scale)
}

pub fn import_ising_file(path: &std::path::Path) -> Result<IsingModel> {
    let file = std::fs::File::open(path)?;
    import_ising(&mut std::io::BufReader::new(file))
}
