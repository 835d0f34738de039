//! Domain model: vehicles, matching instances, dataset ingestion and a
//! seeded synthetic generator.
//!
//! An instance pairs `n` surfers (vehicles looking for a lead to draft
//! behind) with `n` breakers (lead vehicles). The dataset stores each side
//! as one NPY array per instance; the column order follows the dataset
//! description and can be remapped through [`ColumnMap`] if a file deviates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::npy::{self, NumericArray};
use crate::rng::SplitMix64;

/// Largest admissible |class difference| between a breaker and a surfer.
pub const CLASS_DIFF_LIMIT: i64 = 4;

/// Following vehicle: class, preferred cruise velocity, departure time and
/// full-width flexibility windows for departure time and speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surfer {
    pub class_id: i64,
    pub pref_velocity: f64,
    pub departure: f64,
    pub dt_flex: f64,
    pub dv_flex: f64,
}

/// Lead vehicle: class, cruising velocity, departure time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breaker {
    pub class_id: i64,
    pub velocity: f64,
    pub departure: f64,
}

/// A square matching instance (`n` surfers, `n` breakers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    surfers: Vec<Surfer>,
    breakers: Vec<Breaker>,
    label: String,
}

impl Instance {
    /// Validates all instance invariants: equal non-zero side sizes,
    /// non-negative classes, positive velocities, non-negative flexibility
    /// windows, and every class difference inside the slipstream domain.
    pub fn new(
        surfers: Vec<Surfer>,
        breakers: Vec<Breaker>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if surfers.is_empty() {
            return Err(Error::Shape(
                "instance needs at least one vehicle pair".into(),
            ));
        }
        if surfers.len() != breakers.len() {
            return Err(Error::Shape(format!(
                "{} surfers vs {} breakers, sides must be equal",
                surfers.len(),
                breakers.len()
            )));
        }
        for (i, s) in surfers.iter().enumerate() {
            if s.class_id < 0 {
                return Err(Error::Domain(format!("surfer {i} has negative class")));
            }
            if !s.pref_velocity.is_finite() || s.pref_velocity <= 0.0 {
                return Err(Error::Domain(format!(
                    "surfer {i} has non-positive velocity"
                )));
            }
            let flex_ok = |f: f64| f.is_finite() && f >= 0.0;
            if !flex_ok(s.dt_flex) || !flex_ok(s.dv_flex) {
                return Err(Error::Domain(format!(
                    "surfer {i} has negative flexibility window"
                )));
            }
        }
        for (i, b) in breakers.iter().enumerate() {
            if b.class_id < 0 {
                return Err(Error::Domain(format!("breaker {i} has negative class")));
            }
            if !b.velocity.is_finite() || b.velocity <= 0.0 {
                return Err(Error::Domain(format!(
                    "breaker {i} has non-positive velocity"
                )));
            }
        }
        for (si, s) in surfers.iter().enumerate() {
            for (bi, b) in breakers.iter().enumerate() {
                let d = b.class_id - s.class_id;
                if d.abs() > CLASS_DIFF_LIMIT {
                    return Err(Error::Domain(format!(
                        "class difference {d} for surfer {si} / breaker {bi} outside [-4, 4]"
                    )));
                }
            }
        }
        Ok(Self {
            surfers,
            breakers,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.surfers.len()
    }

    pub fn surfers(&self) -> &[Surfer] {
        &self.surfers
    }

    pub fn breakers(&self) -> &[Breaker] {
        &self.breakers
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Column indices inside the dataset arrays. Defaults follow the dataset
/// description: breakers `(class, velocity, departure)`, surfers
/// `(class, velocity, departure, speed flexibility, time flexibility)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub breaker_class: usize,
    pub breaker_velocity: usize,
    pub breaker_departure: usize,
    pub surfer_class: usize,
    pub surfer_velocity: usize,
    pub surfer_departure: usize,
    pub surfer_dv_flex: usize,
    pub surfer_dt_flex: usize,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            breaker_class: 0,
            breaker_velocity: 1,
            breaker_departure: 2,
            surfer_class: 0,
            surfer_velocity: 1,
            surfer_departure: 2,
            surfer_dv_flex: 3,
            surfer_dt_flex: 4,
        }
    }
}

const CLASS_INT_TOL: f64 = 1e-9;

fn as_class(value: f64, what: &str, row: usize) -> Result<i64> {
    let rounded = value.round();
    if (value - rounded).abs() > CLASS_INT_TOL {
        return Err(Error::Domain(format!(
            "{what} {row} has non-integral class {value}"
        )));
    }
    Ok(rounded as i64)
}

/// Build an [`Instance`] from already-parsed breaker and surfer arrays.
pub fn instance_from_arrays(
    breakers: &NumericArray,
    surfers: &NumericArray,
    map: &ColumnMap,
    label: impl Into<String>,
) -> Result<Instance> {
    if breakers.rows != surfers.rows {
        return Err(Error::Shape(format!(
            "{} breaker rows vs {} surfer rows",
            breakers.rows, surfers.rows
        )));
    }
    let bcols = [
        map.breaker_class,
        map.breaker_velocity,
        map.breaker_departure,
    ];
    if bcols.iter().any(|&c| c >= breakers.cols) {
        return Err(Error::Shape(format!(
            "breaker array has {} columns, column map needs more",
            breakers.cols
        )));
    }
    let scols = [
        map.surfer_class,
        map.surfer_velocity,
        map.surfer_departure,
        map.surfer_dv_flex,
        map.surfer_dt_flex,
    ];
    if scols.iter().any(|&c| c >= surfers.cols) {
        return Err(Error::Shape(format!(
            "surfer array has {} columns, column map needs more",
            surfers.cols
        )));
    }

    let breaker_rows = (0..breakers.rows)
        .map(|r| {
            Ok(Breaker {
                class_id: as_class(breakers.get(r, map.breaker_class), "breaker", r)?,
                velocity: breakers.get(r, map.breaker_velocity),
                departure: breakers.get(r, map.breaker_departure),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let surfer_rows = (0..surfers.rows)
        .map(|r| {
            Ok(Surfer {
                class_id: as_class(surfers.get(r, map.surfer_class), "surfer", r)?,
                pref_velocity: surfers.get(r, map.surfer_velocity),
                departure: surfers.get(r, map.surfer_departure),
                dv_flex: surfers.get(r, map.surfer_dv_flex),
                dt_flex: surfers.get(r, map.surfer_dt_flex),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Instance::new(surfer_rows, breaker_rows, label)
}

/// Load one instance from its breaker/surfer NPY file pair.
pub fn load_instance(breaker_path: &Path, surfer_path: &Path) -> Result<Instance> {
    load_instance_with(breaker_path, surfer_path, &ColumnMap::default())
}

pub fn load_instance_with(
    breaker_path: &Path,
    surfer_path: &Path,
    map: &ColumnMap,
) -> Result<Instance> {
    let breakers = npy::read_npy_file(breaker_path)?;
    let surfers = npy::read_npy_file(surfer_path)?;
    let label = breaker_path
        .file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches("-breakers.npy").to_string())
        .unwrap_or_else(|| "instance".into());
    instance_from_arrays(&breakers, &surfers, map, label)
}

/// Load the single `<prefix>-breakers.npy` / `<prefix>-surfers.npy` pair in
/// `dir`. When `prefix` is `None` the directory must contain exactly one
/// such pair.
pub fn load_instance_dir(dir: &Path, prefix: Option<&str>) -> Result<Instance> {
    let mut candidates = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix("-breakers.npy") {
            if prefix.is_none_or(|p| p == stem) {
                candidates.push(stem.to_string());
            }
        }
    }
    candidates.sort();
    match candidates.len() {
        0 => Err(Error::Config(format!(
            "no *-breakers.npy file in {}",
            dir.display()
        ))),
        1 => {
            let stem = &candidates[0];
            load_instance(
                &dir.join(format!("{stem}-breakers.npy")),
                &dir.join(format!("{stem}-surfers.npy")),
            )
        }
        _ => Err(Error::Config(format!(
            "multiple instances in {} ({}), pass a prefix",
            dir.display(),
            candidates.join(", ")
        ))),
    }
}

/// Write `instance` as the NPY pair `{label}-breakers.npy` /
/// `{label}-surfers.npy` inside `dir`, using the default column order.
pub fn save_instance(dir: &Path, instance: &Instance) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let n = instance.n();
    let mut bdata = Vec::with_capacity(n * 3);
    for b in instance.breakers() {
        bdata.extend_from_slice(&[b.class_id as f64, b.velocity, b.departure]);
    }
    let mut sdata = Vec::with_capacity(n * 5);
    for s in instance.surfers() {
        sdata.extend_from_slice(&[
            s.class_id as f64,
            s.pref_velocity,
            s.departure,
            s.dv_flex,
            s.dt_flex,
        ]);
    }
    let label = instance.label();
    npy::write_npy_file(
        &dir.join(format!("{label}-breakers.npy")),
        &NumericArray::new(n, 3, bdata)?,
    )?;
    npy::write_npy_file(
        &dir.join(format!("{label}-surfers.npy")),
        &NumericArray::new(n, 5, sdata)?,
    )?;
    Ok(())
}

/// Value ranges for the synthetic generator. Classes are drawn uniformly
/// from `class_lo..=class_hi`; the other fields uniformly from half-open
/// real intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenRanges {
    pub class_lo: i64,
    pub class_hi: i64,
    pub velocity: (f64, f64),
    pub departure: (f64, f64),
    pub dt_flex: (f64, f64),
    pub dv_flex: (f64, f64),
}

impl Default for GenRanges {
    fn default() -> Self {
        Self {
            class_lo: 1,
            class_hi: 5,
            velocity: (25.0, 40.0),
            departure: (0.0, 60.0),
            dt_flex: (0.0, 10.0),
            dv_flex: (0.0, 6.0),
        }
    }
}

/// Deterministic synthetic instance: a pure function of `(n, seed, ranges)`.
pub fn generate_instance(n: usize, seed: u64, ranges: &GenRanges) -> Result<Instance> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    if ranges.class_lo < 0 || ranges.class_hi < ranges.class_lo {
        return Err(Error::Config(
            "class range must satisfy 0 <= lo <= hi".into(),
        ));
    }
    if ranges.class_hi - ranges.class_lo > CLASS_DIFF_LIMIT {
        return Err(Error::Config(
            "class range wider than the slipstream domain [-4, 4]".into(),
        ));
    }
    for (name, (lo, hi)) in [
        ("velocity", ranges.velocity),
        ("departure", ranges.departure),
        ("dt_flex", ranges.dt_flex),
        ("dv_flex", ranges.dv_flex),
    ] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad {name} range ({lo}, {hi})")));
        }
    }
    if ranges.velocity.0 <= 0.0 {
        return Err(Error::Config("velocities must be positive".into()));
    }
    if ranges.dt_flex.0 < 0.0 || ranges.dv_flex.0 < 0.0 {
        return Err(Error::Config(
            "flexibility windows must be non-negative".into(),
        ));
    }

    let mut rng = SplitMix64::new(seed);
    let surfers = (0..n)
        .map(|_| Surfer {
            class_id: rng.next_int_in(ranges.class_lo, ranges.class_hi),
            pref_velocity: rng.next_in(ranges.velocity.0, ranges.velocity.1),
            departure: rng.next_in(ranges.departure.0, ranges.departure.1),
            dt_flex: rng.next_in(ranges.dt_flex.0, ranges.dt_flex.1),
            dv_flex: rng.next_in(ranges.dv_flex.0, ranges.dv_flex.1),
        })
        .collect();
    let breakers = (0..n)
        .map(|_| Breaker {
            class_id: rng.next_int_in(ranges.class_lo, ranges.class_hi),
            velocity: rng.next_in(ranges.velocity.0, ranges.velocity.1),
            departure: rng.next_in(ranges.departure.0, ranges.departure.1),
        })
        .collect();
    Instance::new(surfers, breakers, format!("gen-n{n}-seed{seed}"))
}
