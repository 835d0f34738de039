//! Physical energy accounting of a matching.
//!
//! Four aerodynamic costs are tracked for a schedule: solo driving at each
//! surfer's preferred speed (`F_ref`), solo at the assigned breaker speeds
//! (`F_ref_vel`), drafting with the slipstream factor applied (`F1`), and
//! the post-hoc cost where every surfer whose timing or velocity preference
//! is still violated opts out and reverts to solo (`F1_mod`). The eta
//! percentages compare each cost to `F_ref`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{slipstream_efficiency, time_mismatch, velocity_mismatch};
use crate::model::Instance;
use crate::qubo::Assignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub f_ref: f64,
    pub f_ref_vel: f64,
    pub f1: f64,
    pub f1_mod: f64,
    pub eta_speed: f64,
    pub eta_f1: f64,
    pub eta_f1_mod: f64,
}

/// Matching where some surfers may be unmatched; unmatched surfers always
/// drive solo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialAssignment {
    assigned: Vec<Option<usize>>,
}

impl PartialAssignment {
    pub fn new(assigned: Vec<Option<usize>>) -> Result<Self> {
        let n = assigned.len();
        let mut seen = vec![false; n];
        for b in assigned.iter().flatten() {
            if *b >= n || seen[*b] {
                return Err(Error::Domain(
                    "partial assignment reuses or overflows a breaker".into(),
                ));
            }
            seen[*b] = true;
        }
        Ok(Self { assigned })
    }

    /// Unambiguous pairs of a bitstring: rows holding exactly one 1 whose
    /// column is also singly occupied. Everything else is unmatched.
    pub fn from_bits(bits: &[u8], n: usize) -> Result<Self> {
        if bits.len() != n * n {
            return Err(Error::Shape(format!(
                "bitstring length {} != n^2 = {}",
                bits.len(),
                n * n
            )));
        }
        let mut col_counts = vec![0usize; n];
        for (e, &x) in bits.iter().enumerate() {
            if x == 1 {
                col_counts[e % n] += 1;
            }
        }
        let assigned = (0..n)
            .map(|s| {
                let row = &bits[n * s..n * (s + 1)];
                let ones: Vec<usize> = (0..n).filter(|&b| row[b] == 1).collect();
                match ones.as_slice() {
                    [b] if col_counts[*b] == 1 => Some(*b),
                    _ => None,
                }
            })
            .collect();
        Ok(Self { assigned })
    }

    pub fn breaker_for(&self, s: usize) -> Option<usize> {
        self.assigned[s]
    }

    pub fn n(&self) -> usize {
        self.assigned.len()
    }
}

impl From<&Assignment> for PartialAssignment {
    fn from(a: &Assignment) -> Self {
        Self {
            assigned: a.perm().iter().map(|&b| Some(b)).collect(),
        }
    }
}

/// Reference cost: everyone solo at their preferred speed.
pub fn f_ref(instance: &Instance) -> f64 {
    instance
        .surfers()
        .iter()
        .map(|s| s.class_id as f64 * s.pref_velocity * s.pref_velocity)
        .sum()
}

/// Solo cost at the matched breaker speeds; unmatched surfers keep their
/// own speed.
pub fn f_ref_vel(instance: &Instance, a: &PartialAssignment) -> f64 {
    instance
        .surfers()
        .iter()
        .enumerate()
        .map(|(si, s)| {
            let v = match a.breaker_for(si) {
                Some(b) => instance.breakers()[b].velocity,
                None => s.pref_velocity,
            };
            s.class_id as f64 * v * v
        })
        .sum()
}

/// Drafting cost with the slipstream factor, every pairing accepted.
pub fn f1(instance: &Instance, a: &PartialAssignment) -> Result<f64> {
    let mut total = 0.0;
    for (si, s) in instance.surfers().iter().enumerate() {
        total += match a.breaker_for(si) {
            Some(bi) => {
                let b = &instance.breakers()[bi];
                let f = slipstream_efficiency(b.class_id - s.class_id)?;
                s.class_id as f64 * b.velocity * b.velocity * (1.0 - f)
            }
            None => s.class_id as f64 * s.pref_velocity * s.pref_velocity,
        };
    }
    Ok(total)
}

/// Post-hoc cost: surfers whose timing or velocity preference is still
/// violated under their pairing opt out and contribute their solo term.
pub fn f1_mod(instance: &Instance, a: &PartialAssignment) -> Result<f64> {
    let mut total = 0.0;
    for (si, s) in instance.surfers().iter().enumerate() {
        let solo = s.class_id as f64 * s.pref_velocity * s.pref_velocity;
        total += match a.breaker_for(si) {
            Some(bi) => {
                let b = &instance.breakers()[bi];
                let opts_out = time_mismatch(s, b) > 0.0 || velocity_mismatch(s, b) > 0.0;
                if opts_out {
                    solo
                } else {
                    let f = slipstream_efficiency(b.class_id - s.class_id)?;
                    s.class_id as f64 * b.velocity * b.velocity * (1.0 - f)
                }
            }
            None => solo,
        };
    }
    Ok(total)
}

/// All four costs plus the eta percentages for a complete assignment.
pub fn eta_report(instance: &Instance, a: &Assignment) -> Result<SavingsReport> {
    eta_report_partial(instance, &PartialAssignment::from(a))
}

pub fn eta_report_partial(instance: &Instance, a: &PartialAssignment) -> Result<SavingsReport> {
    if a.n() != instance.n() {
        return Err(Error::Shape(format!(
            "assignment covers {} surfers, instance has {}",
            a.n(),
            instance.n()
        )));
    }
    let f_ref = f_ref(instance);
    if f_ref == 0.0 {
        return Err(Error::Degenerate("reference cost is zero".into()));
    }
    let f_ref_vel = f_ref_vel(instance, a);
    let f1 = f1(instance, a)?;
    let f1_mod = f1_mod(instance, a)?;
    Ok(SavingsReport {
        f_ref,
        f_ref_vel,
        f1,
        f1_mod,
        eta_speed: 100.0 * (f_ref - f_ref_vel) / f_ref,
        eta_f1: 100.0 * (f_ref - f1) / f_ref,
        eta_f1_mod: 100.0 * (f_ref - f1_mod) / f_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Breaker, Surfer};

    fn surfer(class: i64, v: f64, t: f64, dt: f64, dv: f64) -> Surfer {
        Surfer {
            class_id: class,
            pref_velocity: v,
            departure: t,
            dt_flex: dt,
            dv_flex: dv,
        }
    }

    fn breaker(class: i64, v: f64, t: f64) -> Breaker {
        Breaker {
            class_id: class,
            velocity: v,
            departure: t,
        }
    }

    #[test]
    fn f_ref_direct_and_quadratic_scaling() {
        let inst = Instance::new(
            vec![surfer(2, 10.0, 0.0, 1.0, 1.0)],
            vec![breaker(2, 10.0, 0.0)],
            "t",
        )
        .unwrap();
        assert_eq!(f_ref(&inst), 200.0);

        let doubled = Instance::new(
            vec![surfer(2, 20.0, 0.0, 1.0, 1.0)],
            vec![breaker(2, 20.0, 0.0)],
            "t",
        )
        .unwrap();
        assert_eq!(f_ref(&doubled), 4.0 * f_ref(&inst));
    }

    #[test]
    fn f_ref_vel_equals_f_ref_at_identical_speeds() {
        let inst = Instance::new(
            vec![
                surfer(2, 30.0, 0.0, 1.0, 1.0),
                surfer(3, 28.0, 0.0, 1.0, 1.0),
            ],
            vec![breaker(2, 30.0, 0.0), breaker(3, 28.0, 0.0)],
            "t",
        )
        .unwrap();
        let a = Assignment::new(vec![0, 1]).unwrap();
        let pa = PartialAssignment::from(&a);
        assert_eq!(f_ref_vel(&inst, &pa), f_ref(&inst));

        let single = Instance::new(
            vec![surfer(2, 10.0, 0.0, 1.0, 1.0)],
            vec![breaker(2, 20.0, 0.0)],
            "t",
        )
        .unwrap();
        let a1 = Assignment::new(vec![0]).unwrap();
        assert_eq!(f_ref_vel(&single, &PartialAssignment::from(&a1)), 800.0);
    }

    #[test]
    fn f1_limits_of_the_slipstream_factor() {
        // d = -4 everywhere: no benefit, F1 equals F_ref_vel.
        let worst = Instance::new(
            vec![surfer(5, 30.0, 0.0, 1.0, 1.0)],
            vec![breaker(1, 32.0, 0.0)],
            "t",
        )
        .unwrap();
        let a = Assignment::new(vec![0]).unwrap();
        let pa = PartialAssignment::from(&a);
        assert_eq!(f1(&worst, &pa).unwrap(), f_ref_vel(&worst, &pa));

        // d = +4 everywhere: a third off F_ref_vel.
        let best = Instance::new(
            vec![surfer(1, 30.0, 0.0, 1.0, 1.0)],
            vec![breaker(5, 32.0, 0.0)],
            "t",
        )
        .unwrap();
        let expect = 2.0 / 3.0 * f_ref_vel(&best, &pa);
        assert!((f1(&best, &pa).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn f1_mod_opt_out_split() {
        // Surfer 0 fits its breaker perfectly; surfer 1 violates velocity.
        let inst = Instance::new(
            vec![
                surfer(2, 30.0, 0.0, 4.0, 4.0),
                surfer(2, 30.0, 0.0, 4.0, 4.0),
            ],
            vec![breaker(3, 30.0, 0.0), breaker(3, 38.0, 0.0)],
            "t",
        )
        .unwrap();
        let a = Assignment::new(vec![0, 1]).unwrap();
        let pa = PartialAssignment::from(&a);
        let f = slipstream_efficiency(1).unwrap();
        let kept = 2.0 * 900.0 * (1.0 - f);
        let solo = 2.0 * 900.0;
        let total = f1_mod(&inst, &pa).unwrap();
        assert!((total - (kept + solo)).abs() < 1e-9);

        // All preferences satisfied: equals F1. All violated: equals F_ref.
        let happy = Instance::new(
            vec![surfer(2, 30.0, 0.0, 4.0, 4.0)],
            vec![breaker(3, 30.0, 0.0)],
            "t",
        )
        .unwrap();
        let a1 = Assignment::new(vec![0]).unwrap();
        let p1 = PartialAssignment::from(&a1);
        assert_eq!(f1_mod(&happy, &p1).unwrap(), f1(&happy, &p1).unwrap());

        let grumpy = Instance::new(
            vec![surfer(2, 30.0, 0.0, 1.0, 1.0)],
            vec![breaker(3, 38.0, 20.0)],
            "t",
        )
        .unwrap();
        assert_eq!(f1_mod(&grumpy, &p1).unwrap(), f_ref(&grumpy));
    }

    #[test]
    fn eta_identities() {
        let inst = crate::model::generate_instance(5, 77, &Default::default()).unwrap();
        let w = crate::matching::weight_matrix(&inst, 1.0, 1.0).unwrap();
        let (a, _) = crate::exact::hungarian(&w).unwrap();
        let r = eta_report(&inst, &a).unwrap();
        assert!((r.eta_speed - 100.0 * (r.f_ref - r.f_ref_vel) / r.f_ref).abs() < 1e-9);
        assert!((r.eta_f1 - 100.0 * (r.f_ref - r.f1) / r.f_ref).abs() < 1e-9);
        assert!((r.eta_f1_mod - 100.0 * (r.f_ref - r.f1_mod) / r.f_ref).abs() < 1e-9);
        // The slipstream factor never exceeds one.
        assert!(r.f1 <= r.f_ref_vel + 1e-9);
    }

    #[test]
    fn eta_f1_half_means_fifty_percent() {
        // c=3, v=30 solo → 2700; breaker at the same speed with d=+4 would
        // give 1800; engineer F1 = F_ref/2 with a slower breaker.
        // 3 * V^2 * (2/3) = 1350  =>  V^2 = 675.
        let v = 675.0f64.sqrt();
        let inst = Instance::new(
            vec![surfer(3, 30.0, 0.0, 100.0, 100.0)],
            vec![breaker(7, v, 0.0)],
            "t",
        )
        .unwrap();
        let a = Assignment::new(vec![0]).unwrap();
        let r = eta_report(&inst, &a).unwrap();
        assert!((r.eta_f1 - 50.0).abs() < 1e-9);
    }

    #[test]
    fn partial_assignment_from_bits() {
        // Row 0 cleanly matched to column 1; row 1 doubled; rows sharing a
        // column are unmatched.
        let bits = vec![
            0, 1, 0, /* row 0 -> col 1 */ 1, 0, 1, /* row 1 doubled */ 1, 0, 0,
        ];
        let pa = PartialAssignment::from_bits(&bits, 3).unwrap();
        assert_eq!(pa.breaker_for(0), Some(1));
        assert_eq!(pa.breaker_for(1), None);
        // Row 2 has one 1 in column 0, but row 1 also occupies column 0.
        assert_eq!(pa.breaker_for(2), None);
    }

    #[test]
    fn opted_out_surfers_contribute_their_reference_term() {
        let inst = crate::model::generate_instance(4, 3, &Default::default()).unwrap();
        // Nobody matched: F1_mod collapses to F_ref.
        let pa = PartialAssignment::new(vec![None; 4]).unwrap();
        assert_eq!(f1_mod(&inst, &pa).unwrap(), f_ref(&inst));
        assert_eq!(f1(&inst, &pa).unwrap(), f_ref(&inst));
    }
}
