//! Ground-truth checks that do not involve any LMI: spectral radii of periodic
//! switching signals, and a search for cycles whose repetition does not decay.

use crate::cycles::{cycle_count, enumerate_cycles, CycleSpec, PowerCache};
use crate::error::{Error, Result};
use crate::matrix::spectral_radius;
use crate::system::SwitchedSystem;

/// Default band half-width around 1 inside which a periodic verdict is withheld.
pub const DEFAULT_ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodicVerdict {
    Stable,
    Unstable,
    /// Radius within the tolerance band around 1.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicReport {
    pub radius: f64,
    pub verdict: PeriodicVerdict,
}

impl PeriodicReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == PeriodicVerdict::Stable
    }
}

/// Stability of the signal that repeats `cycle` forever, from `ρ(Φ)`.
///
/// The repetition must itself be admissible: a multi-segment cycle whose last
/// mode equals its first would glue two segments of the same mode together.
pub fn periodic_stability_oracle(sys: &SwitchedSystem, cycle: &CycleSpec, tol: f64) -> Result<PeriodicReport> {
    if cycle.len() > 1 && cycle.first_mode() == cycle.last_mode() {
        return Err(Error::InadmissibleRepetition(format!(
            "cycle {cycle} ends in the mode it starts with"
        )));
    }
    if cycle.modes().iter().any(|&m| m == 0 || m > sys.num_modes()) {
        return Err(Error::IndexMismatch(format!("cycle {cycle} names a mode outside [1, {}]", sys.num_modes())));
    }
    let phi = PowerCache::new(sys).transition(cycle);
    let radius = spectral_radius(&phi, tol)?;
    let verdict = if radius < 1.0 - tol {
        PeriodicVerdict::Stable
    } else if radius > 1.0 + tol {
        PeriodicVerdict::Unstable
    } else {
        PeriodicVerdict::Indeterminate
    };
    Ok(PeriodicReport { radius, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub found: bool,
    pub cycle: Option<CycleSpec>,
    pub radius: Option<f64>,
    /// Largest cycle length searched.
    pub searched_up_to: usize,
}

/// Scans cycles of length `1..=l_max` in (length, index) order and returns the
/// first admissibly repeatable one with `ρ(Φ) ≥ 1`.
///
/// Such a cycle, repeated, is a dwell-admissible signal along which the state
/// does not converge to zero, so the system is not uniformly asymptotically
/// stable. Finding nothing proves nothing.
///
/// Fails with [`Error::CapExceeded`] as soon as some length holds more than
/// `cap` cycles; [`longest_length_within_cap`] gives a safe `l_max`.
pub fn instability_witness_search(sys: &SwitchedSystem, l_max: usize, cap: usize) -> Result<WitnessReport> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("witness search needs L_max >= 1".into()));
    }
    let mut cache = PowerCache::new(sys);
    for l in 1..=l_max {
        let family = enumerate_cycles(sys, l, cap)?;
        for c in family.cycles() {
            if c.len() > 1 && c.first_mode() == c.last_mode() {
                continue;
            }
            let radius = spectral_radius(&cache.transition(c), DEFAULT_ORACLE_TOL)?;
            if radius >= 1.0 {
                return Ok(WitnessReport {
                    found: true,
                    cycle: Some(c.clone()),
                    radius: Some(radius),
                    searched_up_to: l,
                });
            }
        }
    }
    Ok(WitnessReport {
        found: false,
        cycle: None,
        radius: None,
        searched_up_to: l_max,
    })
}

/// Largest `L ≤ l_max` whose cycle count stays within `cap` (0 if none).
pub fn longest_length_within_cap(sys: &SwitchedSystem, l_max: usize, cap: usize) -> usize {
    (1..=l_max)
        .take_while(|&l| cycle_count(sys.num_modes(), sys.dwell_span(), l) <= cap as u128)
        .last()
        .unwrap_or(0)
}
