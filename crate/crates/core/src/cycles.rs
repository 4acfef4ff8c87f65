//! L-switching-cycles: blocks of `L` consecutive activations with durations in
//! the dwell range and no immediate mode repeats.
//!
//! Cycles are indexed `h = 1..=M` in lexicographic order: the mode sequence is
//! the primary key (compared numerically position by position), the duration
//! tuple the secondary key. Ranking is a mixed-radix encoding, so indices can be
//! computed without enumerating.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{mat_pow, Matrix};
use crate::system::{Dwell, SwitchedSystem};

/// Enumeration cap used when callers do not pick one.
pub const DEFAULT_CYCLE_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleSpec {
    index: usize,
    modes: Vec<usize>,
    durations: Vec<u32>,
}

impl CycleSpec {
    /// A labelled sequence of `(mode, duration)` segments. Admissibility is not
    /// checked; use [`CycleFamily::rank`] for that.
    ///
    /// # Panics
    /// If the sequences are empty or of different lengths.
    pub fn new(index: usize, modes: Vec<usize>, durations: Vec<u32>) -> Self {
        assert!(!modes.is_empty() && modes.len() == durations.len(), "cycle needs equal, non-empty mode and duration lists");
        Self { index, modes, durations }
    }

    /// 1-based lexicographic rank `h`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn durations(&self) -> &[u32] {
        &self.durations
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `T_h`, the number of steps the cycle spans.
    pub fn total_duration(&self) -> usize {
        self.durations.iter().map(|&d| d as usize).sum()
    }

    /// Mode active at step `k ∈ [0, T_h)` measured from the cycle start.
    pub fn mode_at_step(&self, k: usize) -> usize {
        let mut start = 0;
        for (&m, &d) in self.modes.iter().zip(&self.durations) {
            start += d as usize;
            if k < start {
                return m;
            }
        }
        panic!("step {k} outside cycle of length {}", self.total_duration());
    }

    /// Active mode at every step, `T_h` entries.
    pub fn step_modes(&self) -> Vec<usize> {
        self.modes
            .iter()
            .zip(&self.durations)
            .flat_map(|(&m, &d)| std::iter::repeat_n(m, d as usize))
            .collect()
    }

    pub fn first_mode(&self) -> usize {
        self.modes[0]
    }

    pub fn last_mode(&self) -> usize {
        self.modes[self.modes.len() - 1]
    }
}

impl fmt::Display for CycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        write!(
            f,
            "h={} modes=({}) durations=({})",
            self.index,
            join(self.modes.iter().map(ToString::to_string).collect()),
            join(self.durations.iter().map(ToString::to_string).collect())
        )
    }
}

/// Which family of sequences a [`CycleFamily`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceRule {
    /// Consecutive modes must differ (dwell-time cycles).
    NoRepeat,
    /// Any mode may follow any mode, durations fixed to 1 (multiple-step sequences).
    Unrestricted,
}

#[derive(Debug, Clone)]
pub struct CycleFamily {
    length: usize,
    num_modes: usize,
    dwell: Dwell,
    rule: SequenceRule,
    cycles: Vec<CycleSpec>,
}

impl CycleFamily {
    /// `L`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn dwell(&self) -> Dwell {
        self.dwell
    }

    pub fn rule(&self) -> SequenceRule {
        self.rule
    }

    pub fn cycles(&self) -> &[CycleSpec] {
        &self.cycles
    }

    /// `M`.
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Cycle with 1-based index `h`.
    pub fn get(&self, h: usize) -> Option<&CycleSpec> {
        h.checked_sub(1).and_then(|i| self.cycles.get(i))
    }

    fn mode_radix(&self, position: usize) -> usize {
        match (self.rule, position) {
            (SequenceRule::NoRepeat, 0) | (SequenceRule::Unrestricted, _) => self.num_modes,
            (SequenceRule::NoRepeat, _) => self.num_modes - 1,
        }
    }

    fn duration_block(&self) -> usize {
        (self.dwell.span() as usize).pow(self.length as u32)
    }

    /// 1-based rank of a (modes, durations) pair, or `None` if the pair is not
    /// a member of this family.
    pub fn rank(&self, modes: &[usize], durations: &[u32]) -> Option<usize> {
        if modes.len() != self.length || durations.len() != self.length {
            return None;
        }
        let mut mode_rank = 0usize;
        for (pos, &m) in modes.iter().enumerate() {
            if m < 1 || m > self.num_modes {
                return None;
            }
            let digit = match (self.rule, pos) {
                (SequenceRule::NoRepeat, p) if p > 0 => {
                    let prev = modes[p - 1];
                    if m == prev {
                        return None;
                    }
                    if m > prev {
                        m - 2
                    } else {
                        m - 1
                    }
                }
                _ => m - 1,
            };
            mode_rank = mode_rank * self.mode_radix(pos) + digit;
        }
        let span = self.dwell.span() as usize;
        let mut dur_rank = 0usize;
        for &d in durations {
            if !self.dwell.contains(d) {
                return None;
            }
            dur_rank = dur_rank * span + (d - self.dwell.min) as usize;
        }
        Some(mode_rank * self.duration_block() + dur_rank + 1)
    }

    /// Inverse of [`CycleFamily::rank`].
    pub fn unrank(&self, h: usize) -> Option<CycleSpec> {
        let total = self.formula_count();
        if h < 1 || h as u128 > total {
            return None;
        }
        let r = h - 1;
        let block = self.duration_block();
        let (mut mode_rank, mut dur_rank) = (r / block, r % block);

        let mut digits = vec![0usize; self.length];
        for pos in (0..self.length).rev() {
            let radix = self.mode_radix(pos);
            digits[pos] = mode_rank % radix;
            mode_rank /= radix;
        }
        let mut modes = Vec::with_capacity(self.length);
        for (pos, &digit) in digits.iter().enumerate() {
            let m = match (self.rule, pos) {
                (SequenceRule::NoRepeat, p) if p > 0 => {
                    let prev = modes[p - 1];
                    if digit + 1 >= prev {
                        digit + 2
                    } else {
                        digit + 1
                    }
                }
                _ => digit + 1,
            };
            modes.push(m);
        }

        let span = self.dwell.span() as usize;
        let mut durations = vec![0u32; self.length];
        for pos in (0..self.length).rev() {
            durations[pos] = self.dwell.min + (dur_rank % span) as u32;
            dur_rank /= span;
        }
        Some(CycleSpec {
            index: h,
            modes,
            durations,
        })
    }

    fn formula_count(&self) -> u128 {
        match self.rule {
            SequenceRule::NoRepeat => cycle_count(self.num_modes, self.dwell.span(), self.length),
            SequenceRule::Unrestricted => (self.num_modes as u128).pow(self.length as u32),
        }
    }

    /// `Φ_h` for every cycle, in index order, sharing one power cache.
    pub fn transition_matrices(&self, sys: &SwitchedSystem) -> Vec<Matrix> {
        let mut cache = PowerCache::new(sys);
        self.cycles.iter().map(|c| cache.transition(c)).collect()
    }
}

/// `N (N−1)^(L−1) d^L`, saturating at `u128::MAX`.
pub fn cycle_count(num_modes: usize, dwell_span: u32, length: usize) -> u128 {
    let n = num_modes as u128;
    let mut count = n;
    for _ in 1..length {
        count = count.saturating_mul(n - 1);
    }
    for _ in 0..length {
        count = count.saturating_mul(dwell_span as u128);
    }
    count
}

/// All L-switching-cycles of `sys` in lexicographic order.
pub fn enumerate_cycles(sys: &SwitchedSystem, length: usize, cap: usize) -> Result<CycleFamily> {
    if length == 0 {
        return Err(Error::InvalidArgument("cycle length L must be at least 1".into()));
    }
    let count = cycle_count(sys.num_modes(), sys.dwell_span(), length);
    build_family(sys, length, cap, SequenceRule::NoRepeat, count)
}

/// The `N^L` multiple-step sequences (repeats allowed) for a system under
/// arbitrary switching, i.e. dwell range `[1, 1]`.
pub fn enumerate_multistep(sys: &SwitchedSystem, length: usize, cap: usize) -> Result<CycleFamily> {
    if length == 0 {
        return Err(Error::InvalidArgument("sequence length L must be at least 1".into()));
    }
    let dwell = sys.dwell();
    if dwell.min != 1 || dwell.max != 1 {
        return Err(Error::DwellBounds {
            min: dwell.min,
            max: dwell.max,
        });
    }
    let count = (sys.num_modes() as u128).saturating_pow(length as u32);
    build_family(sys, length, cap, SequenceRule::Unrestricted, count)
}

fn build_family(
    sys: &SwitchedSystem,
    length: usize,
    cap: usize,
    rule: SequenceRule,
    count: u128,
) -> Result<CycleFamily> {
    if count > cap as u128 {
        return Err(Error::CapExceeded { count, cap });
    }
    let mut family = CycleFamily {
        length,
        num_modes: sys.num_modes(),
        dwell: sys.dwell(),
        rule,
        cycles: Vec::with_capacity(count as usize),
    };
    for h in 1..=count as usize {
        let cycle = family.unrank(h).expect("rank within count");
        family.cycles.push(cycle);
    }
    Ok(family)
}

/// Memoized `A_i^τ` keyed by (mode, exponent).
pub struct PowerCache<'a> {
    sys: &'a SwitchedSystem,
    powers: HashMap<(usize, u32), Matrix>,
}

impl<'a> PowerCache<'a> {
    pub fn new(sys: &'a SwitchedSystem) -> Self {
        Self {
            sys,
            powers: HashMap::new(),
        }
    }

    /// `A_mode^exp` for a 1-based mode.
    pub fn power(&mut self, mode: usize, exp: u32) -> &Matrix {
        let sys = self.sys;
        self.powers
            .entry((mode, exp))
            .or_insert_with(|| mat_pow(sys.mode(mode), exp).expect("modes are square"))
    }

    /// `Φ = A_{i_L}^{τ_L} ⋯ A_{i_1}^{τ_1}`: the latest activation is leftmost.
    pub fn transition(&mut self, cycle: &CycleSpec) -> Matrix {
        let mut phi = Matrix::identity(self.sys.state_dim());
        for (&m, &d) in cycle.modes().iter().zip(cycle.durations()) {
            phi = self.power(m, d).matmul(&phi);
        }
        phi
    }
}

/// `Φ_h` of a single cycle.
pub fn transition_matrix(sys: &SwitchedSystem, cycle: &CycleSpec) -> Matrix {
    PowerCache::new(sys).transition(cycle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// Clock-dependent matrix sequences `P_h(0..=T_h)`.
    A,
    /// One matrix `P_h` per cycle, constrained through `Φ_h`.
    B,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::A => "a",
            Condition::B => "b",
        })
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Condition::A),
            "b" | "B" => Ok(Condition::B),
            other => Err(Error::InvalidArgument(format!("unknown condition '{other}'"))),
        }
    }
}

/// Matrix-valued decision blocks and LMIs of a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityCounts {
    pub num_variables: u128,
    pub num_lmis: u128,
}

/// Block and constraint counts without enumerating.
///
/// Condition (b): `(M, M²)`. Condition (a): `(Σ_h (T_h+1), M² + Σ_h T_h)`,
/// one step constraint per `k ∈ [0, T_h − 1]`. The published table lists
/// `Σ_h (T_h − 1)` step constraints instead; [`table_lmis_condition_a`]
/// returns that figure for comparison.
pub fn complexity_counts(sys: &SwitchedSystem, length: usize, condition: Condition) -> ComplexityCounts {
    let m = cycle_count(sys.num_modes(), sys.dwell_span(), length);
    let m2 = m.saturating_mul(m);
    match condition {
        Condition::B => ComplexityCounts {
            num_variables: m,
            num_lmis: m2,
        },
        Condition::A => {
            let sum_t = total_duration_sum(sys, length);
            ComplexityCounts {
                num_variables: sum_t.saturating_add(m),
                num_lmis: m2.saturating_add(sum_t),
            }
        }
    }
}

/// `M² + Σ_h (T_h − 1)` as printed in the complexity table.
pub fn table_lmis_condition_a(sys: &SwitchedSystem, length: usize) -> u128 {
    let m = cycle_count(sys.num_modes(), sys.dwell_span(), length);
    m.saturating_mul(m)
        .saturating_add(total_duration_sum(sys, length))
        .saturating_sub(m)
}

/// `Σ_h T_h`: every position takes each duration `M/d` times.
fn total_duration_sum(sys: &SwitchedSystem, length: usize) -> u128 {
    let dwell = sys.dwell();
    let d = dwell.span() as u128;
    let per_position: u128 = dwell.durations().map(u128::from).sum();
    let m = cycle_count(sys.num_modes(), dwell.span(), length);
    (m / d)
        .saturating_mul(per_position)
        .saturating_mul(length as u128)
}
