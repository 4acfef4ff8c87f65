//! Switched linear systems `x(k+1) = A_σ(k) x(k)` with ranged dwell time.
//!
//! Mode indices are 1-based at every public boundary (documents, signals,
//! cycles, CSV output) and converted to 0-based only when indexing
//! [`SwitchedSystem::modes`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Inclusive dwell-time interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dwell {
    pub min: u32,
    pub max: u32,
}

impl Dwell {
    pub fn new(min: u32, max: u32) -> Result<Self> {
        if min < 1 || min > max {
            return Err(Error::DwellBounds { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn periodic(tau: u32) -> Result<Self> {
        Self::new(tau, tau)
    }

    /// Number of admissible durations, `max − min + 1`.
    pub fn span(&self) -> u32 {
        self.max - self.min + 1
    }

    pub fn contains(&self, duration: u32) -> bool {
        (self.min..=self.max).contains(&duration)
    }

    pub fn durations(&self) -> impl Iterator<Item = u32> {
        self.min..=self.max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    state_dim: usize,
    modes: Vec<Matrix>,
    dwell: Dwell,
}

/// Wire form of the system document.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDocument {
    state_dim: usize,
    modes: Vec<Vec<Vec<f64>>>,
    dwell: RawDwell,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDwell {
    min: i64,
    max: i64,
}

impl SwitchedSystem {
    pub fn new(modes: Vec<Matrix>, dwell: Dwell) -> Result<Self> {
        if modes.len() < 2 {
            return Err(Error::TooFewModes(modes.len()));
        }
        let n = modes[0].rows();
        for (i, m) in modes.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "mode {} is {}x{}, expected {n}x{n}",
                    i + 1,
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let dwell = Dwell::new(dwell.min, dwell.max)?;
        Ok(Self {
            state_dim: n,
            modes,
            dwell,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Matrix] {
        &self.modes
    }

    /// Matrix of a 1-based mode index.
    pub fn mode(&self, mode: usize) -> &Matrix {
        &self.modes[mode - 1]
    }

    pub fn dwell(&self) -> Dwell {
        self.dwell
    }

    /// `d = τ_max − τ_min + 1`.
    pub fn dwell_span(&self) -> u32 {
        self.dwell.span()
    }

    /// Same modes, different dwell interval.
    pub fn with_dwell(&self, dwell: Dwell) -> Result<Self> {
        Self::new(self.modes.clone(), dwell)
    }

    /// Parses and validates a system document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDocument =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        if doc.dwell.min < 1 || doc.dwell.min > doc.dwell.max || doc.dwell.max > u32::MAX as i64 {
            return Err(Error::DwellBounds {
                min: doc.dwell.min.clamp(0, u32::MAX as i64) as u32,
                max: doc.dwell.max.clamp(0, u32::MAX as i64) as u32,
            });
        }
        if doc.state_dim == 0 {
            return Err(Error::DimensionMismatch("state_dim must be positive".into()));
        }
        if doc.modes.len() < 2 {
            return Err(Error::TooFewModes(doc.modes.len()));
        }
        let mut modes = Vec::with_capacity(doc.modes.len());
        for (i, rows) in doc.modes.iter().enumerate() {
            let shape_ok =
                rows.len() == doc.state_dim && rows.iter().all(|r| r.len() == doc.state_dim);
            if !shape_ok {
                let cols = rows.first().map_or(0, Vec::len);
                return Err(Error::DimensionMismatch(format!(
                    "mode {} is {}x{cols}, expected {n}x{n}",
                    i + 1,
                    rows.len(),
                    n = doc.state_dim
                )));
            }
            modes.push(Matrix::from_rows(rows)?);
        }
        Self::new(
            modes,
            Dwell {
                min: doc.dwell.min as u32,
                max: doc.dwell.max as u32,
            },
        )
    }

    pub fn to_json(&self) -> String {
        let doc = SystemDocument {
            state_dim: self.state_dim,
            modes: self.modes.iter().map(Matrix::to_rows).collect(),
            dwell: RawDwell {
                min: self.dwell.min as i64,
                max: self.dwell.max as i64,
            },
        };
        serde_json::to_string(&doc).expect("system document serializes")
    }

    /// SHA-256 of the canonical document, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// One activation of a mode for a number of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub mode: usize,
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingSignal {
    segments: Vec<Segment>,
}

impl SwitchingSignal {
    /// Checks the segments against `sys`: mode range, durations within the
    /// dwell interval, and no two consecutive segments on the same mode.
    pub fn new(sys: &SwitchedSystem, segments: Vec<Segment>) -> Result<Self> {
        let signal = Self { segments };
        signal.check(sys)?;
        Ok(signal)
    }

    /// Parses `"1:6,2:6"` (mode:duration pairs).
    pub fn parse(sys: &SwitchedSystem, spec: &str) -> Result<Self> {
        let mut segments = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (m, d) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("segment '{part}' is not mode:duration")))?;
            let mode = m
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad mode '{m}'")))?;
            let duration = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad duration '{d}'")))?;
            segments.push(Segment { mode, duration });
        }
        Self::new(sys, segments)
    }

    /// Modes `1, 2, …, N` in turn, each for `tau` steps.
    pub fn periodic(sys: &SwitchedSystem, tau: u32) -> Result<Self> {
        let segments = (1..=sys.num_modes())
            .map(|mode| Segment { mode, duration: tau })
            .collect();
        Self::new(sys, segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Steps covered by one pass through the segments.
    pub fn period(&self) -> u64 {
        self.segments.iter().map(|s| s.duration as u64).sum()
    }

    fn check(&self, sys: &SwitchedSystem) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InadmissibleSignal("signal has no segments".into()));
        }
        let n = sys.num_modes();
        let dwell = sys.dwell();
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.mode < 1 || seg.mode > n {
                return Err(Error::InadmissibleSignal(format!(
                    "segment {i}: mode {} outside [1, {n}]",
                    seg.mode
                )));
            }
            if !dwell.contains(seg.duration) {
                return Err(Error::InadmissibleSignal(format!(
                    "segment {i}: duration {} outside dwell range [{}, {}]",
                    seg.duration, dwell.min, dwell.max
                )));
            }
            if i > 0 && self.segments[i - 1].mode == seg.mode {
                return Err(Error::InadmissibleSignal(format!(
                    "segments {} and {i} repeat mode {}",
                    i - 1,
                    seg.mode
                )));
            }
        }
        Ok(())
    }

    /// Whether repeating the segment list keeps the no-repeat rule.
    pub fn repeats_admissibly(&self) -> bool {
        self.segments.len() == 1 || self.segments[0].mode != self.segments[self.segments.len() - 1].mode
    }

    /// Active 1-based mode at each of the first `steps` steps, repeating
    /// the segment list cyclically.
    pub fn mode_sequence(&self, steps: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(steps);
        'outer: loop {
            for seg in &self.segments {
                for _ in 0..seg.duration {
                    if out.len() == steps {
                        break 'outer;
                    }
                    out.push(seg.mode);
                }
            }
            if out.len() == steps {
                break;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[k]` is `x(k)`, for `k = 0..=K`.
    pub states: Vec<Vec<f64>>,
    /// `modes[k]` is the 1-based mode applied between `x(k)` and `x(k+1)`.
    pub modes: Vec<usize>,
}

impl Trajectory {
    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|x| euclidean_norm(x)).collect()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds x(0)")
    }
}

pub fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs `x(k+1) = A_σ(k) x(k)` for `horizon` steps.
pub fn simulate(
    sys: &SwitchedSystem,
    signal: &SwitchingSignal,
    x0: &[f64],
    horizon: usize,
) -> Result<Trajectory> {
    signal.check(sys)?;
    if x0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            sys.state_dim()
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if horizon as u64 > signal.period() && !signal.repeats_admissibly() {
        return Err(Error::InadmissibleSignal(format!(
            "horizon {horizon} exceeds the signal's {} steps and repeating it joins mode {} to itself",
            signal.period(),
            signal.segments[0].mode
        )));
    }
    Ok(run_modes(sys, signal.mode_sequence(horizon), x0.to_vec()))
}

pub(crate) fn run_modes(sys: &SwitchedSystem, modes: Vec<usize>, x0: Vec<f64>) -> Trajectory {
    let mut states = Vec::with_capacity(modes.len() + 1);
    states.push(x0);
    for &m in &modes {
        let next = sys.mode(m).mul_vec(states.last().unwrap());
        states.push(next);
    }
    Trajectory { states, modes }
}

/// Random admissible signal: first mode uniform over all modes, each later mode
/// uniform over the `N − 1` others, durations uniform over the dwell range.
/// The same seed always yields the same signal.
pub fn random_admissible_signal(
    sys: &SwitchedSystem,
    seed: u64,
    num_segments: usize,
) -> Result<SwitchingSignal> {
    if num_segments == 0 {
        return Err(Error::InvalidArgument("num_segments must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.num_modes();
    let dwell = sys.dwell();
    let mut segments: Vec<Segment> = Vec::with_capacity(num_segments);
    for _ in 0..num_segments {
        let mode = match segments.last() {
            None => rng.gen_range(1..=n),
            Some(prev) => {
                let pick = rng.gen_range(1..n);
                if pick >= prev.mode {
                    pick + 1
                } else {
                    pick
                }
            }
        };
        let duration = rng.gen_range(dwell.min..=dwell.max);
        segments.push(Segment { mode, duration });
    }
    SwitchingSignal::new(sys, segments)
}
