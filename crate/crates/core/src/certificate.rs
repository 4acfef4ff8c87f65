//! Stability certificates: independent verification, conversion between the
//! clock-dependent form (a) and the product form (b), and the JSON file format.
//!
//! Verification recomputes every inequality from the system matrices and the
//! cycle family. It does not go through [`crate::lmi`] or the solver.

use serde::{Deserialize, Serialize};

use crate::cycles::{Condition, CycleFamily, CycleSpec, PowerCache};
use crate::error::{Error, Result};
use crate::lmi::LmiProblem;
use crate::matrix::{max_sym_eigenvalue, SymMatrix, DEFAULT_EIG_TOL};
use crate::solver::{FeasibilityResult, Status};
use crate::system::{Dwell, Segment, SwitchedSystem};

/// Default verification tolerance; every checked eigenvalue must be below `−tol`.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CertMeta {
    pub system_hash: String,
    pub dwell: Dwell,
    pub eps: Option<f64>,
    pub mu: Option<f64>,
}

impl CertMeta {
    pub fn for_system(sys: &SwitchedSystem) -> Self {
        Self {
            system_hash: sys.content_hash(),
            dwell: sys.dwell(),
            eps: None,
            mu: None,
        }
    }
}

/// One `P_h` per cycle, `matrices[h − 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateB {
    pub length: usize,
    pub meta: CertMeta,
    pub matrices: Vec<SymMatrix>,
}

/// One sequence `P_h(0..=T_h)` per cycle, `sequences[h − 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateA {
    pub length: usize,
    pub meta: CertMeta,
    pub sequences: Vec<Vec<SymMatrix>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// `P_h ≻ 0` (`k = None`) or `P_h(k) ≻ 0`; recorded as `λ_max(−P)`.
    Positivity { h: usize, k: Option<usize> },
    Product { h: usize, q: usize },
    Step { h: usize, k: usize, mode: usize },
    Coupling { h: usize, q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckRecord {
    pub kind: CheckKind,
    /// Largest eigenvalue of the matrix that must be negative definite.
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub tol: f64,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_eigenvalue < -self.tol)
    }

    /// Largest recorded eigenvalue (closest to failing).
    pub fn worst(&self) -> f64 {
        self.checks
            .iter()
            .fold(f64::NEG_INFINITY, |m, c| m.max(c.max_eigenvalue))
    }

    pub fn worst_where(&self, pred: impl Fn(&CheckKind) -> bool) -> f64 {
        self.checks
            .iter()
            .filter(|c| pred(&c.kind))
            .fold(f64::NEG_INFINITY, |m, c| m.max(c.max_eigenvalue))
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.max_eigenvalue >= -self.tol)
    }

    pub fn positivity_passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| matches!(c.kind, CheckKind::Positivity { .. }))
            .all(|c| c.max_eigenvalue < -self.tol)
    }
}

fn check_family_matches(sys: &SwitchedSystem, family: &CycleFamily, length: usize, count: usize) -> Result<()> {
    if family.num_modes() != sys.num_modes() || family.dwell() != sys.dwell() {
        return Err(Error::IndexMismatch("cycle family was enumerated for a different system".into()));
    }
    if family.length() != length {
        return Err(Error::IndexMismatch(format!(
            "certificate has L={length}, family has L={}",
            family.length()
        )));
    }
    if family.len() != count {
        return Err(Error::IndexMismatch(format!(
            "certificate has {count} cycles, family has {}",
            family.len()
        )));
    }
    Ok(())
}

fn neg_definite_margin(m: &SymMatrix) -> Result<f64> {
    max_sym_eigenvalue(m, DEFAULT_EIG_TOL)
}

fn positivity(m: &SymMatrix) -> Result<f64> {
    max_sym_eigenvalue(&m.scale(-1.0), DEFAULT_EIG_TOL)
}

/// Checks `P_h ≻ 0` and `Φ_hᵀ P_h Φ_h − P_q ≺ 0` for all `h, q`.
pub fn verify_certificate_b(
    sys: &SwitchedSystem,
    family: &CycleFamily,
    cert: &CertificateB,
    tol: f64,
) -> Result<VerificationReport> {
    check_family_matches(sys, family, cert.length, cert.matrices.len())?;
    let n = sys.state_dim();
    if cert.matrices.iter().any(|p| p.dim() != n) {
        return Err(Error::DimensionMismatch(format!("certificate matrices must be {n}x{n}")));
    }
    let mut checks = Vec::with_capacity(family.len() * (family.len() + 1));
    for (i, p) in cert.matrices.iter().enumerate() {
        checks.push(CheckRecord {
            kind: CheckKind::Positivity { h: i + 1, k: None },
            max_eigenvalue: positivity(p)?,
        });
    }
    let mut cache = PowerCache::new(sys);
    for (c, p_h) in family.cycles().iter().zip(&cert.matrices) {
        let decreased = p_h.congruence(&cache.transition(c));
        for (qi, p_q) in cert.matrices.iter().enumerate() {
            checks.push(CheckRecord {
                kind: CheckKind::Product { h: c.index(), q: qi + 1 },
                max_eigenvalue: neg_definite_margin(&decreased.sub(p_q))?,
            });
        }
    }
    Ok(VerificationReport { tol, checks })
}

/// Checks positivity of every `P_h(k)`, the step inequalities with the mode of
/// the segment containing `k`, and the coupling `P_h(0) − P_q(T_q) ≺ 0`.
pub fn verify_certificate_a(
    sys: &SwitchedSystem,
    family: &CycleFamily,
    cert: &CertificateA,
    tol: f64,
) -> Result<VerificationReport> {
    check_family_matches(sys, family, cert.length, cert.sequences.len())?;
    let n = sys.state_dim();
    for (c, seq) in family.cycles().iter().zip(&cert.sequences) {
        let expected = c.total_duration() + 1;
        if seq.len() != expected {
            return Err(Error::SequenceLength {
                h: c.index(),
                got: seq.len(),
                expected,
            });
        }
        if seq.iter().any(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch(format!("certificate matrices must be {n}x{n}")));
        }
    }
    let mut checks = Vec::new();
    for (c, seq) in family.cycles().iter().zip(&cert.sequences) {
        for (k, p) in seq.iter().enumerate() {
            checks.push(CheckRecord {
                kind: CheckKind::Positivity { h: c.index(), k: Some(k) },
                max_eigenvalue: positivity(p)?,
            });
        }
        for (k, mode) in c.step_modes().into_iter().enumerate() {
            let v = seq[k + 1].congruence(sys.mode(mode)).sub(&seq[k]);
            checks.push(CheckRecord {
                kind: CheckKind::Step { h: c.index(), k, mode },
                max_eigenvalue: neg_definite_margin(&v)?,
            });
        }
    }
    for (h, seq_h) in family.cycles().iter().zip(&cert.sequences) {
        for (q, seq_q) in family.cycles().iter().zip(&cert.sequences) {
            let v = seq_h[0].sub(&seq_q[q.total_duration()]);
            checks.push(CheckRecord {
                kind: CheckKind::Coupling {
                    h: h.index(),
                    q: q.index(),
                },
                max_eigenvalue: neg_definite_margin(&v)?,
            });
        }
    }
    Ok(VerificationReport { tol, checks })
}

/// Schedule for the per-step slack `Q_h(k) = δ·I` used by [`convert_b_to_a`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionOptions {
    /// Initial `δ`; `None` picks `1e−4 ×` the smallest product-constraint margin.
    pub delta0: Option<f64>,
    pub shrink: f64,
    pub max_attempts: usize,
    pub tol: f64,
}

impl Default for ConversionOptions {
    fn default() -> Self {
        Self {
            delta0: None,
            shrink: 0.1,
            max_attempts: 30,
            tol: DEFAULT_VERIFY_TOL,
        }
    }
}

/// Backward recursion `P_h(T_h) = P_h`, `P_h(k) = A_iᵀ P_h(k+1) A_i + δ·I` for the
/// mode `i` active at step `k`.
fn clock_sequences(sys: &SwitchedSystem, family: &CycleFamily, cert: &CertificateB, delta: f64) -> Vec<Vec<SymMatrix>> {
    let n = sys.state_dim();
    let slack = SymMatrix::scaled_identity(n, delta);
    family
        .cycles()
        .iter()
        .zip(&cert.matrices)
        .map(|(c, p_end)| {
            let modes = c.step_modes();
            let mut seq = vec![p_end.clone(); modes.len() + 1];
            for k in (0..modes.len()).rev() {
                seq[k] = seq[k + 1].congruence(sys.mode(modes[k])).add(&slack);
            }
            seq
        })
        .collect()
}

/// Builds a clock-dependent certificate from a product-form one.
///
/// The recursion satisfies every step inequality with value `−δ·I`; the
/// coupling inequalities hold once `δ` is small relative to the product margins,
/// so `δ` shrinks geometrically until the result verifies.
pub fn convert_b_to_a(
    sys: &SwitchedSystem,
    family: &CycleFamily,
    cert: &CertificateB,
    opts: &ConversionOptions,
) -> Result<CertificateA> {
    if !(opts.shrink > 0.0 && opts.shrink < 1.0) {
        return Err(Error::InvalidArgument(format!("shrink must lie in (0, 1), got {}", opts.shrink)));
    }
    let source = verify_certificate_b(sys, family, cert, opts.tol)?;
    if !source.passed() {
        return Err(Error::InvalidArgument(format!(
            "product-form certificate does not verify (worst eigenvalue {:e})",
            source.worst()
        )));
    }
    let mut delta = match opts.delta0 {
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(Error::InvalidArgument(format!("delta0 must be positive, got {d}"))),
        None => 1e-4 * -source.worst_where(|k| matches!(k, CheckKind::Product { .. })),
    };
    let mut best = f64::INFINITY;
    for _ in 0..opts.max_attempts {
        let candidate = CertificateA {
            length: cert.length,
            meta: cert.meta.clone(),
            sequences: clock_sequences(sys, family, cert, delta),
        };
        let report = verify_certificate_a(sys, family, &candidate, opts.tol)?;
        if report.passed() {
            return Ok(candidate);
        }
        best = best.min(report.worst_where(|k| matches!(k, CheckKind::Coupling { .. })));
        delta *= opts.shrink;
    }
    Err(Error::ConversionFailed {
        attempts: opts.max_attempts,
        best_margin: best,
    })
}

/// Product-form certificate `P_h := P_h(T_h)`.
///
/// Chaining the step inequalities over a cycle gives
/// `Φ_hᵀ P_h(T_h) Φ_h ≺ P_h(0)`, and the coupling `P_h(0) ≺ P_q(T_q)` finishes
/// the product inequality.
pub fn extract_b_from_a(sys: &SwitchedSystem, family: &CycleFamily, cert: &CertificateA) -> Result<CertificateB> {
    check_family_matches(sys, family, cert.length, cert.sequences.len())?;
    let matrices = family
        .cycles()
        .iter()
        .zip(&cert.sequences)
        .map(|(c, seq)| {
            seq.get(c.total_duration()).cloned().ok_or(Error::SequenceLength {
                h: c.index(),
                got: seq.len(),
                expected: c.total_duration() + 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateB {
        length: cert.length,
        meta: cert.meta.clone(),
        matrices,
    })
}

fn solved_assignment(result: &FeasibilityResult) -> Result<&[SymMatrix]> {
    match (&result.status, &result.assignment) {
        (Status::Feasible, Some(a)) => Ok(a),
        _ => Err(Error::InvalidArgument(format!(
            "solver result is {} and carries no certificate",
            result.status
        ))),
    }
}

fn solved_meta(sys: &SwitchedSystem, result: &FeasibilityResult) -> CertMeta {
    CertMeta {
        eps: Some(result.options.margin),
        mu: Some(result.options.norm_cap),
        ..CertMeta::for_system(sys)
    }
}

/// Packages a feasible condition-(b) solve.
pub fn certificate_b_from_solution(
    sys: &SwitchedSystem,
    family: &CycleFamily,
    problem: &LmiProblem,
    result: &FeasibilityResult,
) -> Result<CertificateB> {
    if problem.condition != Condition::B || problem.num_blocks() != family.len() {
        return Err(Error::IndexMismatch("problem is not the condition (b) problem of this family".into()));
    }
    Ok(CertificateB {
        length: family.length(),
        meta: solved_meta(sys, result),
        matrices: solved_assignment(result)?.to_vec(),
    })
}

/// Packages a feasible condition-(a) solve.
pub fn certificate_a_from_solution(
    sys: &SwitchedSystem,
    family: &CycleFamily,
    problem: &LmiProblem,
    result: &FeasibilityResult,
) -> Result<CertificateA> {
    if problem.condition != Condition::A || problem.cycle_offsets.len() != family.len() {
        return Err(Error::IndexMismatch("problem is not the condition (a) problem of this family".into()));
    }
    let blocks = solved_assignment(result)?;
    let sequences = family
        .cycles()
        .iter()
        .map(|c| {
            (0..=c.total_duration())
                .map(|k| blocks[problem.block_index(c.index(), k)].clone())
                .collect()
        })
        .collect();
    Ok(CertificateA {
        length: family.length(),
        meta: solved_meta(sys, result),
        sequences,
    })
}

/// Values of the clock-dependent Lyapunov function along a run of `steps`
/// steps driven by `segments` (grouped `L` at a time into cycles).
///
/// Within a cycle the value at offset `k` uses `P_h(k)`; at each cycle boundary
/// the sequence holds the outgoing value `x ᵀP_q(T_q) x` followed by the incoming
/// `xᵀ P_h(0) x`, so a valid certificate makes the whole sequence strictly
/// decreasing while `x ≠ 0`.
pub fn lyapunov_trace(
    sys: &SwitchedSystem,
    family: &CycleFamily,
    cert: &CertificateA,
    segments: &[Segment],
    x0: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    let l = family.length();
    if segments.len() < l {
        return Err(Error::InvalidArgument("fewer segments than one cycle".into()));
    }
    let mut values = Vec::with_capacity(steps + steps / l + 2);
    let mut x = x0.to_vec();
    let mut done = 0usize;
    for group in segments.chunks_exact(l) {
        if done >= steps {
            break;
        }
        let modes: Vec<usize> = group.iter().map(|s| s.mode).collect();
        let durations: Vec<u32> = group.iter().map(|s| s.duration).collect();
        let h = family.rank(&modes, &durations).ok_or_else(|| {
            Error::InadmissibleSignal(format!("segments {modes:?}/{durations:?} are not a cycle of the family"))
        })?;
        let cycle: &CycleSpec = family.get(h).expect("rank is in range");
        let seq = &cert.sequences[h - 1];
        values.push(seq[0].quad_form(&x));
        for (k, mode) in cycle.step_modes().into_iter().enumerate() {
            if done >= steps {
                break;
            }
            x = sys.mode(mode).mul_vec(&x);
            done += 1;
            values.push(seq[k + 1].quad_form(&x));
        }
    }
    if done < steps {
        return Err(Error::InvalidArgument(format!(
            "segments cover {done} complete-cycle steps, {steps} requested"
        )));
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateDocument {
    condition: Condition,
    #[serde(rename = "L")]
    length: usize,
    dwell: Dwell,
    system_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    entries: Vec<CertificateEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateEntry {
    h: usize,
    modes: Vec<usize>,
    durations: Vec<u32>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    p: Option<SymMatrix>,
    #[serde(rename = "P_seq", default, skip_serializing_if = "Option::is_none")]
    p_seq: Option<Vec<SymMatrix>>,
}

/// `(h, modes, durations)` as written next to each entry of a certificate file.
pub type EntryLabel = (usize, Vec<usize>, Vec<u32>);

/// A certificate of either form, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    A(CertificateA),
    B(CertificateB),
}

impl Certificate {
    pub fn condition(&self) -> Condition {
        match self {
            Certificate::A(_) => Condition::A,
            Certificate::B(_) => Condition::B,
        }
    }

    pub fn length(&self) -> usize {
        match self {
            Certificate::A(c) => c.length,
            Certificate::B(c) => c.length,
        }
    }

    pub fn meta(&self) -> &CertMeta {
        match self {
            Certificate::A(c) => &c.meta,
            Certificate::B(c) => &c.meta,
        }
    }

    /// Serializes with cycle labels taken from `family`.
    pub fn to_json(&self, family: &CycleFamily) -> Result<String> {
        let meta = self.meta();
        let entries = match self {
            Certificate::B(c) => {
                if c.matrices.len() != family.len() {
                    return Err(Error::IndexMismatch("certificate and family sizes differ".into()));
                }
                family
                    .cycles()
                    .iter()
                    .zip(&c.matrices)
                    .map(|(cy, p)| CertificateEntry {
                        h: cy.index(),
                        modes: cy.modes().to_vec(),
                        durations: cy.durations().to_vec(),
                        p: Some(p.clone()),
                        p_seq: None,
                    })
                    .collect()
            }
            Certificate::A(c) => {
                if c.sequences.len() != family.len() {
                    return Err(Error::IndexMismatch("certificate and family sizes differ".into()));
                }
                family
                    .cycles()
                    .iter()
                    .zip(&c.sequences)
                    .map(|(cy, seq)| CertificateEntry {
                        h: cy.index(),
                        modes: cy.modes().to_vec(),
                        durations: cy.durations().to_vec(),
                        p: None,
                        p_seq: Some(seq.clone()),
                    })
                    .collect()
            }
        };
        let doc = CertificateDocument {
            condition: self.condition(),
            length: self.length(),
            dwell: meta.dwell,
            system_hash: meta.system_hash.clone(),
            eps: meta.eps,
            mu: meta.mu,
            entries,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a certificate document. Entry labels are checked against the
    /// lexicographic cycle order when the certificate is bound to a family
    /// with [`Certificate::check_labels`].
    pub fn from_json(text: &str) -> Result<(Self, Vec<EntryLabel>)> {
        let doc: CertificateDocument =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let meta = CertMeta {
            system_hash: doc.system_hash,
            dwell: Dwell::new(doc.dwell.min, doc.dwell.max)?,
            eps: doc.eps,
            mu: doc.mu,
        };
        let labels = doc
            .entries
            .iter()
            .map(|e| (e.h, e.modes.clone(), e.durations.clone()))
            .collect();
        let cert = match doc.condition {
            Condition::B => Certificate::B(CertificateB {
                length: doc.length,
                meta,
                matrices: doc
                    .entries
                    .into_iter()
                    .map(|e| e.p.ok_or_else(|| Error::Malformed(format!("entry h={} lacks \"P\"", e.h))))
                    .collect::<Result<_>>()?,
            }),
            Condition::A => Certificate::A(CertificateA {
                length: doc.length,
                meta,
                sequences: doc
                    .entries
                    .into_iter()
                    .map(|e| e.p_seq.ok_or_else(|| Error::Malformed(format!("entry h={} lacks \"P_seq\"", e.h))))
                    .collect::<Result<_>>()?,
            }),
        };
        Ok((cert, labels))
    }

    /// Confirms that the entry labels of a parsed document are exactly the
    /// cycles of `family` in index order.
    pub fn check_labels(family: &CycleFamily, labels: &[EntryLabel]) -> Result<()> {
        if labels.len() != family.len() {
            return Err(Error::IndexMismatch(format!(
                "{} entries for {} cycles",
                labels.len(),
                family.len()
            )));
        }
        for (c, (h, modes, durations)) in family.cycles().iter().zip(labels) {
            if *h != c.index() || modes != c.modes() || durations != c.durations() {
                return Err(Error::IndexMismatch(format!("entry h={h} does not match cycle {c}")));
            }
        }
        Ok(())
    }

    /// Rejects a certificate issued for different modes or dwell range.
    pub fn check_system(&self, sys: &SwitchedSystem) -> Result<()> {
        let expected = sys.content_hash();
        if self.meta().system_hash != expected {
            return Err(Error::HashMismatch {
                expected,
                found: self.meta().system_hash.clone(),
            });
        }
        Ok(())
    }
}
