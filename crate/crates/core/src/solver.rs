//! Strict LMI feasibility by margin minimization.
//!
//! The problem solved is
//!
//! ```text
//! minimize t  subject to  F_c(X) ⪯ t·I   for every constraint c
//!                         I ⪯ X_b ⪯ μ·I  for every block b
//! ```
//!
//! with a primal log-det barrier method: for an increasing weight `s` the
//! function `s·t − Σ log det(slack)` is minimized by damped Newton steps, and
//! after each centering `t − t* ≤ ν/s` where `ν` is the total slack dimension.
//! The search stops as soon as the attained margin certifies `t* ≤ −ε`
//! or the lower bound `t − ν/s` rules it out.
//!
//! A `Feasible` verdict is only returned after re-evaluating every constraint
//! of the returned assignment from the problem data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lmi::LmiProblem;
use crate::matrix::{max_sym_eigenvalue, Matrix, SymMatrix, DEFAULT_EIG_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Strictness margin `ε`: feasible means every constraint has `λ_max ≤ −ε`.
    pub margin: f64,
    /// Normalization cap `μ` in `I ⪯ X ⪯ μ·I`.
    pub norm_cap: f64,
    /// Relative optimality gap at which the search stops.
    pub tolerance: f64,
    /// Cap on Newton steps across all centerings.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            margin: 1e-8,
            norm_cap: 1e8,
            tolerance: 1e-9,
            max_iterations: 5000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::InvalidArgument(format!("margin must be positive, got {}", self.margin)));
        }
        if !(self.norm_cap > 1.0) || !self.norm_cap.is_finite() {
            return Err(Error::InvalidArgument(format!("norm cap must exceed 1, got {}", self.norm_cap)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    /// The margin cannot reach `−ε` under the normalization. Not evidence of
    /// instability: the conditions are sufficient only.
    Inconclusive,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Feasible => "feasible",
            Status::Inconclusive => "inconclusive",
            Status::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    pub status: Status,
    /// Attained margin: `max_c λ_max(F_c(X))` at the final iterate.
    pub margin: f64,
    /// Certified lower bound on the optimal margin.
    pub lower_bound: f64,
    /// Block values, present iff `status == Feasible`.
    pub assignment: Option<Vec<SymMatrix>>,
    pub iterations: usize,
    pub options: SolverOptions,
    pub message: Option<String>,
}

/// `C + Σ x_i B_i ⪰ 0` with dense row-major `dim × dim` matrices.
struct AffineLmi {
    dim: usize,
    constant: Vec<f64>,
    coeffs: Vec<(usize, Vec<f64>)>,
}

impl AffineLmi {
    fn slack(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.constant.clone();
        for (i, b) in &self.coeffs {
            let xi = x[*i];
            if xi != 0.0 {
                for (sv, bv) in s.iter_mut().zip(b) {
                    *sv += xi * bv;
                }
            }
        }
        s
    }
}

/// Index of the svec coordinates of each block.
struct Layout {
    block_offsets: Vec<usize>,
    block_dims: Vec<usize>,
    t_index: usize,
}

impl Layout {
    fn new(problem: &LmiProblem) -> Self {
        let mut block_offsets = Vec::with_capacity(problem.blocks.len());
        let mut next = 0;
        for b in &problem.blocks {
            block_offsets.push(next);
            next += b.dim * (b.dim + 1) / 2;
        }
        Self {
            block_offsets,
            block_dims: problem.blocks.iter().map(|b| b.dim).collect(),
            t_index: next,
        }
    }

    fn num_vars(&self) -> usize {
        self.t_index + 1
    }

    /// `(i, j)` pairs with `i ≤ j` in svec order.
    fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..dim).flat_map(move |i| (i..dim).map(move |j| (i, j)))
    }

    fn block_value(&self, x: &[f64], b: usize) -> SymMatrix {
        let n = self.block_dims[b];
        let mut m = Matrix::zeros(n, n);
        for (e, (i, j)) in Self::pairs(n).enumerate() {
            let v = x[self.block_offsets[b] + e];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        SymMatrix::symmetrize(m)
    }
}

fn dense_identity(n: usize, c: f64) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = c;
    }
    v
}

/// `Gᵀ E_ij G` for the symmetric basis element at `(i, j)`.
fn basis_congruence(g: Option<&Matrix>, dim_out: usize, i: usize, j: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim_out * dim_out];
    match g {
        None => {
            out[i * dim_out + j] = 1.0;
            out[j * dim_out + i] = 1.0;
        }
        Some(g) => {
            // E_ij = e_i e_jᵀ + e_j e_iᵀ (or e_i e_iᵀ), so Gᵀ E_ij G uses rows i, j of G.
            for a in 0..dim_out {
                for b in 0..dim_out {
                    let v = if i == j {
                        g[(i, a)] * g[(i, b)]
                    } else {
                        g[(i, a)] * g[(j, b)] + g[(j, a)] * g[(i, b)]
                    };
                    out[a * dim_out + b] = v;
                }
            }
        }
    }
    out
}

fn lower_to_affine(problem: &LmiProblem, layout: &Layout, mu: f64) -> Vec<AffineLmi> {
    let mut lmis = Vec::with_capacity(problem.constraints.len() + 2 * problem.blocks.len());
    for con in &problem.constraints {
        let n = con.dim;
        let mut coeffs: Vec<(usize, Vec<f64>)> = vec![(layout.t_index, dense_identity(n, 1.0))];
        for term in &con.terms {
            let bdim = layout.block_dims[term.block];
            for (e, (i, j)) in Layout::pairs(bdim).enumerate() {
                let var = layout.block_offsets[term.block] + e;
                let mut b = basis_congruence(term.factor.as_ref(), n, i, j);
                for v in &mut b {
                    *v *= -term.sign;
                }
                match coeffs.iter_mut().find(|(idx, _)| *idx == var) {
                    Some((_, existing)) => existing.iter_mut().zip(&b).for_each(|(x, y)| *x += y),
                    None => coeffs.push((var, b)),
                }
            }
        }
        lmis.push(AffineLmi {
            dim: n,
            constant: vec![0.0; n * n],
            coeffs,
        });
    }
    for (bi, &n) in layout.block_dims.iter().enumerate() {
        let basis: Vec<(usize, Vec<f64>)> = Layout::pairs(n)
            .enumerate()
            .map(|(e, (i, j))| (layout.block_offsets[bi] + e, basis_congruence(None, n, i, j)))
            .collect();
        lmis.push(AffineLmi {
            dim: n,
            constant: dense_identity(n, -1.0),
            coeffs: basis.clone(),
        });
        lmis.push(AffineLmi {
            dim: n,
            constant: dense_identity(n, mu),
            coeffs: basis
                .into_iter()
                .map(|(i, b)| (i, b.into_iter().map(|v| -v).collect()))
                .collect(),
        });
    }
    lmis
}

/// Dense Cholesky of a small row-major SPD matrix; returns `(log det, inverse)`.
fn spd_logdet_inverse(s: &[f64], n: usize) -> Option<(f64, Vec<f64>)> {
    let sym = SymMatrix::symmetrize(Matrix::new(n, n, s.to_vec()).ok()?);
    let l = sym.cholesky()?;
    let logdet = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let inv = sym.inverse_spd()?;
    Some((logdet, inv.as_matrix().as_slice().to_vec()))
}

fn spd_logdet(s: &[f64], n: usize) -> Option<f64> {
    let sym = SymMatrix::symmetrize(Matrix::new(n, n, s.to_vec()).ok()?);
    let l = sym.cholesky()?;
    Some(2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>())
}

struct Barrier<'a> {
    lmis: &'a [AffineLmi],
    t_index: usize,
}

impl Barrier<'_> {
    /// `s·t − Σ log det S_j(x)`, or `None` outside the domain.
    fn value(&self, x: &[f64], weight: f64) -> Option<f64> {
        let mut f = weight * x[self.t_index];
        for lmi in self.lmis {
            f -= spd_logdet(&lmi.slack(x), lmi.dim)?;
        }
        Some(f)
    }

    fn derivatives(&self, x: &[f64], weight: f64) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let nv = x.len();
        let mut grad = DVector::zeros(nv);
        let mut hess = DMatrix::zeros(nv, nv);
        let mut f = weight * x[self.t_index];
        grad[self.t_index] = weight;
        let mut us: Vec<Vec<f64>> = Vec::new();
        for lmi in self.lmis {
            let n = lmi.dim;
            let (logdet, sinv) = spd_logdet_inverse(&lmi.slack(x), n)?;
            f -= logdet;
            us.clear();
            for (i, b) in &lmi.coeffs {
                // U = S⁻¹ B
                let mut u = vec![0.0; n * n];
                for r in 0..n {
                    for c in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += sinv[r * n + k] * b[k * n + c];
                        }
                        u[r * n + c] = acc;
                    }
                }
                grad[*i] -= (0..n).map(|d| u[d * n + d]).sum::<f64>();
                us.push(u);
            }
            for (a, (ia, _)) in lmi.coeffs.iter().enumerate() {
                for (b, (ib, _)) in lmi.coeffs.iter().enumerate().skip(a) {
                    // tr(U_a U_b)
                    let (ua, ub) = (&us[a], &us[b]);
                    let mut tr = 0.0;
                    for r in 0..n {
                        for c in 0..n {
                            tr += ua[r * n + c] * ub[c * n + r];
                        }
                    }
                    hess[(*ia, *ib)] += tr;
                    if a != b {
                        hess[(*ib, *ia)] += tr;
                    }
                }
            }
        }
        Some((f, grad, hess))
    }
}

/// Solves `H Δ = −g` after symmetric diagonal scaling; retries with a growing
/// ridge if the scaled matrix is not numerically positive definite.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let d: DVector<f64> = DVector::from_iterator(n, (0..n).map(|i| {
        let h = hess[(i, i)];
        if h > 0.0 {
            1.0 / h.sqrt()
        } else {
            1.0
        }
    }));
    let mut scaled = hess.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let rhs = -grad.component_mul(&d);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut m = scaled.clone();
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            let y = ch.solve(&rhs);
            let dir = y.component_mul(&d);
            if dir.iter().all(|v| v.is_finite()) {
                return Some(dir);
            }
        }
        ridge = if ridge == 0.0 { 1e-14 } else { ridge * 100.0 };
    }
    None
}

/// Largest eigenvalue over all constraints, evaluated from the problem data.
pub fn attained_margin(problem: &LmiProblem, assignment: &[SymMatrix]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for c in 0..problem.num_constraints() {
        let v = problem.evaluate(c, assignment);
        worst = worst.max(max_sym_eigenvalue(&v, DEFAULT_EIG_TOL)?);
    }
    Ok(worst)
}

const CENTERING_DECREMENT: f64 = 1e-10;
const WEIGHT_GROWTH: f64 = 16.0;
const MIN_STEP: f64 = 1e-14;
const PRECISION_FLOOR_DECREMENT: f64 = 1e-4;

/// Decides strict feasibility of `problem` under `opts`.
pub fn solve_feasibility(problem: &LmiProblem, opts: &SolverOptions) -> Result<FeasibilityResult> {
    opts.validate()?;
    if !problem.is_well_formed() {
        return Err(Error::InvalidArgument("problem references undeclared blocks or mismatched shapes".into()));
    }
    let layout = Layout::new(problem);
    let lmis = lower_to_affine(problem, &layout, opts.norm_cap);
    let barrier = Barrier {
        lmis: &lmis,
        t_index: layout.t_index,
    };
    let nu: f64 = lmis.iter().map(|l| l.dim as f64).sum();
    let blocks_of = |x: &[f64]| -> Vec<SymMatrix> {
        (0..problem.num_blocks()).map(|b| layout.block_value(x, b)).collect()
    };

    // Start at the centre of the normalization box with t just above the worst constraint.
    let centre = 0.5 * (1.0 + opts.norm_cap);
    let mut x = vec![0.0; layout.num_vars()];
    for (b, &n) in layout.block_dims.iter().enumerate() {
        for (e, (i, j)) in Layout::pairs(n).enumerate() {
            if i == j {
                x[layout.block_offsets[b] + e] = centre;
            }
        }
    }
    let t0 = attained_margin(problem, &blocks_of(&x))?;
    x[layout.t_index] = t0 + t0.abs().max(1.0);

    let mut weight = nu / t0.abs().max(1.0);
    let mut iterations = 0usize;
    let finish = |status, margin, lower_bound, assignment, iterations, message| FeasibilityResult {
        status,
        margin,
        lower_bound,
        assignment,
        iterations,
        options: *opts,
        message,
    };

    loop {
        // Centering.
        let mut stalled = false;
        loop {
            if iterations >= opts.max_iterations {
                let blocks = blocks_of(&x);
                let margin = attained_margin(problem, &blocks)?;
                return Ok(verdict_at_stop(
                    problem,
                    opts,
                    blocks,
                    margin,
                    f64::NEG_INFINITY,
                    iterations,
                    format!("iteration cap {} reached", opts.max_iterations),
                    finish,
                ));
            }
            let Some((f, grad, hess)) = barrier.derivatives(&x, weight) else {
                return Err(Error::NumericalFailure("iterate left the barrier domain".into()));
            };
            let Some(dir) = newton_direction(&hess, &grad) else {
                stalled = true;
                break;
            };
            iterations += 1;
            let slope = grad.dot(&dir);
            let decrement_sq = -slope;
            if !(decrement_sq > 0.0) || decrement_sq / 2.0 <= CENTERING_DECREMENT {
                break;
            }
            let mut alpha = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
                if let Some(ft) = barrier.value(&trial, weight) {
                    if ft <= f + 0.25 * alpha * slope {
                        break Some((trial, ft));
                    }
                }
                alpha *= 0.5;
                if alpha < MIN_STEP {
                    break None;
                }
            };
            match accepted {
                Some((next, ft)) => {
                    x = next;
                    // rounding floor: the barrier value no longer moves
                    if ft >= f {
                        break;
                    }
                }
                None if decrement_sq / 2.0 <= PRECISION_FLOOR_DECREMENT => break,
                None => {
                    stalled = true;
                    break;
                }
            }
        }

        let blocks = blocks_of(&x);
        let margin = attained_margin(problem, &blocks)?;
        let t = x[layout.t_index];
        let gap = nu / weight;
        // Twice the central-path gap absorbs inexact centering.
        let lower_bound = t - 2.0 * gap;

        if stalled {
            return Ok(verdict_at_stop(
                problem,
                opts,
                blocks,
                margin,
                lower_bound,
                iterations,
                "Newton iteration lost progress".to_string(),
                finish,
            ));
        }
        if lower_bound > -opts.margin {
            return Ok(finish(Status::Inconclusive, margin, lower_bound, None, iterations, None));
        }
        if gap <= opts.tolerance * t.abs().max(1.0) {
            if margin <= -opts.margin && verified(problem, opts, &blocks)? {
                return Ok(finish(Status::Feasible, margin, lower_bound, Some(blocks), iterations, None));
            }
            return Ok(finish(Status::Inconclusive, margin, lower_bound, None, iterations, None));
        }
        weight *= WEIGHT_GROWTH;
    }
}

/// Independent re-check of a candidate assignment: every constraint at most
/// `−ε` and every block inside `[I, μ·I]` (up to eigenvalue tolerance).
fn verified(problem: &LmiProblem, opts: &SolverOptions, blocks: &[SymMatrix]) -> Result<bool> {
    if attained_margin(problem, blocks)? > -opts.margin {
        return Ok(false);
    }
    for b in blocks {
        let lo = b.min_eigenvalue(DEFAULT_EIG_TOL)?;
        let hi = b.max_eigenvalue(DEFAULT_EIG_TOL)?;
        if lo < 1.0 - 1e-9 || hi > opts.norm_cap * (1.0 + 1e-9) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn verdict_at_stop<F>(
    problem: &LmiProblem,
    opts: &SolverOptions,
    blocks: Vec<SymMatrix>,
    margin: f64,
    lower_bound: f64,
    iterations: usize,
    message: String,
    finish: F,
) -> FeasibilityResult
where
    F: Fn(Status, f64, f64, Option<Vec<SymMatrix>>, usize, Option<String>) -> FeasibilityResult,
{
    // A verified point is still a valid certificate even if the search stopped early.
    if margin <= -opts.margin && verified(problem, opts, &blocks).unwrap_or(false) {
        return finish(Status::Feasible, margin, lower_bound, Some(blocks), iterations, Some(message));
    }
    if lower_bound > -opts.margin {
        return finish(Status::Inconclusive, margin, lower_bound, None, iterations, Some(message));
    }
    finish(Status::NumericalFailure, margin, lower_bound, None, iterations, Some(message))
}
