//! Structured LMI feasibility problems.
//!
//! A problem is a list of symmetric decision blocks and a list of constraints,
//! each a sum of terms `±Gᵀ X_b G` required to be negative definite. Every block
//! is also required to be positive definite. Constraints are kept in this
//! factored form rather than flattened into scalar inequalities.

use crate::cycles::{enumerate_multistep, Condition, CycleFamily, PowerCache};
use crate::error::Result;
use crate::matrix::{Matrix, SymMatrix};
use crate::system::SwitchedSystem;

/// What a decision block stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLabel {
    /// `P_h` of a product-form condition.
    Cycle { h: usize },
    /// `P_h(k)` of a clock-dependent condition.
    Clock { h: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub dim: usize,
    pub label: BlockLabel,
}

/// `sign · Gᵀ X_block G`; a missing factor means `G = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub block: usize,
    pub factor: Option<Matrix>,
    pub sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `Φ_hᵀ P_h Φ_h − P_q`.
    Product { h: usize, q: usize },
    /// `A_iᵀ P_h(k+1) A_i − P_h(k)` with `i` the mode active at step `k`.
    Step { h: usize, k: usize, mode: usize },
    /// `P_h(0) − P_q(T_q)`.
    Coupling { h: usize, q: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmiConstraint {
    pub dim: usize,
    pub terms: Vec<Term>,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub condition: Condition,
    pub blocks: Vec<VarBlock>,
    pub constraints: Vec<LmiConstraint>,
    /// For clock-dependent problems, the index of `P_h(0)` for each cycle
    /// (position `h − 1`); `P_h(k)` sits at `offset + k`.
    pub cycle_offsets: Vec<usize>,
}

impl LmiProblem {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Block index of `P_h(k)` (clock-dependent) or `P_h` (product form, `k`
    /// ignored).
    pub fn block_index(&self, h: usize, k: usize) -> usize {
        match self.condition {
            Condition::A => self.cycle_offsets[h - 1] + k,
            Condition::B => h - 1,
        }
    }

    /// Value of constraint `c` at the given block assignment.
    pub fn evaluate(&self, c: usize, assignment: &[SymMatrix]) -> SymMatrix {
        let con = &self.constraints[c];
        let mut acc = Matrix::zeros(con.dim, con.dim);
        for t in &con.terms {
            let x = assignment[t.block].as_matrix();
            let v = match &t.factor {
                Some(g) => g.congruence(x),
                None => x.clone(),
            };
            acc = acc.add(&v.scale(t.sign));
        }
        SymMatrix::symmetrize(acc)
    }

    /// Checks that every term references a declared block with consistent shapes.
    pub fn is_well_formed(&self) -> bool {
        self.constraints.iter().all(|c| {
            c.terms.iter().all(|t| {
                let Some(b) = self.blocks.get(t.block) else {
                    return false;
                };
                match &t.factor {
                    Some(g) => g.rows() == b.dim && g.cols() == c.dim,
                    None => b.dim == c.dim,
                }
            })
        })
    }
}

fn check_family(sys: &SwitchedSystem, family: &CycleFamily) {
    assert_eq!(
        (family.num_modes(), family.dwell()),
        (sys.num_modes(), sys.dwell()),
        "cycle family was enumerated for a different system"
    );
}

/// `Φ_hᵀ P_h Φ_h − P_q ≺ 0` for all ordered pairs `(h, q)`, including `h = q`.
pub fn build_condition_b(sys: &SwitchedSystem, family: &CycleFamily) -> LmiProblem {
    check_family(sys, family);
    let n = sys.state_dim();
    let m = family.len();
    let phis = family.transition_matrices(sys);
    let blocks = (1..=m)
        .map(|h| VarBlock {
            dim: n,
            label: BlockLabel::Cycle { h },
        })
        .collect();
    let mut constraints = Vec::with_capacity(m * m);
    for (hi, phi) in phis.iter().enumerate() {
        for qi in 0..m {
            constraints.push(LmiConstraint {
                dim: n,
                terms: vec![
                    Term {
                        block: hi,
                        factor: Some(phi.clone()),
                        sign: 1.0,
                    },
                    Term {
                        block: qi,
                        factor: None,
                        sign: -1.0,
                    },
                ],
                kind: ConstraintKind::Product { h: hi + 1, q: qi + 1 },
            });
        }
    }
    LmiProblem {
        condition: Condition::B,
        blocks,
        constraints,
        cycle_offsets: Vec::new(),
    }
}

/// Clock-dependent sequences `P_h(0..=T_h)`: one step constraint
/// `A_iᵀ P_h(k+1) A_i − P_h(k) ≺ 0` per `k ∈ [0, T_h − 1]` using the mode of the
/// segment containing `k`, then `P_h(0) − P_q(T_q) ≺ 0` for all ordered pairs.
pub fn build_condition_a(sys: &SwitchedSystem, family: &CycleFamily) -> LmiProblem {
    check_family(sys, family);
    let n = sys.state_dim();
    let mut blocks = Vec::new();
    let mut cycle_offsets = Vec::with_capacity(family.len());
    for c in family.cycles() {
        cycle_offsets.push(blocks.len());
        blocks.extend((0..=c.total_duration()).map(|k| VarBlock {
            dim: n,
            label: BlockLabel::Clock { h: c.index(), k },
        }));
    }
    let mut cache = PowerCache::new(sys);
    let mut constraints = Vec::new();
    for (c, &offset) in family.cycles().iter().zip(&cycle_offsets) {
        for (k, mode) in c.step_modes().into_iter().enumerate() {
            constraints.push(LmiConstraint {
                dim: n,
                terms: vec![
                    Term {
                        block: offset + k + 1,
                        factor: Some(cache.power(mode, 1).clone()),
                        sign: 1.0,
                    },
                    Term {
                        block: offset + k,
                        factor: None,
                        sign: -1.0,
                    },
                ],
                kind: ConstraintKind::Step {
                    h: c.index(),
                    k,
                    mode,
                },
            });
        }
    }
    for (h, &h_off) in family.cycles().iter().zip(&cycle_offsets) {
        for (q, &q_off) in family.cycles().iter().zip(&cycle_offsets) {
            constraints.push(LmiConstraint {
                dim: n,
                terms: vec![
                    Term {
                        block: h_off,
                        factor: None,
                        sign: 1.0,
                    },
                    Term {
                        block: q_off + q.total_duration(),
                        factor: None,
                        sign: -1.0,
                    },
                ],
                kind: ConstraintKind::Coupling {
                    h: h.index(),
                    q: q.index(),
                },
            });
        }
    }
    LmiProblem {
        condition: Condition::A,
        blocks,
        constraints,
        cycle_offsets,
    }
}

/// Multiple-step conditions for arbitrary switching (dwell range `[1, 1]`):
/// all `N^L` mode sequences with repeats allowed. `L = 1` with form (b) gives
/// `A_iᵀ P_i A_i − P_j ≺ 0`.
pub fn build_multistep(
    sys: &SwitchedSystem,
    length: usize,
    form: Condition,
    cap: usize,
) -> Result<LmiProblem> {
    let family = enumerate_multistep(sys, length, cap)?;
    Ok(match form {
        Condition::A => build_condition_a(sys, &family),
        Condition::B => build_condition_b(sys, &family),
    })
}

/// Builds the problem for either condition.
pub fn build(sys: &SwitchedSystem, family: &CycleFamily, condition: Condition) -> LmiProblem {
    match condition {
        Condition::A => build_condition_a(sys, family),
        Condition::B => build_condition_b(sys, family),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{complexity_counts, enumerate_cycles};
    use crate::matrix::mat_pow;
    use crate::system::Dwell;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example(dwell: Dwell) -> SwitchedSystem {
        let a1 = Matrix::from_rows(&[vec![1.0, 0.1], vec![-0.2, 0.9]]).unwrap();
        let a2 = Matrix::from_rows(&[vec![1.0, 0.1], vec![-0.9, 0.9]]).unwrap();
        SwitchedSystem::new(vec![a1, a2], dwell).unwrap()
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        SymMatrix::new(Matrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()).unwrap()
    }

    #[test]
    fn condition_b_l1_is_lemma_form() {
        let sys = example(Dwell::periodic(10).unwrap());
        let fam = enumerate_cycles(&sys, 1, 100).unwrap();
        let p = build_condition_b(&sys, &fam);
        assert_eq!(p.num_blocks(), 2);
        assert_eq!(p.num_constraints(), 4);
        assert!(p.is_well_formed());
        let a1_10 = mat_pow(sys.mode(1), 10).unwrap();
        let a2_10 = mat_pow(sys.mode(2), 10).unwrap();
        assert_eq!(p.constraints[0].terms[0].factor.as_ref(), Some(&a1_10));
        assert_eq!(p.constraints[3].terms[0].factor.as_ref(), Some(&a2_10));
        assert_eq!(p.constraints[1].kind, ConstraintKind::Product { h: 1, q: 2 });
    }

    #[test]
    fn condition_b_l2_products() {
        let tau = 3;
        let sys = example(Dwell::periodic(tau).unwrap());
        let fam = enumerate_cycles(&sys, 2, 100).unwrap();
        let p = build_condition_b(&sys, &fam);
        assert_eq!((p.num_blocks(), p.num_constraints()), (2, 4));
        let a1 = mat_pow(sys.mode(1), tau).unwrap();
        let a2 = mat_pow(sys.mode(2), tau).unwrap();
        assert_eq!(p.constraints[0].terms[0].factor.as_ref(), Some(&a2.matmul(&a1)));
        assert_eq!(p.constraints[2].terms[0].factor.as_ref(), Some(&a1.matmul(&a2)));
    }

    #[test]
    fn identity_system_emits_diagonal_pairs() {
        let id = Matrix::identity(2);
        let sys = SwitchedSystem::new(vec![id.clone(), id], Dwell::periodic(1).unwrap()).unwrap();
        let fam = enumerate_cycles(&sys, 1, 100).unwrap();
        let p = build_condition_b(&sys, &fam);
        let ident = vec![SymMatrix::identity(2); 2];
        // h = q: Φᵀ P Φ − P = 0, which can never be negative definite.
        let diag = p.evaluate(0, &ident);
        assert_eq!(diag.as_matrix().max_abs(), 0.0);
        assert!(p
            .constraints
            .iter()
            .any(|c| c.kind == ConstraintKind::Product { h: 2, q: 2 }));
    }

    #[test]
    fn condition_a_l1_matches_clock_lemma() {
        let sys = example(Dwell::periodic(10).unwrap());
        let fam = enumerate_cycles(&sys, 1, 100).unwrap();
        let p = build_condition_a(&sys, &fam);
        assert_eq!(p.num_blocks(), 22);
        let steps = p
            .constraints
            .iter()
            .filter(|c| matches!(c.kind, ConstraintKind::Step { .. }))
            .count();
        assert_eq!(steps, 20);
        assert_eq!(p.num_constraints(), 24);
        assert!(p.is_well_formed());
        let counts = complexity_counts(&sys, 1, Condition::A);
        assert_eq!(counts.num_variables, p.num_blocks() as u128);
        assert_eq!(counts.num_lmis, p.num_constraints() as u128);
        // Coupling P_1(0) − P_2(10).
        let coupling = p
            .constraints
            .iter()
            .find(|c| c.kind == ConstraintKind::Coupling { h: 1, q: 2 })
            .unwrap();
        assert_eq!(coupling.terms[0].block, p.block_index(1, 0));
        assert_eq!(coupling.terms[1].block, p.block_index(2, 10));
    }

    #[test]
    fn condition_a_unit_dwell() {
        let sys = example(Dwell::periodic(1).unwrap());
        let fam = enumerate_cycles(&sys, 1, 100).unwrap();
        let p = build_condition_a(&sys, &fam);
        let steps: Vec<_> = p
            .constraints
            .iter()
            .filter(|c| matches!(c.kind, ConstraintKind::Step { .. }))
            .collect();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].kind, ConstraintKind::Step { h: 2, k: 0, mode: 2 });
        assert_eq!(steps[1].terms[0].factor.as_ref(), Some(sys.mode(2)));
        assert_eq!(steps[1].terms[0].block, p.block_index(2, 1));
        assert_eq!(steps[1].terms[1].block, p.block_index(2, 0));
    }

    #[test]
    fn condition_a_step_modes_follow_segments() {
        let a = |s: f64| Matrix::from_rows(&[vec![s, 0.0], vec![0.0, s]]).unwrap();
        let sys = SwitchedSystem::new(vec![a(0.1), a(0.2), a(0.3)], Dwell::new(2, 3).unwrap()).unwrap();
        let fam = enumerate_cycles(&sys, 2, 100).unwrap();
        let h = fam.rank(&[1, 2], &[3, 2]).unwrap();
        let p = build_condition_a(&sys, &fam);
        let modes: Vec<_> = p
            .constraints
            .iter()
            .filter_map(|c| match c.kind {
                ConstraintKind::Step { h: hh, k, mode } if hh == h => Some((k, mode)),
                _ => None,
            })
            .collect();
        assert_eq!(modes, vec![(0, 1), (1, 1), (2, 1), (3, 2), (4, 2)]);
    }

    #[test]
    fn multistep_shapes() {
        let sys = example(Dwell::periodic(1).unwrap());
        let p = build_multistep(&sys, 1, Condition::B, 100).unwrap();
        assert_eq!((p.num_blocks(), p.num_constraints()), (2, 4));
        // A_iᵀ P_i A_i − P_j
        assert_eq!(p.constraints[1].terms[0].factor.as_ref(), Some(sys.mode(1)));
        assert_eq!(p.constraints[1].terms[1].block, 1);

        let p = build_multistep(&sys, 2, Condition::B, 100).unwrap();
        assert_eq!((p.num_blocks(), p.num_constraints()), (4, 16));

        let p = build_multistep(&sys, 2, Condition::A, 100).unwrap();
        assert_eq!(p.num_blocks(), 4 * 3);
        let c = p
            .constraints
            .iter()
            .find(|c| c.kind == ConstraintKind::Coupling { h: 3, q: 2 })
            .unwrap();
        assert_eq!(c.terms[0].block, p.block_index(3, 0));
        assert_eq!(c.terms[1].block, p.block_index(2, 2));

        let ranged = example(Dwell::new(1, 2).unwrap());
        assert!(build_multistep(&ranged, 1, Condition::B, 100).is_err());
    }

    #[test]
    fn counts_match_complexity_table() {
        for (l, dwell) in [(1, Dwell::new(1, 3).unwrap()), (2, Dwell::new(2, 3).unwrap()), (3, Dwell::periodic(4).unwrap())] {
            let sys = example(dwell);
            let fam = enumerate_cycles(&sys, l, 1000).unwrap();
            for cond in [Condition::A, Condition::B] {
                let p = build(&sys, &fam, cond);
                let counts = complexity_counts(&sys, l, cond);
                assert_eq!(counts.num_variables, p.num_blocks() as u128);
                assert_eq!(counts.num_lmis, p.num_constraints() as u128);
            }
        }
    }

    #[test]
    fn constraints_are_symmetric_and_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sys = example(Dwell::new(1, 2).unwrap());
        let fam = enumerate_cycles(&sys, 2, 1000).unwrap();
        for cond in [Condition::A, Condition::B] {
            let p = build(&sys, &fam, cond);
            for _ in 0..5 {
                let x: Vec<SymMatrix> = (0..p.num_blocks()).map(|_| random_sym(&mut rng, 2)).collect();
                let c = rng.gen_range(0.1..10.0);
                let cx: Vec<SymMatrix> = x.iter().map(|b| b.scale(c)).collect();
                for i in 0..p.num_constraints() {
                    let v = p.evaluate(i, &x);
                    let raw = &v;
                    assert_eq!(raw[(0, 1)], raw[(1, 0)]);
                    let w = p.evaluate(i, &cx);
                    let scale = v.as_matrix().max_abs().max(1.0);
                    for (a, b) in v.scale(c).as_matrix().as_slice().iter().zip(w.as_matrix().as_slice()) {
                        assert!((a - b).abs() <= 1e-12 * c * scale);
                    }
                }
            }
        }
    }
}
