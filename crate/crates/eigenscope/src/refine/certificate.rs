//! The certified pressure lower bound at the refinement horizon.
//!
//! Building the certificate is the expensive part: materialize every
//! refined word operator at depth n_E, re-verify that they resolve the
//! identity, and take the exact weighted maximum
//!
//!   c = max over word pairs of alpha_e beta_e' ||P_e'* U^n P_e||.
//!
//! The constant does not depend on the state, so one build serves a whole
//! eigenbasis sweep; certifying a single state afterwards costs a handful
//! of matrix-vector products.

use rayon::prelude::*;

use crate::catmap::JacobianTable;
use crate::error::{Error, Result};
use crate::eup::{pressure, EupCertificate, QuantumPartition, WeightFamily};
use crate::hilbert::{operator_norm, OperatorHandle, StateVector};
use crate::linalg::{vdot, CMatrix};

use super::{checked_table_len, make_weights, EhrenfestConfig, WeightKind, WORD_TABLE_CAP};

/// Raw word-pair budget: a refinement whose depth would demand more pairs
/// than this, before any pruning, is refused outright.
pub const PAIR_BUDGET: u128 = 1_000_000;

/// Cheap-bound floor for the pair screen. A pair penalized on more than
/// half its steps whose per-step norm-product bound falls below this is
/// skipped; the threshold sits far below every tolerance in the crate.
const PRUNE_FLOOR: f64 = 1e-14;

/// Residual above which a state is not accepted as an eigenvector.
const EIGEN_TOL: f64 = 1e-8;

/// Refined partition, weights, and weighted norm constant at depth n_E,
/// ready to certify states of one propagator.
#[derive(Debug)]
pub struct RefinedCertificate {
    partition: QuantumPartition,
    u: OperatorHandle,
    w: OperatorHandle,
    alpha: WeightFamily,
    beta: WeightFamily,
    c: f64,
    steps: usize,
    dim: usize,
    log_hbar: f64,
}

/// Left-multiplies a dense matrix by a partition block, using the row
/// scaling shortcut when the block is diagonal.
fn left_mul_block(block: &OperatorHandle, m: &CMatrix) -> Result<CMatrix> {
    if let Some(d) = block.diag_entries() {
        let mut out = m.clone();
        for j in 0..out.cols() {
            for (i, v) in out.col_mut(j).iter_mut().enumerate() {
                *v *= d[i];
            }
        }
        Ok(out)
    } else {
        Ok(block.materialize()?.matmul(m))
    }
}

/// Number of penalized (classically non-realizable) steps in a word.
fn penalized_steps(letters: &[usize], jac: &JacobianTable) -> usize {
    letters
        .windows(2)
        .filter(|s| !jac.is_realizable_step(s[0], s[1]))
        .count()
}

impl RefinedCertificate {
    /// Builds the depth-n_E refinement of `partition` along `u`, verifies
    /// it still resolves the identity, and computes the weighted norm
    /// constant over all unpruned word pairs.
    pub fn build(
        u: &OperatorHandle,
        partition: &QuantumPartition,
        jac: &JacobianTable,
        config: &EhrenfestConfig,
    ) -> Result<Self> {
        let dim = partition.dim();
        if u.dim() != dim {
            return Err(Error::DimMismatch {
                context: "certificate propagator".into(),
                expected: dim,
                got: u.dim(),
            });
        }
        if config.dim() != dim {
            return Err(Error::DimMismatch {
                context: "certificate depth config".into(),
                expected: dim,
                got: config.dim(),
            });
        }
        let k = partition.len();
        if jac.alphabet() != k {
            return Err(Error::DimMismatch {
                context: "jacobian alphabet".into(),
                expected: k,
                got: jac.alphabet(),
            });
        }

        let n = config.n_e();
        let words = checked_table_len(k, n + 1, WORD_TABLE_CAP)?;
        let raw_pairs = (words as u128) * (words as u128);
        if raw_pairs > PAIR_BUDGET {
            return Err(Error::BudgetExceeded {
                depth: n,
                blocks: words,
                pairs: raw_pairs,
                budget: PAIR_BUDGET,
            });
        }

        // Per-step transition norms s[a][b] = ||P_b U P_a||; their product
        // along a word is the cheap screening bound. It is a heuristic for
        // smooth blocks, not a strict bound, which is why it only ever
        // discards pairs together with the penalty condition, fourteen
        // orders below the working tolerances.
        let mut step_norms = vec![0.0f64; k * k];
        for a in 0..k {
            for b in 0..k {
                let chain = OperatorHandle::chain(vec![
                    partition.block(b).clone(),
                    u.clone(),
                    partition.block(a).clone(),
                ])?;
                step_norms[a * k + b] = operator_norm(&chain)?;
            }
        }
        let mut letters = vec![0usize; n + 1];
        let mut penalties = Vec::with_capacity(words);
        let mut cheap_ub = Vec::with_capacity(words);
        for idx in 0..words {
            super::decode_word(idx, k, &mut letters);
            penalties.push(penalized_steps(&letters, jac));
            cheap_ub.push(
                letters
                    .windows(2)
                    .map(|s| step_norms[s[0] * k + s[1]])
                    .product::<f64>(),
            );
        }

        // Word operators P_w = P_{w_n} U ... U P_{w_0}, built as a prefix
        // tree so each propagator product is shared by all K extensions.
        let u_mat = u.materialize()?;
        let mut level: Vec<CMatrix> = (0..k)
            .map(|b| partition.block(b).materialize())
            .collect::<Result<_>>()?;
        for _ in 0..n {
            let stride = level.len();
            let extended: Vec<Vec<CMatrix>> = level
                .par_iter()
                .map(|m| {
                    let um = u_mat.matmul(m);
                    (0..k)
                        .map(|b| left_mul_block(partition.block(b), &um))
                        .collect()
                })
                .collect::<Result<_>>()?;
            let mut next: Vec<Option<CMatrix>> = (0..stride * k).map(|_| None).collect();
            for (parent, children) in extended.into_iter().enumerate() {
                for (b, child) in children.into_iter().enumerate() {
                    next[parent + b * stride] = Some(child);
                }
            }
            level = next.into_iter().map(Option::unwrap).collect();
        }
        let leaves: Vec<OperatorHandle> = level.into_iter().map(OperatorHandle::dense).collect();

        let mut w_mat = CMatrix::identity(dim);
        for _ in 0..n {
            w_mat = u_mat.matmul(&w_mat);
        }
        let w = OperatorHandle::dense(w_mat);

        // The refined family resolves the identity exactly; re-verify it
        // here so the certificate never rests on an unchecked hypothesis.
        let refined = QuantumPartition::new(leaves)?;

        let alpha = make_weights(jac, n, WeightKind::Alpha)?;
        let beta = make_weights(jac, n, WeightKind::Beta)?;

        let c = weighted_pair_max(
            &w,
            refined.blocks(),
            &alpha,
            &beta,
            &penalties,
            &cheap_ub,
            n,
        )?;

        Ok(RefinedCertificate {
            partition: refined,
            u: u.clone(),
            w,
            alpha,
            beta,
            c,
            steps: n,
            dim,
            log_hbar: config.log_hbar(),
        })
    }

    /// The weighted norm constant c.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Refinement depth in propagator steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The depth-n word partition the pressures are taken in.
    pub fn partition(&self) -> &QuantumPartition {
        &self.partition
    }

    pub fn alpha(&self) -> &WeightFamily {
        &self.alpha
    }

    pub fn beta(&self) -> &WeightFamily {
        &self.beta
    }

    /// Certifies one near-eigenstate: checks the eigenvector residual,
    /// evaluates both weighted pressures in the refined partition, and
    /// returns the certificate together with the ideal-form right side
    /// 2 log hbar it is compared against.
    pub fn certify(&self, psi: &StateVector) -> Result<(EupCertificate, f64)> {
        psi.check_unit_norm(1e-9)?;
        if psi.dim() != self.dim {
            return Err(Error::DimMismatch {
                context: "certificate state".into(),
                expected: self.dim,
                got: psi.dim(),
            });
        }
        let u_psi = self.u.apply(psi.amps())?;
        let lambda = vdot(psi.amps(), &u_psi);
        let residual = u_psi
            .iter()
            .zip(psi.amps())
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > EIGEN_TOL {
            return Err(Error::SpectralDefect {
                check: "eigenvector residual",
                value: residual,
                tol: EIGEN_TOL,
            });
        }

        let p_alpha = pressure(psi, &self.partition, &self.alpha)?;
        let w_psi = StateVector::normalized(self.w.apply(psi.amps())?)?;
        let p_beta = pressure(&w_psi, &self.partition, &self.beta)?;

        let rhs = -2.0 * self.c.max(f64::MIN_POSITIVE).ln();
        let lhs = p_beta + p_alpha;
        let certificate = EupCertificate {
            c_o: self.c,
            a_max: self.alpha.max(),
            b_max: self.beta.max(),
            eps: 0.0,
            n_terms: self.partition.len(),
            p_alpha,
            p_beta,
            lhs,
            rhs,
            margin: lhs - rhs,
            two_partitions: false,
        };
        Ok((certificate, 2.0 * self.log_hbar))
    }
}

/// Exact max of alpha_e beta_e' ||P_e'* W P_e|| over unpruned pairs.
///
/// Pairs are ranked by the strict bound alpha beta ||P_e|| ||P_e'|| (W is
/// unitary) and evaluated in descending batches; once a batch head's bound
/// cannot beat the running best the remaining pairs cannot either. A pair
/// is skipped entirely when penalized on more than half its steps with a
/// cheap bound product under the floor.
fn weighted_pair_max(
    w: &OperatorHandle,
    leaves: &[OperatorHandle],
    alpha: &WeightFamily,
    beta: &WeightFamily,
    penalties: &[usize],
    cheap_ub: &[f64],
    n: usize,
) -> Result<f64> {
    let gamma: Vec<f64> = leaves.par_iter().map(operator_norm).collect::<Result<_>>()?;

    let mut ranked: Vec<(usize, usize, f64)> = Vec::with_capacity(leaves.len() * leaves.len());
    for e_out in 0..leaves.len() {
        for e_in in 0..leaves.len() {
            if 2 * (penalties[e_in] + penalties[e_out]) > n
                && cheap_ub[e_in] * cheap_ub[e_out] < PRUNE_FLOOR
            {
                continue;
            }
            let ub = alpha.get(e_in) * beta.get(e_out) * gamma[e_in] * gamma[e_out];
            ranked.push((e_out, e_in, ub));
        }
    }
    ranked.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });

    let mut best = 0.0f64;
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut idx = 0;
    while idx < ranked.len() {
        if ranked[idx].2 <= best {
            break;
        }
        let hi = (idx + batch).min(ranked.len());
        let evals: Vec<f64> = ranked[idx..hi]
            .par_iter()
            .map(|&(e_out, e_in, ub)| -> Result<f64> {
                if ub <= best {
                    return Ok(0.0);
                }
                let chain = OperatorHandle::chain(vec![
                    leaves[e_out].clone().adjoint(),
                    w.clone(),
                    leaves[e_in].clone(),
                ])?;
                Ok(alpha.get(e_in) * beta.get(e_out) * operator_norm(&chain)?)
            })
            .collect::<Result<_>>()?;
        for v in evals {
            best = best.max(v);
        }
        idx = hi;
    }
    Ok(best)
}

/// One-shot form: build the depth-n_E certificate for `u` and certify
/// `psi` against it. Sweeps over many states of the same propagator should
/// build a [`RefinedCertificate`] once instead.
pub fn pressure_bound_certificate(
    u: &OperatorHandle,
    partition: &QuantumPartition,
    jac: &JacobianTable,
    config: &EhrenfestConfig,
    psi: &StateVector,
) -> Result<(EupCertificate, f64)> {
    RefinedCertificate::build(u, partition, jac, config)?.certify(psi)
}
