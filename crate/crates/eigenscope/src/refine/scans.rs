//! Word-pair norm decay and commutator growth scans.
//!
//! Both scans probe the same mechanism from two sides: refined word
//! operators lose norm at the classical contraction rate while the
//! propagator still transports observables classically, and commutators
//! of transported translations stay small exactly as long as that
//! transport holds. Past the Ehrenfest horizon both trends break.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::catmap::{quantize_cat, ClassicalCatMap, JacobianTable};
use crate::error::{Error, Result};
use crate::eup::QuantumPartition;
use crate::hilbert::{operator_norm, OperatorHandle};
use crate::linalg::CMatrix;

use super::{
    checked_table_len, ehrenfest_time, refined_operator, SymbolWord, WORD_TABLE_CAP,
};

/// Word-pair budget for the decay scan: a level whose raw pair count
/// exceeds this is refused before any norm work starts.
pub const SCAN_PAIR_BUDGET: u128 = 4_000_000;

/// Same screening floor as the certificate: a pair penalized on more than
/// half its steps whose cheap bound product is under this is skipped.
const PRUNE_FLOOR: f64 = 1e-14;

/// One depth of the decay scan.
#[derive(Clone, Debug)]
pub struct NormDecayRow {
    /// Refinement steps.
    pub n: usize,
    /// max over word pairs of ||P_out* U^n P_in||.
    pub max_norm: f64,
    /// The words attaining the max.
    pub word_in: SymbolWord,
    pub word_out: SymbolWord,
    /// Transport shape (2 pi N) J_n(in)^{1/2} J_n(out) at the argmax.
    pub shape: f64,
    /// c_fit times the shape; covers max_norm at every depth by
    /// construction of the fit.
    pub bound: f64,
}

/// Decay table with the single constant fitted across all depths.
#[derive(Clone, Debug)]
pub struct NormDecayScan {
    pub rows: Vec<NormDecayRow>,
    /// Smallest constant making bound >= max_norm at every depth.
    pub c_fit: f64,
}

impl NormDecayScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,bound\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e}\n",
                row.n, row.max_norm, row.bound
            ));
        }
        out
    }
}

/// Largest refined-pair norm at every depth up to `n_max`, with the
/// classically shaped bound fitted over the whole scan.
///
/// Pair norms ||P_out* U^n P_in|| are evaluated on implicit operator
/// chains, screened by the strict bound ||P_in|| ||P_out|| in descending
/// order. Every pair tied with the final max is evaluated no matter the
/// batching, so the reported argmax never depends on thread count.
pub fn norm_decay_scan(
    u: &OperatorHandle,
    partition: &QuantumPartition,
    jac: &JacobianTable,
    n_max: usize,
) -> Result<NormDecayScan> {
    let dim = partition.dim();
    if u.dim() != dim {
        return Err(Error::DimMismatch {
            context: "decay scan propagator".into(),
            expected: dim,
            got: u.dim(),
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
    let horizon = ehrenfest_time(dim, 0.0, jac.lambda())?;
    if n_max > horizon {
        return Err(Error::BadParameter {
            name: "n_max",
            reason: format!("{n_max} exceeds the refinement horizon n_E = {horizon}"),
        });
    }
    let deepest = (k as u128)
        .checked_pow(2 * (n_max as u32 + 1))
        .unwrap_or(u128::MAX);
    if deepest > SCAN_PAIR_BUDGET {
        let blocks = checked_table_len(k, n_max + 1, WORD_TABLE_CAP).unwrap_or(usize::MAX);
        return Err(Error::BudgetExceeded {
            depth: n_max,
            blocks,
            pairs: deepest,
            budget: SCAN_PAIR_BUDGET,
        });
    }

    // Per-step norms feed the cheap screening product, as in the
    // certificate: heuristic for smooth blocks, used only together with
    // the penalty condition far below every tolerance.
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

    let u_mat = u.materialize()?;
    let hbar_inv = 2.0 * PI * dim as f64;
    let mut w_mat = CMatrix::identity(dim);
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut c_fit = 0.0f64;

    for n in 0..=n_max {
        if n > 0 {
            w_mat = u_mat.matmul(&w_mat);
        }
        // At depth zero the propagator power is the identity; keeping it
        // symbolic lets all-diagonal pair chains take the exact-norm path.
        let w = if n == 0 {
            OperatorHandle::Identity(dim)
        } else {
            OperatorHandle::dense(w_mat.clone())
        };
        let words = checked_table_len(k, n + 1, WORD_TABLE_CAP)?;

        let mut letters = vec![0usize; n + 1];
        let mut penalties = Vec::with_capacity(words);
        let mut cheap_ub = Vec::with_capacity(words);
        for idx in 0..words {
            super::decode_word(idx, k, &mut letters);
            penalties.push(
                letters
                    .windows(2)
                    .filter(|s| !jac.is_realizable_step(s[0], s[1]))
                    .count(),
            );
            cheap_ub.push(
                letters
                    .windows(2)
                    .map(|s| step_norms[s[0] * k + s[1]])
                    .product::<f64>(),
            );
        }

        let handles: Vec<OperatorHandle> = (0..words)
            .map(|idx| {
                let word = SymbolWord::from_index(idx, n + 1, k);
                refined_operator(&word, u, partition)
            })
            .collect::<Result<_>>()?;
        let gamma: Vec<f64> = handles
            .par_iter()
            .map(operator_norm)
            .collect::<Result<_>>()?;

        let mut ranked: Vec<(usize, usize, f64)> = Vec::with_capacity(words * words);
        for e_out in 0..words {
            for e_in in 0..words {
                if 2 * (penalties[e_in] + penalties[e_out]) > n
                    && cheap_ub[e_in] * cheap_ub[e_out] < PRUNE_FLOOR
                {
                    continue;
                }
                ranked.push((e_out, e_in, gamma[e_in] * gamma[e_out]));
            }
        }
        ranked.sort_by(|a, b| {
            b.2.total_cmp(&a.2)
                .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
        });

        let mut best = 0.0f64;
        let mut best_pair = (0usize, 0usize);
        let batch = rayon::current_num_threads().max(1) * 4;
        let mut idx = 0;
        // Strict-inequality stopping: pairs whose bound ties the running
        // best are still evaluated, so exact ties resolve by word index
        // identically under any batch size.
        while idx < ranked.len() {
            if ranked[idx].2 < best || ranked[idx].2 <= 0.0 {
                break;
            }
            let hi = (idx + batch).min(ranked.len());
            let evals: Vec<f64> = ranked[idx..hi]
                .par_iter()
                .map(|&(e_out, e_in, ub)| -> Result<f64> {
                    if ub < best {
                        return Ok(0.0);
                    }
                    let chain = OperatorHandle::chain(vec![
                        handles[e_out].clone().adjoint(),
                        w.clone(),
                        handles[e_in].clone(),
                    ])?;
                    operator_norm(&chain)
                })
                .collect::<Result<_>>()?;
            for (offset, v) in evals.into_iter().enumerate() {
                let (e_out, e_in, _) = ranked[idx + offset];
                if v > best || (v == best && (e_out, e_in) < best_pair) {
                    best = v;
                    best_pair = (e_out, e_in);
                }
            }
            idx = hi;
        }

        let word_out = SymbolWord::from_index(best_pair.0, n + 1, k);
        let word_in = SymbolWord::from_index(best_pair.1, n + 1, k);
        let shape = hbar_inv
            * (0.5 * jac.log_word_jacobian(word_in.letters())
                + jac.log_word_jacobian(word_out.letters()))
            .exp();
        c_fit = c_fit.max(best / shape);
        rows.push(NormDecayRow {
            n,
            max_norm: best,
            word_in,
            word_out,
            shape,
            bound: 0.0,
        });
    }

    for row in &mut rows {
        row.bound = c_fit * row.shape;
    }
    Ok(NormDecayScan { rows, c_fit })
}

/// One time step of the commutator scan.
#[derive(Clone, Copy, Debug)]
pub struct EgorovRow {
    pub t: usize,
    /// ||[A(t), B(-t)]|| with A(t) = U^{-t} T(v) U^t, B(-t) = U^t T(w) U^{-t}.
    pub norm: f64,
    /// Closed-form value 2 |sin(pi (A^{-t}v wedge A^t w) / N)| from exact
    /// classical transport of both translations.
    pub prediction: f64,
}

/// Commutator growth table for two transported lattice translations.
#[derive(Clone, Debug)]
pub struct EgorovScan {
    pub rows: Vec<EgorovRow>,
    /// floor((1 - gamma) log(2 pi N) / (2 lambda)): the window inside
    /// which the commutator stays semiclassically small.
    pub egorov_time: usize,
    /// Refinement horizon floor(log(2 pi N) / lambda) for scale.
    pub ehrenfest_steps: usize,
}

impl EgorovScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm,prediction\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e}\n",
                row.t, row.norm, row.prediction
            ));
        }
        out
    }
}

fn check_translation(name: &'static str, v: (i64, i64)) -> Result<()> {
    if v.0.abs() > 3 || v.1.abs() > 3 {
        return Err(Error::BadParameter {
            name,
            reason: format!("translation ({}, {}) has a component over 3", v.0, v.1),
        });
    }
    Ok(())
}

/// Evolves T(v) backwards and T(w) forwards under the quantized standard
/// map and tabulates their commutator norm at each time, alongside the
/// exact-transport prediction.
pub fn egorov_commutator_scan(
    dim: usize,
    v: (i64, i64),
    w: (i64, i64),
    t_max: usize,
    gamma: f64,
) -> Result<EgorovScan> {
    check_translation("v", v)?;
    check_translation("w", w)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::BadParameter {
            name: "gamma",
            reason: format!("gamma = {gamma}, must lie in [0, 1)"),
        });
    }
    let map = ClassicalCatMap::standard();
    let lambda = map.lambda();
    let ehrenfest_steps = ehrenfest_time(dim, 0.0, lambda)?;
    if t_max > 3 * ehrenfest_steps {
        return Err(Error::BadParameter {
            name: "t_max",
            reason: format!(
                "{t_max} steps exceed three refinement horizons ({})",
                3 * ehrenfest_steps
            ),
        });
    }
    let egorov_time =
        ((1.0 - gamma) * (2.0 * PI * dim as f64).ln() / (2.0 * lambda)).floor() as usize;

    let u_mat = quantize_cat(&map, dim)?.materialize()?;
    let ua_mat = u_mat.adjoint();
    let mut a = crate::catmap::weyl_matrix(dim, v);
    let mut b = crate::catmap::weyl_matrix(dim, w);

    let mut rows = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            a = ua_mat.matmul(&a).matmul(&u_mat);
            b = u_mat.matmul(&b).matmul(&ua_mat);
        }
        let mut comm = a.matmul(&b);
        comm.sub_assign(&b.matmul(&a));
        let norm = operator_norm(&OperatorHandle::dense(comm))?;
        rows.push(EgorovRow {
            t,
            norm,
            prediction: translation_commutator_prediction(dim, v, w, t),
        });
    }
    Ok(EgorovScan {
        rows,
        egorov_time,
        ehrenfest_steps,
    })
}

/// Closed form for the scan: transporting T(v) backwards t steps and T(w)
/// forwards t steps yields translations by A^{-t}v and A^t w up to phases,
/// whose commutator norm is 2 |sin(pi (A^{-t}v wedge A^t w) / N)|.
///
/// The wedge only matters modulo 2N, so the lattice vectors are reduced at
/// every step and nothing overflows at any admissible time.
pub fn translation_commutator_prediction(
    dim: usize,
    v: (i64, i64),
    w: (i64, i64),
    t: usize,
) -> f64 {
    let m = 2 * dim as i128;
    let reduce = |x: (i128, i128)| (x.0.rem_euclid(m), x.1.rem_euclid(m));
    // Standard map [[2,1],[3,2]] and its inverse [[2,-1],[-3,2]].
    let mut va = reduce((v.0 as i128, v.1 as i128));
    let mut wb = reduce((w.0 as i128, w.1 as i128));
    for _ in 0..t {
        va = reduce((2 * va.0 - va.1, -3 * va.0 + 2 * va.1));
        wb = reduce((2 * wb.0 + wb.1, 3 * wb.0 + 2 * wb.1));
    }
    let wedge = (va.0 * wb.1 - va.1 * wb.0).rem_euclid(m);
    2.0 * (PI * wedge as f64 / dim as f64).sin().abs()
}
