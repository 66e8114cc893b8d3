//! Weighted entropic uncertainty machinery: block entropies and pressures,
//! weighted l_p norms with their duality, the certified uncertainty bound
//! for a state and its image under an isometry, and the interpolation
//! inequality the bound rests on.
//!
//! Throughout, a partition of unity (P_k) decomposes a state into blocks
//! P_k* psi; entropies are in nats.

use crate::error::{Error, Result};
use crate::hilbert::{operator_norm, verify_partition_of_unity, OperatorHandle, StateVector};
use crate::linalg::{vdot, vnorm, vnorm_sqr, C64};
use rayon::prelude::*;
use serde::Serialize;

/// Blocks with masses below this contribute zero entropy, implementing the
/// 0 log 0 = 0 convention without log underflow.
const MASS_FLOOR: f64 = 1e-300;

const PARTITION_TOL: f64 = 1e-8;
const STATE_NORM_TOL: f64 = 1e-10;

/// Family (P_k) with sum_k P_k P_k* = Id. Construction verifies the defect
/// once and caches it, so the per-operation precondition is a field read.
#[derive(Clone, Debug)]
pub struct QuantumPartition {
    blocks: Vec<OperatorHandle>,
    defect: f64,
}

impl QuantumPartition {
    pub fn new(blocks: Vec<OperatorHandle>) -> Result<Self> {
        let defect = verify_partition_of_unity(&blocks)?;
        if defect > PARTITION_TOL {
            return Err(Error::PartitionDefect {
                defect,
                tol: PARTITION_TOL,
            });
        }
        Ok(QuantumPartition { blocks, defect })
    }

    /// The N orthogonal projectors onto basis lines.
    pub fn basis_projectors(n: usize) -> Self {
        let blocks = (0..n)
            .map(|k| {
                let mut d = vec![C64::new(0.0, 0.0); n];
                d[k] = C64::new(1.0, 0.0);
                OperatorHandle::diagonal(d)
            })
            .collect();
        QuantumPartition {
            blocks,
            defect: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn blocks(&self) -> &[OperatorHandle] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &OperatorHandle {
        &self.blocks[k]
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Block masses ||P_k* psi||^2. These sum to ||psi||^2 up to the
    /// partition defect.
    pub fn block_masses(&self, psi: &StateVector) -> Result<Vec<f64>> {
        self.blocks
            .iter()
            .map(|p| Ok(vnorm_sqr(&p.apply_adjoint(psi.amps())?)))
            .collect()
    }
}

/// Positive weights (alpha_k) with the maximum cached.
#[derive(Clone, Debug)]
pub struct WeightFamily {
    weights: Vec<f64>,
    max: f64,
}

impl WeightFamily {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadParameter {
                name: "weights",
                reason: "weight family must be nonempty".into(),
            });
        }
        for (k, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::BadParameter {
                    name: "weights",
                    reason: format!("weight {k} is {w}, must be finite and positive"),
                });
            }
        }
        let max = weights.iter().cloned().fold(0.0, f64::max);
        Ok(WeightFamily { weights, max })
    }

    pub fn ones(n: usize) -> Self {
        WeightFamily {
            weights: vec![1.0; n],
            max: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn values(&self) -> &[f64] {
        self.weights.as_slice()
    }

    /// Largest weight (the A or B of the uncertainty bound).
    pub fn max(&self) -> f64 {
        self.max
    }
}

fn check_weight_count(w: &WeightFamily, blocks: usize, name: &'static str) -> Result<()> {
    if w.len() != blocks {
        return Err(Error::DimMismatch {
            context: format!("weight family {name} vs partition blocks"),
            expected: blocks,
            got: w.len(),
        });
    }
    Ok(())
}

/// Entropy of a mass distribution, with the 0 log 0 = 0 convention.
pub fn entropy_of_masses(masses: &[f64]) -> f64 {
    -masses
        .iter()
        .filter(|&&m| m > MASS_FLOOR)
        .map(|&m| m * m.ln())
        .sum::<f64>()
}

/// -sum_k ||P_k* psi||^2 log ||P_k* psi||^2, in nats.
pub fn shannon_entropy(psi: &StateVector, partition: &QuantumPartition) -> Result<f64> {
    psi.check_unit_norm(STATE_NORM_TOL)?;
    let masses = partition.block_masses(psi)?;
    Ok(entropy_of_masses(&masses))
}

/// Entropy shifted by the weight term: h - sum_k ||P_k* psi||^2 log alpha_k^2.
pub fn pressure(
    psi: &StateVector,
    partition: &QuantumPartition,
    alpha: &WeightFamily,
) -> Result<f64> {
    psi.check_unit_norm(STATE_NORM_TOL)?;
    check_weight_count(alpha, partition.len(), "alpha")?;
    let masses = partition.block_masses(psi)?;
    let h = entropy_of_masses(&masses);
    let shift: f64 = masses
        .iter()
        .zip(alpha.values())
        .map(|(&m, &a)| m * 2.0 * a.ln())
        .sum();
    Ok(h - shift)
}

/// Weighted l_p norm of a block family: (sum_k alpha_k^{p-2} ||V_k||^p)^{1/p},
/// or max_k alpha_k ||V_k|| at p = infinity. At p = 2 the weights cancel and
/// this is the plain norm of the stacked vector.
pub fn weighted_lp_norm(blocks: &[StateVector], alpha: &WeightFamily, p: f64) -> Result<f64> {
    check_weight_count(alpha, blocks.len(), "alpha")?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::BadParameter {
            name: "p",
            reason: format!("p = {p}, must lie in [1, infinity]"),
        });
    }
    if p.is_infinite() {
        return Ok(blocks
            .iter()
            .zip(alpha.values())
            .map(|(v, &a)| a * v.norm())
            .fold(0.0, f64::max));
    }
    let sum: f64 = blocks
        .iter()
        .zip(alpha.values())
        .map(|(v, &a)| a.powf(p - 2.0) * v.norm().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// Result of the duality check: the analytic maximizer's pairing value, the
/// dual (l_q) norm it must equal, and their gap.
#[derive(Clone, Copy, Debug)]
pub struct DualityCheck {
    pub sup_value: f64,
    pub dual_norm: f64,
    pub gap: f64,
}

/// Holder duality for the weighted norms: sup over ||V||_p^(alpha) = 1 of
/// |sum_k <V_k, L_k>| equals the weighted l_q norm of L, 1/p + 1/q = 1.
/// The supremum is evaluated at the analytic maximizer, so the gap is pure
/// floating-point error.
pub fn dual_norm_check(
    lambda_blocks: &[StateVector],
    alpha: &WeightFamily,
    p: f64,
) -> Result<DualityCheck> {
    check_weight_count(alpha, lambda_blocks.len(), "alpha")?;
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::BadParameter {
            name: "p",
            reason: format!("p = {p}, duality check needs p strictly inside (1, infinity)"),
        });
    }
    let q = p / (p - 1.0);
    let dual_norm = weighted_lp_norm(lambda_blocks, alpha, q)?;
    if dual_norm == 0.0 {
        return Ok(DualityCheck {
            sup_value: 0.0,
            dual_norm: 0.0,
            gap: 0.0,
        });
    }

    // Maximizer: V_k = alpha_k^{q-2} ||L_k||^{q-1} * L_k/||L_k||, then
    // normalized in l_p^(alpha). Equality in Holder holds exactly there.
    let maximizer: Vec<StateVector> = lambda_blocks
        .iter()
        .zip(alpha.values())
        .map(|(l, &a)| {
            let ln = vnorm(l.amps());
            if ln <= MASS_FLOOR {
                return StateVector::new(vec![C64::new(0.0, 0.0); l.dim()]);
            }
            let scale = a.powf(q - 2.0) * ln.powf(q - 1.0) / ln;
            StateVector::new(l.amps().iter().map(|&v| v * scale).collect())
        })
        .collect();
    let mnorm = weighted_lp_norm(&maximizer, alpha, p)?;
    let pairing: C64 = maximizer
        .iter()
        .zip(lambda_blocks)
        .map(|(v, l)| vdot(v.amps(), l.amps()))
        .sum();
    let sup_value = pairing.norm() / mnorm;
    Ok(DualityCheck {
        sup_value,
        dual_norm,
        gap: (sup_value - dual_norm).abs(),
    })
}

/// Everything the uncertainty bound certifies for one instance, in nats.
/// `lhs` is the pressure sum, `rhs` the bound, and the theorem guarantees
/// margin = lhs - rhs >= 0 up to floating point.
#[derive(Clone, Debug, Serialize)]
pub struct EupCertificate {
    pub c_o: f64,
    #[serde(rename = "A")]
    pub a_max: f64,
    #[serde(rename = "B")]
    pub b_max: f64,
    pub eps: f64,
    pub n_terms: usize,
    pub p_alpha: f64,
    pub p_beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Whether distinct input/output partitions were used (the block-
    /// operator route) rather than one partition on both sides. Not part of
    /// the serialized record.
    #[serde(skip)]
    pub two_partitions: bool,
}

/// max over (j, k) of alpha_k beta_j ||tau_j* U pi_k O||, the constant the
/// uncertainty bound is built from. Pairs are screened with the cheap upper
/// bound alpha_k beta_j ||tau_j|| ||pi_k O|| in descending order, so most
/// never reach power iteration; the result is still the exact maximum.
pub fn certificate_constant(
    u: &OperatorHandle,
    pi: &[OperatorHandle],
    tau: &[OperatorHandle],
    alpha: &WeightFamily,
    beta: &WeightFamily,
    o: &OperatorHandle,
) -> Result<f64> {
    check_weight_count(alpha, pi.len(), "alpha")?;
    check_weight_count(beta, tau.len(), "beta")?;

    let pi_o_norms: Vec<f64> = pi
        .iter()
        .map(|p| {
            operator_norm(&OperatorHandle::chain(vec![p.clone(), o.clone()])?)
        })
        .collect::<Result<_>>()?;
    let tau_norms: Vec<f64> = tau.iter().map(operator_norm).collect::<Result<_>>()?;

    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(pi.len() * tau.len());
    for j in 0..tau.len() {
        for k in 0..pi.len() {
            let ub = alpha.get(k) * beta.get(j) * tau_norms[j] * pi_o_norms[k];
            pairs.push((j, k, ub));
        }
    }
    pairs.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));

    let mut best = 0.0_f64;
    // Evaluate in batches; a batch whose upper bounds all fall below the
    // current best ends the sweep with the exact max in hand.
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut idx = 0;
    while idx < pairs.len() {
        if pairs[idx].2 <= best {
            break;
        }
        let hi = (idx + batch).min(pairs.len());
        let evals: Vec<f64> = pairs[idx..hi]
            .par_iter()
            .map(|&(j, k, ub)| -> Result<f64> {
                if ub <= best {
                    return Ok(0.0);
                }
                let chain = OperatorHandle::chain(vec![
                    tau[j].clone().adjoint(),
                    u.clone(),
                    pi[k].clone(),
                    o.clone(),
                ])?;
                Ok(alpha.get(k) * beta.get(j) * operator_norm(&chain)?)
            })
            .collect::<Result<_>>()?;
        for v in evals {
            best = best.max(v);
        }
        idx = hi;
    }
    Ok(best)
}

/// Certified uncertainty bound: for a normalized psi in the cone of O with
/// tolerance eps, p_beta(U psi) + p_alpha(psi) >= -2 log(c_O + N A B eps).
/// All hypotheses are verified, not assumed.
pub fn eup_bound_certificate(
    u: &OperatorHandle,
    partition: &QuantumPartition,
    alpha: &WeightFamily,
    beta: &WeightFamily,
    o: &OperatorHandle,
    eps: f64,
    psi: &StateVector,
) -> Result<EupCertificate> {
    psi.check_unit_norm(1e-9)?;
    check_weight_count(alpha, partition.len(), "alpha")?;
    check_weight_count(beta, partition.len(), "beta")?;

    let u_psi = StateVector::new(u.apply(psi.amps())?);
    u_psi.check_unit_norm(1e-9)?;

    // Cone membership ||(Id - O) P_k* psi|| <= eps, verified per block.
    for (k, p) in partition.blocks().iter().enumerate() {
        let block = p.apply_adjoint(psi.amps())?;
        let o_block = o.apply(&block)?;
        let dev: f64 = block
            .iter()
            .zip(&o_block)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if dev > eps + 1e-12 {
            return Err(Error::ConeViolation {
                block: k,
                value: dev,
                eps,
            });
        }
    }

    let c_o = certificate_constant(
        u,
        partition.blocks(),
        partition.blocks(),
        alpha,
        beta,
        o,
    )?;
    let p_alpha = pressure(psi, partition, alpha)?;
    let p_beta = {
        let normalized = StateVector::normalized(u_psi.amps().to_vec())?;
        pressure(&normalized, partition, beta)?
    };

    let n_terms = partition.len();
    let arg = c_o + n_terms as f64 * alpha.max() * beta.max() * eps;
    let rhs = -2.0 * arg.max(f64::MIN_POSITIVE).ln();
    let lhs = p_beta + p_alpha;
    Ok(EupCertificate {
        c_o,
        a_max: alpha.max(),
        b_max: beta.max(),
        eps,
        n_terms,
        p_alpha,
        p_beta,
        lhs,
        rhs,
        margin: lhs - rhs,
        two_partitions: false,
    })
}

/// The block operator T: (V_k)_k -> (tau_j* U sum_k pi_k V_k)_j between
/// block spaces. Its 2,2-norm equals ||U|| when both families are
/// partitions of unity.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    u: OperatorHandle,
    pi: Vec<OperatorHandle>,
    tau: Vec<OperatorHandle>,
}

impl BlockOperator {
    pub fn new(u: OperatorHandle, pi: &QuantumPartition, tau: &QuantumPartition) -> Self {
        BlockOperator {
            u,
            pi: pi.blocks().to_vec(),
            tau: tau.blocks().to_vec(),
        }
    }

    pub fn input_blocks(&self) -> usize {
        self.pi.len()
    }

    pub fn output_blocks(&self) -> usize {
        self.tau.len()
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn u(&self) -> &OperatorHandle {
        &self.u
    }

    pub fn pi(&self) -> &[OperatorHandle] {
        &self.pi
    }

    pub fn tau(&self) -> &[OperatorHandle] {
        &self.tau
    }

    /// (T V)_j = tau_j* U sum_k pi_k V_k.
    pub fn apply(&self, blocks: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
        if blocks.len() != self.pi.len() {
            return Err(Error::DimMismatch {
                context: "block operator input".into(),
                expected: self.pi.len(),
                got: blocks.len(),
            });
        }
        let n = self.dim();
        let mut s = vec![C64::new(0.0, 0.0); n];
        for (k, v) in blocks.iter().enumerate() {
            let pv = self.pi[k].apply(v)?;
            for i in 0..n {
                s[i] += pv[i];
            }
        }
        let us = self.u.apply(&s)?;
        self.tau.iter().map(|t| t.apply_adjoint(&us)).collect()
    }

    /// (T* W)_k = pi_k* U* sum_j tau_j W_j.
    pub fn apply_adjoint(&self, blocks: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
        if blocks.len() != self.tau.len() {
            return Err(Error::DimMismatch {
                context: "block operator adjoint input".into(),
                expected: self.tau.len(),
                got: blocks.len(),
            });
        }
        let n = self.dim();
        let mut s = vec![C64::new(0.0, 0.0); n];
        for (j, w) in blocks.iter().enumerate() {
            let tw = self.tau[j].apply(w)?;
            for i in 0..n {
                s[i] += tw[i];
            }
        }
        let us = self.u.apply_adjoint(&s)?;
        self.pi.iter().map(|p| p.apply_adjoint(&us)).collect()
    }

    /// ||T||_{2,2} by power iteration on the stacked block space.
    pub fn norm22(&self) -> Result<f64> {
        let n = self.dim();
        let kin = self.pi.len();
        let mut rng = crate::rng::rng_for(0x0e16_e45c, crate::rng::Task::PowerIteration);
        use rand_distr::{Distribution, StandardNormal};
        let mut x: Vec<Vec<C64>> = (0..kin)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        C64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        let stack_norm = |v: &[Vec<C64>]| -> f64 {
            v.iter().map(|b| vnorm_sqr(b)).sum::<f64>().sqrt()
        };
        let xn = stack_norm(&x);
        for b in &mut x {
            crate::linalg::vscale(b, 1.0 / xn);
        }
        let mut rho_prev = f64::NEG_INFINITY;
        let mut delta_prev = f64::INFINITY;
        let mut rho = 0.0;
        for _ in 0..10_000 {
            let y = self.apply(&x)?;
            rho = y.iter().map(|b| vnorm_sqr(b)).sum::<f64>();
            if rho == 0.0 {
                return Ok(0.0);
            }
            if rho_prev > f64::NEG_INFINITY {
                let delta = (rho - rho_prev).abs();
                if delta_prev.is_finite() {
                    let ratio = if delta_prev > 0.0 {
                        (delta / delta_prev).min(0.999_999)
                    } else {
                        0.0
                    };
                    if delta <= 1e-8 * rho && delta * ratio / (1.0 - ratio) <= 1e-8 * rho {
                        break;
                    }
                }
                delta_prev = delta;
            }
            rho_prev = rho;
            let mut z = self.apply_adjoint(&y)?;
            let zn = stack_norm(&z);
            if zn == 0.0 {
                return Ok(0.0);
            }
            for b in &mut z {
                crate::linalg::vscale(b, 1.0 / zn);
            }
            x = z;
        }
        Ok(rho.sqrt())
    }
}

/// Checks ||T||_{2,2} = ||U|| for the block operator built from two
/// partitions of unity. Returns (block norm, operator norm, gap).
pub fn block_norm_identity_check(
    u: &OperatorHandle,
    pi: &QuantumPartition,
    tau: &QuantumPartition,
) -> Result<(f64, f64, f64)> {
    let t = BlockOperator::new(u.clone(), pi, tau);
    let tn = t.norm22()?;
    let un = operator_norm(u)?;
    Ok((tn, un, (tn - un).abs()))
}

/// Result of one interpolation-inequality check.
#[derive(Clone, Copy, Debug)]
pub struct InterpolationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// The inequality behind the uncertainty bound: for ||T||_{2,2} <= 1 and V
/// in the cone of O with tolerance eps,
///   ||T V||_{2/(1-t)}^(beta)  <=  (c_O(T) + N A B eps)^t ||V||_{2/(1+t)}^(alpha).
pub fn interpolation_check(
    t_op: &BlockOperator,
    blocks: &[StateVector],
    alpha: &WeightFamily,
    beta: &WeightFamily,
    o: &OperatorHandle,
    eps: f64,
    t: f64,
) -> Result<InterpolationCheck> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::BadParameter {
            name: "t",
            reason: format!("t = {t}, interpolation parameter must lie in (0, 1)"),
        });
    }
    if blocks.len() != t_op.input_blocks() {
        return Err(Error::DimMismatch {
            context: "interpolation input blocks".into(),
            expected: t_op.input_blocks(),
            got: blocks.len(),
        });
    }

    let t22 = t_op.norm22()?;
    if t22 > 1.0 + 1e-8 {
        return Err(Error::BadParameter {
            name: "T",
            reason: format!("||T||_2,2 = {t22:.12}, inequality requires a 2,2-contraction"),
        });
    }

    // Cone membership ||O V_k - V_k|| <= eps ||V||_2, verified per block.
    let total = blocks
        .iter()
        .map(|b| vnorm_sqr(b.amps()))
        .sum::<f64>()
        .sqrt();
    for (k, v) in blocks.iter().enumerate() {
        let ov = o.apply(v.amps())?;
        let dev: f64 = v
            .amps()
            .iter()
            .zip(&ov)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if dev > eps * total + 1e-12 {
            return Err(Error::ConeViolation {
                block: k,
                value: dev,
                eps: eps * total,
            });
        }
    }

    let c_o = certificate_constant(t_op.u(), t_op.pi(), t_op.tau(), alpha, beta, o)?;
    let amped = t_op.apply(
        &blocks
            .iter()
            .map(|b| b.amps().to_vec())
            .collect::<Vec<_>>(),
    )?;
    let out_blocks: Vec<StateVector> = amped.into_iter().map(StateVector::new).collect();

    let lhs = weighted_lp_norm(&out_blocks, beta, 2.0 / (1.0 - t))?;
    let factor = c_o + t_op.input_blocks() as f64 * alpha.max() * beta.max() * eps;
    let rhs = factor.powf(t) * weighted_lp_norm(blocks, alpha, 2.0 / (1.0 + t))?;
    Ok(InterpolationCheck {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-9,
    })
}
