//! Dynamically refined partitions and the entropies they carry.
//!
//! Refining a partition of unity (P_k) along a unitary U produces the
//! word-indexed operators
//!
//!   P_w = P_{w_n} U P_{w_{n-1}} ... U P_{w_0},
//!
//! together with the time-zero-anchored variant U^{-n} P_w. Their masses
//! on a state define a probability table over symbol words, the quantum
//! analogue of a dynamical cylinder measure. This module computes those
//! tables, their entropies and Jacobian-weighted pressures up to the
//! Ehrenfest horizon, the certified pressure lower bound, word-pair norm
//! decay and commutator scans, scarred quasimodes, and the classical
//! reference measures the quantum results are compared against.
//!
//! Word tables are dense vectors indexed by sum_j w_j K^j (letter 0
//! varies fastest); every reduction runs in that order so results do not
//! depend on thread count.

mod certificate;
mod classical;
mod quasimode;
mod scans;
#[cfg(test)]
mod tests;

pub use certificate::{pressure_bound_certificate, RefinedCertificate, PAIR_BUDGET};
pub use classical::{
    classical_cylinder_stats, classical_cylinder_table, classical_pressure, entropy_rate,
    ClassicalCylinderStats, ClassicalMeasureSpec, EntropyRateReport, EntropySource,
};
pub use quasimode::{scar_quasimode, tune_scar_phase, ScarQuasimode};
pub use scans::{
    egorov_commutator_scan, norm_decay_scan, translation_commutator_prediction, EgorovRow,
    EgorovScan, NormDecayRow, NormDecayScan, SCAN_PAIR_BUDGET,
};

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::catmap::JacobianTable;
use crate::error::{Error, Result};
use crate::eup::{entropy_of_masses, QuantumPartition, WeightFamily};
use crate::hilbert::{OperatorHandle, StateVector};
use crate::linalg::{vdot, vnorm_sqr, C64};

/// Hard cap on dense word tables (cylinder measures, weight families).
pub const WORD_TABLE_CAP: usize = 10_000_000;

/// Masses below this are dropped from retained-word lists and CSV rows;
/// keeps deep-table reports bounded without touching any total.
pub const RETAIN_FLOOR: f64 = 1e-12;

/// A finite symbol word (w_0, ..., w_n) over the alphabet {0, .., K-1}.
///
/// Letter 0 is the first one the refined product applies. Words of equal
/// length enumerate lexicographically with letter 0 varying fastest, so
/// the table index of a word is sum_j w_j K^j.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolWord {
    letters: Vec<usize>,
}

impl SymbolWord {
    pub fn new(letters: Vec<usize>, alphabet: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::BadParameter {
                name: "word",
                reason: "a symbol word needs at least one letter".into(),
            });
        }
        if let Some(&bad) = letters.iter().find(|&&l| l >= alphabet) {
            return Err(Error::BadParameter {
                name: "word",
                reason: format!("letter {bad} outside the alphabet of {alphabet} symbols"),
            });
        }
        Ok(SymbolWord { letters })
    }

    /// Decodes a table index into the length-`letters` word it enumerates.
    pub fn from_index(index: usize, letters: usize, alphabet: usize) -> Self {
        assert!(letters >= 1 && alphabet >= 1);
        let mut rem = index;
        let letters = (0..letters)
            .map(|_| {
                let l = rem % alphabet;
                rem /= alphabet;
                l
            })
            .collect();
        SymbolWord { letters }
    }

    pub fn index(&self, alphabet: usize) -> usize {
        self.letters
            .iter()
            .rev()
            .fold(0, |acc, &l| acc * alphabet + l)
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of propagator steps the word spans: one less than its length.
    pub fn steps(&self) -> usize {
        self.letters.len() - 1
    }

    pub fn reversed(&self) -> SymbolWord {
        let mut letters = self.letters.clone();
        letters.reverse();
        SymbolWord { letters }
    }

    /// Compact rendering: a digit string when every letter is a single
    /// digit, dash-separated letters otherwise.
    pub fn label(&self) -> String {
        if self.letters.iter().all(|&l| l < 10) {
            self.letters.iter().map(|l| l.to_string()).collect()
        } else {
            self.letters
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join("-")
        }
    }
}

/// K^letters when it fits under `cap`, otherwise the refusal carries the
/// (possibly astronomical) exact requirement.
pub(crate) fn checked_table_len(alphabet: usize, letters: usize, cap: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..letters {
        len = match len.checked_mul(alphabet) {
            Some(v) if v <= cap => v,
            _ => {
                return Err(Error::WordTable {
                    words: word_table_estimate(alphabet, letters),
                    cap: cap as u64,
                })
            }
        };
    }
    Ok(len)
}

fn word_table_estimate(alphabet: usize, letters: usize) -> u128 {
    (alphabet as u128)
        .checked_pow(letters.min(u32::MAX as usize) as u32)
        .unwrap_or(u128::MAX)
}

/// Which product realizes a refined word.
///
/// `Interleaved` is the product P_{w_n} U ... U P_{w_0}; `Plain` anchors
/// it at time zero, U^{-n} P_w, so each projector acts conjugated to its
/// own step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    Interleaved,
    Plain,
}

/// Jacobian weight exponent: alpha words carry J^{-1/2}, beta words J^{-1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Alpha,
    Beta,
}

impl WeightKind {
    fn exponent(self) -> f64 {
        match self {
            WeightKind::Alpha => 0.5,
            WeightKind::Beta => 1.0,
        }
    }
}

fn check_refine_dims(
    u: &OperatorHandle,
    partition: &QuantumPartition,
    state_dim: usize,
) -> Result<()> {
    if u.dim() != partition.dim() {
        return Err(Error::DimMismatch {
            context: "refinement propagator".into(),
            expected: partition.dim(),
            got: u.dim(),
        });
    }
    if state_dim != partition.dim() {
        return Err(Error::DimMismatch {
            context: "refinement state".into(),
            expected: partition.dim(),
            got: state_dim,
        });
    }
    Ok(())
}

fn check_word_alphabet(word: &SymbolWord, partition: &QuantumPartition) -> Result<()> {
    if let Some(&bad) = word.letters().iter().find(|&&l| l >= partition.len()) {
        return Err(Error::BadParameter {
            name: "word",
            reason: format!(
                "letter {bad} outside the partition's {} blocks",
                partition.len()
            ),
        });
    }
    Ok(())
}

/// Applies a refined word operator or its adjoint to a state, factor by
/// factor, without materializing any product matrix. The result is not
/// normalized.
pub fn refined_apply(
    word: &SymbolWord,
    psi: &StateVector,
    u: &OperatorHandle,
    partition: &QuantumPartition,
    adjoint: bool,
    schedule: Schedule,
) -> Result<StateVector> {
    check_refine_dims(u, partition, psi.dim())?;
    check_word_alphabet(word, partition)?;
    let n = word.steps();
    let letters = word.letters();

    let amps = if !adjoint {
        // P_w psi = P_{w_n} U ... U P_{w_0} psi, rightmost factor first.
        let mut v = partition.block(letters[0]).apply(psi.amps())?;
        for &l in &letters[1..] {
            v = u.apply(&v)?;
            v = partition.block(l).apply(&v)?;
        }
        if schedule == Schedule::Plain {
            for _ in 0..n {
                v = u.apply_adjoint(&v)?;
            }
        }
        v
    } else {
        // P_w* = P_{w_0}* U* P_{w_1}* ... U* P_{w_n}*; the plain variant
        // (U^{-n} P_w)* = P_w* U^n sends the state forward first.
        let mut v = psi.amps().to_vec();
        if schedule == Schedule::Plain {
            for _ in 0..n {
                v = u.apply(&v)?;
            }
        }
        for (i, &l) in letters.iter().enumerate().rev() {
            v = partition.block(l).apply_adjoint(&v)?;
            if i > 0 {
                v = u.apply_adjoint(&v)?;
            }
        }
        v
    };
    Ok(StateVector::new(amps))
}

/// The implicit operator handle for one refined word: the interleaved
/// chain P_{w_n} U ... U P_{w_0}. Norm evaluations on it stay
/// factor-by-factor.
pub fn refined_operator(
    word: &SymbolWord,
    u: &OperatorHandle,
    partition: &QuantumPartition,
) -> Result<OperatorHandle> {
    check_refine_dims(u, partition, partition.dim())?;
    check_word_alphabet(word, partition)?;
    let letters = word.letters();
    let mut stages = Vec::with_capacity(2 * letters.len() - 1);
    for (i, &l) in letters.iter().enumerate().rev() {
        stages.push(partition.block(l).clone());
        if i > 0 {
            stages.push(u.clone());
        }
    }
    OperatorHandle::chain(stages)
}

/// One projector/backward-step cascade: the word's letter at depth j goes
/// to the digit place `digit[j]`, and the squared leaf norms land in the
/// output table.
struct Cascade<'a> {
    u: &'a OperatorHandle,
    partition: &'a QuantumPartition,
    steps: usize,
    adjoint_blocks: bool,
    digit: Vec<usize>,
}

impl Cascade<'_> {
    fn apply_block(&self, block: usize, v: &[C64]) -> Result<Vec<C64>> {
        let b = self.partition.block(block);
        if self.adjoint_blocks {
            b.apply_adjoint(v)
        } else {
            b.apply(v)
        }
    }

    fn descend(
        &self,
        v: Vec<C64>,
        depth: usize,
        index: usize,
        sink: &mut Vec<(usize, f64)>,
    ) -> Result<()> {
        if depth == self.steps {
            sink.push((index, vnorm_sqr(&v)));
            return Ok(());
        }
        let w = self.u.apply_adjoint(&v)?;
        for b in 0..self.partition.len() {
            let child = self.apply_block(b, &w)?;
            self.descend(child, depth + 1, index + b * self.digit[depth + 1], sink)?;
        }
        Ok(())
    }

    /// Runs the full cascade from `start`. Parallelism splits on the first
    /// two letters; partial results scatter back in enumeration order, so
    /// the table is identical under any thread count.
    fn masses(&self, start: &[C64]) -> Result<Vec<f64>> {
        let k = self.partition.len();
        let len = checked_table_len(k, self.steps + 1, WORD_TABLE_CAP)?;
        let mut out = vec![0.0; len];
        if self.steps == 0 {
            for b in 0..k {
                let v = self.apply_block(b, start)?;
                out[b * self.digit[0]] = vnorm_sqr(&v);
            }
            return Ok(out);
        }
        let prefixes: Vec<(usize, usize)> = (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .collect();
        let partials: Result<Vec<Vec<(usize, f64)>>> = prefixes
            .par_iter()
            .map(|&(a, b)| {
                let v0 = self.apply_block(a, start)?;
                let w = self.u.apply_adjoint(&v0)?;
                let v1 = self.apply_block(b, &w)?;
                let mut sink = Vec::with_capacity(len / (k * k));
                self.descend(v1, 1, a * self.digit[0] + b * self.digit[1], &mut sink)?;
                Ok(sink)
            })
            .collect();
        for part in partials? {
            for (index, mass) in part {
                out[index] = mass;
            }
        }
        Ok(out)
    }
}

/// Table of ||P_w* psi||^2 over every word with `n` steps, indexed by
/// sum_j w_j K^j. Sums to ||psi||^2 exactly up to roundoff: the refined
/// family resolves the identity.
pub fn adjoint_masses(
    psi: &StateVector,
    n: usize,
    u: &OperatorHandle,
    partition: &QuantumPartition,
) -> Result<Vec<f64>> {
    check_refine_dims(u, partition, psi.dim())?;
    let k = partition.len();
    // P_w* applies P_{w_n} first, so depth j carries digit place K^{n-j}.
    let digit = (0..=n).map(|j| k.pow((n - j) as u32)).collect();
    let cascade = Cascade {
        u,
        partition,
        steps: n,
        adjoint_blocks: true,
        digit,
    };
    cascade.masses(psi.amps())
}

/// Probability table over the symbol words of a fixed length.
#[derive(Clone, Debug)]
pub struct CylinderMeasure {
    alphabet: usize,
    steps: usize,
    masses: Vec<f64>,
    eigen_residual: f64,
}

impl CylinderMeasure {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Steps n spanned by each word; words have n + 1 letters.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, index: usize) -> f64 {
        self.masses[index]
    }

    pub fn word(&self, index: usize) -> SymbolWord {
        SymbolWord::from_index(index, self.steps + 1, self.alphabet)
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_masses(&self.masses)
    }

    /// How far the source state was from an eigenvector of the propagator:
    /// ||U psi - <psi, U psi> psi||. Compatibility and shift invariance
    /// only bind when this is small.
    pub fn eigen_residual(&self) -> f64 {
        self.eigen_residual
    }

    /// Sums out the last letter, the table's highest digit.
    pub fn marginal_last_letter(&self) -> Result<CylinderMeasure> {
        if self.steps == 0 {
            return Err(Error::BadParameter {
                name: "measure",
                reason: "cannot marginalize a one-letter table".into(),
            });
        }
        let k = self.alphabet;
        let short_len = self.masses.len() / k;
        let mut masses = vec![0.0; short_len];
        for (j, m) in masses.iter_mut().enumerate() {
            *m = (0..k).map(|e| self.masses[j + e * short_len]).sum();
        }
        Ok(CylinderMeasure {
            alphabet: k,
            steps: self.steps - 1,
            masses,
            eigen_residual: self.eigen_residual,
        })
    }

    /// Sums out the first `drop` letters, the table's lowest digits: the
    /// pushforward under `drop` applications of the left shift.
    pub fn marginal_first_letters(&self, drop: usize) -> Result<CylinderMeasure> {
        if drop > self.steps {
            return Err(Error::BadParameter {
                name: "drop",
                reason: format!("cannot drop {drop} letters from a {}-step table", self.steps),
            });
        }
        let stride = self.alphabet.pow(drop as u32);
        let short_len = self.masses.len() / stride;
        let mut masses = vec![0.0; short_len];
        for (j, m) in masses.iter_mut().enumerate() {
            *m = self.masses[j * stride..(j + 1) * stride].iter().sum();
        }
        Ok(CylinderMeasure {
            alphabet: self.alphabet,
            steps: self.steps - drop,
            masses,
            eigen_residual: self.eigen_residual,
        })
    }

    /// K x K table over the first two letters, indexed w_0 + K w_1.
    pub fn pair_table(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::BadParameter {
                name: "measure",
                reason: "pair marginal needs at least one step".into(),
            });
        }
        let k2 = self.alphabet * self.alphabet;
        let mut out = vec![0.0; k2];
        for (idx, &m) in self.masses.iter().enumerate() {
            out[idx % k2] += m;
        }
        Ok(out)
    }

    /// Largest entry-wise gap between this table's last-letter marginal and
    /// an independently computed shorter table.
    pub fn compatibility_defect(&self, shorter: &CylinderMeasure) -> Result<f64> {
        if shorter.alphabet != self.alphabet || shorter.steps + 1 != self.steps {
            return Err(Error::DimMismatch {
                context: "compatibility tables".into(),
                expected: self.steps.saturating_sub(1),
                got: shorter.steps,
            });
        }
        let marginal = self.marginal_last_letter()?;
        Ok(marginal
            .masses
            .iter()
            .zip(&shorter.masses)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// CSV rows `word,mass` in enumeration order, keeping masses at or
    /// above the retention floor, clamped to be nonnegative.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,mass\n");
        for (idx, &m) in self.masses.iter().enumerate() {
            if m >= RETAIN_FLOOR {
                out.push_str(&format!("{},{:.16e}\n", self.word(idx).label(), m.max(0.0)));
            }
        }
        out
    }
}

/// Cylinder table of a state: mass of the word w is the squared norm of
/// P_{w_n} U* ... U* P_{w_0} applied to U^n psi, equivalently the mass of
/// the reversed word under the adjoint refined family at time zero.
pub fn cylinder_measure(
    psi: &StateVector,
    n: usize,
    u: &OperatorHandle,
    partition: &QuantumPartition,
) -> Result<CylinderMeasure> {
    psi.check_unit_norm(1e-9)?;
    check_refine_dims(u, partition, psi.dim())?;
    let k = partition.len();
    checked_table_len(k, n + 1, WORD_TABLE_CAP)?;

    let u_psi = u.apply(psi.amps())?;
    let lambda = vdot(psi.amps(), &u_psi);
    let eigen_residual = u_psi
        .iter()
        .zip(psi.amps())
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt();

    let mut forward = u_psi;
    for _ in 1..n {
        forward = u.apply(&forward)?;
    }
    if n == 0 {
        forward = psi.amps().to_vec();
    }

    let digit = (0..=n).map(|j| k.pow(j as u32)).collect();
    let cascade = Cascade {
        u,
        partition,
        steps: n,
        adjoint_blocks: false,
        digit,
    };
    let masses = cascade.masses(&forward)?;
    Ok(CylinderMeasure {
        alphabet: k,
        steps: n,
        masses,
        eigen_residual,
    })
}

/// Per-word Jacobian weights at a fixed depth: alpha words carry
/// J_n^{-1/2}, beta words J_n^{-1}; all weights are at least 1.
pub fn make_weights(jac: &JacobianTable, steps: usize, kind: WeightKind) -> Result<WeightFamily> {
    let k = jac.alphabet();
    let len = checked_table_len(k, steps + 1, WORD_TABLE_CAP)?;
    let s = kind.exponent();
    let mut letters = vec![0usize; steps + 1];
    let values = (0..len)
        .map(|idx| {
            decode_word(idx, k, &mut letters);
            (-s * jac.log_word_jacobian(&letters)).exp()
        })
        .collect();
    WeightFamily::new(values)
}

fn decode_word(index: usize, alphabet: usize, letters: &mut [usize]) {
    let mut rem = index;
    for l in letters.iter_mut() {
        *l = rem % alphabet;
        rem /= alphabet;
    }
}

/// Entropy and Jacobian-weighted pressures of one cylinder table.
#[derive(Clone, Debug)]
pub struct PressureReport {
    /// Steps spanned by each word in the table.
    pub steps: usize,
    /// Shannon entropy of the table, nats.
    pub entropy: f64,
    pub p_alpha: f64,
    pub p_beta: f64,
    /// The value selected by the requested weight mode (entropy when no
    /// mode was requested).
    pub pressure: f64,
    /// Words carrying mass at or above the retention floor, in
    /// enumeration order.
    pub retained: Vec<(SymbolWord, f64)>,
}

/// Entropy h and pressures p = h - 2 sum mu log(weight) of a cylinder
/// table. With alpha = J^{-1/2} and beta = J^{-1} this reads
/// p_alpha = h + sum mu log J and p_beta = h + 2 sum mu log J; without a
/// Jacobian table both collapse to h.
pub fn entropy_pressure(
    measure: &CylinderMeasure,
    jac: Option<&JacobianTable>,
    mode: Option<WeightKind>,
) -> Result<PressureReport> {
    let total = measure.total();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::BadParameter {
            name: "measure",
            reason: format!("total mass {total}, must be 1 within 1e-6"),
        });
    }
    if mode.is_some() && jac.is_none() {
        return Err(Error::BadParameter {
            name: "jac",
            reason: "weighted pressure needs a jacobian table".into(),
        });
    }
    if let Some(j) = jac {
        if j.alphabet() != measure.alphabet() {
            return Err(Error::DimMismatch {
                context: "jacobian alphabet".into(),
                expected: measure.alphabet(),
                got: j.alphabet(),
            });
        }
    }

    let h = measure.entropy();
    let mass_log_j = match jac {
        None => 0.0,
        Some(j) => {
            let k = measure.alphabet();
            let mut letters = vec![0usize; measure.steps() + 1];
            measure
                .masses()
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0.0)
                .map(|(idx, &m)| {
                    decode_word(idx, k, &mut letters);
                    m * j.log_word_jacobian(&letters)
                })
                .sum()
        }
    };
    let p_alpha = h + mass_log_j;
    let p_beta = h + 2.0 * mass_log_j;
    let pressure = match mode {
        None => h,
        Some(WeightKind::Alpha) => p_alpha,
        Some(WeightKind::Beta) => p_beta,
    };
    let retained = measure
        .masses()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= RETAIN_FLOOR)
        .map(|(idx, &m)| (measure.word(idx), m))
        .collect();
    Ok(PressureReport {
        steps: measure.steps(),
        entropy: h,
        p_alpha,
        p_beta,
        pressure,
        retained,
    })
}

/// floor((1 - delta') log(2 pi N) / lambda): how many refinement steps the
/// dynamics supports at dimension N before wave packets outgrow cells.
pub fn ehrenfest_time(dim: usize, delta_prime: f64, lambda: f64) -> Result<usize> {
    if dim == 0 {
        return Err(Error::BadParameter {
            name: "N",
            reason: "dimension must be positive".into(),
        });
    }
    if !(0.0..1.0).contains(&delta_prime) {
        return Err(Error::BadParameter {
            name: "delta_prime",
            reason: format!("delta' = {delta_prime}, must lie in [0, 1)"),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::BadParameter {
            name: "lambda",
            reason: format!("exponent {lambda}, must be positive"),
        });
    }
    Ok(((1.0 - delta_prime) * (2.0 * PI * dim as f64).ln() / lambda).floor() as usize)
}

/// Depth bookkeeping for refinement runs at a fixed Hilbert dimension.
#[derive(Clone, Copy, Debug)]
pub struct EhrenfestConfig {
    dim: usize,
    delta_prime: f64,
    lambda: f64,
    n_e: usize,
    /// Reserved cutoff constants carried through configs for
    /// forward-compatibility; nothing in the torus model consumes them.
    pub delta: f64,
    pub c_delta: f64,
}

impl EhrenfestConfig {
    pub fn new(dim: usize, delta_prime: f64, lambda: f64) -> Result<Self> {
        let n_e = ehrenfest_time(dim, delta_prime, lambda)?;
        Ok(EhrenfestConfig {
            dim,
            delta_prime,
            lambda,
            n_e,
            delta: 0.0,
            c_delta: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The refinement depth all certified runs use.
    pub fn n_e(&self) -> usize {
        self.n_e
    }

    /// Effective Planck constant 1/(2 pi N).
    pub fn hbar(&self) -> f64 {
        1.0 / (2.0 * PI * self.dim as f64)
    }

    pub fn log_hbar(&self) -> f64 {
        -(2.0 * PI * self.dim as f64).ln()
    }
}

/// Joint-versus-split pressure comparison for one state.
#[derive(Clone, Copy, Debug)]
pub struct SubadditivityReport {
    pub n_o: usize,
    pub m: usize,
    /// Alpha pressure of the joint table at n_o + m steps.
    pub p_joint: f64,
    /// Alpha pressure at n_o steps.
    pub p_head: f64,
    /// Alpha pressure at m - 1 steps.
    pub p_tail: f64,
    /// p_joint - p_head - p_tail; at most `bound` plus tolerance for
    /// eigenstates inside the Ehrenfest horizon.
    pub defect: f64,
    /// 3 lambda: three worst-case single-step Jacobian logs.
    pub bound: f64,
}

/// Checks that splitting the refinement window costs at most the
/// three-step Jacobian spread: p_{n_o+m} <= p_{n_o} + p_{m-1} + 3 lambda.
pub fn subadditivity_check(
    psi: &StateVector,
    u: &OperatorHandle,
    partition: &QuantumPartition,
    jac: &JacobianTable,
    n_o: usize,
    m: usize,
    config: &EhrenfestConfig,
) -> Result<SubadditivityReport> {
    if m == 0 {
        return Err(Error::BadParameter {
            name: "m",
            reason: "the split tail needs at least one step".into(),
        });
    }
    if n_o + m > config.n_e() {
        return Err(Error::BadParameter {
            name: "m",
            reason: format!(
                "n_o + m = {} exceeds the refinement horizon n_E = {}",
                n_o + m,
                config.n_e()
            ),
        });
    }
    let pressure_at = |steps: usize| -> Result<f64> {
        let table = cylinder_measure(psi, steps, u, partition)?;
        Ok(entropy_pressure(&table, Some(jac), Some(WeightKind::Alpha))?.pressure)
    };
    let p_joint = pressure_at(n_o + m)?;
    let p_head = pressure_at(n_o)?;
    let p_tail = pressure_at(m - 1)?;
    Ok(SubadditivityReport {
        n_o,
        m,
        p_joint,
        p_head,
        p_tail,
        defect: p_joint - p_head - p_tail,
        bound: 3.0 * jac.lambda(),
    })
}

/// How far a cylinder table is from shift invariance at one depth.
#[derive(Clone, Copy, Debug)]
pub struct ShiftInvarianceReport {
    /// Shift distance: letters summed out at the front.
    pub n: usize,
    /// Steps of the reference table.
    pub n_o: usize,
    /// The time horizon T the precondition n + n_o <= 2T uses.
    pub egorov_time: usize,
    /// max over n_o-step words of |shifted mass - reference mass|.
    pub defect: f64,
}

/// Compares the n_o-step table against the (n + n_o)-step table with the
/// first n letters summed out. Small for eigenstates while the combined
/// depth stays inside twice the Egorov window.
pub fn shift_invariance_defect(
    psi: &StateVector,
    u: &OperatorHandle,
    partition: &QuantumPartition,
    n: usize,
    n_o: usize,
    lambda: f64,
    gamma: f64,
) -> Result<ShiftInvarianceReport> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::BadParameter {
            name: "gamma",
            reason: format!("gamma = {gamma}, must lie in [0, 1)"),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::BadParameter {
            name: "lambda",
            reason: format!("exponent {lambda}, must be positive"),
        });
    }
    let egorov_time =
        ((1.0 - gamma) * (2.0 * PI * psi.dim() as f64).ln() / (2.0 * lambda)).floor() as usize;
    if n + n_o > 2 * egorov_time {
        return Err(Error::BadParameter {
            name: "n",
            reason: format!(
                "n + n_o = {} exceeds the commutation window 2T = {}",
                n + n_o,
                2 * egorov_time
            ),
        });
    }
    let long = cylinder_measure(psi, n + n_o, u, partition)?;
    let short = cylinder_measure(psi, n_o, u, partition)?;
    let shifted = long.marginal_first_letters(n)?;
    let defect = shifted
        .masses()
        .iter()
        .zip(short.masses())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ShiftInvarianceReport {
        n,
        n_o,
        egorov_time,
        defect,
    })
}

/// Distance on the unit circle between two coordinates.
pub(crate) fn circ_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}
