//! Finite-dimensional Hilbert-space substrate: state vectors, operator
//! handles (dense, diagonal, lazy compositions), operator norms by power
//! iteration, spectral decomposition of unitaries, and partition-of-unity
//! verification.

pub mod io;

use crate::error::{Error, Result};
use crate::lapack;
use crate::linalg::{gram_schmidt, vnorm, vnorm_sqr, vscale, CMatrix, C64};
use crate::rng::{rng_for, Task};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Seed for the power-iteration start vector. Fixed so norms are bitwise
/// reproducible run to run.
const POWER_SEED: u64 = 0x0e16_e45c;

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 10_000;
const UNITARY_TOL: f64 = 1e-8;
const EIG_DIM_CAP: usize = 4096;
const PHASE_CLUSTER_GAP: f64 = 1e-10;

/// A vector in C^N. `normalized` records that the constructor scaled it to
/// unit norm; such vectors keep Euclidean norm 1 within 1e-12.
#[derive(Clone, Debug)]
pub struct StateVector {
    amps: Vec<C64>,
    normalized: bool,
}

impl StateVector {
    /// Wraps raw amplitudes without rescaling.
    pub fn new(amps: Vec<C64>) -> Self {
        StateVector {
            amps,
            normalized: false,
        }
    }

    /// Scales to unit norm. Errors when the norm is zero or not finite.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n = vnorm(&amps);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::BadNorm { norm: n });
        }
        vscale(&mut amps, 1.0 / n);
        Ok(StateVector {
            amps,
            normalized: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn is_flagged_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        vnorm(&self.amps)
    }

    /// <self, other>, conjugating self.
    pub fn inner(&self, other: &StateVector) -> C64 {
        crate::linalg::vdot(&self.amps, &other.amps)
    }

    /// Checks the unit-norm invariant, independent of the flag.
    pub fn check_unit_norm(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::BadNorm { norm: n });
        }
        Ok(())
    }
}

/// Linear operator on C^N, applied lazily. Chains compose right-to-left:
/// `Chain([A, B, C])` is the operator A B C, so C acts first.
#[derive(Clone, Debug)]
pub enum OperatorHandle {
    Identity(usize),
    Dense(Arc<CMatrix>),
    Diagonal(Arc<Vec<C64>>),
    Scaled(C64, Box<OperatorHandle>),
    Adjoint(Box<OperatorHandle>),
    Chain(Vec<OperatorHandle>),
}

impl OperatorHandle {
    pub fn dense(m: CMatrix) -> Self {
        assert!(m.is_square(), "operator matrices must be square");
        OperatorHandle::Dense(Arc::new(m))
    }

    pub fn diagonal(d: Vec<C64>) -> Self {
        OperatorHandle::Diagonal(Arc::new(d))
    }

    pub fn scaled(self, s: C64) -> Self {
        OperatorHandle::Scaled(s, Box::new(self))
    }

    /// A*. Unwraps a double adjoint instead of nesting.
    pub fn adjoint(self) -> Self {
        match self {
            OperatorHandle::Adjoint(inner) => *inner,
            other => OperatorHandle::Adjoint(Box::new(other)),
        }
    }

    /// Validates that adjacent stages share a dimension; the error names the
    /// offending pair.
    pub fn chain(stages: Vec<OperatorHandle>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::BadParameter {
                name: "stages",
                reason: "composition chain needs at least one stage".into(),
            });
        }
        for i in 0..stages.len() - 1 {
            let (dl, dr) = (stages[i].dim(), stages[i + 1].dim());
            if dl != dr {
                return Err(Error::ChainMismatch {
                    left_stage: i,
                    left_dim: dl,
                    right_stage: i + 1,
                    right_dim: dr,
                });
            }
        }
        Ok(OperatorHandle::Chain(stages))
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorHandle::Identity(n) => *n,
            OperatorHandle::Dense(m) => m.rows(),
            OperatorHandle::Diagonal(d) => d.len(),
            OperatorHandle::Scaled(_, inner) => inner.dim(),
            OperatorHandle::Adjoint(inner) => inner.dim(),
            OperatorHandle::Chain(stages) => stages[0].dim(),
        }
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimMismatch {
                context: "operator application".into(),
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// y = A x.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_input(x.len())?;
        Ok(match self {
            OperatorHandle::Identity(_) => x.to_vec(),
            OperatorHandle::Dense(m) => m.matvec(x),
            OperatorHandle::Diagonal(d) => x.iter().zip(d.iter()).map(|(v, s)| v * s).collect(),
            OperatorHandle::Scaled(s, inner) => {
                let mut y = inner.apply(x)?;
                for v in &mut y {
                    *v *= s;
                }
                y
            }
            OperatorHandle::Adjoint(inner) => inner.apply_adjoint(x)?,
            OperatorHandle::Chain(stages) => {
                let mut y = x.to_vec();
                for stage in stages.iter().rev() {
                    y = stage.apply(&y)?;
                }
                y
            }
        })
    }

    /// y = A* x.
    pub fn apply_adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_input(x.len())?;
        Ok(match self {
            OperatorHandle::Identity(_) => x.to_vec(),
            OperatorHandle::Dense(m) => m.matvec_adj(x),
            OperatorHandle::Diagonal(d) => x
                .iter()
                .zip(d.iter())
                .map(|(v, s)| v * s.conj())
                .collect(),
            OperatorHandle::Scaled(s, inner) => {
                let mut y = inner.apply_adjoint(x)?;
                let sc = s.conj();
                for v in &mut y {
                    *v *= sc;
                }
                y
            }
            OperatorHandle::Adjoint(inner) => inner.apply(x)?,
            OperatorHandle::Chain(stages) => {
                // (A B C)* = C* B* A*: adjoints applied left-to-right.
                let mut y = x.to_vec();
                for stage in stages.iter() {
                    y = stage.apply_adjoint(&y)?;
                }
                y
            }
        })
    }

    /// Dense matrix for this operator. Chains multiply out; intended for
    /// small dimensions and tests, not the norm path.
    pub fn materialize(&self) -> Result<CMatrix> {
        Ok(match self {
            OperatorHandle::Identity(n) => CMatrix::identity(*n),
            OperatorHandle::Dense(m) => (**m).clone(),
            OperatorHandle::Diagonal(d) => CMatrix::from_diag(d),
            OperatorHandle::Scaled(s, inner) => inner.materialize()?.scaled(*s),
            OperatorHandle::Adjoint(inner) => inner.materialize()?.adjoint(),
            OperatorHandle::Chain(stages) => {
                let mut acc = stages[0].materialize()?;
                for stage in &stages[1..] {
                    acc = acc.matmul(&stage.materialize()?);
                }
                acc
            }
        })
    }

    /// Diagonal entries when the whole operator is diagonal in the standard
    /// basis; None as soon as a dense stage appears.
    pub fn diag_entries(&self) -> Option<Vec<C64>> {
        match self {
            OperatorHandle::Identity(n) => Some(vec![C64::new(1.0, 0.0); *n]),
            OperatorHandle::Dense(_) => None,
            OperatorHandle::Diagonal(d) => Some((**d).clone()),
            OperatorHandle::Scaled(s, inner) => {
                let mut d = inner.diag_entries()?;
                for v in &mut d {
                    *v *= s;
                }
                Some(d)
            }
            OperatorHandle::Adjoint(inner) => {
                let mut d = inner.diag_entries()?;
                for v in &mut d {
                    *v = v.conj();
                }
                Some(d)
            }
            OperatorHandle::Chain(stages) => {
                let mut acc = vec![C64::new(1.0, 0.0); self.dim()];
                for stage in stages {
                    let d = stage.diag_entries()?;
                    for (a, b) in acc.iter_mut().zip(&d) {
                        *a *= b;
                    }
                }
                Some(acc)
            }
        }
    }
}

/// Largest singular value of A, by power iteration on A*A with a fixed-seed
/// start vector. Never materializes chains; relative accuracy ~1e-6 on the
/// Rayleigh-stagnation stopping rule.
pub fn operator_norm(a: &OperatorHandle) -> Result<f64> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::BadParameter {
            name: "A",
            reason: "operator dimension must be at least 1".into(),
        });
    }
    // Diagonal operators have exact norms; skip the iteration.
    if let Some(d) = a.diag_entries() {
        return Ok(d.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }

    let mut rng = rng_for(POWER_SEED, Task::PowerIteration);
    let mut x: Vec<C64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let xn = vnorm(&x);
    vscale(&mut x, 1.0 / xn);

    // The Rayleigh quotient of A*A climbs geometrically with ratio
    // (sigma_2/sigma_1)^2 per step. Plain stagnation under-reports when that
    // ratio is close to 1, so stop on the extrapolated remaining tail
    // delta * r / (1 - r) instead of the raw increment.
    let mut rho_prev = f64::NEG_INFINITY;
    let mut delta_prev = f64::INFINITY;
    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let y = a.apply(&x)?;
        rho = vnorm_sqr(&y); // Rayleigh quotient of A*A at unit x
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
                let remaining = delta * ratio / (1.0 - ratio);
                if delta <= POWER_TOL * rho && remaining <= POWER_TOL * rho {
                    break;
                }
            }
            delta_prev = delta;
        }
        rho_prev = rho;
        let mut z = a.apply_adjoint(&y)?;
        let zn = vnorm(&z);
        if zn == 0.0 {
            return Ok(0.0);
        }
        vscale(&mut z, 1.0 / zn);
        x = z;
    }
    Ok(rho.sqrt())
}

/// Spectral decomposition of a unitary: eigenphases ascending in [0, 2pi),
/// eigenvectors as matrix columns in the same order, and the defects the
/// checks actually measured.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Phases of the eigenvalues, ascending in [0, 2pi).
    pub phases: Vec<f64>,
    /// Column i is the eigenvector for eigenvalues[i].
    pub vectors: CMatrix,
    /// Number of numerically degenerate phase clusters found.
    pub cluster_count: usize,
    /// ||U U* - I|| measured on the input.
    pub unitarity_defect: f64,
    /// max_i ||U v_i - mu_i v_i||.
    pub max_residual: f64,
    /// max |(V* V - I)_{jk}|.
    pub gram_defect: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenstate(&self, i: usize) -> StateVector {
        StateVector {
            amps: self.vectors.col(i).to_vec(),
            normalized: true,
        }
    }
}

fn phase_of(v: C64) -> f64 {
    let mut p = v.arg();
    if p < 0.0 {
        p += TAU;
    }
    // arg returns (-pi, pi], so p lands in [0, 2pi); guard the rounding edge.
    if p >= TAU {
        p -= TAU;
    }
    p
}

/// Full eigendecomposition of a unitary operator. Degenerate phase clusters
/// (gap below 1e-10) are orthonormalized deterministically in sorted order,
/// so repeated runs give identical output.
pub fn eig_unitary(u: &OperatorHandle) -> Result<SpectralDecomposition> {
    let n = u.dim();
    if n > EIG_DIM_CAP {
        return Err(Error::TooLarge {
            dim: n,
            cap: EIG_DIM_CAP,
        });
    }
    let m = u.materialize()?;

    // Unitarity gate: ||U U* - I|| must be small before eigenphases mean
    // anything.
    let mut defect_m = m.matmul(&m.adjoint());
    defect_m.sub_identity();
    let unitarity_defect = operator_norm(&OperatorHandle::dense(defect_m))?;
    if unitarity_defect > UNITARY_TOL {
        return Err(Error::NotUnitary {
            defect: unitarity_defect,
            tol: UNITARY_TOL,
        });
    }

    let (w, vr) = lapack::eig(&m)?;
    for lam in &w {
        let off = (lam.norm() - 1.0).abs();
        if off > UNITARY_TOL {
            return Err(Error::SpectralDefect {
                check: "eigenvalue modulus",
                value: off,
                tol: UNITARY_TOL,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let phases_raw: Vec<f64> = w.iter().map(|&v| phase_of(v)).collect();
    order.sort_by(|&i, &j| {
        phases_raw[i]
            .partial_cmp(&phases_raw[j])
            .unwrap()
            .then(i.cmp(&j))
    });

    let eigenvalues: Vec<C64> = order.iter().map(|&i| w[i]).collect();
    let phases: Vec<f64> = order.iter().map(|&i| phases_raw[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.col_mut(dst).copy_from_slice(vr.col(src));
    }

    // One Gram-Schmidt pass in sorted order; LAPACK does not orthonormalize
    // within degenerate eigenspaces, and golden outputs need a deterministic
    // basis there. A second pass cleans up if two columns were nearly
    // parallel.
    let min_renorm = gram_schmidt(&mut vectors);
    if min_renorm < 0.99 {
        gram_schmidt(&mut vectors);
    }

    // Count clusters of numerically equal phases, merging across the 0/2pi
    // seam.
    let mut cluster_count = if n > 0 { 1 } else { 0 };
    for i in 1..n {
        if phases[i] - phases[i - 1] >= PHASE_CLUSTER_GAP {
            cluster_count += 1;
        }
    }
    if n > 1 && cluster_count > 1 && (phases[0] + TAU - phases[n - 1]) < PHASE_CLUSTER_GAP {
        cluster_count -= 1;
    }

    // Residuals: columns of U V - V diag(mu).
    let uv = m.matmul(&vectors);
    let mut max_residual = 0.0_f64;
    for i in 0..n {
        let v = vectors.col(i);
        let av = uv.col(i);
        let lam = eigenvalues[i];
        let r2: f64 = (0..n).map(|k| (av[k] - lam * v[k]).norm_sqr()).sum();
        max_residual = max_residual.max(r2.sqrt());
    }
    if max_residual > UNITARY_TOL {
        return Err(Error::SpectralDefect {
            check: "eigenpair residual",
            value: max_residual,
            tol: UNITARY_TOL,
        });
    }

    let mut gram = vectors.adjoint().matmul(&vectors);
    gram.sub_identity();
    let gram_defect = gram.max_abs();
    if gram_defect > UNITARY_TOL {
        return Err(Error::SpectralDefect {
            check: "eigenbasis orthonormality",
            value: gram_defect,
            tol: UNITARY_TOL,
        });
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        phases,
        vectors,
        cluster_count,
        unitarity_defect,
        max_residual,
        gram_defect,
    })
}

/// Defect ||sum_k P_k P_k* - I|| of a claimed partition of unity. Diagonal
/// families are evaluated exactly; dense families go through the norm path.
pub fn verify_partition_of_unity(blocks: &[OperatorHandle]) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let n = blocks[0].dim();
    for (k, b) in blocks.iter().enumerate() {
        if b.dim() != n {
            return Err(Error::DimMismatch {
                context: format!("partition block {k}"),
                expected: n,
                got: b.dim(),
            });
        }
    }

    let all_diag: Option<Vec<Vec<C64>>> = blocks.iter().map(|b| b.diag_entries()).collect();
    if let Some(diags) = all_diag {
        // sum_k |d_k(j)|^2 - 1, and the operator norm of a diagonal defect
        // is its largest absolute entry.
        let mut defect = 0.0_f64;
        for j in 0..n {
            let s: f64 = diags.iter().map(|d| d[j].norm_sqr()).sum();
            defect = defect.max((s - 1.0).abs());
        }
        return Ok(defect);
    }

    let mut sum = CMatrix::zeros(n, n);
    for b in blocks {
        let m = b.materialize()?;
        sum.add_assign(&m.matmul(&m.adjoint()));
    }
    sum.sub_identity();
    operator_norm(&OperatorHandle::dense(sum))
}

/// Haar-random normalized state, reproducible from (seed, index).
pub fn random_state(n: usize, seed: u64, index: u64) -> StateVector {
    let mut rng = rng_for(seed, Task::RandomState { index });
    let amps: Vec<C64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    StateVector::normalized(amps).expect("gaussian draw has positive norm")
}

/// Unitary discrete Fourier matrix, F[j, k] = e^{-2 pi i j k / n} / sqrt(n).
pub fn fourier_matrix(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    let scale = 1.0 / (n as f64).sqrt();
    for k in 0..n {
        for (j, v) in m.col_mut(k).iter_mut().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64;
            *v = C64::from_polar(scale, angle);
        }
    }
    m
}

/// Haar-random unitary, reproducible from (seed, index): Gaussian matrix
/// orthonormalized with the positive-diagonal QR convention.
pub fn random_unitary(n: usize, seed: u64, index: u64) -> CMatrix {
    let mut rng = rng_for(seed, Task::RandomUnitary { index });
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        for v in m.col_mut(j).iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v = C64::new(re, im);
        }
    }
    let min_renorm = gram_schmidt(&mut m);
    if min_renorm < 1e-3 {
        gram_schmidt(&mut m);
    }
    m
}

#[cfg(test)]
mod tests;
