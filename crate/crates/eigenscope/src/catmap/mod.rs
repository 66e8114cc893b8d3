//! Hyperbolic torus automorphisms, classical and quantized: the linear map
//! and its Lyapunov exponent, the unitary propagator on the N-dimensional
//! quantization of the torus, Weyl-Heisenberg translations, coherent
//! states, strip partitions with coarse-grained Jacobian tables, and Husimi
//! phase-space densities.
//!
//! Conventions: Planck's constant is tied to the dimension by
//! hbar = 1/(2 pi N); positions are j/N on the unit circle.

mod husimi;
mod strips;

pub use husimi::{husimi, HusimiGrid};
pub use strips::{
    build_strip_partition, coarse_jacobian_table, JacobianTable, StripPartitionSpec, StripProfile,
};

use crate::error::{Error, Result};
use crate::hilbert::{operator_norm, OperatorHandle, StateVector};
use crate::linalg::{CMatrix, C64};
use std::f64::consts::PI;

/// A 2x2 integer matrix acting on the torus, with det 1 and |trace| > 2,
/// together with its expansion data.
#[derive(Clone, Copy, Debug)]
pub struct ClassicalCatMap {
    a: [[i64; 2]; 2],
    lambda: f64,
    unstable_dir: [f64; 2],
    stable_dir: [f64; 2],
}

/// Per-step expansion exponent log((|t| + sqrt(t^2 - 4))/2) of a unimodular
/// integer matrix with trace t.
pub fn lyapunov(a: [[i64; 2]; 2]) -> Result<f64> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det != 1 {
        return Err(Error::BadParameter {
            name: "map",
            reason: format!("determinant is {det}, must be 1"),
        });
    }
    let trace = a[0][0] + a[1][1];
    if trace.abs() <= 2 {
        return Err(Error::BadParameter {
            name: "map",
            reason: format!("not Anosov: |trace| = {} is not > 2", trace.abs()),
        });
    }
    let t = trace.abs() as f64;
    Ok(((t + (t * t - 4.0).sqrt()) / 2.0).ln())
}

impl ClassicalCatMap {
    pub fn new(a: [[i64; 2]; 2]) -> Result<Self> {
        let lambda = lyapunov(a)?;
        // det 1 and |trace| > 2 force b != 0 (b = 0 would give trace +-2),
        // so (b, mu - a) is always a valid eigenvector.
        let trace = (a[0][0] + a[1][1]) as f64;
        let disc = (trace * trace - 4.0).sqrt();
        let mu_plus = (trace + trace.signum() * disc) / 2.0; // larger |mu|
        let mu_minus = 1.0 / mu_plus;
        let evec = |mu: f64| -> [f64; 2] {
            let v = [a[0][1] as f64, mu - a[0][0] as f64];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        };
        Ok(ClassicalCatMap {
            a,
            lambda,
            unstable_dir: evec(mu_plus),
            stable_dir: evec(mu_minus),
        })
    }

    /// The default quantizable map [[2,1],[3,2]]: trace 4, both evenness
    /// conditions hold for every N.
    pub fn standard() -> Self {
        ClassicalCatMap::new([[2, 1], [3, 2]]).expect("standard map is Anosov")
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.a
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn unstable_dir(&self) -> [f64; 2] {
        self.unstable_dir
    }

    pub fn stable_dir(&self) -> [f64; 2] {
        self.stable_dir
    }

    /// One classical step: A rho mod 1, coordinates in [0, 1).
    pub fn step(&self, rho: [f64; 2]) -> [f64; 2] {
        let x = self.a[0][0] as f64 * rho[0] + self.a[0][1] as f64 * rho[1];
        let y = self.a[1][0] as f64 * rho[0] + self.a[1][1] as f64 * rho[1];
        [x.rem_euclid(1.0), y.rem_euclid(1.0)]
    }

    /// Action on integer lattice vectors (no reduction).
    pub fn step_lattice(&self, v: (i64, i64)) -> (i64, i64) {
        (
            self.a[0][0] * v.0 + self.a[0][1] * v.1,
            self.a[1][0] * v.0 + self.a[1][1] * v.1,
        )
    }
}

/// Free function form of the classical step.
pub fn classical_step(map: &ClassicalCatMap, rho: [f64; 2]) -> [f64; 2] {
    map.step(rho)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Quantized propagator U_N. Entries follow the quadratic Gauss-sum kernel
///
///   U(j', j) = sigma_N (N|b|)^{-1/2} sum_{m=0}^{|b|-1}
///              exp( i pi / (bN) * (a (j+mN)^2 - 2 (j+mN) j' + d j'^2) ),
///
/// which for |b| = 1 is the single-term quadratic kernel. The sum over m
/// periodizes the kernel so the matrix stays unitary for |b| > 1. The global
/// phase sigma_N makes the first significant entry of column 0 real
/// positive, which pins the matrix (not just its conjugacy class) for
/// golden files.
pub fn quantize_cat(map: &ClassicalCatMap, n: usize) -> Result<OperatorHandle> {
    let [[a, b], [c, d]] = map.matrix();
    if n < 2 {
        return Err(Error::BadParameter {
            name: "N",
            reason: format!("dimension {n} must be at least 2"),
        });
    }
    if (a * b) % 2 != 0 || (c * d) % 2 != 0 {
        return Err(Error::BadQuantization { a, b, c, d, n });
    }
    if gcd(b.unsigned_abs(), n as u64) != 1 {
        return Err(Error::BadQuantization { a, b, c, d, n });
    }

    let ni = n as i64;
    let babs = b.unsigned_abs() as i64;
    let bn = b * ni;
    let modulus = 2 * babs * ni;
    let norm = 1.0 / ((n as f64) * babs as f64).sqrt();

    let mut u = CMatrix::from_fn(n, n, |jp, j| {
        let jp = jp as i64;
        let j = j as i64;
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..babs {
            let jm = j + m * ni;
            let k = a * jm * jm - 2 * jm * jp + d * jp * jp;
            // exp(i pi k / (bN)) has period 2bN in k; reduce exactly first.
            let q = k.rem_euclid(modulus);
            let ang = PI * q as f64 / bn as f64;
            acc += C64::new(ang.cos(), ang.sin());
        }
        acc * norm
    });

    // Global phase: rotate so the first non-negligible entry of column 0 is
    // real positive.
    let lead = u
        .col(0)
        .iter()
        .find(|v| v.norm() > 1e-12)
        .copied()
        .ok_or_else(|| Error::BadParameter {
            name: "N",
            reason: "quantization produced a zero leading column".into(),
        })?;
    let sigma = (lead / lead.norm()).conj();
    for v in u.data_mut().iter_mut() {
        *v *= sigma;
    }

    // Unitarity is the physical contract; verify before handing it out.
    let mut defect = u.matmul(&u.adjoint());
    defect.sub_identity();
    let defect_norm = operator_norm(&OperatorHandle::dense(defect))?;
    if defect_norm > 1e-10 {
        return Err(Error::NotUnitary {
            defect: defect_norm,
            tol: 1e-10,
        });
    }
    Ok(OperatorHandle::dense(u))
}

/// Discrete Weyl-Heisenberg translation by the lattice vector v:
/// (T(v) psi)(j) = exp(i pi v1 v2 / N) exp(2 pi i v2 j / N) psi(j - v1 mod N).
pub fn weyl_translation(n: usize, v: (i64, i64)) -> OperatorHandle {
    OperatorHandle::dense(weyl_matrix(n, v))
}

pub(crate) fn weyl_matrix(n: usize, v: (i64, i64)) -> CMatrix {
    let ni = n as i64;
    let (v1, v2) = v;
    let base = PI * (v1 as f64) * (v2 as f64) / n as f64;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let src = (i as i64 - v1).rem_euclid(ni) as usize;
        let ang = base + 2.0 * PI * (v2 as f64) * (i as f64) / n as f64;
        m.set(i, src, C64::new(ang.cos(), ang.sin()));
    }
    m
}

/// Norm of the commutator [T(v), T(w)]: closed form 2 |sin(pi (v ^ w) / N)|
/// with v ^ w = v1 w2 - v2 w1. Exact for the discrete Weyl family.
pub fn weyl_commutator_norm(n: usize, v: (i64, i64), w: (i64, i64)) -> f64 {
    let cross = (v.0 * w.1 - v.1 * w.0) as f64;
    2.0 * (PI * cross / n as f64).sin().abs()
}

/// Periodized Gaussian coherent state centered at (q0, p0) in the unit
/// square, width squeeze/sqrt(N) in position. Nine periodization images are
/// far beyond double-precision tails for N >= 8.
pub fn coherent_state(n: usize, center: (f64, f64), squeeze: f64) -> Result<StateVector> {
    if !(squeeze.is_finite() && squeeze > 0.0) {
        return Err(Error::BadParameter {
            name: "squeeze",
            reason: format!("width parameter {squeeze} must be positive"),
        });
    }
    let (q0, p0) = center;
    let nf = n as f64;
    let s2 = squeeze * squeeze;
    let amps: Vec<C64> = (0..n)
        .map(|j| {
            let x = j as f64 / nf;
            let mut acc = C64::new(0.0, 0.0);
            for m in -4..=4 {
                let dxq = x + m as f64 - q0;
                let mag = (-PI * nf * dxq * dxq / s2).exp();
                let ang = 2.0 * PI * nf * p0 * dxq;
                acc += C64::new(ang.cos(), ang.sin()) * mag;
            }
            acc
        })
        .collect();
    StateVector::normalized(amps)
}

/// Measures the exact-Egorov contract of the propagator: U T(v) U* should
/// equal mu T(Av) for a unimodular mu. Returns (defect norm, mu).
pub fn egorov_translation_defect(
    u: &OperatorHandle,
    map: &ClassicalCatMap,
    v: (i64, i64),
) -> Result<(f64, C64)> {
    let n = u.dim();
    let um = u.materialize()?;
    let tv = weyl_matrix(n, v);
    let av = map.step_lattice(v);
    let tav = weyl_matrix(n, av);

    let lhs = um.matmul(&tv).matmul(&um.adjoint());
    // mu from the largest entry of T(Av), where the ratio is best
    // conditioned.
    let mut mu = C64::new(0.0, 0.0);
    let mut best = 0.0;
    for j in 0..n {
        for i in 0..n {
            let r = tav.get(i, j);
            if r.norm() > best {
                best = r.norm();
                mu = lhs.get(i, j) / r;
            }
        }
    }
    let mut diff = lhs;
    diff.sub_assign(&tav.scaled(mu));
    let defect = operator_norm(&OperatorHandle::dense(diff))?;
    Ok((defect, mu))
}
