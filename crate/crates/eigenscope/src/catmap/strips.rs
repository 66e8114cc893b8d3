//! Smooth vertical strip partitions of the torus and the coarse-grained
//! Jacobian tables built over them.
//!
//! Each strip k covers [k/K, (k+1)/K) in position, with edges smoothed by a
//! compactly supported C-infinity bump of half-width eta. After pointwise
//! renormalization the squared profiles sum to exactly 1, so the induced
//! diagonal operators form a quantum partition of unity to machine
//! precision.

use crate::catmap::ClassicalCatMap;
use crate::error::{Error, Result};
use crate::eup::QuantumPartition;
use crate::hilbert::OperatorHandle;
use crate::linalg::C64;

/// Number of panels in the cumulative-bump quadrature table. The profile
/// only needs to be smooth and deterministic; partition exactness comes from
/// renormalization, not quadrature accuracy.
const BUMP_TABLE_LEN: usize = 4096;

#[derive(Clone, Copy, Debug)]
pub struct StripPartitionSpec {
    /// Alphabet size: number of strips, >= 2.
    pub k: usize,
    /// Smoothing half-width as a fraction of the circle, in (0, 1/(2K)).
    pub eta: f64,
}

impl StripPartitionSpec {
    pub fn new(k: usize, eta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::BadParameter {
                name: "K",
                reason: format!("{k} strips requested, need at least 2"),
            });
        }
        let cap = 1.0 / (2.0 * k as f64);
        if !(eta > 0.0 && eta < cap) {
            return Err(Error::BadParameter {
                name: "eta",
                reason: format!("smoothing width {eta} must lie in (0, {cap}) for K = {k}"),
            });
        }
        Ok(StripPartitionSpec { k, eta })
    }

    /// Evaluator for the renormalized strip profiles on the circle.
    pub fn profile(&self) -> StripProfile {
        // Cumulative integral of exp(-1/(1-u^2)) over (-1, 1), trapezoid
        // panels, normalized to reach exactly 1.
        let mut table = Vec::with_capacity(BUMP_TABLE_LEN + 1);
        let bump = |u: f64| -> f64 {
            if u.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - u * u)).exp()
            }
        };
        let h = 2.0 / BUMP_TABLE_LEN as f64;
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..BUMP_TABLE_LEN {
            let u0 = -1.0 + i as f64 * h;
            let u1 = u0 + h;
            acc += 0.5 * (bump(u0) + bump(u1)) * h;
            table.push(acc);
        }
        let total = *table.last().unwrap();
        for v in &mut table {
            *v /= total;
        }
        StripProfile {
            k: self.k,
            eta: self.eta,
            step_table: table,
        }
    }
}

/// Renormalized smooth strip profiles p_k on the circle, with
/// sum_k p_k(x)^2 = 1 pointwise.
#[derive(Clone, Debug)]
pub struct StripProfile {
    k: usize,
    eta: f64,
    step_table: Vec<f64>,
}

impl StripProfile {
    pub fn strips(&self) -> usize {
        self.k
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Smoothed step: 0 below -eta, 1 above +eta, C-infinity ramp between.
    fn smooth_step(&self, x: f64) -> f64 {
        let t = x / self.eta;
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let pos = (t + 1.0) / 2.0 * (self.step_table.len() - 1) as f64;
        let i = (pos.floor() as usize).min(self.step_table.len() - 2);
        let frac = pos - i as f64;
        self.step_table[i] * (1.0 - frac) + self.step_table[i + 1] * frac
    }

    /// Signed circular displacement of x from a, in [-1/2, 1/2).
    fn circ(x: f64, a: f64) -> f64 {
        let d = (x - a).rem_euclid(1.0);
        if d >= 0.5 {
            d - 1.0
        } else {
            d
        }
    }

    /// Un-normalized window for strip k: anchored at the strip center with
    /// half-width 1/(2K), rising across k/K and falling across (k+1)/K.
    /// The circular-distance wrap point sits diametrically opposite the
    /// center, where both steps saturate, so the window is globally smooth.
    /// Windows tile the circle: sum_k raw = 1.
    pub fn raw(&self, k: usize, x: f64) -> f64 {
        let kf = self.k as f64;
        let half = 1.0 / (2.0 * kf);
        let center = (k as f64 + 0.5) / kf;
        let u = Self::circ(x, center);
        self.smooth_step(u + half) - self.smooth_step(u - half)
    }

    /// Renormalized profile value p_k(x), satisfying sum_k p_k(x)^2 = 1.
    pub fn value(&self, k: usize, x: f64) -> f64 {
        let total: f64 = (0..self.k).map(|j| self.raw(j, x).powi(2)).sum();
        self.raw(k, x) / total.sqrt()
    }

    /// All K profile values at x, renormalized in one pass.
    pub fn values(&self, x: f64) -> Vec<f64> {
        let raws: Vec<f64> = (0..self.k).map(|j| self.raw(j, x)).collect();
        let total: f64 = raws.iter().map(|r| r * r).sum();
        let scale = 1.0 / total.sqrt();
        raws.into_iter().map(|r| r * scale).collect()
    }

    /// Support test: p_k vanishes outside [k/K - eta, (k+1)/K + eta].
    pub fn in_support(&self, k: usize, x: f64) -> bool {
        self.raw(k, x) > 0.0
    }

    /// The strip whose core interval [k/K, (k+1)/K) contains x.
    pub fn core_strip(&self, x: f64) -> usize {
        let x = x.rem_euclid(1.0);
        ((x * self.k as f64).floor() as usize).min(self.k - 1)
    }
}

/// Diagonal quantum partition from strip profiles sampled at x = j/N.
pub fn build_strip_partition(n: usize, spec: &StripPartitionSpec) -> Result<QuantumPartition> {
    let profile = spec.profile();
    let mut diags: Vec<Vec<C64>> = vec![Vec::with_capacity(n); spec.k];
    for j in 0..n {
        let vals = profile.values(j as f64 / n as f64);
        for (k, v) in vals.iter().enumerate() {
            diags[k].push(C64::new(*v, 0.0));
        }
    }
    QuantumPartition::new(diags.into_iter().map(OperatorHandle::diagonal).collect())
}

/// Coarse-grained one-step Jacobian table over a strip alphabet. For a
/// linear hyperbolic map the unstable Jacobian of the inverse is the
/// constant e^{-lambda} wherever the transition occurs at all; transitions
/// never observed on the sampling grid get the penalty value e^{-Lambda}.
#[derive(Clone, Debug)]
pub struct JacobianTable {
    k: usize,
    j1: Vec<f64>,
    realizable: Vec<bool>,
    lambda: f64,
    lambda_penalty: f64,
    resolution: usize,
}

impl JacobianTable {
    /// Builds a table directly from a realizability matrix (row-major K x K).
    pub fn from_realizability(
        k: usize,
        realizable: Vec<bool>,
        lambda: f64,
        lambda_penalty: f64,
        resolution: usize,
    ) -> Result<Self> {
        if realizable.len() != k * k {
            return Err(Error::DimMismatch {
                context: "realizability table".into(),
                expected: k * k,
                got: realizable.len(),
            });
        }
        if !(lambda_penalty > 0.0) {
            return Err(Error::BadParameter {
                name: "Lambda",
                reason: format!("penalty exponent {lambda_penalty} must be positive"),
            });
        }
        let j1 = realizable
            .iter()
            .map(|&r| {
                if r {
                    (-lambda).exp()
                } else {
                    (-lambda_penalty).exp()
                }
            })
            .collect();
        Ok(JacobianTable {
            k,
            j1,
            realizable,
            lambda,
            lambda_penalty,
            resolution,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_penalty(&self) -> f64 {
        self.lambda_penalty
    }

    /// Sampling grid used to detect transitions (points per axis).
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// One-step value J1(e0, e1).
    pub fn j1(&self, e0: usize, e1: usize) -> f64 {
        self.j1[e0 * self.k + e1]
    }

    pub fn is_realizable_step(&self, e0: usize, e1: usize) -> bool {
        self.realizable[e0 * self.k + e1]
    }

    /// log J1(e0, e1): -lambda or -Lambda without roundoff.
    pub fn log_j1(&self, e0: usize, e1: usize) -> f64 {
        if self.is_realizable_step(e0, e1) {
            -self.lambda
        } else {
            -self.lambda_penalty
        }
    }

    /// n-step product J_n(word) = prod of consecutive one-step values; the
    /// empty product (single-letter word) is 1.
    pub fn word_jacobian(&self, word: &[usize]) -> f64 {
        self.log_word_jacobian(word).exp()
    }

    pub fn log_word_jacobian(&self, word: &[usize]) -> f64 {
        word.windows(2).map(|w| self.log_j1(w[0], w[1])).sum()
    }

    /// Whether every step of the word was seen classically.
    pub fn word_realizable(&self, word: &[usize]) -> bool {
        word.windows(2).all(|w| self.is_realizable_step(w[0], w[1]))
    }

    /// Row-major CSV (one row per e0), float64 at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for e0 in 0..self.k {
            let row: Vec<String> = (0..self.k)
                .map(|e1| format!("{:.17e}", self.j1(e0, e1)))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scans a resolution x resolution grid of torus points, marking transition
/// (e0, e1) realizable when some sample lies in the support of strip e0 and
/// lands in the support of strip e1.
pub fn coarse_jacobian_table(
    map: &ClassicalCatMap,
    spec: &StripPartitionSpec,
    lambda_penalty: f64,
    resolution: usize,
) -> Result<JacobianTable> {
    if resolution < 256 {
        return Err(Error::BadParameter {
            name: "resolution",
            reason: format!("{resolution} samples per axis, need at least 256"),
        });
    }
    let profile = spec.profile();
    let k = spec.k;
    let mut realizable = vec![false; k * k];

    // Strip membership depends only on the x coordinate; precompute the
    // support sets per column of the grid.
    let in_strips = |x: f64| -> Vec<usize> {
        (0..k).filter(|&s| profile.in_support(s, x)).collect()
    };
    let step = 1.0 / resolution as f64;
    for i in 0..resolution {
        let x = (i as f64 + 0.5) * step;
        let sources = in_strips(x);
        if sources.is_empty() {
            continue;
        }
        for j in 0..resolution {
            let y = (j as f64 + 0.5) * step;
            let image = map.step([x, y]);
            for &e1 in &in_strips(image[0]) {
                for &e0 in &sources {
                    realizable[e0 * k + e1] = true;
                }
            }
        }
    }
    JacobianTable::from_realizability(k, realizable, map.lambda(), lambda_penalty, resolution)
}
