//! Classical cylinder measures the quantum word tables are compared to.
//!
//! A classical measure assigns to each symbol word the measure of the
//! phase-space points whose position itineraries spell it. Lebesgue is
//! grid-sampled; a periodic orbit is sampled exactly. Deep tables never
//! materialize: itineraries are rank-compressed level by level, so only
//! the cylinders that actually carry mass are counted.

use crate::catmap::{ClassicalCatMap, JacobianTable};
use crate::error::{Error, Result};
use crate::eup::{entropy_of_masses, QuantumPartition};
use crate::hilbert::{OperatorHandle, StateVector};

use super::{
    checked_table_len, circ_gap, cylinder_measure, CylinderMeasure, WeightKind, WORD_TABLE_CAP,
};

/// Which classical measure to sample.
#[derive(Clone, Copy, Debug)]
pub enum ClassicalMeasureSpec {
    /// Uniform measure, sampled on a resolution x resolution midpoint grid.
    Lebesgue { resolution: usize },
    /// Uniform atoms on the periodic orbit through `point`; the period is
    /// detected by iteration, up to `max_period`.
    PeriodicOrbit {
        point: (f64, f64),
        max_period: usize,
    },
}

/// Entropies and step-transition frequencies of a classical itinerary
/// measure, for every depth up to the requested one.
#[derive(Clone, Debug)]
pub struct ClassicalCylinderStats {
    alphabet: usize,
    steps: usize,
    entropies: Vec<f64>,
    step_pairs: Vec<Vec<f64>>,
}

impl ClassicalCylinderStats {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Entropy of the depth-t cylinder distribution, t <= steps.
    pub fn entropy(&self, t: usize) -> f64 {
        self.entropies[t]
    }

    /// All entropies, index = depth in steps.
    pub fn entropies(&self) -> &[f64] {
        &self.entropies
    }

    /// K^2 frequency table of (letter_t, letter_{t+1}), indexed
    /// a + K b like the quantum pair marginal.
    pub fn step_pairs(&self, t: usize) -> &[f64] {
        &self.step_pairs[t]
    }
}

/// Position letter: which of the K vertical strips the point sits in.
fn strip_letter(q: f64, k: usize) -> usize {
    ((q.rem_euclid(1.0) * k as f64) as usize).min(k - 1)
}

/// Sample points and the weight each one carries.
fn sample_points(
    map: &ClassicalCatMap,
    spec: &ClassicalMeasureSpec,
) -> Result<(Vec<[f64; 2]>, f64)> {
    match *spec {
        ClassicalMeasureSpec::Lebesgue { resolution } => {
            if resolution == 0 {
                return Err(Error::BadParameter {
                    name: "resolution",
                    reason: "grid resolution must be positive".into(),
                });
            }
            let step = 1.0 / resolution as f64;
            let mut points = Vec::with_capacity(resolution * resolution);
            for i in 0..resolution {
                for j in 0..resolution {
                    points.push([(i as f64 + 0.5) * step, (j as f64 + 0.5) * step]);
                }
            }
            Ok((points, step * step))
        }
        ClassicalMeasureSpec::PeriodicOrbit { point, max_period } => {
            let start = [point.0.rem_euclid(1.0), point.1.rem_euclid(1.0)];
            let mut period = None;
            let mut x = start;
            for p in 1..=max_period {
                x = map.step(x);
                if circ_gap(x[0], start[0]).max(circ_gap(x[1], start[1])) <= 1e-9 {
                    period = Some(p);
                    break;
                }
            }
            let Some(period) = period else {
                return Err(Error::BadParameter {
                    name: "point",
                    reason: format!(
                        "({}, {}) does not return within {max_period} steps",
                        point.0, point.1
                    ),
                });
            };
            let mut points = Vec::with_capacity(period);
            let mut x = start;
            for _ in 0..period {
                points.push(x);
                x = map.step(x);
            }
            Ok((points, 1.0 / period as f64))
        }
    }
}

/// Dense renumbering of itinerary keys: per-sample ranks plus the count
/// of samples in each occupied cylinder.
fn compress(keys: &[u64]) -> (Vec<u32>, Vec<u64>) {
    let mut sorted = keys.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut counts = vec![0u64; sorted.len()];
    let ranks = keys
        .iter()
        .map(|key| {
            let r = sorted.binary_search(key).unwrap();
            counts[r] += 1;
            r as u32
        })
        .collect();
    (ranks, counts)
}

fn count_entropy(counts: &[u64], weight: f64) -> f64 {
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 * weight).collect();
    entropy_of_masses(&masses)
}

/// Walks every sample point `n` steps, rank-compressing itineraries at
/// each depth. Works at depths where the dense K^{n+1} table would not
/// fit, since only occupied cylinders are ever distinguished.
pub fn classical_cylinder_stats(
    map: &ClassicalCatMap,
    alphabet: usize,
    n: usize,
    spec: &ClassicalMeasureSpec,
) -> Result<ClassicalCylinderStats> {
    if alphabet == 0 {
        return Err(Error::EmptyPartition);
    }
    let (mut points, weight) = sample_points(map, spec)?;
    let k = alphabet;

    let mut letters: Vec<u32> = points.iter().map(|p| strip_letter(p[0], k) as u32).collect();
    let keys: Vec<u64> = letters.iter().map(|&l| l as u64).collect();
    let (mut ranks, counts) = compress(&keys);
    let mut entropies = vec![count_entropy(&counts, weight)];
    let mut step_pairs = Vec::with_capacity(n);

    for _ in 0..n {
        let mut pairs = vec![0.0f64; k * k];
        let mut keys = vec![0u64; points.len()];
        for (i, p) in points.iter_mut().enumerate() {
            *p = map.step(*p);
            let next = strip_letter(p[0], k) as u32;
            pairs[letters[i] as usize + k * next as usize] += weight;
            keys[i] = ranks[i] as u64 * k as u64 + next as u64;
            letters[i] = next;
        }
        let (new_ranks, counts) = compress(&keys);
        ranks = new_ranks;
        entropies.push(count_entropy(&counts, weight));
        step_pairs.push(pairs);
    }

    Ok(ClassicalCylinderStats {
        alphabet: k,
        steps: n,
        entropies,
        step_pairs,
    })
}

/// Dense classical word table, for depths where it fits. Same sampling as
/// the stats path; the result slots into every quantum table consumer.
pub fn classical_cylinder_table(
    map: &ClassicalCatMap,
    alphabet: usize,
    n: usize,
    spec: &ClassicalMeasureSpec,
) -> Result<CylinderMeasure> {
    if alphabet == 0 {
        return Err(Error::EmptyPartition);
    }
    let k = alphabet;
    let len = checked_table_len(k, n + 1, WORD_TABLE_CAP)?;
    let (points, weight) = sample_points(map, spec)?;

    let mut masses = vec![0.0f64; len];
    for start in points {
        let mut p = start;
        let mut index = strip_letter(p[0], k);
        let mut digit = 1;
        for _ in 0..n {
            p = map.step(p);
            digit *= k;
            index += strip_letter(p[0], k) * digit;
        }
        masses[index] += weight;
    }
    Ok(CylinderMeasure {
        alphabet: k,
        steps: n,
        masses,
        eigen_residual: 0.0,
    })
}

/// Jacobian-weighted pressure of the depth-t classical distribution:
/// entropy plus one or two copies of the accumulated log-Jacobian mass,
/// mirroring the quantum alpha and beta pressures.
pub fn classical_pressure(
    stats: &ClassicalCylinderStats,
    t: usize,
    jac: &JacobianTable,
    kind: WeightKind,
) -> Result<f64> {
    if t > stats.steps {
        return Err(Error::BadParameter {
            name: "t",
            reason: format!("depth {t} exceeds the stats depth {}", stats.steps),
        });
    }
    if jac.alphabet() != stats.alphabet {
        return Err(Error::DimMismatch {
            context: "jacobian alphabet".into(),
            expected: stats.alphabet,
            got: jac.alphabet(),
        });
    }
    let k = stats.alphabet;
    let mut mass_log_j = 0.0;
    for step in 0..t {
        for a in 0..k {
            for b in 0..k {
                mass_log_j += stats.step_pairs[step][a + k * b] * jac.log_j1(a, b);
            }
        }
    }
    let factor = match kind {
        WeightKind::Alpha => 1.0,
        WeightKind::Beta => 2.0,
    };
    Ok(stats.entropies[t] + factor * mass_log_j)
}

/// Where an entropy rate is measured: a quantum state's word table or a
/// sampled classical measure.
pub enum EntropySource<'a> {
    Quantum {
        psi: &'a StateVector,
        u: &'a OperatorHandle,
        partition: &'a QuantumPartition,
    },
    Classical {
        map: &'a ClassicalCatMap,
        spec: &'a ClassicalMeasureSpec,
    },
}

/// Finite-depth entropy rate with its coarse Ruelle comparison.
#[derive(Clone, Debug)]
pub struct EntropyRateReport {
    pub n_o: usize,
    /// Entropy of the depth-n_o table.
    pub entropy: f64,
    /// entropy / n_o.
    pub rate: f64,
    /// h_{n_o} - h_{n_o - 1}, the stabilized per-step growth.
    pub increment: f64,
    /// -sum over letter pairs of mu([e0 e1]) log J_1(e0, e1).
    pub jacobian_term: f64,
    /// Whether the per-step increment stays under the Jacobian term plus
    /// slack. The increment is compared rather than the rate: the rate
    /// carries the depth-0 entropy divided by n_o, an O(log K / n_o)
    /// offset that has nothing to do with the expansion.
    pub ruelle_ok: bool,
}

/// Entropy rate of a quantum or classical cylinder measure at depth n_o,
/// with the one-step Jacobian average it is compared against.
pub fn entropy_rate(
    source: &EntropySource,
    n_o: usize,
    jac: &JacobianTable,
) -> Result<EntropyRateReport> {
    if n_o == 0 {
        return Err(Error::BadParameter {
            name: "n_o",
            reason: "the rate needs at least one step".into(),
        });
    }
    let k = jac.alphabet();
    let (entropy, previous, pair) = match source {
        EntropySource::Quantum { psi, u, partition } => {
            if partition.len() != k {
                return Err(Error::DimMismatch {
                    context: "jacobian alphabet".into(),
                    expected: partition.len(),
                    got: k,
                });
            }
            let long = cylinder_measure(psi, n_o, u, partition)?;
            let short = cylinder_measure(psi, n_o - 1, u, partition)?;
            let pair = long.pair_table()?;
            (long.entropy(), short.entropy(), pair)
        }
        EntropySource::Classical { map, spec } => {
            let stats = classical_cylinder_stats(map, k, n_o, spec)?;
            (
                stats.entropies[n_o],
                stats.entropies[n_o - 1],
                stats.step_pairs[0].clone(),
            )
        }
    };

    let mut jacobian_term = 0.0;
    for a in 0..k {
        for b in 0..k {
            jacobian_term -= pair[a + k * b] * jac.log_j1(a, b);
        }
    }
    let increment = entropy - previous;
    Ok(EntropyRateReport {
        n_o,
        entropy,
        rate: entropy / n_o as f64,
        increment,
        jacobian_term,
        ruelle_ok: increment <= jacobian_term + 0.05,
    })
}
