//! Scarred quasimodes: phase-locked orbit averages of a coherent state.
//!
//! Averaging U^o phi against a phase comb e^{-i theta o} over a centered
//! time window concentrates the state near the periodic point the packet
//! sits on. The two dropped boundary terms bound the quasimode defect by
//! 2 over the raw norm of the average, an identity the constructor
//! re-checks on every build.

use crate::catmap::{coherent_state, ClassicalCatMap};
use crate::error::{Error, Result};
use crate::hilbert::{OperatorHandle, StateVector};
use crate::linalg::{vdot, vnorm, C64};

use super::circ_gap;

/// Raw-norm floor below which the average is considered degenerate.
const DEGENERATE_NORM: f64 = 1e-8;

/// A normalized orbit average with its quasimode diagnostics.
#[derive(Clone, Debug)]
pub struct ScarQuasimode {
    pub state: StateVector,
    /// The comb phase the window was locked to.
    pub theta: f64,
    /// Number of averaged time steps.
    pub window: usize,
    /// ||U psi - e^{i theta} psi||.
    pub defect: f64,
    /// Norm of the average before normalization; the defect is bounded by
    /// 2 / raw_norm.
    pub raw_norm: f64,
}

fn check_center(map: &ClassicalCatMap, center: (f64, f64)) -> Result<()> {
    let img = map.step([center.0, center.1]);
    let gap = circ_gap(img[0], center.0).max(circ_gap(img[1], center.1));
    if gap > 1e-9 {
        return Err(Error::BadParameter {
            name: "center",
            reason: format!(
                "({}, {}) moves by {gap:.2e} under the map, not a fixed point",
                center.0, center.1
            ),
        });
    }
    Ok(())
}

/// Time translates U^o phi for the centered window, ordered by offset.
fn window_terms(
    u: &OperatorHandle,
    map: &ClassicalCatMap,
    window: usize,
    center: (f64, f64),
) -> Result<(Vec<i64>, Vec<Vec<C64>>)> {
    if window == 0 {
        return Err(Error::BadParameter {
            name: "window",
            reason: "the average needs at least one time step".into(),
        });
    }
    check_center(map, center)?;
    let phi = coherent_state(u.dim(), center, 1.0)?;

    let lo = -((window / 2) as i64);
    let hi = lo + window as i64 - 1;
    let offsets: Vec<i64> = (lo..=hi).collect();
    let mut terms: Vec<Vec<C64>> = vec![Vec::new(); window];
    let at = |o: i64| (o - lo) as usize;

    terms[at(0)] = phi.amps().to_vec();
    let mut v = phi.amps().to_vec();
    for o in 1..=hi {
        v = u.apply(&v)?;
        terms[at(o)] = v.clone();
    }
    v = phi.amps().to_vec();
    for o in (lo..0).rev() {
        v = u.apply_adjoint(&v)?;
        terms[at(o)] = v.clone();
    }
    Ok((offsets, terms))
}

/// Builds the quasimode sum_o e^{-i theta o} U^o phi over the centered
/// window, normalized, with its defect against the phase theta.
pub fn scar_quasimode(
    u: &OperatorHandle,
    map: &ClassicalCatMap,
    window: usize,
    theta: f64,
    center: (f64, f64),
) -> Result<ScarQuasimode> {
    let (offsets, terms) = window_terms(u, map, window, center)?;
    let dim = u.dim();

    let mut sum = vec![C64::new(0.0, 0.0); dim];
    for (&o, term) in offsets.iter().zip(&terms) {
        let phase = C64::from_polar(1.0, -theta * o as f64);
        for (s, &x) in sum.iter_mut().zip(term) {
            *s += phase * x;
        }
    }
    let raw_norm = vnorm(&sum);
    if raw_norm < DEGENERATE_NORM {
        return Err(Error::BadParameter {
            name: "theta",
            reason: format!(
                "window average vanished (norm {raw_norm:.2e}); pick a different phase"
            ),
        });
    }
    let state = StateVector::normalized(sum)?;

    let u_state = u.apply(state.amps())?;
    let phase = C64::from_polar(1.0, theta);
    let defect = u_state
        .iter()
        .zip(state.amps())
        .map(|(a, &b)| (a - phase * b).norm_sqr())
        .sum::<f64>()
        .sqrt();

    Ok(ScarQuasimode {
        state,
        theta,
        window,
        defect,
        raw_norm,
    })
}

/// Scans `grid` evenly spaced phases and returns the one maximizing the
/// raw norm of the window average, with that norm. The norm is evaluated
/// through the window Gram matrix, so the propagator is applied only
/// `window` times no matter how fine the grid is.
pub fn tune_scar_phase(
    u: &OperatorHandle,
    map: &ClassicalCatMap,
    window: usize,
    center: (f64, f64),
    grid: usize,
) -> Result<(f64, f64)> {
    if grid == 0 {
        return Err(Error::BadParameter {
            name: "grid",
            reason: "phase grid needs at least one point".into(),
        });
    }
    let (offsets, terms) = window_terms(u, map, window, center)?;

    let w = terms.len();
    let mut gram = vec![C64::new(0.0, 0.0); w * w];
    for a in 0..w {
        for b in 0..w {
            gram[a * w + b] = vdot(&terms[a], &terms[b]);
        }
    }

    let mut best = (0.0f64, f64::NEG_INFINITY);
    for i in 0..grid {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / grid as f64;
        let mut s = C64::new(0.0, 0.0);
        for a in 0..w {
            for b in 0..w {
                let arg = theta * (offsets[a] - offsets[b]) as f64;
                s += C64::from_polar(1.0, arg) * gram[a * w + b];
            }
        }
        if s.re > best.1 {
            best = (theta, s.re);
        }
    }
    Ok((best.0, best.1.max(0.0).sqrt()))
}
