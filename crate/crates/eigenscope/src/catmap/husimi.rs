//! Phase-space densities from coherent-state overlaps, on a regular grid
//! over the unit torus.

use rayon::prelude::*;

use crate::catmap::coherent_state;
use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::linalg::vdot;

/// |<coherent(q, p), psi>|^2 sampled on a g x g grid, q = g1/g, p = g2/g.
#[derive(Clone, Debug)]
pub struct HusimiGrid {
    g: usize,
    /// Row-major: values[g1 * g + g2].
    values: Vec<f64>,
}

impl HusimiGrid {
    pub fn grid_size(&self) -> usize {
        self.g
    }

    pub fn value(&self, g1: usize, g2: usize) -> f64 {
        self.values[g1 * self.g + g2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Fraction of total grid mass within torus distance `radius` of
    /// `center` = (q0, p0).
    pub fn mass_fraction_in_disc(&self, center: (f64, f64), radius: f64) -> f64 {
        let torus_dist = |a: f64, b: f64| -> f64 {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d)
        };
        let g = self.g as f64;
        let mut inside = 0.0;
        for g1 in 0..self.g {
            let q = g1 as f64 / g;
            let dq = torus_dist(q, center.0);
            if dq > radius {
                continue;
            }
            for g2 in 0..self.g {
                let p = g2 as f64 / g;
                let dp = torus_dist(p, center.1);
                if dq * dq + dp * dp <= radius * radius {
                    inside += self.value(g1, g2);
                }
            }
        }
        inside / self.total()
    }

    /// CSV rows `q,p,value` at full float64 precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,p,value\n");
        let g = self.g as f64;
        for g1 in 0..self.g {
            for g2 in 0..self.g {
                out.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e}\n",
                    g1 as f64 / g,
                    g2 as f64 / g,
                    self.value(g1, g2)
                ));
            }
        }
        out
    }
}

/// Samples the coherent-state overlap density of `psi` on a g x g grid.
/// Rows are computed in parallel; the output is independent of thread count.
pub fn husimi(psi: &StateVector, g: usize) -> Result<HusimiGrid> {
    if g < 8 {
        return Err(Error::BadParameter {
            name: "grid",
            reason: format!("{g} points per axis, need at least 8"),
        });
    }
    let n = psi.dim();
    let gf = g as f64;
    let rows: Vec<Vec<f64>> = (0..g)
        .into_par_iter()
        .map(|g1| {
            let q = g1 as f64 / gf;
            (0..g)
                .map(|g2| {
                    let p = g2 as f64 / gf;
                    let cs = coherent_state(n, (q, p), 1.0)
                        .expect("coherent state on a valid grid point");
                    vdot(cs.amps(), psi.amps()).norm_sqr()
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(g * g);
    for row in rows {
        values.extend(row);
    }
    Ok(HusimiGrid { g, values })
}
