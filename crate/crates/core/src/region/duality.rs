//! Support-function check of achievability: `lambda o (1 - rho)` can be
//! served iff for every direction `w >= 0`,
//! `sum_l w_l d_l <= E[max_l w_l min(c_l, a_l)]`. A direction violating the
//! inequality proves infeasibility; not finding one is evidence only.

use super::lp::GeneralRegionInstance;
use crate::error::Result;
use crate::rng::{RandomStream, StreamPurpose};

const VIOLATION_TOL: f64 = 1e-9;
/// Cap on the number of lattice directions on the simplex.
const GRID_BUDGET: usize = 5_000;
pub const RANDOM_DIRECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    /// Most violating direction found, if any violation exceeds the tolerance.
    pub violating: Option<Vec<f64>>,
    /// `max_w (sum_l w_l d_l - E[max_l w_l v_l])` over tested directions.
    pub max_violation: f64,
    pub directions: usize,
}

impl DualityReport {
    pub fn proves_infeasible(&self) -> bool {
        self.violating.is_some()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All compositions of `res` into `n` parts, scaled to the simplex.
fn lattice(n: usize, res: usize, out: &mut Vec<Vec<f64>>) {
    fn rec(n: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n, left - c, res, cur, out);
            cur.pop();
        }
    }
    rec(n, res, res, &mut Vec::with_capacity(n), out);
}

/// Evaluates the support-function inequality on a lattice over the simplex
/// plus uniformly random simplex directions drawn from `seed`.
pub fn duality_oracle(instance: &GeneralRegionInstance, seed: u64) -> Result<DualityReport> {
    instance.validate()?;
    let n = instance.links();
    let demand = instance.demand();

    // Joint support flattened to (probability, deliverable vector).
    let mut points: Vec<(f64, Vec<f64>)> = Vec::new();
    for (a, pa) in &instance.arrivals {
        for (c, pc) in &instance.channels {
            let p = pa * pc;
            if p > 0.0 {
                points.push((p, a.iter().zip(c).map(|(&a, &c)| f64::from(a.min(c))).collect()));
            }
        }
    }

    let violation = |w: &[f64]| -> f64 {
        let need: f64 = w.iter().zip(&demand).map(|(w, d)| w * d).sum();
        let supply: f64 = points
            .iter()
            .map(|(p, v)| p * w.iter().zip(v).map(|(w, v)| w * v).fold(0.0, f64::max))
            .sum();
        need - supply
    };

    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut res = 1;
    while res < 400 && binomial(res + 1 + n - 1, n - 1) <= GRID_BUDGET as f64 {
        res += 1;
    }
    lattice(n, res, &mut directions);
    let mut rng = RandomStream::new(seed, StreamPurpose::Verification, 0);
    for _ in 0..RANDOM_DIRECTIONS {
        let e: Vec<f64> = (0..n).map(|_| rng.exp1()).collect();
        let s: f64 = e.iter().sum();
        directions.push(e.into_iter().map(|x| x / s).collect());
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_w = None;
    for w in &directions {
        let v = violation(w);
        if v > best {
            best = v;
            best_w = Some(w.clone());
        }
    }
    Ok(DualityReport {
        violating: if best > VIOLATION_TOL { best_w } else { None },
        max_violation: best,
        directions: directions.len(),
    })
}
