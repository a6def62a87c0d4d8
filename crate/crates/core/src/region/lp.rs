use std::collections::BTreeMap;

use super::simplex::maximize;
use crate::error::{Error, Result};

pub const MAX_LINKS: usize = 6;
pub const MAX_JOINT_SUPPORT: usize = 10_000;
/// Largest dense tableau (entries) the solver will allocate.
const MAX_TABLEAU: usize = 25_000_000;
const PROB_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-9;
const SLACK_TOL: f64 = 1e-9;

/// Finite-support arrival and channel distributions (independent of each
/// other) together with per-link rates and drop fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralRegionInstance {
    pub arrivals: Vec<(Vec<u32>, f64)>,
    pub channels: Vec<(Vec<u32>, f64)>,
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Probability vector of product Bernoulli draws over `{0, 1}^n`.
fn product_bernoulli(probs: &[f64], value_on: u32) -> Vec<(Vec<u32>, f64)> {
    let n = probs.len();
    (0..1u32 << n)
        .map(|mask| {
            let mut v = vec![0; n];
            let mut p = 1.0;
            for (l, &q) in probs.iter().enumerate() {
                if mask >> l & 1 == 1 {
                    v[l] = value_on;
                    p *= q;
                } else {
                    p *= 1.0 - q;
                }
            }
            (v, p)
        })
        .collect()
}

impl GeneralRegionInstance {
    /// Independent Bernoulli(`lambda`) arrivals and ON-OFF(`p`) unit channels.
    pub fn symmetric_bernoulli_on_off(n: usize, lambda: f64, p: f64, rho: f64) -> Self {
        GeneralRegionInstance {
            arrivals: product_bernoulli(&vec![lambda; n], 1),
            channels: product_bernoulli(&vec![p; n], 1),
            lambda: vec![lambda; n],
            rho: vec![rho; n],
        }
    }

    pub fn links(&self) -> usize {
        self.lambda.len()
    }

    /// Checks shapes, probabilities, marginal means and the size of the
    /// joint support (zero-probability points do not count).
    pub fn validate(&self) -> Result<()> {
        let n = self.links();
        if n == 0 {
            return Err(Error::param("lambda", "at least one link is required"));
        }
        if n > MAX_LINKS {
            return Err(Error::InstanceTooLarge(format!("{n} links (limit {MAX_LINKS})")));
        }
        if self.rho.len() != n {
            return Err(Error::param("rho", format!("expected {n} values, got {}", self.rho.len())));
        }
        if let Some(r) = self.rho.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::param("rho", format!("{r} outside [0, 1)")));
        }
        let check = |name: &'static str, support: &[(Vec<u32>, f64)]| -> Result<usize> {
            if support.is_empty() {
                return Err(Error::param(name, "empty support"));
            }
            let mut total = 0.0;
            for (v, p) in support {
                if v.len() != n {
                    return Err(Error::param(name, format!("support point has {} entries, expected {n}", v.len())));
                }
                if !(p.is_finite() && *p >= 0.0) {
                    return Err(Error::param(name, format!("negative or non-finite probability {p}")));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::param(name, format!("probabilities sum to {total}")));
            }
            Ok(support.iter().filter(|(_, p)| *p > 0.0).count())
        };
        let arrivals = check("arrivals", &self.arrivals)?;
        let channels = check("channels", &self.channels)?;
        for l in 0..n {
            let mean: f64 = self.arrivals.iter().map(|(a, p)| p * f64::from(a[l])).sum();
            if (mean - self.lambda[l]).abs() > MEAN_TOL {
                return Err(Error::param(
                    "lambda",
                    format!("link {l}: lambda = {} but the arrival distribution has mean {mean}", self.lambda[l]),
                ));
            }
        }
        let joint = arrivals * channels;
        if joint > MAX_JOINT_SUPPORT {
            return Err(Error::InstanceTooLarge(format!("joint support {joint} (limit {MAX_JOINT_SUPPORT})")));
        }
        Ok(())
    }

    /// Parses the instance text format:
    ///
    /// ```text
    /// lambda = 0.5
    /// rho = 0
    /// arrival = 0 @ 0.5
    /// arrival = 1 @ 0.5
    /// channel = 1 @ 1
    /// ```
    ///
    /// `lambda` and `rho` list one value per link (comma-separated).
    /// `arrival` and `channel` lines repeat, one per support point, as a
    /// comma-separated vector followed by `@` and its probability.
    pub fn from_text(text: &str) -> Result<Self> {
        fn floats(v: &str, name: &'static str) -> Result<Vec<f64>> {
            v.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::param(name, format!("`{x}`: {e}"))))
                .collect()
        }
        fn point(v: &str, name: &'static str) -> Result<(Vec<u32>, f64)> {
            let (vec, prob) = v
                .split_once('@')
                .ok_or_else(|| Error::param(name, format!("expected `v1,v2,... @ probability`, got `{v}`")))?;
            let values = vec
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|e| Error::param(name, format!("`{x}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let p = prob.trim().parse::<f64>().map_err(|e| Error::param(name, format!("`{prob}`: {e}")))?;
            Ok((values, p))
        }
        let mut inst = GeneralRegionInstance {
            arrivals: Vec::new(),
            channels: Vec::new(),
            lambda: Vec::new(),
            rho: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::param("instance", format!("line {}: expected `key = value`", i + 1)))?;
            match k.trim() {
                "lambda" => inst.lambda = floats(v, "lambda")?,
                "rho" => inst.rho = floats(v, "rho")?,
                "arrival" => inst.arrivals.push(point(v, "arrival")?),
                "channel" => inst.channels.push(point(v, "channel")?),
                other => return Err(Error::param("instance", format!("line {}: unknown key `{other}`", i + 1))),
            }
        }
        inst.validate()?;
        Ok(inst)
    }

    /// Required per-link service `lambda_l (1 - rho_l)`.
    pub fn demand(&self) -> Vec<f64> {
        self.lambda.iter().zip(&self.rho).map(|(l, r)| l * (1.0 - r)).collect()
    }
}

/// Schedule probabilities at one joint support point `(arrivals[ai], channels[ci])`.
/// `schedule[l]` serves link `l`; the last entry is the idle schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessEntry {
    pub arrival_index: usize,
    pub channel_index: usize,
    pub schedule: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpReport {
    /// Demand plus requested slack is met with `>=`.
    pub feasible: bool,
    /// Demand plus slack is met with margin beyond the tolerance.
    pub strict: bool,
    /// Largest common margin `delta*` by which every link's service can
    /// exceed its demand (plus requested slack).
    pub optimal_slack: f64,
    /// Per-link service delivered by the witness.
    pub service: Vec<f64>,
    /// Present when `feasible`.
    pub witness: Option<Vec<WitnessEntry>>,
    pub classes: usize,
    pub iterations: usize,
}

/// Solves the stationary-randomized-policy feasibility problem.
///
/// Joint points whose deliverable vectors `min(c_l, a_l)` coincide are
/// interchangeable, so they are merged before solving; the witness is
/// expanded back to every original point. The LP maximizes a common margin
/// `t` with `sum_s alpha(k, s) <= 1` per class and
/// `sum_k P_k alpha(k, l) v_k[l] >= demand_l + slack + t` per link, shifted
/// by the largest demand so the origin is a feasible start.
pub fn lp_feasibility(instance: &GeneralRegionInstance, slack: f64) -> Result<LpReport> {
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(Error::param("slack", format!("must be >= 0, got {slack}")));
    }
    instance.validate()?;
    let inst = instance;
    let n = inst.links();
    let need: Vec<f64> = inst.demand().iter().map(|d| d + slack).collect();

    let mut class_of: Vec<Vec<usize>> = vec![vec![usize::MAX; inst.channels.len()]; inst.arrivals.len()];
    let mut classes: BTreeMap<Vec<u32>, (usize, f64)> = BTreeMap::new();
    for (ai, (a, pa)) in inst.arrivals.iter().enumerate() {
        for (ci, (c, pc)) in inst.channels.iter().enumerate() {
            let v: Vec<u32> = a.iter().zip(c).map(|(&a, &c)| a.min(c)).collect();
            if pa * pc == 0.0 || v.iter().all(|&x| x == 0) {
                continue;
            }
            let next = classes.len();
            let entry = classes.entry(v).or_insert((next, 0.0));
            entry.1 += pa * pc;
            class_of[ai][ci] = entry.0;
        }
    }
    let mut ordered: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 0.0); classes.len()];
    for (v, (k, p)) in classes {
        ordered[k] = (v, p);
    }

    // Variables: alpha(k, l) for v_k[l] > 0, then the shifted margin t'.
    let mut vars: Vec<(usize, usize)> = Vec::new();
    for (k, (v, _)) in ordered.iter().enumerate() {
        for l in 0..n {
            if v[l] > 0 {
                vars.push((k, l));
            }
        }
    }
    let nv = vars.len() + 1;
    let rows = ordered.len() + n;
    if rows * (nv + rows + 1) > MAX_TABLEAU {
        return Err(Error::InstanceTooLarge(format!("{rows} x {nv} tableau after merging")));
    }
    let shift = need.iter().copied().fold(0.0, f64::max);
    let mut a = vec![vec![0.0; nv]; rows];
    let mut b = vec![0.0; rows];
    for (j, &(k, l)) in vars.iter().enumerate() {
        a[k][j] = 1.0;
        let (v, p) = &ordered[k];
        a[ordered.len() + l][j] = -p * f64::from(v[l]);
    }
    b[..ordered.len()].fill(1.0);
    for l in 0..n {
        a[ordered.len() + l][nv - 1] = 1.0;
        b[ordered.len() + l] = shift - need[l];
    }
    let mut c = vec![0.0; nv];
    c[nv - 1] = 1.0;

    let sol = maximize(&c, &a, &b).map_err(|e| Error::Contract(format!("simplex failed: {e}")))?;
    let optimal_slack = sol.x[nv - 1] - shift;

    let mut service = vec![0.0; n];
    let mut alpha = vec![vec![0.0; n]; ordered.len()];
    for (j, &(k, l)) in vars.iter().enumerate() {
        let x = sol.x[j].clamp(0.0, 1.0);
        alpha[k][l] = x;
        service[l] += ordered[k].1 * f64::from(ordered[k].0[l]) * x;
    }

    let feasible = optimal_slack >= -SLACK_TOL;
    let witness = feasible.then(|| {
        let mut entries = Vec::with_capacity(inst.arrivals.len() * inst.channels.len());
        for (ai, row) in class_of.iter().enumerate() {
            for (ci, &k) in row.iter().enumerate() {
                let mut schedule = vec![0.0; n + 1];
                if k != usize::MAX {
                    schedule[..n].copy_from_slice(&alpha[k]);
                }
                let used: f64 = schedule[..n].iter().sum();
                schedule[n] = (1.0 - used).max(0.0);
                entries.push(WitnessEntry {
                    arrival_index: ai,
                    channel_index: ci,
                    schedule,
                });
            }
        }
        entries
    });

    Ok(LpReport {
        feasible,
        strict: optimal_slack > SLACK_TOL,
        optimal_slack,
        service,
        witness,
        classes: ordered.len(),
        iterations: sol.iterations,
    })
}
