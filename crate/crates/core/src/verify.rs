//! Monte-Carlo checks that turn the closed-form race results, the
//! near-max-weight tail bound and the stability claim into runnable reports.
//! Every report carries sample counts and standard errors.

use crate::config::ScenarioConfig;
use crate::engine::{run_summary, RunSummary};
use crate::error::{Error, Result};
use crate::model::{lemma2_tail_bound, ContentionProfile, LinkObservation};
use crate::processes::{ArrivalKind, ChannelModel};
use crate::region::{membership_symmetric, symmetric_service_capacity, Membership, SymmetricRegionQuery};
use crate::rng::{mix64, RandomStream, StreamPurpose};
use crate::scheduler::{fcsma_select_continuous, fcsma_select_minislot, CompletionRule};
use crate::weight::WeightFunction;

/// Number of standard errors allowed between estimate and reference.
pub const Z_TOL: f64 = 4.0;
pub const MIN_SAMPLES: u64 = 100_000;

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eq8Link {
    pub link: usize,
    pub winner_freq: f64,
    /// Exact `r_l / Z`.
    pub winner_exact: f64,
    pub winner_se: f64,
    pub served_freq: f64,
    /// Exact service probability under the chosen completion rule.
    pub served_exact: f64,
    pub served_se: f64,
    /// Closed-form `(r_l / Z)(1 - 1/Z)`.
    pub served_closed_form: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eq8Report {
    pub samples: u64,
    pub rule: CompletionRule,
    pub z: f64,
    pub links: Vec<Eq8Link>,
    pub absorption_mean: f64,
    /// `1 / Z`.
    pub absorption_exact: f64,
    pub absorption_se: f64,
    /// Largest `|served_exact - served_closed_form|` over links.
    pub closed_form_gap: f64,
    pub max_winner_deviation: f64,
    pub pass: bool,
}

fn within(dev: f64, se: f64) -> bool {
    dev <= Z_TOL * se
}

/// Compares sampled race winners, deliveries and absorption times with the
/// exact race formulas and reports the gap to the closed-form approximation.
pub fn verify_eq8(observations: &[LinkObservation], f: WeightFunction, rule: CompletionRule, samples: u64, seed: u64) -> Result<Eq8Report> {
    if samples < MIN_SAMPLES {
        return Err(Error::param("samples", format!("need at least {MIN_SAMPLES}, got {samples}")));
    }
    let profile = ContentionProfile::new(observations, f)?;
    let deliverable: Vec<u32> = observations.iter().map(LinkObservation::deliverable).collect();
    let n = profile.len();
    let mut rng = RandomStream::new(seed, StreamPurpose::Verification, 1);
    let mut wins = vec![0u64; n];
    let mut served = vec![0u64; n];
    let mut t_sum = 0.0;
    for _ in 0..samples {
        let o = fcsma_select_continuous(&profile, &deliverable, &mut rng, rule);
        if let Some(w) = o.winner {
            wins[w] += 1;
            if o.served[w] > 0 {
                served[w] += 1;
            }
        }
        t_sum += o.absorption_time;
    }
    let completion = match rule {
        CompletionRule::Threshold => profile.completion_probability(),
        CompletionRule::Proportional => profile.expected_remaining_time(),
    };
    let nf = samples as f64;
    let links: Vec<Eq8Link> = (0..n)
        .map(|l| {
            let winner_exact = profile.grab_probability(l);
            let served_exact = if deliverable[l] > 0 { winner_exact * completion } else { 0.0 };
            Eq8Link {
                link: l,
                winner_freq: wins[l] as f64 / nf,
                winner_exact,
                winner_se: binomial_se(winner_exact, samples),
                served_freq: served[l] as f64 / nf,
                served_exact,
                served_se: binomial_se(served_exact, samples),
                served_closed_form: profile.selection_probability(l),
            }
        })
        .collect();
    let z = profile.z();
    let absorption_exact = 1.0 / z;
    let absorption_se = absorption_exact / nf.sqrt();
    let absorption_mean = t_sum / nf;
    let pass = links.iter().all(|k| {
        within((k.winner_freq - k.winner_exact).abs(), k.winner_se)
            && within((k.served_freq - k.served_exact).abs(), k.served_se)
    }) && within((absorption_mean - absorption_exact).abs(), absorption_se);
    Ok(Eq8Report {
        samples,
        rule,
        z,
        closed_form_gap: links.iter().map(|k| (k.served_exact - k.served_closed_form).abs()).fold(0.0, f64::max),
        max_winner_deviation: links.iter().map(|k| (k.winner_freq - k.winner_exact).abs()).fold(0.0, f64::max),
        links,
        absorption_mean,
        absorption_exact,
        absorption_se,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2State {
    pub weights: Vec<f64>,
    pub epsilon: f64,
    pub wstar: f64,
    pub bound: f64,
    pub tail_freq: f64,
    pub tail_se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub samples_per_state: u64,
    pub states: Vec<Lemma2State>,
    pub pass: bool,
}

/// Random weight vectors: `W*` uniform on `[wmin, wmax]` for one link, the
/// others uniform on `[0, W*]`.
pub fn sample_lemma2_states(n: usize, count: usize, wmin: f64, wmax: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RandomStream::new(seed, StreamPurpose::Verification, 2);
    (0..count)
        .map(|_| {
            let wstar = wmin + (wmax - wmin) * rng.uniform();
            let top = rng.index(n);
            (0..n)
                .map(|l| if l == top { wstar } else { wstar * rng.uniform() })
                .collect()
        })
        .collect()
}

/// For each state and each `epsilon`, estimates the probability that the
/// race picks a link with weight below `(1 - epsilon) W*` and compares it
/// with `N e^{-epsilon W*}`.
pub fn verify_lemma2(states: &[Vec<f64>], epsilons: &[f64], samples: u64, seed: u64) -> Result<Lemma2Report> {
    if samples < MIN_SAMPLES {
        return Err(Error::param("samples", format!("need at least {MIN_SAMPLES}, got {samples}")));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::param("epsilon", format!("{e} outside (0, 1)")));
    }
    let mut out = Vec::new();
    for (i, weights) in states.iter().enumerate() {
        let profile = ContentionProfile::from_weights(weights.clone())?;
        let deliverable = vec![1; weights.len()];
        for (j, &eps) in epsilons.iter().enumerate() {
            let cut = (1.0 - eps) * profile.wstar();
            let mut rng = RandomStream::new(mix64(seed ^ ((i as u64) << 16 | j as u64)), StreamPurpose::Verification, 3);
            let mut tail = 0u64;
            for _ in 0..samples {
                let o = fcsma_select_continuous(&profile, &deliverable, &mut rng, CompletionRule::Threshold);
                if o.winner.is_some_and(|w| weights[w] < cut) {
                    tail += 1;
                }
            }
            let freq = tail as f64 / samples as f64;
            let se = binomial_se(freq, samples);
            let bound = lemma2_tail_bound(weights.len(), eps, profile.wstar());
            out.push(Lemma2State {
                weights: weights.clone(),
                epsilon: eps,
                wstar: profile.wstar(),
                bound,
                tail_freq: freq,
                tail_se: se,
                pass: freq <= bound + Z_TOL * se,
            });
        }
    }
    Ok(Lemma2Report {
        samples_per_state: samples,
        pass: out.iter().all(|s| s.pass),
        states: out,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub minislots: u32,
    /// Total-variation distance to `r_l / Z`; the no-winner outcome counts
    /// as its own category.
    pub tv_distance: f64,
    /// Sampling noise scale of the estimate, `sqrt(N / samples)`.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub samples: u64,
    pub points: Vec<ConvergencePoint>,
}

pub fn verify_race_convergence(weights: &[f64], minislots: &[u32], samples: u64, seed: u64) -> Result<ConvergenceReport> {
    let profile = ContentionProfile::from_weights(weights.to_vec())?;
    let n = profile.len();
    let deliverable = vec![1; n];
    let points = minislots
        .iter()
        .map(|&m| {
            if m == 0 {
                return Err(Error::param("minislots", "must be >= 1"));
            }
            let mut rng = RandomStream::new(seed ^ u64::from(m), StreamPurpose::Verification, 4);
            let mut counts = vec![0u64; n + 1];
            for _ in 0..samples {
                let o = fcsma_select_minislot(&profile, &deliverable, &mut rng, m);
                counts[o.winner.unwrap_or(n)] += 1;
            }
            let nf = samples as f64;
            let mut tv: f64 = (0..n).map(|l| (counts[l] as f64 / nf - profile.grab_probability(l)).abs()).sum();
            tv += counts[n] as f64 / nf;
            Ok(ConvergencePoint {
                minislots: m,
                tv_distance: 0.5 * tv,
                noise: (n as f64 / nf).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { samples, points })
}

/// Symmetric parameters `(n, lambda, p, rho)` of a configuration, if it has them.
pub fn symmetric_parameters(config: &ScenarioConfig) -> Result<(usize, f64, f64, f64)> {
    let uniform = |v: &[f64], name: &'static str| -> Result<f64> {
        let first = v[0];
        if v.iter().all(|x| *x == first) {
            Ok(first)
        } else {
            Err(Error::param(name, "stability check needs identical values on every link"))
        }
    };
    if config.arrival.kind != ArrivalKind::Bernoulli {
        return Err(Error::param("arrival.kind", "stability check needs Bernoulli arrivals"));
    }
    let p = match &config.channel {
        ChannelModel::OnOff { p, c_on: 1 } => uniform(p, "channel.p")?,
        ChannelModel::Constant { c: 1 } => 1.0,
        _ => return Err(Error::param("channel.capacity", "stability check needs unit capacity")),
    };
    Ok((
        config.n,
        uniform(&config.arrival.lambda, "arrival.lambda")?,
        p,
        uniform(&config.rho, "drop.rho")?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRun {
    pub replication: u32,
    pub seed: u64,
    pub summary: RunSummary,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub inside_lambda: f64,
    pub outside_lambda: f64,
    pub drop_tolerance: f64,
    /// Final total virtual queue each outside run must reach.
    pub growth_threshold: f64,
    pub inside: Vec<StabilityRun>,
    pub outside: Vec<StabilityRun>,
    pub pass: bool,
}

/// Allowed excess of the measured drop fraction over `rho` in stable runs.
pub const DROP_TOLERANCE: f64 = 0.02;

/// Runs `config` at a rate inside and a rate outside the symmetric region.
/// Inside runs must pass the stability verdict and keep drop fractions
/// within `rho + 0.02`; outside runs must end with
/// `total_x >= 0.25 N (lambda (1 - rho) - s(lambda)) H`, where `s(lambda)` is
/// the per-link service the symmetric network can sustain.
pub fn verify_stability(config: &ScenarioConfig, inside_lambda: f64, outside_lambda: f64) -> Result<StabilityReport> {
    let (n, _, p, rho) = symmetric_parameters(config)?;
    let member = |lambda| membership_symmetric(&SymmetricRegionQuery { n, rho, p, lambda });
    if member(inside_lambda)? != Membership::Inside && inside_lambda > 0.0 {
        return Err(Error::param("inside_lambda", format!("{inside_lambda} is not inside the region")));
    }
    if member(outside_lambda)? != Membership::Outside {
        return Err(Error::param("outside_lambda", format!("{outside_lambda} is not outside the region")));
    }
    let deficit = outside_lambda * (1.0 - rho) - symmetric_service_capacity(n, p, outside_lambda);
    let growth_threshold = 0.25 * n as f64 * deficit * config.horizon as f64;

    let runs = |lambda: f64, check: &dyn Fn(&RunSummary) -> bool| -> Result<Vec<StabilityRun>> {
        (0..config.replications)
            .map(|r| {
                let mut cfg = config.clone();
                cfg.set_lambda(lambda);
                cfg.seed = crate::sweep::replication_seed(config.seed, r, lambda);
                let summary = run_summary(&cfg)?;
                Ok(StabilityRun {
                    replication: r,
                    seed: cfg.seed,
                    pass: check(&summary),
                    summary,
                })
            })
            .collect()
    };
    let inside = runs(inside_lambda, &|s| {
        s.stable == Some(true) && s.drop_fraction.iter().all(|d| *d <= rho + DROP_TOLERANCE)
    })?;
    let outside = runs(outside_lambda, &|s| s.final_total_x >= growth_threshold)?;
    Ok(StabilityReport {
        inside_lambda,
        outside_lambda,
        drop_tolerance: DROP_TOLERANCE,
        growth_threshold,
        pass: inside.iter().chain(&outside).all(|r| r.pass),
        inside,
        outside,
    })
}
