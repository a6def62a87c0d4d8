//! Per-slot scheduling decisions: the FCSMA exponential race (continuous and
//! mini-slot discretized), the QCSMA Glauber-dynamics baseline and a
//! centralized max-weight oracle.
//!
//! The race is run in log-space. Link `l` fires at `T_l = E_l / r_l` with
//! `E_l ~ Exp(1)`, so `-ln T_l = W_l - ln E_l` is the weight plus a standard
//! Gumbel variate. The winner is the arg-max of those keys and the
//! absorption time is `exp(-max key)`, which never overflows however large
//! the rates get.

use std::fmt;
use std::str::FromStr;

use crate::model::ContentionProfile;
use crate::rng::RandomStream;

/// When the race winner's packets count as delivered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompletionRule {
    /// Full service iff the winner fires before the slot ends.
    #[default]
    Threshold,
    /// Service with probability `max(0, 1 - T)` given absorption time `T`.
    Proportional,
}

impl CompletionRule {
    pub fn name(self) -> &'static str {
        match self {
            CompletionRule::Threshold => "threshold",
            CompletionRule::Proportional => "proportional",
        }
    }
}

impl FromStr for CompletionRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threshold" => Ok(CompletionRule::Threshold),
            "proportional" => Ok(CompletionRule::Proportional),
            _ => Err(format!("unknown completion rule `{s}` (expected threshold or proportional)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchedulerKind {
    #[default]
    FcsmaContinuous,
    FcsmaMinislot,
    Qcsma,
    MaxWeight,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::FcsmaContinuous,
        SchedulerKind::FcsmaMinislot,
        SchedulerKind::Qcsma,
        SchedulerKind::MaxWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::FcsmaContinuous => "fcsma-continuous",
            SchedulerKind::FcsmaMinislot => "fcsma-minislot",
            SchedulerKind::Qcsma => "qcsma",
            SchedulerKind::MaxWeight => "max-weight",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown scheduler `{s}` (expected fcsma-continuous, fcsma-minislot, qcsma or max-weight)")
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    /// Link that grabbed the channel (first holder for QCSMA).
    pub winner: Option<usize>,
    /// Time until the channel was first grabbed, as a fraction of the slot.
    /// Infinite if nobody grabbed it.
    pub absorption_time: f64,
    /// Packets delivered per link.
    pub served: Vec<u32>,
    /// The winner had nothing to deliver and held the channel with dummy packets.
    pub dummy: bool,
}

impl ScheduleOutcome {
    pub fn idle(n: usize) -> Self {
        ScheduleOutcome {
            winner: None,
            absorption_time: f64::INFINITY,
            served: vec![0; n],
            dummy: false,
        }
    }

    pub fn total_served(&self) -> u32 {
        self.served.iter().sum()
    }
}

/// Samples `-ln T_l` for every link and returns the keys.
fn race_keys(profile: &ContentionProfile, rng: &mut RandomStream) -> Vec<f64> {
    profile.weights().iter().map(|w| w + rng.gumbel()).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Continuous-time exponential race. `deliverable[l]` is `min(C_l, A_l)`.
pub fn fcsma_select_continuous(
    profile: &ContentionProfile,
    deliverable: &[u32],
    rng: &mut RandomStream,
    rule: CompletionRule,
) -> ScheduleOutcome {
    let n = profile.len();
    let keys = race_keys(profile, rng);
    let winner = argmax(&keys);
    let t = (-keys[winner]).exp();
    let completes = match rule {
        CompletionRule::Threshold => t < 1.0,
        CompletionRule::Proportional => rng.uniform() < (1.0 - t).max(0.0),
    };
    let mut served = vec![0; n];
    let mut dummy = false;
    if t < 1.0 && deliverable[winner] == 0 {
        dummy = true;
    } else if completes {
        served[winner] = deliverable[winner];
    }
    ScheduleOutcome {
        winner: Some(winner),
        absorption_time: t,
        served,
        dummy,
    }
}

/// Race discretized into `m` mini-slots. A link fires in mini-slot `k` with
/// probability `1 - exp(-r_l / m)` per idle mini-slot; the earliest firing
/// link keeps the channel and needs at least one further mini-slot to
/// deliver its packets.
pub fn fcsma_select_minislot(
    profile: &ContentionProfile,
    deliverable: &[u32],
    rng: &mut RandomStream,
    m: u32,
) -> ScheduleOutcome {
    assert!(m >= 1, "mini-slot count must be >= 1");
    let n = profile.len();
    let mf = f64::from(m);
    // floor(m * T_l) is geometric with the per-mini-slot firing probability.
    let slots: Vec<f64> = race_keys(profile, rng)
        .into_iter()
        .map(|k| (mf * (-k).exp()).floor())
        .collect();
    let first = slots.iter().copied().fold(f64::INFINITY, f64::min);
    if first >= mf {
        return ScheduleOutcome::idle(n);
    }
    let tied: Vec<usize> = (0..n).filter(|&l| slots[l] == first).collect();
    let winner = if tied.len() == 1 { tied[0] } else { tied[rng.index(tied.len())] };
    let mut served = vec![0; n];
    let mut dummy = false;
    if first <= mf - 2.0 {
        if deliverable[winner] == 0 {
            dummy = true;
        } else {
            served[winner] = deliverable[winner];
        }
    }
    ScheduleOutcome {
        winner: Some(winner),
        absorption_time: first / mf,
        served,
        dummy,
    }
}

/// `e^w / (1 + e^w)` without overflow.
pub fn activation_probability(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// One Glauber update on the complete conflict graph.
pub fn qcsma_step(weights: &[f64], active: Option<usize>, rng: &mut RandomStream) -> Option<usize> {
    let d = rng.index(weights.len());
    match active {
        Some(a) if a != d => Some(a),
        _ => rng.bernoulli(activation_probability(weights[d])).then_some(d),
    }
}

/// Runs `m` Glauber updates inside one slot. Each link delivers at most once
/// per slot, in the first mini-slot it holds the channel.
pub fn qcsma_slot(
    weights: &[f64],
    deliverable: &[u32],
    active: &mut Option<usize>,
    rng: &mut RandomStream,
    m: u32,
) -> ScheduleOutcome {
    assert!(m >= 1, "mini-slot count must be >= 1");
    let n = weights.len();
    let mut out = ScheduleOutcome::idle(n);
    let mut transmitted = vec![false; n];
    for k in 0..m {
        *active = qcsma_step(weights, *active, rng);
        let Some(a) = *active else { continue };
        if out.winner.is_none() {
            out.winner = Some(a);
            out.absorption_time = f64::from(k) / f64::from(m);
        }
        if !transmitted[a] {
            transmitted[a] = true;
            out.served[a] = deliverable[a];
        }
    }
    out.dummy = out.winner.is_some() && out.total_served() == 0;
    out
}

/// Serves the maximum-weight link, lowest index on ties.
pub fn maxweight_select(weights: &[f64], deliverable: &[u32]) -> ScheduleOutcome {
    let n = weights.len();
    let winner = argmax(weights);
    let mut served = vec![0; n];
    served[winner] = deliverable[winner];
    ScheduleOutcome {
        winner: Some(winner),
        absorption_time: 0.0,
        served,
        dummy: deliverable[winner] == 0,
    }
}
