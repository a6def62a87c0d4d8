//! Slot-by-slot evolution of the coupled system: exogenous draws, the
//! scheduling decision, deadline drops and the virtual-queue recursion
//! `X[t+1] = X[t] + R[t] - I[t] + U[t]`.

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::model::{ContentionProfile, LinkObservation};
use crate::processes::{
    sample_arrivals_into, sample_channels_into, sample_drop_allowance_into, DropAllowanceModel,
    ExogenousStreams,
};
use crate::rng::{RandomStream, StreamPurpose};
use crate::scheduler::{self, ScheduleOutcome, SchedulerKind};

/// Slope threshold (packets/slot) for the stability verdict.
pub const STABLE_SLOPE: f64 = 1e-3;
/// Allowed relative gap between the final-quarter and third-quarter means.
pub const STABLE_LEVEL_DRIFT: f64 = 0.2;

/// Packets dropped at the deadline: `a - served`.
pub fn residual(arrivals: u32, served: u32) -> Result<u32> {
    arrivals.checked_sub(served).ok_or_else(|| {
        Error::Contract(format!("served {served} packets but only {arrivals} arrived"))
    })
}

/// Applies drops `r` and allowance `i` to a virtual queue of length `x`.
/// Returns the new length and the unused allowance `U`.
pub fn update_virtual_queue(x: f64, r: f64, i: f64) -> (f64, f64) {
    let load = x + r;
    let unused = (i - load).max(0.0);
    ((load - i).max(0.0), unused)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueueState {
    pub x: Vec<f64>,
    pub cumulative_arrivals: Vec<u64>,
    pub cumulative_served: Vec<u64>,
    pub cumulative_dropped: Vec<u64>,
    pub slot: u64,
}

impl VirtualQueueState {
    pub fn new(n: usize) -> Self {
        VirtualQueueState {
            x: vec![0.0; n],
            cumulative_arrivals: vec![0; n],
            cumulative_served: vec![0; n],
            cumulative_dropped: vec![0; n],
            slot: 0,
        }
    }

    fn running_average(&self, counts: &[u64]) -> Vec<f64> {
        let t = self.slot.max(1) as f64;
        counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Per-link dropped packets per slot so far.
    pub fn drop_rate(&self) -> Vec<f64> {
        self.running_average(&self.cumulative_dropped)
    }

    /// Per-link delivered packets per slot so far.
    pub fn service_rate(&self) -> Vec<f64> {
        self.running_average(&self.cumulative_served)
    }

    pub fn arrival_rate(&self) -> Vec<f64> {
        self.running_average(&self.cumulative_arrivals)
    }

    /// Per-link fraction of arrived packets that were dropped (0 if none arrived).
    pub fn drop_fraction(&self) -> Vec<f64> {
        self.cumulative_dropped
            .iter()
            .zip(&self.cumulative_arrivals)
            .map(|(&d, &a)| if a == 0 { 0.0 } else { d as f64 / a as f64 })
            .collect()
    }
}

/// Scalar per-slot record.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: u64,
    /// `sum_l X_l` after the update.
    pub total_x: f64,
    /// `sum_l g(X_l)` after the update.
    pub total_g: f64,
    pub winner: Option<usize>,
    pub absorption_time: f64,
    pub dummy: bool,
    pub arrivals: u32,
    pub served: u32,
    pub dropped: u32,
}

/// Realized exogenous inputs for one slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotInput {
    pub arrivals: Vec<u32>,
    pub capacity: Vec<u32>,
    pub allowance: Vec<f64>,
}

/// One simulation run.
#[derive(Debug, Clone)]
pub struct Engine {
    config: ScenarioConfig,
    drops: DropAllowanceModel,
    state: VirtualQueueState,
    streams: ExogenousStreams,
    scheduler_rng: RandomStream,
    qcsma_active: Option<usize>,
    input: SlotInput,
}

impl Engine {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate().map_err(Error::Config)?;
        let n = config.n;
        Ok(Engine {
            config: config.clone(),
            drops: config.drop_allowance_model(),
            state: VirtualQueueState::new(n),
            streams: ExogenousStreams::new(config.seed, n),
            scheduler_rng: RandomStream::new(config.seed, StreamPurpose::Scheduler, 0),
            qcsma_active: None,
            input: SlotInput {
                arrivals: vec![0; n],
                capacity: vec![0; n],
                allowance: vec![0.0; n],
            },
        })
    }

    pub fn state(&self) -> &VirtualQueueState {
        &self.state
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Realized inputs of the most recent slot.
    pub fn last_input(&self) -> &SlotInput {
        &self.input
    }

    fn schedule(&mut self, deliverable: &[u32]) -> Result<ScheduleOutcome> {
        let cfg = &self.config;
        let f = cfg.weight_function;
        let observations = self
            .state
            .x
            .iter()
            .zip(&self.input.capacity)
            .zip(&self.input.arrivals)
            .map(|((&x, &c), &a)| LinkObservation::new(x, c, a))
            .collect::<Result<Vec<_>>>()?;
        let outcome = match cfg.scheduler {
            SchedulerKind::FcsmaContinuous => {
                let profile = ContentionProfile::new(&observations, f)?;
                scheduler::fcsma_select_continuous(&profile, deliverable, &mut self.scheduler_rng, cfg.completion_rule)
            }
            SchedulerKind::FcsmaMinislot => {
                let profile = ContentionProfile::new(&observations, f)?;
                scheduler::fcsma_select_minislot(&profile, deliverable, &mut self.scheduler_rng, cfg.minislots)
            }
            SchedulerKind::Qcsma => {
                if cfg.qcsma_reset {
                    self.qcsma_active = None;
                }
                let weights: Vec<f64> = observations
                    .iter()
                    .map(|o| o.x * f64::from(o.deliverable()))
                    .collect();
                scheduler::qcsma_slot(&weights, deliverable, &mut self.qcsma_active, &mut self.scheduler_rng, cfg.minislots)
            }
            SchedulerKind::MaxWeight => {
                let weights: Vec<f64> = observations.iter().map(|o| crate::model::link_weight(o, f)).collect();
                scheduler::maxweight_select(&weights, deliverable)
            }
        };
        Ok(outcome)
    }

    /// Advances one slot: observe, contend, serve, drop, apply allowance.
    pub fn run_slot(&mut self) -> Result<SlotMetrics> {
        let cfg = &self.config;
        sample_arrivals_into(&cfg.arrival, &mut self.streams.arrivals, &mut self.input.arrivals);
        sample_channels_into(&cfg.channel, &mut self.streams.channels, &mut self.input.capacity);
        sample_drop_allowance_into(&self.drops, &mut self.streams.drops, &mut self.input.allowance);

        let deliverable: Vec<u32> = self
            .input
            .capacity
            .iter()
            .zip(&self.input.arrivals)
            .map(|(&c, &a)| c.min(a))
            .collect();
        let outcome = self.schedule(&deliverable)?;

        let f = self.config.weight_function;
        let mut metrics = SlotMetrics {
            slot: self.state.slot,
            total_x: 0.0,
            total_g: 0.0,
            winner: outcome.winner,
            absorption_time: outcome.absorption_time,
            dummy: outcome.dummy,
            arrivals: 0,
            served: 0,
            dropped: 0,
        };
        for l in 0..self.config.n {
            let a = self.input.arrivals[l];
            let s = outcome.served[l];
            if s > deliverable[l] {
                return Err(Error::Contract(format!("link {l} served {s} > min(C, A) = {}", deliverable[l])));
            }
            let r = residual(a, s)?;
            let (x, _unused) = update_virtual_queue(self.state.x[l], f64::from(r), self.input.allowance[l]);
            self.state.x[l] = x;
            self.state.cumulative_arrivals[l] += u64::from(a);
            self.state.cumulative_served[l] += u64::from(s);
            self.state.cumulative_dropped[l] += u64::from(r);
            metrics.total_x += x;
            metrics.total_g += f.g(x);
            metrics.arrivals += a;
            metrics.served += s;
            metrics.dropped += r;
        }
        self.state.slot += 1;
        Ok(metrics)
    }
}

/// Time-averaged statistics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub slots: u64,
    pub mean_total_x: f64,
    pub mean_total_g: f64,
    pub final_total_x: f64,
    /// Least-squares slope of `total_x` over the final half; `None` when
    /// fewer than two slots are available.
    pub drift_slope: Option<f64>,
    /// Mean `total_x` over the third quarter of the run.
    pub mid_mean_total_x: Option<f64>,
    /// Mean `total_x` over the final quarter of the run.
    pub final_quarter_mean_total_x: Option<f64>,
    pub drop_fraction: Vec<f64>,
    /// Stability verdict; `None` when the horizon is too short to judge.
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<SlotMetrics>,
    pub summary: RunSummary,
}

/// Least-squares slope of `y` against its index.
pub fn ls_slope(y: &[f64]) -> Option<f64> {
    if y.len() < 2 {
        return None;
    }
    let n = y.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in y.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (v - y_mean);
        sxx += dt * dt;
    }
    Some(sxy / sxx)
}

fn mean(y: &[f64]) -> Option<f64> {
    (!y.is_empty()).then(|| y.iter().sum::<f64>() / y.len() as f64)
}

/// Stability verdict on a `total_x` trace: slope over the final half below
/// [`STABLE_SLOPE`] and final-quarter mean within [`STABLE_LEVEL_DRIFT`] of
/// the third-quarter mean.
pub fn summarize(total_x: &[f64], total_g_sum: f64, state: &VirtualQueueState) -> RunSummary {
    let h = total_x.len();
    let half = &total_x[h / 2..];
    let mid = mean(&total_x[h / 2..(3 * h) / 4]);
    let last = mean(&total_x[(3 * h) / 4..]);
    let slope = ls_slope(half);
    let stable = match (slope, mid, last) {
        (Some(s), Some(m), Some(l)) => Some(s < STABLE_SLOPE && (l - m).abs() <= STABLE_LEVEL_DRIFT * m.max(1.0)),
        _ => None,
    };
    RunSummary {
        slots: h as u64,
        mean_total_x: mean(total_x).unwrap_or(0.0),
        mean_total_g: if h == 0 { 0.0 } else { total_g_sum / h as f64 },
        final_total_x: total_x.last().copied().unwrap_or(0.0),
        drift_slope: slope,
        mid_mean_total_x: mid,
        final_quarter_mean_total_x: last,
        drop_fraction: state.drop_fraction(),
        stable,
    }
}

/// Runs the configured horizon and keeps the per-slot trace.
pub fn run_horizon(config: &ScenarioConfig) -> Result<RunOutput> {
    let mut engine = Engine::new(config)?;
    let mut trace = Vec::with_capacity(config.horizon as usize);
    for _ in 0..config.horizon {
        trace.push(engine.run_slot()?);
    }
    let xs: Vec<f64> = trace.iter().map(|m| m.total_x).collect();
    let g: f64 = trace.iter().map(|m| m.total_g).sum();
    let summary = summarize(&xs, g, engine.state());
    Ok(RunOutput { trace, summary })
}

/// Same as [`run_horizon`] without retaining the per-slot trace.
pub fn run_summary(config: &ScenarioConfig) -> Result<RunSummary> {
    let mut engine = Engine::new(config)?;
    let mut xs = Vec::with_capacity(config.horizon as usize);
    let mut g = 0.0;
    for _ in 0..config.horizon {
        let m = engine.run_slot()?;
        xs.push(m.total_x);
        g += m.total_g;
    }
    Ok(summarize(&xs, g, engine.state()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{ChannelModel, DropAllowanceKind};
    use proptest::prelude::*;

    #[test]
    fn residual_examples() {
        assert_eq!(residual(1, 1).unwrap(), 0);
        assert_eq!(residual(1, 0).unwrap(), 1);
        assert_eq!(residual(3, 2).unwrap(), 1);
        assert!(matches!(residual(1, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn queue_update_examples() {
        assert_eq!(update_virtual_queue(5.0, 0.0, 1.0), (4.0, 0.0));
        assert_eq!(update_virtual_queue(0.0, 0.0, 1.0), (0.0, 1.0));
        assert_eq!(update_virtual_queue(0.5, 1.0, 1.0), (0.5, 0.0));
    }

    proptest! {
        #[test]
        fn queue_identity(x in 0.0f64..100.0, r in 0u32..5, i in 0.0f64..3.0) {
            let (next, unused) = update_virtual_queue(x, f64::from(r), i);
            prop_assert!(next >= 0.0);
            prop_assert!(unused >= 0.0 && unused <= i);
            prop_assert!((next - (x + f64::from(r) - i + unused)).abs() < 1e-12);
        }
    }

    fn single_link(lambda: f64) -> ScenarioConfig {
        let mut c = ScenarioConfig::default_with_links(1);
        c.arrival.lambda = vec![lambda];
        c.channel = ChannelModel::Constant { c: 1 };
        c.rho = vec![0.5];
        c.horizon = 1000;
        c
    }

    #[test]
    fn zero_arrivals_only_drain() {
        let mut cfg = single_link(0.0);
        cfg.drop_kind = DropAllowanceKind::Constant;
        let mut e = Engine::new(&cfg).unwrap();
        e.state.x = vec![3.0];
        for _ in 0..5 {
            let before = e.state.x[0];
            e.run_slot().unwrap();
            assert_eq!(e.state.x[0], (before - e.last_input().allowance[0]).max(0.0));
        }
    }

    #[test]
    fn single_link_fcsma() {
        let cfg = single_link(1.0);
        let out = run_horizon(&cfg).unwrap();
        for m in &out.trace {
            assert_eq!(m.arrivals, 1);
            assert_eq!(m.served == 1, m.absorption_time < 1.0);
            assert!(m.dropped <= 1);
        }
    }

    #[test]
    fn empty_horizon() {
        let mut cfg = single_link(0.5);
        cfg.horizon = 0;
        let out = run_horizon(&cfg).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.summary.slots, 0);
        assert_eq!(out.summary.mean_total_x, 0.0);
        assert_eq!(out.summary.drift_slope, None);
        assert_eq!(out.summary.stable, None);
    }

    #[test]
    fn no_traffic_no_drops() {
        let mut cfg = ScenarioConfig::default_with_links(4);
        cfg.arrival.lambda = vec![0.0; 4];
        cfg.horizon = 500;
        let out = run_horizon(&cfg).unwrap();
        assert!(out.trace.iter().all(|m| m.total_x == 0.0));
        assert_eq!(out.summary.drop_fraction, vec![0.0; 4]);
        assert_eq!(out.summary.stable, Some(true));
    }

    #[test]
    fn slope_of_line() {
        let y: Vec<f64> = (0..100).map(|t| 3.0 + 0.25 * t as f64).collect();
        assert!((ls_slope(&y).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(ls_slope(&[1.0]), None);
    }
}
