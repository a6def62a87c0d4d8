//! Exogenous per-slot randomness: arrivals, channel capacities and
//! drop-allowance tokens.
//!
//! Each link draws from its own stream for each process, so arrivals,
//! channels and allowances are independent across links and processes and
//! i.i.d. over slots.

use crate::error::{Error, Result};
use crate::rng::{RandomStream, StreamPurpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalKind {
    /// `A_l[t] ~ Bernoulli(lambda_l)`.
    Bernoulli,
    /// With probability `2 lambda_l / (a_max + 1)` a batch arrives whose size
    /// is uniform on `1..=a_max`; otherwise nothing arrives.
    BatchUniform { a_max: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalModel {
    pub kind: ArrivalKind,
    pub lambda: Vec<f64>,
}

impl ArrivalModel {
    pub fn bernoulli(lambda: Vec<f64>) -> Self {
        ArrivalModel {
            kind: ArrivalKind::Bernoulli,
            lambda,
        }
    }

    pub fn a_max(&self) -> u32 {
        match self.kind {
            ArrivalKind::Bernoulli => 1,
            ArrivalKind::BatchUniform { a_max } => a_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a_max = self.a_max();
        if a_max == 0 {
            return Err(Error::param("arrival.a_max", "must be >= 1"));
        }
        let cap = match self.kind {
            ArrivalKind::Bernoulli => 1.0,
            ArrivalKind::BatchUniform { a_max } => f64::from(a_max + 1) / 2.0,
        };
        for &l in &self.lambda {
            if !(l.is_finite() && (0.0..=cap).contains(&l)) {
                return Err(Error::param("arrival.lambda", format!("{l} outside [0, {cap}]")));
            }
        }
        Ok(())
    }

    /// Probability that a link sees a non-empty arrival.
    fn busy_probability(&self, link: usize) -> f64 {
        match self.kind {
            ArrivalKind::Bernoulli => self.lambda[link],
            ArrivalKind::BatchUniform { a_max } => 2.0 * self.lambda[link] / f64::from(a_max + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// Capacity `c_on` with probability `p_l`, otherwise 0.
    OnOff { p: Vec<f64>, c_on: u32 },
    Constant { c: u32 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if let ChannelModel::OnOff { p, .. } = self {
            for &q in p {
                if !(q.is_finite() && (0.0..=1.0).contains(&q)) {
                    return Err(Error::param("channel.p", format!("{q} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropAllowanceKind {
    /// `I_l[t] = i_max` with probability `rho_l lambda_l / i_max`, else 0.
    Bernoulli,
    /// `I_l[t] = rho_l lambda_l` every slot.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropAllowanceModel {
    pub kind: DropAllowanceKind,
    /// Per-link mean allowance `rho_l lambda_l`.
    pub mean: Vec<f64>,
    pub i_max: f64,
}

impl DropAllowanceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.i_max.is_finite() && self.i_max > 0.0) {
            return Err(Error::param("drop.i_max", format!("must be > 0, got {}", self.i_max)));
        }
        for &m in &self.mean {
            if !(m.is_finite() && (0.0..=self.i_max).contains(&m)) {
                return Err(Error::param(
                    "drop.mean",
                    format!("mean allowance {m} outside [0, i_max = {}]", self.i_max),
                ));
            }
        }
        Ok(())
    }
}

/// Per-link streams for the three exogenous processes of one run.
#[derive(Debug, Clone)]
pub struct ExogenousStreams {
    pub arrivals: Vec<RandomStream>,
    pub channels: Vec<RandomStream>,
    pub drops: Vec<RandomStream>,
}

impl ExogenousStreams {
    pub fn new(seed: u64, n: usize) -> Self {
        ExogenousStreams {
            arrivals: RandomStream::per_link(seed, StreamPurpose::Arrivals, n),
            channels: RandomStream::per_link(seed, StreamPurpose::Channels, n),
            drops: RandomStream::per_link(seed, StreamPurpose::DropAllowance, n),
        }
    }
}

pub fn sample_arrivals_into(model: &ArrivalModel, streams: &mut [RandomStream], out: &mut [u32]) {
    for (l, (s, a)) in streams.iter_mut().zip(out.iter_mut()).enumerate() {
        let busy = s.bernoulli(model.busy_probability(l));
        *a = match model.kind {
            ArrivalKind::Bernoulli => u32::from(busy),
            ArrivalKind::BatchUniform { a_max } => {
                let size = 1 + s.index(a_max as usize) as u32;
                if busy { size } else { 0 }
            }
        };
    }
}

pub fn sample_channels_into(model: &ChannelModel, streams: &mut [RandomStream], out: &mut [u32]) {
    match model {
        ChannelModel::Constant { c } => out.fill(*c),
        ChannelModel::OnOff { p, c_on } => {
            for ((s, c), &q) in streams.iter_mut().zip(out.iter_mut()).zip(p) {
                *c = if s.bernoulli(q) { *c_on } else { 0 };
            }
        }
    }
}

pub fn sample_drop_allowance_into(model: &DropAllowanceModel, streams: &mut [RandomStream], out: &mut [f64]) {
    match model.kind {
        DropAllowanceKind::Constant => out.copy_from_slice(&model.mean),
        DropAllowanceKind::Bernoulli => {
            for ((s, i), &m) in streams.iter_mut().zip(out.iter_mut()).zip(&model.mean) {
                *i = if s.bernoulli(m / model.i_max) { model.i_max } else { 0.0 };
            }
        }
    }
}

pub fn sample_arrivals(model: &ArrivalModel, streams: &mut [RandomStream]) -> Vec<u32> {
    let mut out = vec![0; streams.len()];
    sample_arrivals_into(model, streams, &mut out);
    out
}

pub fn sample_channels(model: &ChannelModel, streams: &mut [RandomStream]) -> Vec<u32> {
    let mut out = vec![0; streams.len()];
    sample_channels_into(model, streams, &mut out);
    out
}

pub fn sample_drop_allowance(model: &DropAllowanceModel, streams: &mut [RandomStream]) -> Vec<f64> {
    let mut out = vec![0.0; streams.len()];
    sample_drop_allowance_into(model, streams, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SLOTS: usize = 1_000_000;

    fn streams(purpose: StreamPurpose, n: usize) -> Vec<RandomStream> {
        RandomStream::per_link(2024, purpose, n)
    }

    #[test]
    fn degenerate_arrivals() {
        let mut s = streams(StreamPurpose::Arrivals, 5);
        assert_eq!(sample_arrivals(&ArrivalModel::bernoulli(vec![0.0; 5]), &mut s), vec![0; 5]);
        assert_eq!(sample_arrivals(&ArrivalModel::bernoulli(vec![1.0; 5]), &mut s), vec![1; 5]);
    }

    #[test]
    fn degenerate_channels() {
        let mut s = streams(StreamPurpose::Channels, 4);
        assert_eq!(sample_channels(&ChannelModel::Constant { c: 1 }, &mut s), vec![1; 4]);
        let off = ChannelModel::OnOff { p: vec![0.0; 4], c_on: 1 };
        assert_eq!(sample_channels(&off, &mut s), vec![0; 4]);
    }

    #[test]
    fn degenerate_allowance() {
        let mut s = streams(StreamPurpose::DropAllowance, 3);
        let m = DropAllowanceModel { kind: DropAllowanceKind::Constant, mean: vec![0.008; 3], i_max: 1.0 };
        assert_eq!(sample_drop_allowance(&m, &mut s), vec![0.008; 3]);
        let m = DropAllowanceModel { kind: DropAllowanceKind::Bernoulli, mean: vec![0.0; 3], i_max: 1.0 };
        assert_eq!(sample_drop_allowance(&m, &mut s), vec![0.0; 3]);
    }

    fn within_binomial_band(count: u64, p: f64) {
        let mean = count as f64 / SLOTS as f64;
        let band = 3.0 * (p * (1.0 - p) / SLOTS as f64).sqrt();
        assert!((mean - p).abs() <= band, "mean {mean} vs {p} (band {band})");
    }

    #[test]
    fn bernoulli_arrival_frequency() {
        let model = ArrivalModel::bernoulli(vec![0.04; 10]);
        let mut s = streams(StreamPurpose::Arrivals, 10);
        let mut buf = vec![0; 10];
        let mut counts = [0u64; 10];
        for _ in 0..SLOTS {
            sample_arrivals_into(&model, &mut s, &mut buf);
            for (c, &a) in counts.iter_mut().zip(&buf) {
                *c += u64::from(a);
            }
        }
        for c in counts {
            within_binomial_band(c, 0.04);
        }
    }

    #[test]
    fn on_off_frequency() {
        let model = ChannelModel::OnOff { p: vec![0.9; 3], c_on: 1 };
        let mut s = streams(StreamPurpose::Channels, 3);
        let mut buf = vec![0; 3];
        let mut counts = [0u64; 3];
        for _ in 0..SLOTS {
            sample_channels_into(&model, &mut s, &mut buf);
            for (c, &v) in counts.iter_mut().zip(&buf) {
                assert!(v == 0 || v == 1);
                *c += u64::from(v);
            }
        }
        for c in counts {
            within_binomial_band(c, 0.9);
        }
    }

    #[test]
    fn bernoulli_allowance_mean() {
        let model = DropAllowanceModel { kind: DropAllowanceKind::Bernoulli, mean: vec![0.008; 2], i_max: 1.0 };
        let mut s = streams(StreamPurpose::DropAllowance, 2);
        let mut buf = vec![0.0; 2];
        let mut sums = [0u64; 2];
        for _ in 0..SLOTS {
            sample_drop_allowance_into(&model, &mut s, &mut buf);
            for (acc, &v) in sums.iter_mut().zip(&buf) {
                assert!((0.0..=1.0).contains(&v));
                *acc += v as u64;
            }
        }
        for c in sums {
            within_binomial_band(c, 0.008);
        }
    }

    #[test]
    fn batch_arrivals_bounded_with_right_mean() {
        let model = ArrivalModel { kind: ArrivalKind::BatchUniform { a_max: 4 }, lambda: vec![0.7] };
        model.validate().unwrap();
        let mut s = streams(StreamPurpose::Arrivals, 1);
        let mut buf = [0];
        let n = 200_000;
        let mut total = 0u64;
        let mut sq = 0u64;
        for _ in 0..n {
            sample_arrivals_into(&model, &mut s, &mut buf);
            assert!(buf[0] <= 4);
            total += u64::from(buf[0]);
            sq += u64::from(buf[0] * buf[0]);
        }
        let mean = total as f64 / n as f64;
        let var = sq as f64 / n as f64 - mean * mean;
        assert!((mean - 0.7).abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn links_are_uncorrelated() {
        let n = 4;
        let slots = 100_000;
        let model = ArrivalModel::bernoulli(vec![0.3; n]);
        let mut s = streams(StreamPurpose::Arrivals, n);
        let mut buf = vec![0; n];
        let mut rows = vec![vec![0.0; slots]; n];
        for t in 0..slots {
            sample_arrivals_into(&model, &mut s, &mut buf);
            for l in 0..n {
                rows[l][t] = f64::from(buf[l]);
            }
        }
        let corr = |x: &[f64], y: &[f64]| {
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for (a, b) in x.iter().zip(y) {
                sxy += (a - mx) * (b - my);
                sxx += (a - mx) * (a - mx);
                syy += (b - my) * (b - my);
            }
            sxy / (sxx * syy).sqrt()
        };
        for i in 0..n {
            for j in i + 1..n {
                assert!(corr(&rows[i], &rows[j]).abs() < 0.02);
            }
        }
    }

    #[test]
    fn channel_draws_do_not_touch_arrival_streams() {
        let model = ArrivalModel::bernoulli(vec![0.5; 3]);
        let channels = ChannelModel::OnOff { p: vec![0.5; 3], c_on: 1 };
        let mut with = ExogenousStreams::new(99, 3);
        let mut without = ExogenousStreams::new(99, 3);
        for _ in 0..1000 {
            let a = sample_arrivals(&model, &mut with.arrivals);
            sample_channels(&channels, &mut with.channels);
            let b = sample_arrivals(&model, &mut without.arrivals);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn validation() {
        assert!(ArrivalModel::bernoulli(vec![1.5]).validate().is_err());
        assert!(ChannelModel::OnOff { p: vec![-0.1], c_on: 1 }.validate().is_err());
        let m = DropAllowanceModel { kind: DropAllowanceKind::Bernoulli, mean: vec![2.0], i_max: 1.0 };
        assert!(m.validate().is_err());
    }
}
