//! Per-link contention rates, weights and the closed-form FCSMA selection
//! probability.
//!
//! Rates `r_l = f(X_l)^{min(C_l, A_l)}` overflow quickly once virtual queues
//! grow, so a [`ContentionProfile`] keeps everything in log-space: the
//! weights `W_l = ln r_l` and `ln Z` with `Z = sum_l r_l`.

use crate::error::{Error, Result};
use crate::weight::WeightFunction;

/// What a link observes at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkObservation {
    /// Virtual queue length.
    pub x: f64,
    /// Channel capacity this slot (packets).
    pub c: u32,
    /// Arrivals this slot (packets).
    pub a: u32,
}

impl LinkObservation {
    pub fn new(x: f64, c: u32, a: u32) -> Result<Self> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::param("x", format!("virtual queue must be finite and >= 0, got {x}")));
        }
        Ok(LinkObservation { x, c, a })
    }

    /// Packets the link can deliver if it holds the channel: `min(C, A)`.
    pub fn deliverable(&self) -> u32 {
        self.c.min(self.a)
    }
}

/// `f(x)^{min(c, a)}`.
pub fn contention_rate(obs: &LinkObservation, f: WeightFunction) -> f64 {
    match obs.deliverable() {
        0 => 1.0,
        k => f.f(obs.x).powi(k as i32),
    }
}

/// `g(x) * min(c, a)`, equal to `ln contention_rate(obs, f)`.
pub fn link_weight(obs: &LinkObservation, f: WeightFunction) -> f64 {
    match obs.deliverable() {
        0 => 0.0,
        k => f.g(obs.x) * f64::from(k),
    }
}

/// Numerically stable `ln(sum_i exp(v_i))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Log-space contention state of all links for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionProfile {
    weights: Vec<f64>,
    log_z: f64,
    wstar: f64,
}

impl ContentionProfile {
    pub fn new(observations: &[LinkObservation], f: WeightFunction) -> Result<Self> {
        Self::from_weights(observations.iter().map(|o| link_weight(o, f)).collect())
    }

    /// Builds a profile directly from per-link weights `W_l = ln r_l`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::param("weights", "at least one link is required"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::param("weights", format!("weights must be finite and >= 0, got {w}")));
        }
        let log_z = log_sum_exp(&weights);
        let wstar = weights.iter().copied().fold(0.0, f64::max);
        Ok(ContentionProfile {
            weights,
            log_z,
            wstar,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `r_l`; infinite if it does not fit in an `f64`.
    pub fn rate(&self, link: usize) -> f64 {
        self.weights[link].exp()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.exp()).collect()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `Z`; infinite if it does not fit in an `f64`.
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// Maximum weight `W*`.
    pub fn wstar(&self) -> f64 {
        self.wstar
    }

    /// Probability `r_l / Z` that `link` fires first in the race.
    pub fn grab_probability(&self, link: usize) -> f64 {
        (self.weights[link] - self.log_z).exp()
    }

    /// Closed-form service probability `(r_l / Z)(1 - 1/Z)`.
    pub fn selection_probability(&self, link: usize) -> f64 {
        self.grab_probability(link) * (1.0 - (-self.log_z).exp())
    }

    /// Exact probability that the race completes before the slot ends,
    /// `P(T < 1) = 1 - e^{-Z}` with `T ~ Exp(Z)`.
    pub fn completion_probability(&self) -> f64 {
        -(-self.z()).exp_m1()
    }

    /// Exact expected fraction of the slot left after absorption,
    /// `E[(1 - T)^+] = 1 - (1 - e^{-Z}) / Z`.
    pub fn expected_remaining_time(&self) -> f64 {
        let z = self.z();
        if z.is_infinite() {
            return 1.0;
        }
        1.0 + (-z).exp_m1() / z
    }
}

/// Upper bound `N e^{-eps W*}` on the probability that the race picks a link
/// whose weight is below `(1 - eps) W*`.
pub fn lemma2_tail_bound(n: usize, epsilon: f64, wstar: f64) -> f64 {
    n as f64 * (-epsilon * wstar).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn obs(x: f64, c: u32, a: u32) -> LinkObservation {
        LinkObservation::new(x, c, a).unwrap()
    }

    #[test]
    fn contention_rate_examples() {
        assert_relative_eq!(contention_rate(&obs(3.0, 2, 5), WeightFunction::Exp), 6f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(contention_rate(&obs(3.0, 2, 5), WeightFunction::Exp), 403.4288, epsilon = 1e-4);
        assert_eq!(contention_rate(&obs(7.0, 0, 4), WeightFunction::Exp), 1.0);
        assert_eq!(contention_rate(&obs(2.0, 1, 1), WeightFunction::LinearPlusOne), 3.0);
    }

    #[test]
    fn link_weight_examples() {
        assert_eq!(link_weight(&obs(3.0, 2, 5), WeightFunction::Exp), 6.0);
        assert_eq!(link_weight(&obs(0.0, 1, 1), WeightFunction::Exp), 0.0);
        assert_eq!(link_weight(&obs(4.0, 3, 1), WeightFunction::ExpSqrt), 2.0);
    }

    #[test]
    fn rejects_negative_queue() {
        assert!(LinkObservation::new(-1.0, 1, 1).is_err());
        assert!(LinkObservation::new(f64::NAN, 1, 1).is_err());
        assert!(ContentionProfile::from_weights(vec![]).is_err());
    }

    #[test]
    fn selection_probability_examples() {
        let p = ContentionProfile::new(&[obs(1.0, 1, 1), obs(1.0, 1, 1)], WeightFunction::Exp).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(p.z(), 2.0 * e, max_relative = 1e-14);
        assert_relative_eq!(p.selection_probability(0), 0.5 * (1.0 - 1.0 / (2.0 * e)), max_relative = 1e-14);
        assert!((p.selection_probability(0) - 0.40803).abs() < 5e-6);

        let p = ContentionProfile::new(&[obs(2.0, 1, 1), obs(1.0, 1, 1)], WeightFunction::Exp).unwrap();
        assert!((p.z() - 10.1073).abs() < 1e-4);
        assert!((p.selection_probability(0) - 0.6588).abs() < 1e-4);

        let p = ContentionProfile::from_weights(vec![1.5]).unwrap();
        assert_relative_eq!(p.selection_probability(0), 1.0 - 1.0 / p.z(), max_relative = 1e-14);
    }

    #[test]
    fn exact_race_quantities() {
        let p = ContentionProfile::from_weights(vec![0.0]).unwrap();
        assert_relative_eq!(p.completion_probability(), 1.0 - (-1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(p.expected_remaining_time(), (-1f64).exp(), max_relative = 1e-14);
        let big = ContentionProfile::from_weights(vec![800.0, 1.0]).unwrap();
        assert!(big.z().is_infinite());
        assert_eq!(big.completion_probability(), 1.0);
        assert_eq!(big.expected_remaining_time(), 1.0);
        assert_relative_eq!(big.grab_probability(0), 1.0);
        assert_eq!(big.selection_probability(0), 1.0);
    }

    #[test]
    fn tail_bound_examples() {
        assert_relative_eq!(lemma2_tail_bound(10, 0.5, 10.0), 10.0 * (-5f64).exp(), max_relative = 1e-14);
        assert!((lemma2_tail_bound(10, 0.5, 10.0) - 0.06738).abs() < 1e-5);
        assert_eq!(lemma2_tail_bound(1, 0.5, 0.0), 1.0);
        assert!((lemma2_tail_bound(10, 0.1, 100.0) - 4.54e-4).abs() < 1e-6);
    }

    fn arb_obs() -> impl Strategy<Value = LinkObservation> {
        (0.0f64..50.0, 0u32..4, 0u32..4).prop_map(|(x, c, a)| obs(x, c, a))
    }

    proptest! {
        #[test]
        fn weight_is_log_rate(o in arb_obs(), k in 0usize..4) {
            let f = WeightFunction::ALL[k];
            let w = link_weight(&o, f);
            let lr = contention_rate(&o, f).ln();
            prop_assert!((w - lr).abs() <= 1e-12 * w.abs().max(1.0));
        }

        #[test]
        fn rates_at_least_one(o in arb_obs(), k in 0usize..4) {
            prop_assert!(contention_rate(&o, WeightFunction::ALL[k]) >= 1.0);
        }

        #[test]
        fn probabilities_sum_to_mass_deficit(ws in prop::collection::vec(0.0f64..30.0, 1..12)) {
            let p = ContentionProfile::from_weights(ws.clone()).unwrap();
            prop_assert!(p.z() >= ws.len() as f64 * (1.0 - 1e-12));
            let total: f64 = (0..p.len()).map(|l| p.selection_probability(l)).sum();
            prop_assert!((total - (1.0 - 1.0 / p.z())).abs() < 1e-12);
            prop_assert!(total < 1.0);
        }

        #[test]
        fn permutation_symmetric(ws in prop::collection::vec(0.0f64..30.0, 2..10), rot in 0usize..10) {
            let p = ContentionProfile::from_weights(ws.clone()).unwrap();
            let mut shifted = ws.clone();
            let r = rot % ws.len();
            shifted.rotate_left(r);
            let q = ContentionProfile::from_weights(shifted).unwrap();
            for l in 0..ws.len() {
                let j = (l + ws.len() - r) % ws.len();
                prop_assert!((p.selection_probability(l) - q.selection_probability(j)).abs() < 1e-12);
            }
        }

        #[test]
        fn more_backlog_never_hurts(xs in prop::collection::vec(0.0f64..20.0, 2..8), bump in 0.0f64..10.0, k in 0usize..4) {
            let f = WeightFunction::ALL[k];
            let base: Vec<_> = xs.iter().map(|&x| obs(x, 1, 1)).collect();
            let mut bumped = base.clone();
            bumped[0].x += bump;
            let p = ContentionProfile::new(&base, f).unwrap().selection_probability(0);
            let q = ContentionProfile::new(&bumped, f).unwrap().selection_probability(0);
            prop_assert!(q >= p - 1e-12);
        }
    }
}
