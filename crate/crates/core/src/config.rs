//! Scenario configuration in a flat `key = value` text format.
//!
//! ```text
//! # Fading scenario, 10 links
//! n = 10
//! seed = 1
//! horizon = 100000
//! replications = 1
//! arrival.kind = bernoulli
//! arrival.lambda = 0.024
//! channel.kind = on-off
//! channel.p = 0.9
//! channel.capacity = 1
//! drop.kind = bernoulli
//! drop.rho = 0.2
//! drop.i_max = 1
//! weight.function = exp
//! scheduler.kind = fcsma-continuous
//! scheduler.completion = threshold
//! scheduler.minislots = 1
//! scheduler.qcsma_reset = false
//! ```
//!
//! Blank lines and `#` comments are ignored. Per-link fields
//! (`arrival.lambda`, `channel.p`, `drop.rho`) take either one value for
//! every link or a comma-separated list of exactly `n` values.
//! `arrival.a_max` is accepted only with `arrival.kind = batch-uniform` and
//! `channel.p` only with `channel.kind = on-off`. Required keys: `n`,
//! `horizon`, `arrival.lambda`, `drop.rho`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::FieldError;
use crate::processes::{ArrivalKind, ArrivalModel, ChannelModel, DropAllowanceKind, DropAllowanceModel};
use crate::scheduler::{CompletionRule, SchedulerKind};
use crate::weight::WeightFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub seed: u64,
    pub horizon: u64,
    pub replications: u32,
    pub arrival: ArrivalModel,
    pub channel: ChannelModel,
    pub drop_kind: DropAllowanceKind,
    /// Per-link maximum tolerable drop fraction.
    pub rho: Vec<f64>,
    pub i_max: f64,
    pub weight_function: WeightFunction,
    pub scheduler: SchedulerKind,
    pub completion_rule: CompletionRule,
    pub minislots: u32,
    /// Reset QCSMA activity at every slot boundary instead of carrying it over.
    pub qcsma_reset: bool,
}

impl ScenarioConfig {
    /// A valid single-rate configuration: Bernoulli(0.01) arrivals, always-on
    /// channels, rho = 0.2, FCSMA with `f(x) = e^x`.
    pub fn default_with_links(n: usize) -> Self {
        ScenarioConfig {
            n,
            seed: 1,
            horizon: 1000,
            replications: 1,
            arrival: ArrivalModel::bernoulli(vec![0.01; n]),
            channel: ChannelModel::Constant { c: 1 },
            drop_kind: DropAllowanceKind::Bernoulli,
            rho: vec![0.2; n],
            i_max: 1.0,
            weight_function: WeightFunction::Exp,
            scheduler: SchedulerKind::FcsmaContinuous,
            completion_rule: CompletionRule::Threshold,
            minislots: 1,
            qcsma_reset: false,
        }
    }

    /// Symmetric ON-OFF scenario with Bernoulli arrivals.
    pub fn symmetric(n: usize, lambda: f64, p: f64, rho: f64) -> Self {
        let mut c = Self::default_with_links(n);
        c.arrival.lambda = vec![lambda; n];
        c.channel = if p >= 1.0 {
            ChannelModel::Constant { c: 1 }
        } else {
            ChannelModel::OnOff { p: vec![p; n], c_on: 1 }
        };
        c.rho = vec![rho; n];
        c
    }

    pub fn drop_allowance_model(&self) -> DropAllowanceModel {
        DropAllowanceModel {
            kind: self.drop_kind,
            mean: self.rho.iter().zip(&self.arrival.lambda).map(|(r, l)| r * l).collect(),
            i_max: self.i_max,
        }
    }

    /// Sets every link's arrival rate.
    pub fn set_lambda(&mut self, lambda: f64) {
        self.arrival.lambda = vec![lambda; self.n];
    }

    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errs = Vec::new();
        let mut push = |field: &str, message: String| {
            errs.push(FieldError {
                field: field.to_string(),
                message,
            })
        };
        if self.n == 0 {
            push("n", "must be >= 1".into());
        }
        if self.replications == 0 {
            push("replications", "must be >= 1".into());
        }
        if self.minislots == 0 {
            push("scheduler.minislots", "must be >= 1".into());
        }
        if !(self.i_max.is_finite() && self.i_max > 0.0) {
            push("drop.i_max", format!("must be > 0, got {}", self.i_max));
        }
        if self.arrival.lambda.len() != self.n {
            push("arrival.lambda", format!("expected {} values, got {}", self.n, self.arrival.lambda.len()));
        } else if let Err(e) = self.arrival.validate() {
            push("arrival.lambda", e.to_string());
        }
        if let ArrivalKind::BatchUniform { a_max: 0 } = self.arrival.kind {
            push("arrival.a_max", "must be >= 1".into());
        }
        if let ChannelModel::OnOff { p, .. } = &self.channel {
            if p.len() != self.n {
                push("channel.p", format!("expected {} values, got {}", self.n, p.len()));
            } else if let Some(q) = p.iter().find(|q| !(q.is_finite() && (0.0..=1.0).contains(*q))) {
                push("channel.p", format!("{q} outside [0, 1]"));
            }
        }
        if self.rho.len() != self.n {
            push("drop.rho", format!("expected {} values, got {}", self.n, self.rho.len()));
        } else if let Some(r) = self.rho.iter().find(|r| !(r.is_finite() && (0.0..1.0).contains(*r))) {
            push("drop.rho", format!("{r} outside [0, 1)"));
        } else if self.arrival.lambda.len() == self.n && self.i_max > 0.0 {
            if let Some(m) = self.drop_allowance_model().mean.iter().find(|m| **m > self.i_max) {
                push("drop.i_max", format!("mean allowance rho*lambda = {m} exceeds i_max"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Canonical text form; [`parse_config`] of the result yields `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("n", self.n.to_string());
        kv("seed", self.seed.to_string());
        kv("horizon", self.horizon.to_string());
        kv("replications", self.replications.to_string());
        match self.arrival.kind {
            ArrivalKind::Bernoulli => kv("arrival.kind", "bernoulli".into()),
            ArrivalKind::BatchUniform { a_max } => {
                kv("arrival.kind", "batch-uniform".into());
                kv("arrival.a_max", a_max.to_string());
            }
        }
        kv("arrival.lambda", per_link_text(&self.arrival.lambda));
        match &self.channel {
            ChannelModel::OnOff { p, c_on } => {
                kv("channel.kind", "on-off".into());
                kv("channel.p", per_link_text(p));
                kv("channel.capacity", c_on.to_string());
            }
            ChannelModel::Constant { c } => {
                kv("channel.kind", "constant".into());
                kv("channel.capacity", c.to_string());
            }
        }
        kv("drop.kind", drop_kind_name(self.drop_kind).into());
        kv("drop.rho", per_link_text(&self.rho));
        kv("drop.i_max", self.i_max.to_string());
        kv("weight.function", self.weight_function.name().into());
        kv("scheduler.kind", self.scheduler.name().into());
        kv("scheduler.completion", self.completion_rule.name().into());
        kv("scheduler.minislots", self.minislots.to_string());
        kv("scheduler.qcsma_reset", self.qcsma_reset.to_string());
        s
    }
}

fn drop_kind_name(k: DropAllowanceKind) -> &'static str {
    match k {
        DropAllowanceKind::Bernoulli => "bernoulli",
        DropAllowanceKind::Constant => "constant",
    }
}

fn per_link_text(v: &[f64]) -> String {
    match v.first() {
        Some(first) if v.iter().all(|x| x == first) => first.to_string(),
        _ => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    }
}

pub(crate) const CONFIG_KEYS: &[&str] = &[
    "n",
    "seed",
    "horizon",
    "replications",
    "arrival.kind",
    "arrival.a_max",
    "arrival.lambda",
    "channel.kind",
    "channel.p",
    "channel.capacity",
    "drop.kind",
    "drop.rho",
    "drop.i_max",
    "weight.function",
    "scheduler.kind",
    "scheduler.completion",
    "scheduler.minislots",
    "scheduler.qcsma_reset",
];

/// Splits text into `key -> (line, value)` pairs, reporting syntax errors
/// and duplicates.
pub(crate) fn parse_pairs(text: &str) -> (BTreeMap<String, (usize, String)>, Vec<FieldError>) {
    let mut pairs = BTreeMap::new();
    let mut errs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errs.push(FieldError {
                field: format!("line {}", i + 1),
                message: format!("expected `key = value`, got `{line}`"),
            });
            continue;
        };
        let key = k.trim().to_string();
        if pairs.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
            errs.push(FieldError {
                field: key,
                message: format!("duplicate key on line {}", i + 1),
            });
        }
    }
    (pairs, errs)
}

struct Fields<'a> {
    pairs: &'a BTreeMap<String, (usize, String)>,
    errs: Vec<FieldError>,
}

impl Fields<'_> {
    fn err(&mut self, field: &str, message: impl Into<String>) {
        self.errs.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&mut self, key: &str, default: Option<T>) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key).map(str::to_owned) {
            Some(v) => match v.parse::<T>() {
                Ok(x) => Some(x),
                Err(e) => {
                    self.err(key, format!("cannot parse `{v}`: {e}"));
                    None
                }
            },
            None if default.is_some() => default,
            None => {
                self.err(key, "missing required field");
                None
            }
        }
    }

    fn per_link(&mut self, key: &str, n: Option<usize>, default: Option<f64>) -> Option<Vec<f64>> {
        let Some(v) = self.raw(key).map(str::to_owned) else {
            return match (default, n) {
                (Some(d), Some(n)) => Some(vec![d; n]),
                (Some(_), None) => None,
                (None, _) => {
                    self.err(key, "missing required field");
                    None
                }
            };
        };
        let parsed: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let values = match parsed {
            Ok(x) => x,
            Err(e) => {
                self.err(key, format!("cannot parse `{v}`: {e}"));
                return None;
            }
        };
        let n = n?;
        match values.len() {
            1 => Some(vec![values[0]; n]),
            len if len == n => Some(values),
            len => {
                self.err(key, format!("expected 1 or {n} values, got {len}"));
                None
            }
        }
    }
}

/// Parses and validates a configuration, collecting every field-level error.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Vec<FieldError>> {
    let (pairs, errs) = parse_pairs(text);
    config_from_pairs(&pairs, errs)
}

pub(crate) fn config_from_pairs(
    pairs: &BTreeMap<String, (usize, String)>,
    errs: Vec<FieldError>,
) -> Result<ScenarioConfig, Vec<FieldError>> {
    let mut f = Fields { pairs, errs };
    for (key, (line, _)) in pairs {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            f.err(key, format!("unknown key (line {line})"));
        }
    }

    let n = f.get::<usize>("n", None);
    let seed = f.get::<u64>("seed", Some(1));
    let horizon = f.get::<u64>("horizon", None);
    let replications = f.get::<u32>("replications", Some(1));

    let arrival_kind = match f.get::<String>("arrival.kind", Some("bernoulli".into())).as_deref() {
        Some("bernoulli") => {
            if f.raw("arrival.a_max").is_some() {
                f.err("arrival.a_max", "only valid with arrival.kind = batch-uniform");
            }
            Some(ArrivalKind::Bernoulli)
        }
        Some("batch-uniform") => f.get::<u32>("arrival.a_max", None).map(|a_max| ArrivalKind::BatchUniform { a_max }),
        Some(other) => {
            f.err("arrival.kind", format!("unknown kind `{other}` (expected bernoulli or batch-uniform)"));
            None
        }
        None => None,
    };
    let lambda = f.per_link("arrival.lambda", n, None);

    let capacity = f.get::<u32>("channel.capacity", Some(1));
    let channel = match f.get::<String>("channel.kind", Some("constant".into())).as_deref() {
        Some("constant") => {
            if f.raw("channel.p").is_some() {
                f.err("channel.p", "only valid with channel.kind = on-off");
            }
            capacity.map(|c| ChannelModel::Constant { c })
        }
        Some("on-off") => {
            let p = f.per_link("channel.p", n, None);
            p.zip(capacity).map(|(p, c_on)| ChannelModel::OnOff { p, c_on })
        }
        Some(other) => {
            f.err("channel.kind", format!("unknown kind `{other}` (expected on-off or constant)"));
            None
        }
        None => None,
    };

    let drop_kind = match f.get::<String>("drop.kind", Some("bernoulli".into())).as_deref() {
        Some("bernoulli") => Some(DropAllowanceKind::Bernoulli),
        Some("constant") => Some(DropAllowanceKind::Constant),
        Some(other) => {
            f.err("drop.kind", format!("unknown kind `{other}` (expected bernoulli or constant)"));
            None
        }
        None => None,
    };
    let rho = f.per_link("drop.rho", n, None);
    let i_max = f.get::<f64>("drop.i_max", Some(1.0));
    let weight_function = f.get::<WeightFunction>("weight.function", Some(WeightFunction::Exp));
    let scheduler = f.get::<SchedulerKind>("scheduler.kind", Some(SchedulerKind::FcsmaContinuous));
    let completion_rule = f.get::<CompletionRule>("scheduler.completion", Some(CompletionRule::Threshold));
    let minislots = f.get::<u32>("scheduler.minislots", Some(1));
    let qcsma_reset = f.get::<bool>("scheduler.qcsma_reset", Some(false));

    let mut errs = f.errs;
    let built = (|| {
        Some(ScenarioConfig {
            n: n?,
            seed: seed?,
            horizon: horizon?,
            replications: replications?,
            arrival: ArrivalModel {
                kind: arrival_kind?,
                lambda: lambda?,
            },
            channel: channel?,
            drop_kind: drop_kind?,
            rho: rho?,
            i_max: i_max?,
            weight_function: weight_function?,
            scheduler: scheduler?,
            completion_rule: completion_rule?,
            minislots: minislots?,
            qcsma_reset: qcsma_reset?,
        })
    })();
    match built {
        Some(cfg) if errs.is_empty() => cfg.validate().map(|_| cfg),
        Some(cfg) => {
            if let Err(more) = cfg.validate() {
                errs.extend(more);
            }
            Err(errs)
        }
        None => Err(errs),
    }
}
