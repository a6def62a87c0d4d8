//! Parameter sweeps over one configuration axis, written as CSV.
//!
//! A sweep file is a scenario configuration plus three extra keys:
//!
//! ```text
//! sweep.axis = lambda          # lambda | rho | p | minislots | n | horizon
//! sweep.values = 0.01,0.02,0.03
//! sweep.out = results.csv      # optional
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{config_from_pairs, parse_pairs, ScenarioConfig};
use crate::engine::{run_summary, RunSummary};
use crate::error::{Error, FieldError, Result};
use crate::processes::ChannelModel;
use crate::rng::mix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    Rho,
    P,
    Minislots,
    N,
    Horizon,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Rho => "rho",
            SweepAxis::P => "p",
            SweepAxis::Minislots => "minislots",
            SweepAxis::N => "n",
            SweepAxis::Horizon => "horizon",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "lambda" => SweepAxis::Lambda,
            "rho" => SweepAxis::Rho,
            "p" => SweepAxis::P,
            "minislots" => SweepAxis::Minislots,
            "n" => SweepAxis::N,
            "horizon" => SweepAxis::Horizon,
            _ => return Err(format!("unknown axis `{s}` (expected lambda, rho, p, minislots, n or horizon)")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub out: Option<PathBuf>,
}

fn is_integer(v: f64) -> bool {
    v.is_finite() && v >= 0.0 && v.fract() == 0.0
}

fn uniform(v: &[f64]) -> Option<f64> {
    let first = *v.first()?;
    v.iter().all(|x| *x == first).then_some(first)
}

impl SweepSpec {
    /// Configuration for one axis value, before the replication seed is applied.
    pub fn config_at(&self, value: f64) -> std::result::Result<ScenarioConfig, String> {
        let mut c = self.base.clone();
        match self.axis {
            SweepAxis::Lambda => c.set_lambda(value),
            SweepAxis::Rho => c.rho = vec![value; c.n],
            SweepAxis::P => {
                let c_on = match c.channel {
                    ChannelModel::OnOff { c_on, .. } => c_on,
                    ChannelModel::Constant { c } => c,
                };
                c.channel = ChannelModel::OnOff { p: vec![value; c.n], c_on };
            }
            SweepAxis::Minislots => {
                if !is_integer(value) {
                    return Err(format!("minislots must be a non-negative integer, got {value}"));
                }
                c.minislots = value as u32;
            }
            SweepAxis::Horizon => {
                if !is_integer(value) {
                    return Err(format!("horizon must be a non-negative integer, got {value}"));
                }
                c.horizon = value as u64;
            }
            SweepAxis::N => {
                if !is_integer(value) {
                    return Err(format!("n must be a non-negative integer, got {value}"));
                }
                let n = value as usize;
                let resize = |v: &[f64], name: &str| {
                    uniform(v)
                        .map(|x| vec![x; n])
                        .ok_or_else(|| format!("cannot resize non-uniform {name} to n = {n}"))
                };
                c.arrival.lambda = resize(&c.arrival.lambda, "arrival.lambda")?;
                c.rho = resize(&c.rho, "drop.rho")?;
                if let ChannelModel::OnOff { p, c_on } = &c.channel {
                    c.channel = ChannelModel::OnOff { p: resize(p, "channel.p")?, c_on: *c_on };
                }
                c.n = n;
            }
        }
        c.validate().map_err(|errs| {
            errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        })?;
        Ok(c)
    }
}

/// Seed for replication `r` at `value`: independent of which other values
/// are in the sweep.
pub fn replication_seed(base: u64, replication: u32, value: f64) -> u64 {
    base ^ mix64(mix64(u64::from(replication)) ^ value.to_bits())
}

pub fn parse_sweep(text: &str) -> std::result::Result<SweepSpec, Vec<FieldError>> {
    let (mut pairs, mut errs) = parse_pairs(text);
    let sweep: BTreeMap<String, (usize, String)> = pairs
        .iter()
        .filter(|(k, _)| k.starts_with("sweep."))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    pairs.retain(|k, _| !k.starts_with("sweep."));

    let mut err = |field: &str, message: String| {
        errs.push(FieldError {
            field: field.into(),
            message,
        })
    };
    for (k, (line, _)) in &sweep {
        if !["sweep.axis", "sweep.values", "sweep.out"].contains(&k.as_str()) {
            err(k, format!("unknown key (line {line})"));
        }
    }
    let axis = match sweep.get("sweep.axis") {
        Some((_, v)) => v.parse::<SweepAxis>().map_err(|e| err("sweep.axis", e)).ok(),
        None => {
            err("sweep.axis", "missing required field".into());
            None
        }
    };
    let values = match sweep.get("sweep.values") {
        Some((_, v)) if v.is_empty() => Some(Vec::new()),
        Some((_, v)) => v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err("sweep.values", format!("cannot parse `{v}`: {e}")))
            .ok(),
        None => {
            err("sweep.values", "missing required field".into());
            None
        }
    };
    let out = sweep.get("sweep.out").map(|(_, v)| PathBuf::from(v));
    let base = config_from_pairs(&pairs, errs);
    match (base, axis, values) {
        (Ok(base), Some(axis), Some(values)) => Ok(SweepSpec { base, axis, values, out }),
        (Err(errs), _, _) => Err(errs),
        // Sweep-key errors were already pushed and would have failed the base.
        _ => unreachable!("sweep key errors are reported through the base configuration"),
    }
}

/// One row of sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub replication: u32,
    pub seed: u64,
    pub result: std::result::Result<RunSummary, String>,
}

pub const SWEEP_HEADER: [&str; 13] = [
    "axis",
    "value",
    "replication",
    "seed",
    "mean_total_x",
    "mean_total_g",
    "final_total_x",
    "drift_slope",
    "max_drop_fraction",
    "drop_fractions",
    "stable",
    "slots",
    "error",
];

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs every `(value, replication)` pair. Rows come back in value-major
/// order regardless of `workers`.
pub fn run_sweep_rows(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(f64, u32)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.base.replications).map(move |r| (v, r)))
        .collect();
    let run = |&(value, replication): &(f64, u32)| {
        let seed = replication_seed(spec.base.seed, replication, value);
        let result = spec.config_at(value).and_then(|mut cfg| {
            cfg.seed = seed;
            run_summary(&cfg).map_err(|e| e.to_string())
        });
        SweepRow {
            value,
            replication,
            seed,
            result,
        }
    };
    if workers <= 1 {
        return Ok(jobs.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(run).collect()))
}

pub fn rows_to_csv(axis: SweepAxis, rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        let mut rec = vec![
            axis.name().to_string(),
            row.value.to_string(),
            row.replication.to_string(),
            row.seed.to_string(),
        ];
        match &row.result {
            Ok(s) => {
                let max_drop = s.drop_fraction.iter().copied().fold(0.0, f64::max);
                rec.extend([
                    s.mean_total_x.to_string(),
                    s.mean_total_g.to_string(),
                    s.final_total_x.to_string(),
                    opt_f64(s.drift_slope),
                    max_drop.to_string(),
                    s.drop_fraction.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                    s.stable.map(|b| b.to_string()).unwrap_or_default(),
                    s.slots.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Runs the sweep and renders the summary CSV.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<String> {
    let rows = run_sweep_rows(spec, workers)?;
    rows_to_csv(spec.axis, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
n = 3
horizon = 200
replications = 2
arrival.lambda = 0.1
drop.rho = 0.2
";

    #[test]
    fn empty_values_header_only() {
        let spec = parse_sweep(&format!("{BASE}sweep.axis = lambda\nsweep.values =\n")).unwrap();
        let csv = run_sweep(&spec, 1).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("axis,value,replication"));
    }

    #[test]
    fn bad_values_become_error_rows() {
        let spec = parse_sweep(&format!("{BASE}sweep.axis = lambda\nsweep.values = 0.1,1.5\n")).unwrap();
        let rows = run_sweep_rows(&spec, 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].result.is_ok());
        assert!(rows[2].result.as_ref().unwrap_err().contains("arrival.lambda"));
        let csv = rows_to_csv(spec.axis, &rows).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn seeds_do_not_depend_on_other_values() {
        let a = parse_sweep(&format!("{BASE}sweep.axis = lambda\nsweep.values = 0.1\n")).unwrap();
        let b = parse_sweep(&format!("{BASE}sweep.axis = lambda\nsweep.values = 0.05,0.1\n")).unwrap();
        let ra = run_sweep_rows(&a, 1).unwrap();
        let rb = run_sweep_rows(&b, 1).unwrap();
        assert_eq!(ra[..], rb[2..]);
    }

    #[test]
    fn sweep_key_errors() {
        let errs = parse_sweep(&format!("{BASE}sweep.axis = colour\nsweep.bogus = 1\n")).unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"sweep.axis"));
        assert!(fields.contains(&"sweep.values"));
        assert!(fields.contains(&"sweep.bogus"));
    }

    #[test]
    fn axis_application() {
        let spec = parse_sweep(&format!("{BASE}sweep.axis = n\nsweep.values = 5\n")).unwrap();
        let c = spec.config_at(5.0).unwrap();
        assert_eq!(c.n, 5);
        assert_eq!(c.rho.len(), 5);
        assert!(spec.config_at(2.5).is_err());
        let spec = parse_sweep(&format!("{BASE}sweep.axis = p\nsweep.values = 0.9\n")).unwrap();
        assert_eq!(spec.config_at(0.9).unwrap().channel, ChannelModel::OnOff { p: vec![0.9; 3], c_on: 1 });
    }
}
