use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fcsma::engine::run_horizon;
use fcsma::region::{
    duality_oracle, lp_feasibility, membership_symmetric, symmetric_boundary, GeneralRegionInstance,
    SymmetricRegionQuery,
};
use fcsma::verify::{
    sample_lemma2_states, verify_eq8, verify_lemma2, verify_race_convergence, verify_stability, Z_TOL,
};
use fcsma::{parse_config, parse_sweep, CompletionRule, Error, LinkObservation, WeightFunction};

#[derive(Parser)]
#[command(name = "fcsma", version, about = "FCSMA scheduling simulator and region calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario or sweep configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (CSV); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetric region boundary and membership, or LP feasibility of an instance file.
    Region {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Candidate common arrival rate to classify.
        #[arg(long)]
        lambda: Option<f64>,
        /// General instance file (see README).
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Extra service margin required by the LP.
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
    },
    /// Run one scenario; writes the per-slot trace and prints a summary.
    Simulate(Common),
    /// Run a parameter sweep and write the summary CSV.
    Sweep(Common),
    /// Monte-Carlo verification reports.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
}

#[derive(Args, Clone)]
struct RaceState {
    /// Virtual queue lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 1.0])]
    x: Vec<f64>,
    /// Channel capacities.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 1])]
    c: Vec<u32>,
    /// Arrivals.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 1])]
    a: Vec<u32>,
    #[arg(long, default_value = "exp")]
    weight: WeightFunction,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Check {
    /// Race winner, delivery and absorption statistics against exact formulas.
    Eq8 {
        #[command(flatten)]
        state: RaceState,
        #[arg(long, default_value = "threshold")]
        rule: CompletionRule,
    },
    /// Near-max-weight tail probability against its exponential bound.
    Lemma2 {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        states: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5])]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        wmin: f64,
        #[arg(long, default_value_t = 50.0)]
        wmax: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Bounded queues inside the region, linear growth outside it.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        inside: f64,
        #[arg(long)]
        outside: f64,
    },
    /// Mini-slot winner distribution against the continuous race.
    RaceConvergence {
        #[command(flatten)]
        state: RaceState,
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 8, 64, 1024])]
        minislots: Vec<u32>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(path)?)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn require_config(common: &Common) -> Result<String, Error> {
    let path = common.config.as_deref().ok_or_else(|| Error::Parameter {
        name: "config",
        reason: "--config <path> is required".into(),
    })?;
    read(path)
}

fn observations(s: &RaceState) -> Result<Vec<LinkObservation>, Error> {
    if s.x.len() != s.c.len() || s.x.len() != s.a.len() {
        return Err(Error::Parameter {
            name: "x/c/a",
            reason: "need the same number of values for --x, --c and --a".into(),
        });
    }
    s.x.iter()
        .zip(&s.c)
        .zip(&s.a)
        .map(|((&x, &c), &a)| LinkObservation::new(x, c, a))
        .collect()
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Region { n, rho, p, lambda, instance, slack } => {
            if let Some(path) = instance {
                let inst = GeneralRegionInstance::from_text(&read(&path)?)?;
                let lp = lp_feasibility(&inst, slack)?;
                let dual = duality_oracle(&inst, 1)?;
                println!("feasible: {}", lp.feasible);
                println!("strict: {}", lp.strict);
                println!("optimal_slack: {}", lp.optimal_slack);
                println!("service: {:?}", lp.service);
                println!("demand: {:?}", inst.demand());
                println!("dual_directions: {}", dual.directions);
                println!("dual_max_violation: {}", dual.max_violation);
                if let Some(w) = &dual.violating {
                    println!("dual_violating_direction: {w:?}");
                }
                return Ok(true);
            }
            let (Some(n), Some(rho)) = (n, rho) else {
                return Err(Error::Parameter {
                    name: "region",
                    reason: "give --n and --rho (and optionally --p, --lambda), or --instance <path>".into(),
                });
            };
            println!("lambda_star: {:.6}", symmetric_boundary(n, rho, p)?);
            if let Some(lambda) = lambda {
                let m = membership_symmetric(&SymmetricRegionQuery { n, rho, p, lambda })?;
                println!("membership: {}", m.name());
            }
            Ok(true)
        }
        Command::Simulate(common) => {
            let mut cfg = parse_config(&require_config(&common)?).map_err(Error::Config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let out = run_horizon(&cfg)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["slot", "total_x", "total_g", "winner", "absorption_time", "dummy", "arrivals", "served", "dropped"])?;
            for m in &out.trace {
                w.write_record([
                    m.slot.to_string(),
                    m.total_x.to_string(),
                    m.total_g.to_string(),
                    m.winner.map(|x| x.to_string()).unwrap_or_default(),
                    m.absorption_time.to_string(),
                    m.dummy.to_string(),
                    m.arrivals.to_string(),
                    m.served.to_string(),
                    m.dropped.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            if let Some(path) = &common.out {
                fs::write(path, bytes)?;
            }
            let s = &out.summary;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "undefined".into());
            println!("slots: {}", s.slots);
            println!("mean_total_x: {}", s.mean_total_x);
            println!("mean_total_g: {}", s.mean_total_g);
            println!("final_total_x: {}", s.final_total_x);
            println!("drift_slope: {}", opt(s.drift_slope));
            println!("drop_fraction: {:?}", s.drop_fraction);
            println!("stable: {}", s.stable.map(|b| b.to_string()).unwrap_or_else(|| "undefined".into()));
            Ok(true)
        }
        Command::Sweep(common) => {
            let mut spec = parse_sweep(&require_config(&common)?).map_err(Error::Config)?;
            if let Some(seed) = common.seed {
                spec.base.seed = seed;
            }
            let csv = fcsma::run_sweep(&spec, common.workers)?;
            write_out(common.out.as_deref().or(spec.out.as_deref()), &csv)?;
            Ok(true)
        }
        Command::Verify { check } => match check {
            Check::Eq8 { state, rule } => {
                let obs = observations(&state)?;
                let r = verify_eq8(&obs, state.weight, rule, state.samples, state.seed)?;
                println!("samples: {}  rule: {}  Z: {}", r.samples, r.rule.name(), r.z);
                println!("link,winner_freq,winner_exact,winner_se,served_freq,served_exact,served_se,served_closed_form");
                for l in &r.links {
                    println!(
                        "{},{},{},{},{},{},{},{}",
                        l.link, l.winner_freq, l.winner_exact, l.winner_se, l.served_freq, l.served_exact, l.served_se, l.served_closed_form
                    );
                }
                println!(
                    "absorption_mean: {} exact: {} se: {}",
                    r.absorption_mean, r.absorption_exact, r.absorption_se
                );
                println!("closed_form_gap: {}", r.closed_form_gap);
                println!("{} (tolerance {Z_TOL} standard errors)", if r.pass { "PASS" } else { "FAIL" });
                Ok(r.pass)
            }
            Check::Lemma2 { n, states, epsilon, wmin, wmax, samples, seed } => {
                let st = sample_lemma2_states(n, states, wmin, wmax, seed);
                let r = verify_lemma2(&st, &epsilon, samples, seed)?;
                println!("wstar,epsilon,bound,tail_freq,tail_se,pass");
                for s in &r.states {
                    println!("{},{},{},{},{},{}", s.wstar, s.epsilon, s.bound, s.tail_freq, s.tail_se, s.pass);
                }
                println!("{} ({} samples per state)", if r.pass { "PASS" } else { "FAIL" }, r.samples_per_state);
                Ok(r.pass)
            }
            Check::Stability { common, inside, outside } => {
                let mut cfg = parse_config(&require_config(&common)?).map_err(Error::Config)?;
                if let Some(seed) = common.seed {
                    cfg.seed = seed;
                }
                let r = verify_stability(&cfg, inside, outside)?;
                println!("growth_threshold: {}", r.growth_threshold);
                println!("set,lambda,replication,mean_total_x,final_total_x,drift_slope,max_drop_fraction,stable,pass");
                for (name, lambda, runs) in [("inside", inside, &r.inside), ("outside", outside, &r.outside)] {
                    for run in runs {
                        let s = &run.summary;
                        println!(
                            "{name},{lambda},{},{},{},{},{},{},{}",
                            run.replication,
                            s.mean_total_x,
                            s.final_total_x,
                            s.drift_slope.unwrap_or(f64::NAN),
                            s.drop_fraction.iter().copied().fold(0.0, f64::max),
                            s.stable.unwrap_or(false),
                            run.pass
                        );
                    }
                }
                println!("{}", if r.pass { "PASS" } else { "FAIL" });
                Ok(r.pass)
            }
            Check::RaceConvergence { state, minislots } => {
                let obs = observations(&state)?;
                let weights: Vec<f64> = obs.iter().map(|o| fcsma::link_weight(o, state.weight)).collect();
                let r = verify_race_convergence(&weights, &minislots, state.samples, state.seed)?;
                println!("minislots,tv_distance,noise");
                for p in &r.points {
                    println!("{},{},{}", p.minislots, p.tv_distance, p.noise);
                }
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
