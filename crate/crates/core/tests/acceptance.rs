//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line;
//! run with `--nocapture` to see them.

use std::process::Command;
use std::time::{Duration, Instant};

use fcsma::config::ScenarioConfig;
use fcsma::engine::{run_summary, RunSummary, STABLE_SLOPE};
use fcsma::region::{
    duality_oracle, lp_feasibility, membership_symmetric, symmetric_boundary, symmetric_service_capacity,
    GeneralRegionInstance, Membership, SymmetricRegionQuery,
};
use fcsma::sweep::replication_seed;
use fcsma::verify::{sample_lemma2_states, verify_eq8, verify_lemma2, verify_race_convergence};
use fcsma::{link_weight, CompletionRule, LinkObservation, SchedulerKind, WeightFunction};

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: String) {
    let within = elapsed <= limit;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    println!("[{id:>2}] {verdict} {name}: {detail} ({:.2} s, limit {} s)", elapsed.as_secs_f64(), limit.as_secs());
    assert!(pass, "{name}: {detail}");
    assert!(within, "{name}: took {elapsed:?}, limit {limit:?}");
}

fn race_state() -> Vec<LinkObservation> {
    vec![LinkObservation::new(2.0, 1, 1).unwrap(), LinkObservation::new(1.0, 1, 1).unwrap()]
}

fn fading() -> ScenarioConfig {
    let mut c = ScenarioConfig::symmetric(10, 0.024, 0.9, 0.2);
    c.horizon = 200_000;
    c.replications = 5;
    c
}

fn replications(cfg: &ScenarioConfig, lambda: f64) -> Vec<RunSummary> {
    (0..cfg.replications)
        .map(|r| {
            let mut c = cfg.clone();
            c.set_lambda(lambda);
            c.seed = replication_seed(cfg.seed, r, lambda);
            run_summary(&c).unwrap()
        })
        .collect()
}

fn max_drop(s: &RunSummary) -> f64 {
    s.drop_fraction.iter().copied().fold(0.0, f64::max)
}

#[test]
fn a01_nonfading_boundary() {
    let t = Instant::now();
    let star = symmetric_boundary(10, 0.2, 1.0).unwrap();
    report(
        1,
        "non-fading boundary",
        (0.0500..=0.0515).contains(&star),
        t.elapsed(),
        Duration::from_secs(1),
        format!("lambda_star = {star:.6}, expected [0.0500, 0.0515]"),
    );
}

#[test]
fn a02_fading_boundary() {
    let t = Instant::now();
    let star = symmetric_boundary(10, 0.2, 0.9).unwrap();
    report(
        2,
        "fading boundary",
        (0.0295..=0.0305).contains(&star),
        t.elapsed(),
        Duration::from_secs(1),
        format!("lambda_star = {star:.6}, expected [0.0295, 0.0305]"),
    );
}

#[test]
fn a03_race_distribution() {
    let t = Instant::now();
    let r = verify_eq8(&race_state(), WeightFunction::Exp, CompletionRule::Threshold, 1_000_000, 1).unwrap();
    let detail = format!(
        "winner z-scores {:?}, absorption {:.5} vs {:.5} (z {:.2})",
        r.links.iter().map(|l| format!("{:.2}", (l.winner_freq - l.winner_exact) / l.winner_se)).collect::<Vec<_>>(),
        r.absorption_mean,
        r.absorption_exact,
        (r.absorption_mean - r.absorption_exact) / r.absorption_se,
    );
    report(3, "race distribution", r.pass, t.elapsed(), Duration::from_secs(30), detail);
}

#[test]
fn a04_tail_bound() {
    let t = Instant::now();
    let states = sample_lemma2_states(10, 20, 5.0, 50.0, 7);
    let r = verify_lemma2(&states, &[0.1, 0.5], 100_000, 7).unwrap();
    let worst = r
        .states
        .iter()
        .map(|s| (s.tail_freq - s.bound) / s.tail_se.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let wrange = r.states.iter().map(|s| s.wstar).fold((f64::INFINITY, 0.0f64), |(lo, hi), w| (lo.min(w), hi.max(w)));
    let pass = r.pass && states.len() >= 20 && wrange.0 >= 5.0 && wrange.1 <= 50.0;
    let detail = format!(
        "{} checks, W* in [{:.1}, {:.1}], worst excess {:.2} SE",
        r.states.len(),
        wrange.0,
        wrange.1,
        worst
    );
    report(4, "near-max-weight tail bound", pass, t.elapsed(), Duration::from_secs(120), detail);
}

#[test]
fn a05_stable_inside_region() {
    let t = Instant::now();
    let runs = replications(&fading(), 0.024);
    let pass = runs.iter().all(|s| s.drift_slope.unwrap() < STABLE_SLOPE && max_drop(s) <= 0.2 + 0.02);
    let detail = format!(
        "slopes {:?}, max drop {:?}, combined verdict {:?}",
        runs.iter().map(|s| format!("{:.1e}", s.drift_slope.unwrap())).collect::<Vec<_>>(),
        runs.iter().map(|s| format!("{:.4}", max_drop(s))).collect::<Vec<_>>(),
        runs.iter().map(|s| s.stable.unwrap()).collect::<Vec<_>>(),
    );
    report(5, "stability inside the region", pass, t.elapsed(), Duration::from_secs(120), detail);
}

#[test]
fn a06_growth_outside_region() {
    let t = Instant::now();
    let cfg = fading();
    let lambda = 0.040;
    let deficit = lambda * 0.8 - symmetric_service_capacity(10, 0.9, lambda);
    let threshold = 0.25 * 10.0 * deficit * cfg.horizon as f64;
    let runs = replications(&cfg, lambda);
    let pass = runs.iter().all(|s| s.final_total_x >= threshold);
    let detail = format!(
        "final total X {:?} vs threshold {threshold:.1}",
        runs.iter().map(|s| s.final_total_x).collect::<Vec<_>>()
    );
    report(6, "growth outside the region", pass, t.elapsed(), Duration::from_secs(120), detail);
}

#[test]
fn a07_qcsma_comparison() {
    let t = Instant::now();
    let base = fading();
    let seed = replication_seed(base.seed, 0, 0.024);
    let run = |kind: SchedulerKind, m: u32| {
        let mut c = base.clone();
        c.scheduler = kind;
        c.minislots = m;
        c.seed = seed;
        run_summary(&c).unwrap()
    };
    let fcsma = run(SchedulerKind::FcsmaContinuous, 1);
    let q1 = run(SchedulerKind::Qcsma, 1);
    let q64 = run(SchedulerKind::Qcsma, 64);
    let pass = fcsma.stable == Some(true) && q1.stable == Some(false) && q64.mean_total_x < q1.mean_total_x;
    let detail = format!(
        "FCSMA stable {:?} (mean X {:.1}), QCSMA M=1 stable {:?} (mean X {:.1}), M=64 mean X {:.1}",
        fcsma.stable, fcsma.mean_total_x, q1.stable, q1.mean_total_x, q64.mean_total_x
    );
    report(7, "QCSMA comparison", pass, t.elapsed(), Duration::from_secs(300), detail);
}

#[test]
fn a08_minislot_convergence() {
    let t = Instant::now();
    let weights: Vec<f64> = race_state().iter().map(|o| link_weight(o, WeightFunction::Exp)).collect();
    let r = verify_race_convergence(&weights, &[1024], 1_000_000, 3).unwrap();
    let tv = r.points[0].tv_distance;
    report(
        8,
        "mini-slot convergence",
        tv < 0.01,
        t.elapsed(),
        Duration::from_secs(60),
        format!("TV distance at M=1024 = {tv:.5}"),
    );
}

#[test]
fn a09_region_cross_validation() {
    let t = Instant::now();
    let mut checked = 0;
    let mut disagreements = Vec::new();
    for n in [2usize, 3] {
        for &(rho, p) in &[(0.2, 0.9), (0.1, 1.0), (0.4, 0.7)] {
            let star = symmetric_boundary(n, rho, p).unwrap();
            for i in 0..20 {
                let lambda = (star * (0.5 + i as f64 / 19.0)).min(1.0);
                let inst = GeneralRegionInstance::symmetric_bernoulli_on_off(n, lambda, p, rho);
                let lp = lp_feasibility(&inst, 0.0).unwrap();
                let dual = duality_oracle(&inst, i).unwrap();
                if lp.feasible && dual.proves_infeasible() {
                    disagreements.push(format!("dual n={n} rho={rho} p={p} lambda={lambda}"));
                }
                if (lambda - star).abs() < 1e-3 {
                    continue;
                }
                let closed = membership_symmetric(&SymmetricRegionQuery { n, rho, p, lambda }).unwrap();
                if (closed == Membership::Inside) != lp.strict || (closed == Membership::Outside) == lp.feasible {
                    disagreements.push(format!("lp n={n} rho={rho} p={p} lambda={lambda}"));
                }
                checked += 1;
            }
        }
    }
    report(
        9,
        "region cross-validation",
        disagreements.is_empty(),
        t.elapsed(),
        Duration::from_secs(60),
        format!("{checked} grid points, disagreements {disagreements:?}"),
    );
}

#[test]
fn a10_sweep_determinism() {
    let t = Instant::now();
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let cfg = dir.join("acceptance_sweep.cfg");
    let mut base = fading();
    base.horizon = 20_000;
    base.replications = 3;
    let text = base.to_text() + "sweep.axis = lambda\nsweep.values = 0.016,0.024,0.032,0.040\n";
    std::fs::write(&cfg, text).unwrap();
    let sweep = |workers: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_fcsma"))
            .args(["sweep", "--config", cfg.to_str().unwrap(), "--workers", workers])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let first = sweep("1");
    let second = sweep("1");
    let parallel = sweep("4");
    let sorted = |b: &[u8]| {
        let mut lines: Vec<String> = String::from_utf8(b.to_vec()).unwrap().lines().map(String::from).collect();
        lines.sort();
        lines
    };
    let rows = first.iter().filter(|&&b| b == b'\n').count() - 1;
    let pass = rows == 12 && first == second && sorted(&first) == sorted(&parallel);
    let detail = format!(
        "{rows} rows, repeat identical {}, parallel identical {}, parallel byte-identical {}",
        first == second,
        sorted(&first) == sorted(&parallel),
        first == parallel
    );
    report(10, "sweep determinism", pass, t.elapsed(), Duration::from_secs(60), detail);
}
