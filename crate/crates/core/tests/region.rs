use fcsma::region::{
    duality_oracle, lp_feasibility, membership_symmetric, symmetric_boundary, GeneralRegionInstance, Membership,
    SymmetricRegionQuery,
};

fn grid(center: f64) -> Vec<f64> {
    (0..20).map(|i| (center * (0.5 + i as f64 / 19.0)).min(1.0)).collect()
}

#[test]
fn lp_agrees_with_closed_form_on_symmetric_grids() {
    for n in [2usize, 3] {
        for &(rho, p) in &[(0.2, 0.9), (0.1, 1.0), (0.4, 0.7)] {
            let star = symmetric_boundary(n, rho, p).unwrap();
            for lambda in grid(star) {
                if (lambda - star).abs() < 1e-3 {
                    continue;
                }
                let closed = membership_symmetric(&SymmetricRegionQuery { n, rho, p, lambda }).unwrap();
                let inst = GeneralRegionInstance::symmetric_bernoulli_on_off(n, lambda, p, rho);
                let lp = lp_feasibility(&inst, 0.0).unwrap();
                assert_eq!(closed == Membership::Inside, lp.strict, "n={n} rho={rho} p={p} lambda={lambda}");
                assert_eq!(closed == Membership::Outside, !lp.feasible, "n={n} rho={rho} p={p} lambda={lambda}");
            }
        }
    }
}

#[test]
fn lp_slack_matches_symmetric_service_gap() {
    // The best common margin is the per-link share of the busy probability
    // minus the demand.
    let (n, rho, p, lambda) = (3usize, 0.2, 0.9, 0.15);
    let lp = lp_feasibility(&GeneralRegionInstance::symmetric_bernoulli_on_off(n, lambda, p, rho), 0.0).unwrap();
    let share = (1.0 - (1.0 - p * lambda).powi(n as i32)) / n as f64;
    assert!((lp.optimal_slack - (share - lambda * (1.0 - rho))).abs() < 1e-9);
}

#[test]
fn duality_never_contradicts_lp() {
    for n in [2usize, 3] {
        let (rho, p) = (0.2, 0.9);
        let star = symmetric_boundary(n, rho, p).unwrap();
        for (i, lambda) in grid(star).into_iter().enumerate() {
            let inst = GeneralRegionInstance::symmetric_bernoulli_on_off(n, lambda, p, rho);
            let lp = lp_feasibility(&inst, 0.0).unwrap();
            let dual = duality_oracle(&inst, i as u64).unwrap();
            if lp.feasible {
                assert!(!dual.proves_infeasible(), "n={n} lambda={lambda}: {:?}", dual.violating);
            } else if lambda > star + 1e-3 {
                assert!(dual.proves_infeasible(), "n={n} lambda={lambda}");
            }
        }
    }
}

#[test]
fn asymmetric_instances_agree() {
    // Two links with different rates and channels; the dual oracle's best
    // violation sign must match the LP margin sign away from zero.
    for (i, &(l0, l1, p0, p1, rho)) in [(0.3, 0.1, 0.9, 0.5, 0.1), (0.6, 0.5, 0.8, 0.9, 0.2), (0.2, 0.2, 0.3, 0.3, 0.0)]
        .iter()
        .enumerate()
    {
        let arrivals = vec![
            (vec![0, 0], (1.0 - l0) * (1.0 - l1)),
            (vec![1, 0], l0 * (1.0 - l1)),
            (vec![0, 1], (1.0 - l0) * l1),
            (vec![1, 1], l0 * l1),
        ];
        let channels = vec![
            (vec![0, 0], (1.0 - p0) * (1.0 - p1)),
            (vec![2, 0], p0 * (1.0 - p1)),
            (vec![0, 1], (1.0 - p0) * p1),
            (vec![2, 1], p0 * p1),
        ];
        let inst = GeneralRegionInstance { arrivals, channels, lambda: vec![l0, l1], rho: vec![rho, rho] };
        let lp = lp_feasibility(&inst, 0.0).unwrap();
        let dual = duality_oracle(&inst, 100 + i as u64).unwrap();
        if lp.feasible {
            assert!(!dual.proves_infeasible());
        } else if lp.optimal_slack < -1e-4 {
            assert!(dual.proves_infeasible());
        }
    }
}

#[test]
fn six_link_instance_solves() {
    let inst = GeneralRegionInstance::symmetric_bernoulli_on_off(6, 0.05, 0.9, 0.2);
    let lp = lp_feasibility(&inst, 0.0).unwrap();
    assert!(lp.strict);
    assert_eq!(inst.arrivals.len() * inst.channels.len(), 4096);
}
