mod common;

use rand::Rng;

use common::{engineered_pair, pure_pair, Layout};
use usd::closed_form::{
    fidelity_inconclusive, fidelity_inconclusive_factored, fidelity_window, single_detection_window,
};
use usd::instances::{example1_states, example2_states, weighted};
use usd::optimality::{build_certificate, orthogonal_parts_detected, projective_part_law, rank_law_check};
use usd::oracle::{oracle_optimize, OracleConfig};
use usd::outcome::Branch;
use usd::pipeline::dispatch;
use usd::random::{random_skew_pair_4d, seeded};
use usd::solver4d::all_accepted_4d;

#[test]
fn optimal_measurements_obey_the_structural_laws() {
    let mut rng = seeded(31);
    for k in 0..30 {
        let p1 = 0.05 + 0.9 * rng.random::<f64>();
        let s = if k % 3 == 0 { pure_pair(&mut rng, 3, p1).0 } else { random_skew_pair_4d(&mut rng, p1) };
        let out = dispatch(&s).unwrap();
        assert!(out.is_optimal());
        assert!(rank_law_check(&out.measurement, &s).unwrap().holds, "pair {k}");
        let pp = projective_part_law(&out.measurement, &s).unwrap();
        assert!(pp.holds, "pair {k}: {pp:?}");
    }
}

#[test]
fn lifted_solutions_match_the_oracle_on_reducible_pairs() {
    let mut rng = seeded(32);
    let mut reduced = 0;
    for k in 0..20 {
        let layout = Layout::random(&mut rng);
        let p1 = 0.15 + 0.7 * rng.random::<f64>();
        let s = engineered_pair(&mut rng, layout, p1);
        let out = dispatch(&s).unwrap();
        assert!(out.is_optimal(), "pair {k} {layout:?}: {:?}", out.warnings);
        let o = oracle_optimize(&s, &OracleConfig::default()).unwrap();
        assert!((out.success - o.success).abs() < 1e-7, "pair {k}: {} vs {}", out.success, o.success);
        assert!(orthogonal_parts_detected(&out.measurement, &s).unwrap() < 1e-9);
        if layout.orth1 + layout.orth2 > 0 {
            reduced += 1;
            let z = build_certificate(&out.measurement, &s).unwrap();
            assert!(z.used_skew_projection);
            assert!(z.residuals.max() < 1e-7);
        }
    }
    assert!(reduced > 5);
}

#[test]
fn exactly_one_family_member_is_accepted_on_generic_pairs() {
    let mut rng = seeded(33);
    for k in 0..40 {
        let s = random_skew_pair_4d(&mut rng, 0.05 + 0.9 * (k as f64 + 0.5) / 40.0);
        let all = all_accepted_4d(&s).unwrap();
        assert_eq!(all.len(), 1, "pair {k}: {:?}", all.iter().map(|o| o.branch).collect::<Vec<_>>());
    }
}

#[test]
fn single_detection_stops_at_the_window_edge() {
    let tol = usd::linalg::ToleranceContext::default();
    for (rho1, rho2) in [example1_states(), example2_states()] {
        let w = single_detection_window(&rho1, &rho2, &tol).unwrap();
        let inside = dispatch(&weighted(&rho1, &rho2, w.upper * (1.0 - 1e-6))).unwrap();
        assert_eq!(inside.branch, Branch::SingleDetectGamma2);
        let outside = dispatch(&weighted(&rho1, &rho2, w.upper + 1e-3)).unwrap();
        assert_ne!(outside.branch, Branch::SingleDetectGamma2);
    }
}

#[test]
fn both_fidelity_routes_agree_inside_the_window() {
    let tol = usd::linalg::ToleranceContext::default();
    let mut rng = seeded(34);
    let mut checked = 0;
    while checked < 10 {
        let s = random_skew_pair_4d(&mut rng, 0.5);
        let (rho1, rho2) = (s.gamma1().scaled(2.0), s.gamma2().scaled(2.0));
        let w = fidelity_window(&rho1, &rho2, &tol).unwrap();
        if w.empty {
            continue;
        }
        let s = weighted(&rho1, &rho2, 0.5 * (w.lower + w.upper));
        let a = fidelity_inconclusive(&s).unwrap();
        let b = fidelity_inconclusive_factored(&s).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-8);
        checked += 1;
    }
}
