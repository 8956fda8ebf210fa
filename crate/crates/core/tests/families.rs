use binormal_core::curve::{integrate, DEFAULT_S_MAX, DEFAULT_TOL};
use binormal_core::families::*;
use binormal_core::geom3::rho;
use binormal_core::selfsimilar::extract_trace;
use binormal_core::Vec3;

#[test]
fn plane_spiral_near_figure_two() {
    let ps = find_plane_spiral(10.0, 1e-6).unwrap();
    assert!(ps.a3_plus.abs() <= 1e-5);
    assert!((ps.delta0 - 0.956).abs() <= 0.05, "{ps:?}");
    let mirror = find_plane_spiral(-10.0, 1e-6).unwrap();
    assert!((mirror.delta0 + ps.delta0).abs() <= 1e-5, "{mirror:?}");
}

#[test]
fn figure_parameter_points() {
    for (a, c0, sign, alpha) in [(3.0, 1.8, 1.0, -6.24), (3.0, 0.4, 1.0, -3.16), (10.0, 4.0, -1.0, -6.0)] {
        let (traj, pt) = mixed_family(a, c0, sign, DEFAULT_S_MAX).unwrap();
        assert!((pt.alpha - alpha).abs() < 1e-12);
        assert!(pt.symmetry_defect <= 1e-8 && pt.sign_relation_defect <= 1e-5);
        assert!(check_g3_ode(&traj).max_residual <= 1e-6);
    }
    for (a, delta) in [(10.0, 0.956), (10.0, -0.1), (50.0, 0.9)] {
        let (_, pt) = odd_family(a, delta, DEFAULT_S_MAX).unwrap();
        assert!(pt.oddness_defect <= 1e-8, "{pt:?}");
    }
}

fn agrees_with_brute_force(a: f64, c0: f64, sign: f64) -> usize {
    let (traj, _) = mixed_family(a, c0, sign, DEFAULT_S_MAX).unwrap();
    let found = detect_self_intersection(&traj);
    let near: Vec<&Crossing> = found.crossings.iter().filter(|c| c.s2 <= 10.0).collect();
    let brute = brute_force_intersections(&traj, 10.0, 0.02, 1e-4);
    assert_eq!(near.len(), brute.len(), "a = {a}, c0 = {c0}");
    for c in &near {
        assert!(c.distance < 1e-4);
        assert!(brute
            .iter()
            .any(|b| (b.s1 - c.s1).abs() < 1e-6 && (b.s2 - c.s2).abs() < 1e-6));
    }
    near.len()
}

#[test]
fn self_intersections() {
    assert!(agrees_with_brute_force(3.0, 6.0, 1.0) >= 1);
    agrees_with_brute_force(3.0, 1.8, 1.0);
    assert_eq!(agrees_with_brute_force(3.0, 1.5, -1.0), 0);
    let (traj, pt) = mixed_family(3.0, 1.5, -1.0, DEFAULT_S_MAX).unwrap();
    assert!((pt.alpha - 0.75).abs() < 1e-12);
    assert_eq!(detect_self_intersection(&traj).g3_monotone, Some(true));

    // without the mixed symmetry the pairwise scan is used
    let traj = integrate(Vec3::new(0.0, 0.0, 2.0), Vec3::E1, 10.0, 20.0, DEFAULT_TOL).unwrap();
    assert_eq!(detect_self_intersection(&traj).method, IntersectionMethod::BruteForce);
}

#[test]
fn singular_solution_and_nonuniqueness() {
    let sol = build_singular_solution(0.8, DEFAULT_S_MAX).unwrap();
    let ck = sol.checks();
    assert!(ck.continuity_defect <= 1e-12 && ck.jump_defect <= 1e-12);
    assert!(ck.max_residual <= 1e-8);
    assert_eq!(sol.a_minus, rho(extract_trace(&sol.base).unwrap().a_minus()));

    let nu = demonstrate_nonuniqueness(0.8).unwrap();
    assert!(nu.corner_defect <= 1e-5);
    assert!(nu.regular_residual <= 1e-8 && nu.singular.max_residual <= 1e-8);
    assert!(nu.sup_difference >= 0.1);
}
