use std::sync::Arc;

use inls_core::ground_state::{
    gn_quotient, pohozaev_residuals, quintic_soliton, sharp_constant, solve_ground_state,
    solve_ground_state_renormalized, thresholds, GroundStateProfile, GroundStateSummary,
};
use inls_core::{Field, InlsError, PhysParams, RadialGrid};

fn radial(d: usize, r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::radial(d, r_max, n).unwrap())
}

#[test]
fn quintic_soliton_matches_closed_form() {
    let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
    let g = radial(1, 30.0, 4096);
    let prof = solve_ground_state(&p, g.clone(), 1e-10).unwrap();
    let err = prof
        .q
        .iter()
        .zip(g.nodes())
        .map(|(q, &x)| (q - quintic_soliton(x)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "sup error {err:e}");
    assert!((prof.q_origin.unwrap() - 3f64.powf(0.25)).abs() < 1e-10);
    assert!(prof.summary().b_zero_test_mode);
}

#[test]
fn quintic_soliton_on_a_cartesian_grid() {
    let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
    let g = Arc::new(RadialGrid::cartesian_1d(30.0, 4096).unwrap());
    let prof = solve_ground_state(&p, g.clone(), 1e-10).unwrap();
    for (q, &x) in prof.q.iter().zip(g.nodes()) {
        assert!((q - quintic_soliton(x)).abs() < 1e-8);
    }
}

#[test]
fn closed_form_soliton_satisfies_pohozaev() {
    let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
    let g = radial(1, 30.0, 8192);
    let q: Vec<f64> = g.nodes().iter().map(|&x| quintic_soliton(x)).collect();
    let prof = GroundStateProfile::from_samples(p, g.clone(), q).unwrap();
    let (r1, r2) = pohozaev_residuals(&prof);
    assert!(r1 < 1e-8 && r2 < 1e-8, "{r1:e} {r2:e}");

    // the shooting solver's direct constant agrees with grid quadrature of the closed form
    let solved = solve_ground_state(&p, g, 1e-10).unwrap();
    let (a, b) = (sharp_constant(&solved).0, sharp_constant(&prof).0);
    assert!(((a - b) / b).abs() < 1e-8, "{a} vs {b}");
    // 1D sech closed form: ‖Q‖² = √3 π/2
    assert!((solved.mass_q - 3f64.sqrt() * std::f64::consts::FRAC_PI_2).abs() < 1e-11);
}

#[test]
fn pohozaev_and_sharp_constant_d3() {
    let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
    let prof = solve_ground_state(&p, radial(3, 40.0, 2048), 1e-10).unwrap();
    let (r1, r2) = pohozaev_residuals(&prof);
    assert!(r1 < 1e-6 && r2 < 1e-6);
    assert!(r1 < 1e-9 && r2 < 1e-9, "any converged profile: below 10·tol");
    let (direct, closed) = sharp_constant(&prof);
    assert!(((direct - closed) / closed).abs() < 1e-9);
    assert_eq!(prof.c_gn, direct);
}

#[test]
fn perturbations_are_detected() {
    let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
    let g = radial(1, 30.0, 8192);
    // Amplitude scaling multiplies ‖Q‖² and ‖∇Q‖² alike, so only r2 sees it.
    let amp: Vec<f64> = g.nodes().iter().map(|&x| 1.01 * quintic_soliton(x)).collect();
    let (r1, r2) = pohozaev_residuals(&GroundStateProfile::from_samples(p, g.clone(), amp).unwrap());
    assert!(r1 < 1e-8);
    // r2 = 1 − 1.01⁴ exactly
    assert!((r2 - (1.01f64.powi(4) - 1.0)).abs() < 1e-7, "{r2}");
    // A 1% dilation is seen by r1: ‖∇Q‖²/‖Q‖² scales by 1.01².
    let dil: Vec<f64> = g.nodes().iter().map(|&x| quintic_soliton(1.01 * x)).collect();
    let (r1, _) = pohozaev_residuals(&GroundStateProfile::from_samples(p, g, dil).unwrap());
    assert!(r1 > 1e-3 && (r1 - (1.01f64.powi(2) - 1.0)).abs() < 1e-7, "{r1}");
}

#[test]
fn mass_critical_ground_state_has_zero_energy() {
    for (d, b) in [(1, 0.5), (2, 1.0), (3, 0.5)] {
        let p = PhysParams::mass_critical(d, b).unwrap();
        let prof = solve_ground_state(&p, radial(d, 40.0, 2048), 1e-10).unwrap();
        assert!(prof.energy_q.abs() < 1e-8 * prof.kinetic_q, "d={d} b={b}: {}", prof.energy_q);
        assert!(matches!(thresholds(&prof), Err(InlsError::Parameter(_))));
    }
}

#[test]
fn gaussian_quotient_is_below_the_sharp_constant() {
    let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
    let g = radial(3, 40.0, 2048);
    let prof = solve_ground_state(&p, g.clone(), 1e-10).unwrap();
    for w in [0.5, 1.0, 2.0] {
        let gauss = Field::from_real_fn(g.clone(), |r| (-r * r / (w * w)).exp()).unwrap();
        assert!(gn_quotient(&gauss, &p).unwrap() < prof.c_gn);
    }
}

#[test]
fn intercritical_thresholds() {
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let prof = solve_ground_state(&p, radial(3, 40.0, 2048), 1e-10).unwrap();
    let t = thresholds(&prof).unwrap();
    // (dα − (4 − 2b)) / (2(dα + 2b)) = 0.1
    assert!((t.em / (t.grad * t.grad) - 0.1).abs() < 1e-6);
    assert!(((t.x0 - t.grad) / t.grad).abs() < 1e-6);
    // f(x) = x²/2 − C_GN/(α+2) x^{(dα+2b)/2}, evaluated independently
    let c = sharp_constant(&prof).1;
    let f = t.x0 * t.x0 / 2.0 - c / 3.0 * t.x0.powf(2.5);
    assert!(((f - t.em) / t.em).abs() < 1e-6);
    assert_eq!(prof.x0, Some(t.x0));
}

#[test]
fn grid_refinement_and_domain_size_do_not_move_the_profile() {
    let p = PhysParams::new(2, 1.0, 1.5, 1.0).unwrap();
    let coarse = solve_ground_state(&p, radial(2, 30.0, 1024), 1e-10).unwrap();
    let fine = solve_ground_state(&p, radial(2, 30.0, 2048), 1e-10).unwrap();
    assert!(((coarse.c_gn - fine.c_gn) / fine.c_gn).abs() < 1e-7);

    let wide = solve_ground_state(&p, radial(2, 45.0, 1536), 1e-10).unwrap();
    for (a, b) in coarse.q.iter().zip(&wide.q) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn renormalization_cross_check() {
    let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
    let g = radial(1, 30.0, 4096);
    let shoot = solve_ground_state(&p, g.clone(), 1e-10).unwrap();
    let renorm = solve_ground_state_renormalized(&p, g, 1e-10, 500).unwrap();
    let gap = shoot.q.iter().zip(&renorm.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-6, "{gap:e}");

    // with b > 0 the discrete solution carries the r^{2−b} cusp at second order
    let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
    let g = radial(3, 40.0, 4096);
    let shoot = solve_ground_state(&p, g.clone(), 1e-10).unwrap();
    let renorm = solve_ground_state_renormalized(&p, g, 1e-10, 500).unwrap();
    let gap = shoot.q.iter().zip(&renorm.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-3 * shoot.q_origin.unwrap(), "{gap:e}");
    assert!(((renorm.mass_q - shoot.mass_q) / shoot.mass_q).abs() < 1e-5);
}

#[test]
fn summary_serializes() {
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let prof = solve_ground_state(&p, radial(3, 40.0, 1024), 1e-10).unwrap();
    let json = serde_json::to_string(&prof.summary()).unwrap();
    let back: GroundStateSummary = serde_json::from_str(&json).unwrap();
    assert_eq!(back.c_gn_direct, prof.c_gn);
    assert!(back.thresholds.is_some());
}
