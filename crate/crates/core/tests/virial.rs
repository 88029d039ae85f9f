use std::sync::Arc;

use inls_core::cutoffs::{build_1d_cutoff, build_radial_cutoff, chi_profile};
use inls_core::ground_state::solve_ground_state;
use inls_core::observables::{kinetic, mass, observables, potential};
use inls_core::virial::{
    bound_1d, localized_bound_general, localized_bound_mass_critical, mass_critical_convexity,
    radial_sobolev_constant, radial_sobolev_ratio, standard_identity, trajectory_consistency, virial_first_derivative,
    virial_second_derivative, virial_value, FFunction, Weight,
};
use inls_core::{Field, InlsError, PhysParams, RadialGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn line(r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::cartesian_1d(r_max, n).unwrap())
}

fn radial(d: usize, r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::radial(d, r_max, n).unwrap())
}

fn bump(x: f64, w: f64) -> f64 {
    let s = x / w;
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

#[test]
fn zero_field_and_gaussian_moment() {
    let g = line(10.0, 2048);
    assert_eq!(virial_value(&Field::zeros(g.clone()), &Weight::Quadratic).unwrap(), 0.0);
    let u = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
    let want = (std::f64::consts::FRAC_PI_2).sqrt() / 4.0;
    assert!((virial_value(&u, &Weight::Quadratic).unwrap() - want).abs() < 1e-12);
}

#[test]
fn cutoff_weight_equals_variance_inside_its_core() {
    let g = radial(3, 20.0, 2048);
    let u = Field::from_real_fn(g, |r| bump(r, 3.0)).unwrap();
    let v = virial_value(&u, &Weight::Quadratic).unwrap();
    for r in [1.5, 2.0, 4.0] {
        let vr = virial_value(&u, &Weight::Cutoff(build_radial_cutoff(r).unwrap())).unwrap();
        if r >= 3.0 {
            assert!((vr - v).abs() < 1e-14 * v);
        } else {
            assert!(vr < v);
        }
    }
}

#[test]
fn first_derivative_oracles() {
    let g = line(12.0, 4096);
    let real = Field::from_real_fn(g.clone(), |x| (-x * x).exp()).unwrap();
    assert_eq!(virial_first_derivative(&real, &Weight::Quadratic).unwrap(), 0.0);
    let k = 1.7;
    let centred = Field::from_fn(g.clone(), |x| Complex64::from_polar((-x * x).exp(), k * x)).unwrap();
    assert!(virial_first_derivative(&centred, &Weight::Quadratic).unwrap().abs() < 1e-10);
    let shifted = Field::from_fn(g, |x| Complex64::from_polar((-(x - 1.0) * (x - 1.0)).exp(), k * x)).unwrap();
    let want = 4.0 * k * mass(&shifted);
    assert!((virial_first_derivative(&shifted, &Weight::Quadratic).unwrap() - want).abs() < 1e-8 * want);
}

#[test]
fn quadratic_weight_gives_the_standard_identity() {
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let g = radial(3, 20.0, 2048);
    let u = Field::from_fn(g, |r| Complex64::from_polar(1.3 * (-r * r / 2.0).exp(), 0.4 * r * r)).unwrap();
    let d2 = virial_second_derivative(&u, &Weight::Quadratic, &p).unwrap();
    let std = standard_identity(&u, &p).unwrap();
    assert!((d2 - std).abs() < 1e-12 * std.abs().max(1.0));
    // 4(dα+2b)E − 2(dα−4+2b)‖∇u‖²
    let o = observables(&u, &p).unwrap();
    let alt = 4.0 * p.d_alpha_2b() * o.energy - 2.0 * (p.d_alpha_2b() - 4.0) * o.kinetic;
    assert!((d2 - alt).abs() < 1e-12 * alt.abs().max(1.0));
}

#[test]
fn mass_critical_quadratic_is_sixteen_energy() {
    let p = PhysParams::mass_critical(2, 0.5).unwrap();
    let u = Field::from_real_fn(radial(2, 15.0, 2048), |r| 2.0 * (-r * r).exp()).unwrap();
    let d2 = virial_second_derivative(&u, &Weight::Quadratic, &p).unwrap();
    let e16 = mass_critical_convexity(&u, &p).unwrap();
    assert!((d2 - e16).abs() < 1e-12 * e16.abs());
}

#[test]
fn general_bound_structure() {
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let g = radial(3, 30.0, 2048);
    // supported inside R: every tail quantity vanishes
    let inside = Field::from_real_fn(g.clone(), |r| bump(r, 2.0)).unwrap();
    let chi = chi_profile(&build_radial_cutoff(4.0).unwrap(), &p).unwrap();
    let eps = 0.3;
    let bt = localized_bound_general(&inside, &chi, &p, eps).unwrap();
    assert_eq!(bt.tail_mass, 0.0);
    assert_eq!(bt.young, 0.0);
    assert_eq!(bt.r_power, 0.0);
    assert_eq!(bt.value, bt.main + eps * kinetic(&inside));
    let d2 = virial_second_derivative(&inside, &Weight::Cutoff(chi.family().clone()), &p).unwrap();
    assert!((d2 - bt.main).abs() < 1e-12 * d2.abs());

    // R doubled: R-power remainders shrink at least fourfold
    let gauss = Field::from_real_fn(g, |r| (-r * r / 4.0).exp()).unwrap();
    for r in [2.0, 4.0] {
        let a = localized_bound_general(&gauss, &chi_profile(&build_radial_cutoff(r).unwrap(), &p).unwrap(), &p, eps);
        let b = localized_bound_general(&gauss, &chi_profile(&build_radial_cutoff(2.0 * r).unwrap(), &p).unwrap(), &p, eps);
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!(b.r_power <= a.r_power / 4.0, "{} {}", a.r_power, b.r_power);
    }
}

#[test]
fn general_bound_rejects_large_alpha() {
    let p = PhysParams::new(2, 0.5, 4.5, 1.0).unwrap();
    let u = Field::from_real_fn(radial(2, 10.0, 256), |r| (-r * r).exp()).unwrap();
    let chi = chi_profile(&build_radial_cutoff(2.0).unwrap(), &p).unwrap();
    assert!(matches!(localized_bound_general(&u, &chi, &p, 0.1), Err(InlsError::Parameter(_))));
}

#[test]
fn bounds_dominate_the_second_derivative_on_static_fields() {
    for (d, b, alpha) in [(2, 0.5, 1.5), (3, 0.5, 1.0), (3, 1.0, 1.0), (2, 1.0, 4.0)] {
        let p = PhysParams::new(d, b, alpha, 1.0).unwrap();
        let g = radial(d, 30.0, 2048);
        for (amp, width, chirp) in [(1.0, 1.0, 0.0), (2.0, 3.0, 0.5), (0.5, 6.0, -1.0)] {
            let u = Field::from_fn(g.clone(), |r| Complex64::from_polar(amp * (-r * r / (width * width)).exp(), chirp * r * r))
                .unwrap();
            for r in [2.0, 5.0] {
                let chi = chi_profile(&build_radial_cutoff(r).unwrap(), &p).unwrap();
                let d2 = virial_second_derivative(&u, &Weight::Cutoff(chi.family().clone()), &p).unwrap();
                for eps in [0.05, 0.5] {
                    let bt = localized_bound_general(&u, &chi, &p, eps).unwrap();
                    assert!(d2 <= bt.value + 1e-6 * bt.main.abs().max(d2.abs()), "{d} {b} {alpha} R={r}");
                }
            }
        }
    }
}

#[test]
fn mass_critical_bound() {
    let p = PhysParams::mass_critical(2, 0.5).unwrap();
    let g = radial(2, 30.0, 2048);
    let inside = Field::from_real_fn(g.clone(), |r| 8.0 * bump(r, 2.0)).unwrap();
    let e0 = observables(&inside, &p).unwrap().energy;
    assert!(e0 < 0.0);
    let chi = chi_profile(&build_radial_cutoff(3.0).unwrap(), &p).unwrap();
    let eps = chi.eps_max.unwrap();
    let bt = localized_bound_mass_critical(&inside, &chi, &p, eps, e0).unwrap();
    // χ-integral vanishes, so main is exactly 16 E(u₀)
    assert_eq!(bt.main, 16.0 * e0);
    let d2 = virial_second_derivative(&inside, &Weight::Cutoff(chi.family().clone()), &p).unwrap();
    assert!(d2 <= bt.value);

    // negative-energy Gaussian, R large: the bound is negative
    let gauss = Field::from_real_fn(g, |r| 4.0 * (-r * r).exp()).unwrap();
    let e = observables(&gauss, &p).unwrap().energy;
    assert!(e < 0.0);
    for r in [2.0, 5.0, 10.0] {
        let chi = chi_profile(&build_radial_cutoff(r).unwrap(), &p).unwrap();
        let eps = chi.eps_max.unwrap();
        let bt = localized_bound_mass_critical(&gauss, &chi, &p, eps, e).unwrap();
        assert!(bt.main <= 16.0 * e + 1e-12);
        let d2 = virial_second_derivative(&gauss, &Weight::Cutoff(chi.family().clone()), &p).unwrap();
        assert!(d2 <= bt.value);
        if r >= 10.0 {
            assert!(bt.value < 0.0, "R = {r}: {}", bt.value);
        }
    }
    assert!(localized_bound_mass_critical(&gauss, &chi, &p, 0.0, e).is_err());
}

#[test]
fn one_dimensional_bound() {
    let p = PhysParams::mass_critical(1, 0.5).unwrap();
    let chi = chi_profile(&build_1d_cutoff(), &p).unwrap();
    let g = line(10.0, 4096);
    let inside = Field::from_real_fn(g.clone(), |x| 2.0 * bump(x, 0.9)).unwrap();
    let e0 = observables(&inside, &p).unwrap().energy;
    assert_eq!(bound_1d(&inside, &chi, e0).unwrap(), 16.0 * e0);
    let wide = Field::from_real_fn(g, |x| (-x * x / 25.0).exp()).unwrap();
    match bound_1d(&wide, &chi, 0.0) {
        Err(InlsError::Precondition(msg)) => assert!(msg.contains("tail norm")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn f_function_and_threshold() {
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let prof = solve_ground_state(&p, radial(3, 40.0, 2048), 1e-10).unwrap();
    let f = FFunction::from_profile(&prof).unwrap();
    assert_eq!(f.value(0.0), 0.0);
    let x0 = f.x0();
    let sigma = p.sigma.unwrap();
    let target = prof.energy_q * prof.mass_q.powf(sigma);
    assert!(((f.value(x0) - target) / target).abs() < 1e-6);
    let eps = 1e-8 * x0;
    assert!(f.derivative(x0 - eps) > 0.0 && f.derivative(x0 + eps) < 0.0);
    let signs: Vec<bool> = (1..2000).map(|k| f.derivative(3.0 * x0 * k as f64 / 2000.0) > 0.0).collect();
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);

    let mc = solve_ground_state(&PhysParams::mass_critical(2, 0.5).unwrap(), radial(2, 30.0, 512), 1e-10).unwrap();
    assert!(FFunction::from_profile(&mc).is_err());
}

#[test]
fn consistency_needs_five_checkpoints() {
    let p = PhysParams::mass_critical(1, 0.5).unwrap();
    let g = line(5.0, 64);
    let fields: Vec<Field> = (0..4).map(|_| Field::zeros(g.clone())).collect();
    let times = [0.0, 0.1, 0.2, 0.3];
    assert!(matches!(
        trajectory_consistency(&times, &fields, &Weight::Quadratic, &p),
        Err(InlsError::InsufficientData(_))
    ));
}

#[test]
fn stationary_modulus_has_zero_virial_rate() {
    // |e^{it}Q| does not change in time
    let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
    let prof = solve_ground_state(&p, radial(3, 30.0, 1024), 1e-10).unwrap();
    let q = prof.field();
    let times: Vec<f64> = (0..7).map(|k| 0.1 * k as f64).collect();
    let fields: Vec<Field> = times.iter().map(|&t| q.map(|_, v| v * Complex64::from_polar(1.0, t))).collect();
    let rep = trajectory_consistency(&times, &fields, &Weight::Quadratic, &p).unwrap();
    assert!(rep.max_abs_first < 1e-8);
    assert!(rep.rows.iter().all(|r| r[3].abs() < 1e-8));
}

#[test]
fn radial_sobolev_constant_is_never_exceeded() {
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        let g = radial(d, 40.0, 4096);
        for w in [0.3, 1.0, 4.0] {
            for shift in [0.0, 5.0, 15.0] {
                let u = Field::from_real_fn(g.clone(), |r| (-(r - shift) * (r - shift) / (w * w)).exp()).unwrap();
                let ratio = radial_sobolev_ratio(&u) / radial_sobolev_constant(d);
                assert!(ratio <= 1.0, "d={d} w={w} shift={shift}: {ratio}");
                worst = worst.max(ratio);
            }
        }
    }
    // thin shells far out approach the constant
    assert!(worst > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_derivative_matches_rearranged_identity(
        amp in 0.1f64..3.0, width in 0.5f64..3.0, chirp in -1.0f64..1.0, d in 1usize..4,
    ) {
        let b = 0.5;
        let alpha = if d == 1 { 3.0 } else { 1.0 };
        let p = PhysParams::new(d, b, alpha, 1.0).unwrap();
        let u = Field::from_fn(radial(d, 25.0, 1024), |r| Complex64::from_polar(amp * (-r * r / (width * width)).exp(), chirp * r * r)).unwrap();
        let d2 = virial_second_derivative(&u, &Weight::Quadratic, &p).unwrap();
        let k = kinetic(&u);
        let e = k / 2.0 - potential(&u, &p) / (alpha + 2.0);
        let alt = 4.0 * p.d_alpha_2b() * e - 2.0 * (p.d_alpha_2b() - 4.0) * k;
        prop_assert!((d2 - alt).abs() <= 1e-11 * (8.0 * k).max(1.0));
    }
}
