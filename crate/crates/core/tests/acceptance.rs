//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process exits
//! nonzero if any fails. Runs with `cargo test --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use inls_core::cutoffs::{build_1d_cutoff, build_radial_cutoff, chi_profile, verify_invariants};
use inls_core::evolution::{evolve, BlowupReason, EvolveConfig, TrajectoryRecord};
use inls_core::ground_state::{
    pohozaev_residuals, quintic_soliton, sharp_constant, solve_ground_state, thresholds, GroundStateProfile, DEFAULT_TOL,
};
use inls_core::observables::{kinetic, mass, scale_field, scale_field_1d_mass_critical};
use inls_core::scenarios::{
    bump, dichotomy_track, negative_energy_data, remark41_construct, scaled_1d_on, step2_lambda_search,
    variance_polynomial_roots,
};
use inls_core::virial::{
    localized_bound_general, localized_bound_mass_critical, trajectory_consistency, virial_second_derivative, FFunction,
    Weight,
};
use inls_core::{observables, Field, PhysParams, RadialGrid};

/// Collects requirements; the criterion passes when all of them hold.
#[derive(Default)]
struct Check {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn req(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed.push(what.clone());
        }
        self.notes.push(what);
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn radial(d: usize, r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::radial(d, r_max, n).unwrap())
}

fn line(r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::cartesian_1d(r_max, n).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn max_gradient_ratio(rec: &TrajectoryRecord) -> f64 {
    let g0 = rec.observables[0].kinetic.sqrt();
    rec.observables.iter().map(|o| o.kinetic.sqrt()).fold(0.0, f64::max) / g0
}

/// The three profiles used by the Pohozaev and sharp-constant criteria.
fn three_profiles() -> Vec<GroundStateProfile> {
    [(3, 0.5, 1.0), (2, 0.5, 1.5), (1, 0.5, 3.0)]
        .iter()
        .map(|&(d, b, alpha)| {
            let p = PhysParams::new(d, b, alpha, 1.0).unwrap();
            solve_ground_state(&p, radial(d, 40.0, 2048), DEFAULT_TOL).unwrap()
        })
        .collect()
}

fn c01_closed_form(c: &mut Check) {
    let t0 = Instant::now();
    let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
    let g = radial(1, 15.0, 8192);
    let prof = solve_ground_state(&p, g.clone(), DEFAULT_TOL).unwrap();
    let err = prof.q.iter().zip(g.nodes()).map(|(q, &x)| (q - quintic_soliton(x)).abs()).fold(0.0, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    c.req(err < 1e-8, format!("sup |Q - 3^(1/4) sech^(1/2)(2x)| = {err:.2e}"));
    c.req(secs < 10.0, format!("solve {secs:.2} s"));
}

fn c02_pohozaev(c: &mut Check) {
    let t0 = Instant::now();
    for prof in three_profiles() {
        let p = prof.params;
        let (r1, r2) = pohozaev_residuals(&prof);
        c.req(r1 < 1e-6 && r2 < 1e-6, format!("({},{},{}) residuals {r1:.1e} {r2:.1e}", p.d, p.b, p.alpha));
    }
    let secs = t0.elapsed().as_secs_f64();
    c.req(secs < 30.0, format!("{secs:.2} s"));
}

fn c03_sharp_constant(c: &mut Check) {
    for prof in three_profiles() {
        let p = prof.params;
        let (direct, closed) = sharp_constant(&prof);
        let e = rel(direct, closed);
        c.req(e < 1e-6, format!("({},{},{}) C_GN {direct:.10} rel {e:.1e}", p.d, p.b, p.alpha));
    }
}

fn c04_mass_critical_energy(c: &mut Check) {
    for (d, b) in [(1, 0.5), (2, 0.5), (3, 0.5), (2, 1.0)] {
        let p = PhysParams::mass_critical(d, b).unwrap();
        let prof = solve_ground_state(&p, radial(d, 40.0, 2048), DEFAULT_TOL).unwrap();
        let ratio = prof.energy_q.abs() / prof.kinetic_q;
        c.req(ratio < 1e-8, format!("d={d} b={b}: |E(Q)|/|grad Q|^2 = {ratio:.1e}"));
    }
}

fn c05_thresholds(c: &mut Check) {
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let prof = solve_ground_state(&p, radial(3, 40.0, 2048), DEFAULT_TOL).unwrap();
    let t = thresholds(&prof).unwrap();
    let s = p.d_alpha_2b();
    let want = (p.d as f64 * p.alpha - (4.0 - 2.0 * p.b)) / (2.0 * s);
    let got = t.em / (t.grad * t.grad);
    c.req((got - want).abs() < 1e-6, format!("EM^s/(grad)^2 = {got:.9} vs {want}"));
    c.req(rel(t.grad, t.x0) < 1e-6, format!("x0 rel {:.1e}", rel(t.grad, t.x0)));
    let f = FFunction::from_profile(&prof).unwrap();
    let fx0 = f.value(t.x0);
    c.req(rel(fx0, t.em) < 1e-6, format!("f(x0) rel {:.1e}", rel(fx0, t.em)));
}

/// Mass-critical run behind the virial criteria: d=2, b=0.5, unit Gaussian.
fn virial_trajectory() -> (PhysParams, TrajectoryRecord) {
    let p = PhysParams::mass_critical(2, 0.5).unwrap();
    let u = Field::from_real_fn(radial(2, 10.0, 4096), |r| (-r * r).exp()).unwrap();
    let cfg = EvolveConfig { dt0: 1e-3, t_max: 0.5, checkpoint_every: 50, ..Default::default() };
    (p, evolve(&u, &p, &cfg, &[Weight::Quadratic]).unwrap())
}

fn c06_virial_identity(c: &mut Check) {
    let t0 = Instant::now();
    let (p, rec) = virial_trajectory();
    let fd = trajectory_consistency(&rec.checkpoint_times(), &rec.checkpoint_fields(), &Weight::Quadratic, &p).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    c.req(rec.verdict.reason == BlowupReason::HorizonReached, format!("{}", rec.verdict.reason));
    c.req(fd.max_rel_second <= 2e-3, format!("second derivative rel {:.2e}", fd.max_rel_second));
    c.req(fd.max_rel_first <= 1e-4, format!("first derivative rel {:.2e}", fd.max_rel_first));
    c.req(secs < 120.0, format!("{} checkpoints, {secs:.1} s", fd.checkpoints));
}

fn c07_convexity(c: &mut Check) {
    let (p, rec) = virial_trajectory();
    let fd = trajectory_consistency(&rec.checkpoint_times(), &rec.checkpoint_fields(), &Weight::Quadratic, &p).unwrap();
    let target = 16.0 * rec.observables[0].energy;
    let worst = fd.rows.iter().map(|r| rel(r[4], target)).fold(0.0, f64::max);
    c.req(!fd.rows.is_empty(), format!("{} interior checkpoints", fd.rows.len()));
    c.req(worst <= 1e-2, format!("max |V'' - 16E(u0)|/|16E(u0)| = {worst:.2e}, 16E(u0) = {target:.6}"));
}

fn c08_negative_energy_blowup(c: &mut Check) {
    let p = PhysParams::mass_critical(2, 0.5).unwrap();
    let cfg = EvolveConfig { t_max: 2.0, ..Default::default() };
    let mut ts = Vec::new();
    for n in [8192, 16384] {
        let u = negative_energy_data(radial(2, 4.0, n), &p, 1.0).unwrap();
        let o = observables(&u, &p).unwrap();
        let rec = evolve(&u, &p, &cfg, &[]).unwrap();
        let v = rec.verdict;
        c.req(v.reason == BlowupReason::GradientGrowth, format!("n={n}: {}", v.reason));
        let Some(t) = v.t_detect else { return };
        let root = variance_polynomial_roots(&o).map_or(f64::NAN, |r| r.1);
        c.req(t < root, format!("n={n}: t_detect {t:.5} < variance root {root:.5}"));
        ts.push(t);
    }
    let e = rel(ts[0], ts[1]);
    c.req(e <= 0.05, format!("n vs 2n rel {e:.1e}"));
    c.note(format!("factor {}", cfg.blowup_gradient_factor));
}

/// The supercritical d=3 run saturates near 20× its initial gradient on these grids.
const INTERCRITICAL_FACTOR: f64 = 10.0;

fn c09_dichotomy(c: &mut Check) {
    let t0 = Instant::now();
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let mut ts = Vec::new();
    for n in [4096, 8192] {
        let q = solve_ground_state(&p, radial(3, 30.0, n), DEFAULT_TOL).unwrap();
        if n == 4096 {
            let cfg = EvolveConfig { t_max: 5.0, ..Default::default() };
            let below = evolve(&q.field().scaled(0.9), &p, &cfg, &[]).unwrap();
            let g = max_gradient_ratio(&below);
            c.req(below.verdict.reason == BlowupReason::HorizonReached, format!("0.9Q: {}", below.verdict.reason));
            c.req(g <= 2.0, format!("0.9Q: max grad ratio {g:.4}"));
        }
        let cfg = EvolveConfig { t_max: 1.0, blowup_gradient_factor: INTERCRITICAL_FACTOR, ..Default::default() };
        let above = evolve(&q.field().scaled(1.1), &p, &cfg, &[]).unwrap();
        let track = dichotomy_track(&above, &q).unwrap();
        c.req(above.verdict.blew_up, format!("1.1Q n={n}: {} at {:?}", above.verdict.reason, above.verdict.t_detect));
        c.req(
            track.rows.iter().all(|r| r.above),
            format!("1.1Q n={n}: above threshold at all {} records", track.rows.len()),
        );
        ts.extend(above.verdict.t_detect);
    }
    if ts.len() == 2 {
        c.req(rel(ts[0], ts[1]) <= 0.05, format!("n vs 2n rel {:.1e}", rel(ts[0], ts[1])));
    }
    c.note(format!("factor {INTERCRITICAL_FACTOR}"));
    let secs = t0.elapsed().as_secs_f64();
    c.req(secs < 300.0, format!("{secs:.1} s"));
}

/// Reachable gradient growth on a uniform 1D grid is about 0.03·n.
const ONE_D_FACTOR: f64 = 40.0;

fn c10_remark41(c: &mut Check) {
    let p = PhysParams::mass_critical(1, 0.5).unwrap();
    let cfg = EvolveConfig { dt0: 1e-4, t_max: 0.3, blowup_gradient_factor: ONE_D_FACTOR, ..Default::default() };
    let mut ts = Vec::new();
    for n in [2048, 4096] {
        let r = remark41_construct(line(1.0, n), &p, 1.0, bump).unwrap();
        c.req((r.energy - 1.0).abs() < 1e-8, format!("n={n}: |E-1| = {:.1e}", (r.energy - 1.0).abs()));
        c.req(r.discriminant > 0.0, format!("n={n}: discriminant {:.4}", r.discriminant));
        let Some((_, t2)) = r.variance_roots else {
            c.req(false, "no real variance roots");
            return;
        };
        let rec = evolve(r.field.as_ref().unwrap(), &p, &cfg, &[]).unwrap();
        let v = rec.verdict;
        c.req(v.blew_up, format!("n={n}: {}", v.reason));
        let t = v.t_detect.unwrap_or(f64::INFINITY);
        c.req(t < t2, format!("n={n}: t_detect {t:.5} < larger root {t2:.5}"));
        ts.push(t);
    }
    c.req(rel(ts[0], ts[1]) <= 0.05, format!("n vs 2n rel {:.1e}", rel(ts[0], ts[1])));
    c.note(format!("factor {ONE_D_FACTOR}"));
}

fn c11_cutoffs(c: &mut Check) {
    for d in [2, 3] {
        let p = PhysParams::mass_critical(d, 0.5).unwrap();
        for r in [2.0, 5.0, 10.0] {
            let chi = chi_profile(&build_radial_cutoff(r).unwrap(), &p).unwrap();
            let rep = verify_invariants(&chi, 10_000);
            c.req(rep.all_hold(1e-12), format!("d={d} R={r} invariants"));
            let eps = chi.eps_max.unwrap_or(0.0);
            c.req(eps > 0.0, format!("d={d} R={r} eps_max {eps:.3e}"));
        }
    }
    let p = PhysParams::mass_critical(1, 0.5).unwrap();
    let chi = chi_profile(&build_1d_cutoff(), &p).unwrap();
    let rep = verify_invariants(&chi, 10_000);
    c.req(rep.all_hold(1e-12), "1D invariants");
    c.req(
        rep.min_theta_minus_quarter_slope_sq >= -1e-12,
        format!("1D min theta - theta'^2/4 = {:.1e}", rep.min_theta_minus_quarter_slope_sq),
    );
}

/// `d²V ≤ bound` with the slack measured on the larger of the two magnitudes.
fn dominated(d2v: f64, bound: f64) -> bool {
    d2v <= bound + 1e-6 * d2v.abs().max(bound.abs())
}

fn c12_bound_domination(c: &mut Check) {
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut tally = |c: &mut Check, label: String, d2v: f64, bound: f64| {
        checked += 1;
        worst = worst.max((d2v - bound) / d2v.abs().max(bound.abs()));
        if !dominated(d2v, bound) {
            c.req(false, format!("{label}: d2V {d2v:.6e} > bound {bound:.6e}"));
        }
    };

    // mass-critical bound along the virial run and along the negative-energy blowup run
    let (p, rec) = virial_trajectory();
    let mut runs = vec![("gaussian", vec![2.0, 5.0], rec)];
    let cfg = EvolveConfig { t_max: 2.0, checkpoint_every: 20, ..Default::default() };
    let blowup = evolve(&negative_energy_data(radial(2, 4.0, 8192), &p, 1.0).unwrap(), &p, &cfg, &[]).unwrap();
    runs.push(("negative-energy", vec![1.0, 2.0], blowup));
    for (name, radii, rec) in &runs {
        let e0 = rec.observables[0].energy;
        for &r in radii {
            let chi = chi_profile(&build_radial_cutoff(r).unwrap(), &p).unwrap();
            let w = Weight::Cutoff(chi.family().clone());
            let eps = chi.eps_max.unwrap();
            for cp in &rec.checkpoints {
                let d2v = virial_second_derivative(&cp.field, &w, &p).unwrap();
                let b = localized_bound_mass_critical(&cp.field, &chi, &p, eps, e0).unwrap().value;
                tally(c, format!("{name} R={r} t={:.3}", cp.t), d2v, b);
            }
        }
    }

    // general bound along the intercritical runs
    let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
    let q = solve_ground_state(&p, radial(3, 30.0, 4096), DEFAULT_TOL).unwrap();
    for (scale, t_max) in [(0.9, 1.0), (1.1, 1.0)] {
        let cfg = EvolveConfig {
            t_max,
            checkpoint_every: 10,
            blowup_gradient_factor: INTERCRITICAL_FACTOR,
            ..Default::default()
        };
        let rec = evolve(&q.field().scaled(scale), &p, &cfg, &[]).unwrap();
        for r in [2.0, 5.0] {
            let chi = chi_profile(&build_radial_cutoff(r).unwrap(), &p).unwrap();
            let w = Weight::Cutoff(chi.family().clone());
            for cp in &rec.checkpoints {
                let d2v = virial_second_derivative(&cp.field, &w, &p).unwrap();
                for eps in [0.05, 0.5] {
                    let b = localized_bound_general(&cp.field, &chi, &p, eps).unwrap().value;
                    tally(c, format!("{scale}Q R={r} eps={eps} t={:.3}", cp.t), d2v, b);
                }
            }
        }
    }
    c.req(checked > 0, format!("{checked} snapshot checks, max (d2V - bound)/scale = {worst:.2e}"));
}

fn c13_step2(c: &mut Check) {
    let p = PhysParams::mass_critical(1, 0.5).unwrap();
    let chi = chi_profile(&build_1d_cutoff(), &p).unwrap();
    let u = negative_energy_data(line(6.0, 4096), &p, 1.0).unwrap();
    let r = step2_lambda_search(&u, &chi, &p).unwrap();
    c.req(r.passes(), "step 2 conditions");
    let Some(lambda) = r.chosen_lambda else { return };
    let decreasing = r.h_norms.windows(2).all(|w| w[1][1] < w[0][1]);
    c.req(decreasing && r.h_monotone == Some(true), format!("|H u_l| decreasing over {} scan points", r.h_norms.len()));
    c.note(format!("lambda {lambda:.6}"));

    // time and the per-unit-time mass tolerance rescale with λ²
    let l2 = lambda * lambda;
    let cfg = EvolveConfig {
        dt0: 1e-4 * l2,
        t_max: 0.2 * l2,
        blowup_gradient_factor: ONE_D_FACTOR,
        mass_drift_tol: 1e-8 / l2,
        ..Default::default()
    };
    let mut ts = Vec::new();
    for n in [2048, 4096] {
        let v = scaled_1d_on(&u, lambda, line(4.0 * lambda, n)).unwrap();
        let rec = evolve(&v, &p, &cfg, &[]).unwrap();
        c.req(rec.verdict.blew_up, format!("n={n}: {}", rec.verdict.reason));
        ts.extend(rec.verdict.t_detect.map(|t| t / l2));
    }
    if ts.len() == 2 {
        c.req(rel(ts[0], ts[1]) <= 0.05, format!("t_detect/l^2 {:.5} vs {:.5}", ts[0], ts[1]));
    }
    c.note(format!("factor {ONE_D_FACTOR}"));
}

fn c14_scaling(c: &mut Check) {
    for (d, b, alpha) in [(3, 1.0, 1.0), (2, 0.5, 2.0)] {
        let p = PhysParams::new(d, b, alpha, 1.0).unwrap();
        let u = Field::from_real_fn(radial(d, 20.0, 4096), |r| (-r * r).exp()).unwrap();
        let gc = p.gamma_crit;
        for lambda in [0.5, 2.0] {
            let v = scale_field(&u, lambda, &p).unwrap();
            for (gamma, before, after) in [(0.0, mass(&u), mass(&v)), (1.0, kinetic(&u), kinetic(&v))] {
                let want = lambda.powf(2.0 * (gamma - gc));
                let e = rel(after / before, want);
                c.req(e < 1e-8, format!("({d},{b},{alpha}) l={lambda} gamma={gamma}: rel {e:.1e}"));
            }
        }
    }
    let p = PhysParams::mass_critical(1, 0.5).unwrap();
    let u = Field::from_real_fn(line(12.0, 8192), |x| 1.2 * (-x * x).exp()).unwrap();
    let o = observables(&u, &p).unwrap();
    for lambda in [0.5, 2.0] {
        let v = scale_field_1d_mass_critical(&u, lambda).unwrap();
        let ov = observables(&v, &p).unwrap();
        let em = rel(ov.mass, o.mass);
        let ee = rel(ov.energy, o.energy / (lambda * lambda));
        c.req(em < 1e-8 && ee < 1e-8, format!("1D l={lambda}: mass rel {em:.1e}, energy rel {ee:.1e}"));
    }
}

type Criterion = (u32, &'static str, fn(&mut Check));

const CRITERIA: [Criterion; 14] = [
    (1, "ground-state closed form", c01_closed_form),
    (2, "Pohozaev identities", c02_pohozaev),
    (3, "sharp constant coherence", c03_sharp_constant),
    (4, "mass-critical energy zero", c04_mass_critical_energy),
    (5, "threshold algebra", c05_thresholds),
    (6, "virial identity consistency", c06_virial_identity),
    (7, "mass-critical exact convexity", c07_convexity),
    (8, "blowup detection, negative energy", c08_negative_energy_blowup),
    (9, "intercritical dichotomy", c09_dichotomy),
    (10, "positive-energy construction", c10_remark41),
    (11, "cutoff inequality suite", c11_cutoffs),
    (12, "localized bound domination", c12_bound_domination),
    (13, "1D scaling step", c13_step2),
    (14, "scaling laws", c14_scaling),
];

fn main() {
    // `cargo test -- <filter>` runs the criteria whose number or name contains the filter
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (id, name, run) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id.to_string() == *f) {
            continue;
        }
        let t0 = Instant::now();
        let mut c = Check::default();
        let res = panic::catch_unwind(AssertUnwindSafe(|| run(&mut c)));
        if let Err(e) = res {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            c.req(false, format!("panicked: {}", msg.unwrap_or_default()));
        }
        let ok = c.failed.is_empty();
        failures += usize::from(!ok);
        let detail = if ok { c.notes.join("; ") } else { c.failed.join("; ") };
        println!(
            "criterion {id:>2} {}: {name} [{:.1} s] {detail}",
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    panic::set_hook(hook);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
