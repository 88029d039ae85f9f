//! Initial data for each blowup hypothesis, and the bookkeeping that says which
//! statement applies to a given field.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoffs::{build_1d_cutoff, ChiProfile, CutoffKind};
use crate::error::{param, InlsError, Result};
use crate::evolution::TrajectoryRecord;
use crate::field::Field;
use crate::grid::{Geometry, RadialGrid};
use crate::ground_state::GroundStateProfile;
use crate::observables::{self, Observables};
use crate::parallel;
use crate::params::{PhysParams, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    Blowup,
    Global,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub regime: Regime,
    pub observables: Observables,
    /// −1, 0 or +1.
    pub energy_sign: i8,
    /// `E(u₀)M(u₀)^σ` (intercritical only).
    pub energy_mass: Option<f64>,
    /// `‖∇u₀‖‖u₀‖^σ` (intercritical only).
    pub gradient_mass: Option<f64>,
    pub threshold_em: Option<f64>,
    pub threshold_grad: Option<f64>,
    pub below_energy_threshold: Option<bool>,
    pub above_gradient_threshold: Option<bool>,
    pub prediction: Prediction,
    pub reason: String,
}

/// Which result applies to `field`. The intercritical threshold tests need `profile`.
pub fn classify(field: &Field, params: &PhysParams, profile: Option<&GroundStateProfile>) -> Result<ClassifyReport> {
    let o = observables::observables(field, params)?;
    let sign = if o.energy < 0.0 {
        -1
    } else if o.energy > 0.0 {
        1
    } else {
        0
    };
    let mut r = ClassifyReport {
        regime: params.regime,
        observables: o,
        energy_sign: sign,
        energy_mass: None,
        gradient_mass: None,
        threshold_em: None,
        threshold_grad: None,
        below_energy_threshold: None,
        above_gradient_threshold: None,
        prediction: Prediction::Indeterminate,
        reason: String::new(),
    };
    if o.mass == 0.0 {
        r.reason = "zero data: no hypothesis applies".into();
        return Ok(r);
    }
    if !params.is_focusing() {
        r.reason = "defocusing equation: no blowup statement applies".into();
        return Ok(r);
    }
    match params.regime {
        Regime::MassCritical => {
            if sign < 0 {
                r.prediction = Prediction::Blowup;
                r.reason = "mass-critical with E(u0) < 0".into();
            } else {
                r.reason = "mass-critical with E(u0) >= 0: negative energy is sufficient, not necessary".into();
            }
        }
        Regime::Intercritical => {
            let sigma = params.sigma.expect("intercritical sigma");
            r.energy_mass = Some(o.energy * o.mass.powf(sigma));
            r.gradient_mass = Some(o.kinetic.sqrt() * o.mass.powf(sigma / 2.0));
            let thr = profile.and_then(|p| p.threshold_em.zip(p.threshold_grad));
            match thr {
                Some((em, grad)) => {
                    r.threshold_em = Some(em);
                    r.threshold_grad = Some(grad);
                    let below = r.energy_mass.unwrap() < em;
                    let above = r.gradient_mass.unwrap() > grad;
                    r.below_energy_threshold = Some(below);
                    r.above_gradient_threshold = Some(above);
                    (r.prediction, r.reason) = match (below, above, r.gradient_mass.unwrap() < grad) {
                        (true, true, _) => (Prediction::Blowup, "E M^sigma below and gradient product above the ground state".into()),
                        (true, false, true) => (Prediction::Global, "below the ground-state threshold: global by the cited result".into()),
                        _ => (Prediction::Indeterminate, "threshold hypotheses not met".into()),
                    };
                }
                None if sign < 0 => {
                    r.prediction = Prediction::Blowup;
                    r.reason = "intercritical with E(u0) < 0".into();
                }
                None => r.reason = "intercritical thresholds need a ground-state profile".into(),
            }
        }
        _ => r.reason = "no blowup statement for this regime".into(),
    }
    Ok(r)
}

/// Gaussian `A e^{−(r/width)²}` with `A` chosen by bisection so that `E = −1`.
pub fn negative_energy_data(grid: Arc<RadialGrid>, params: &PhysParams, width: f64) -> Result<Field> {
    Ok(negative_energy_gaussian(grid, params, width)?.0)
}

/// [`negative_energy_data`] together with the amplitude it found.
pub fn negative_energy_gaussian(grid: Arc<RadialGrid>, params: &PhysParams, width: f64) -> Result<(Field, f64)> {
    if !params.is_focusing() {
        return Err(InlsError::Construction("defocusing energy is positive for every amplitude".into()));
    }
    if params.alpha < params.alpha_low && params.regime != Regime::MassCritical {
        return param("negative-energy data is only constructed for alpha >= alpha_low");
    }
    if !(width > 0.0 && width.is_finite()) {
        return param(format!("width = {width} must be positive"));
    }
    let unit = Field::from_real_fn(grid, |r| (-(r / width).powi(2)).exp())?;
    let k = observables::kinetic(&unit);
    let p = observables::potential(&unit, params);
    // E(A) = A²k/2 − A^{α+2}p/(α+2) exactly, since every functional is homogeneous in A
    let energy = |a: f64| a * a * k / 2.0 - a.powf(params.alpha + 2.0) * p / (params.alpha + 2.0);
    let target = -1.0;
    let a = bisect_amplitude(energy, target)?;
    let out = unit.scaled(a);
    let e = observables::observables(&out, params)?.energy;
    if (e - target).abs() > 1e-8 {
        return Err(InlsError::Construction(format!("bisection reached E = {e}, not {target}")));
    }
    Ok((out, a))
}

/// Smallest amplitude with `energy(A) = target < 0`, assuming `energy` positive then decreasing.
fn bisect_amplitude(energy: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let mut hi = 1.0;
    while energy(hi) > target {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(InlsError::Construction("no amplitude below 1e8 reaches the target energy".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if energy(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `exp(−1/(1−r²))` on `r < 1`.
pub fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Roots of `8t²E + 4t·Im∫ū₀x·∇u₀ + ‖xu₀‖²`, ascending.
pub fn variance_polynomial_roots(o: &Observables) -> Option<(f64, f64)> {
    let (a, b, c) = (8.0 * o.energy, 4.0 * o.radial_momentum, o.variance);
    if a == 0.0 {
        return (b != 0.0).then(|| (-c / b, -c / b));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = (q / a, c / q);
    Some((r1.min(r2), r1.max(r2)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Remark41Data {
    pub a_val: f64,
    pub b_val: f64,
    pub c_val: f64,
    pub d_val: f64,
    pub eps_choice: f64,
    pub lambda: f64,
    pub mu_scale: f64,
    pub e_target: f64,
    pub energy: f64,
    /// `(Im∫ū₀x·∇u₀)² − 2E(u₀)‖xu₀‖²`.
    pub discriminant: f64,
    pub variance_roots: Option<(f64, f64)>,
    /// Which form of the energy constraint fixed λ.
    pub branch: String,
    #[serde(skip)]
    pub field: Option<Field>,
}

/// Positive-energy data `u₀ = λψ(μx)`, `ψ = e^{−i|x|²}·seed`, with `E(u₀) = e_target`
/// and the variance polynomial taking negative values.
pub fn remark41_construct(
    grid: Arc<RadialGrid>,
    params: &PhysParams,
    e_target: f64,
    seed: impl Fn(f64) -> f64 + Sync,
) -> Result<Remark41Data> {
    if !params.is_mass_critical() || !params.is_focusing() {
        return param("the positive-energy construction needs focusing mass-critical parameters");
    }
    if !(e_target > 0.0 && e_target.is_finite()) {
        return param(format!("E_target = {e_target} must be positive"));
    }
    let psi_at = |mu: f64, lambda: f64| {
        Field::from_fn(grid.clone(), |x| {
            let y = mu * x;
            Complex64::from_polar(lambda * seed(y.abs()), -y * y)
        })
    };
    let psi = psi_at(1.0, 1.0)?;
    if psi.max_abs() == 0.0 {
        return Err(InlsError::Construction("seed vanishes on the grid".into()));
    }
    let o = observables::observables(&psi, params)?;
    let (a, b, c, d) = (o.kinetic / 2.0, o.potential / (params.alpha + 2.0), o.variance, -o.radial_momentum);
    if !(d > 0.0) {
        return Err(InlsError::Construction(format!("D = {d} is not positive")));
    }
    let eps = 0.5 * a.min(d * d / (2.0 * c));
    let (al, bb, df) = (params.alpha, params.b, params.d as f64);
    // λ^α B / μ^{2−b} = A − ε fixes μ(λ)
    let mu_of = |lambda: f64| (lambda.powf(al) * b / (a - eps)).powf(1.0 / (2.0 - bb));
    let (lambda0, branch) = if params.d == 2 {
        ((e_target / eps).sqrt(), "d = 2: eps lambda^2 = E".to_string())
    } else {
        let k = eps * (b / (a - eps)).powf((2.0 - df) / (2.0 - bb));
        ((e_target / k).powf(df / 4.0), "eps (B/(A-eps))^((2-d)/(2-b)) lambda^(4/d) = E".to_string())
    };
    // the closed form uses the continuum scaling laws; the secant below removes the
    // quadrature mismatch of the resampled profile on this grid
    let energy_at = |lambda: f64| -> Result<f64> {
        let mu = mu_of(lambda);
        if 1.0 / mu >= grid.r_max() {
            return Err(InlsError::Construction(format!("support radius 1/mu = {} leaves the grid", 1.0 / mu)));
        }
        Ok(observables::observables(&psi_at(mu, lambda)?, params)?.energy - e_target)
    };
    let mut l0 = lambda0;
    let mut l1 = lambda0 * 1.001;
    let (mut f0, mut f1) = (energy_at(l0)?, energy_at(l1)?);
    for _ in 0..50 {
        if f1.abs() <= 1e-12 * e_target.max(1.0) || f1 == f0 {
            break;
        }
        let l2 = l1 - f1 * (l1 - l0) / (f1 - f0);
        (l0, f0) = (l1, f1);
        l1 = l2;
        f1 = energy_at(l1)?;
    }
    let lambda = l1;
    let mu = mu_of(lambda);
    let field = psi_at(mu, lambda)?;
    let u = observables::observables(&field, params)?;
    let discriminant = u.radial_momentum.powi(2) - 2.0 * u.energy * u.variance;
    let out = Remark41Data {
        a_val: a,
        b_val: b,
        c_val: c,
        d_val: d,
        eps_choice: eps,
        lambda,
        mu_scale: mu,
        e_target,
        energy: u.energy,
        discriminant,
        variance_roots: variance_polynomial_roots(&u),
        branch,
        field: Some(field),
    };
    let checks = [
        (out.d_val > 0.0, "D > 0"),
        (eps > 0.0 && eps < a.min(d * d / (2.0 * c)), "0 < eps < min(A, D^2/(2C))"),
        ((u.energy - e_target).abs() < 1e-8 * e_target.max(1.0), "E(u0) = E_target"),
        (discriminant > 0.0, "strict discriminant condition"),
    ];
    if let Some((_, what)) = checks.iter().find(|c| !c.0) {
        return Err(InlsError::Construction(format!("post-construction check failed: {what}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step1Report {
    pub delta: f64,
    /// `∫θ|u₀|²`.
    pub theta_mass: f64,
    /// `(∫θ|u₀|²)^{1/2}(2‖∂ₓu₀‖²/δ + 1)^{1/2}`, absent when `δ ≤ 0`.
    pub condition2_lhs: Option<f64>,
    pub a0: f64,
    pub c_const: f64,
    pub n_norm: f64,
    pub condition1_ok: bool,
    pub condition2_ok: bool,
    pub lambda_0: Option<f64>,
    pub lambda_1: Option<f64>,
    pub lambda_2: Option<f64>,
    pub c_0: Option<f64>,
    pub chosen_lambda: Option<f64>,
    /// `(λ, ‖H u_λ(0)‖)` along the scan.
    pub h_norms: Vec<[f64; 2]>,
    pub h_monotone: Option<bool>,
}

impl Step1Report {
    pub fn passes(&self) -> bool {
        self.condition1_ok && self.condition2_ok
    }
}

/// Scale-free data of a 1D field: everything needed to evaluate the Step-1
/// conditions for `u_λ(x) = λ^{-1/2}u(x/λ)` without resampling.
struct Scaled1d {
    energy: f64,
    mass: f64,
    kinetic: f64,
    /// `(x_j, W_j|u_j|²)`; `∫g|u_λ|² = Σ g(λx_j) W_j|u_j|²`.
    density: Vec<(f64, f64)>,
    c: f64,
    n: f64,
    a0: f64,
    b: f64,
}

impl Scaled1d {
    fn new(field: &Field, chi: &ChiProfile, params: &PhysParams) -> Result<Self> {
        if field.grid().geometry() != Geometry::Cartesian1d || params.d != 1 {
            return param("the 1D steps need a cartesian-1d grid");
        }
        if !params.is_mass_critical() || !params.is_focusing() {
            return param("the 1D steps need focusing mass-critical parameters");
        }
        if chi.kind != CutoffKind::OneDimensional {
            return param("the 1D steps need the 1D cutoff profile");
        }
        let (c, n, a0) = match (chi.c_const, chi.n_norm, chi.a0) {
            (Some(c), Some(n), Some(a0)) => (c, n, a0),
            _ => return param("1D cutoff constants missing"),
        };
        let o = observables::observables(field, params)?;
        let g = field.grid();
        let density = g.nodes().iter().zip(g.weights()).zip(field.values()).map(|((&x, &w), u)| (x, w * u.norm_sqr())).collect();
        Ok(Self { energy: o.energy, mass: o.mass, kinetic: o.kinetic, density, c, n, a0, b: params.b })
    }

    /// `C(1+N)²‖u‖^{6−2b} + N‖u‖²`, the λ-independent part of δ.
    fn tail_constant(&self) -> f64 {
        self.c * (1.0 + self.n).powi(2) * self.mass.powf((6.0 - 2.0 * self.b) / 2.0) + self.n * self.mass
    }

    fn delta(&self, lambda: f64) -> f64 {
        -16.0 * self.energy / (lambda * lambda) - self.tail_constant()
    }

    fn weighted(&self, lambda: f64, g: impl Fn(f64) -> f64) -> f64 {
        self.density.iter().map(|&(x, m)| g(lambda * x) * m).sum()
    }

    fn h_norm(&self, lambda: f64) -> f64 {
        self.weighted(lambda, |x| x.abs().min(1.0).powi(2)).sqrt()
    }

    fn report(&self, lambda: f64) -> Step1Report {
        let theta = build_1d_cutoff();
        let delta = self.delta(lambda);
        let theta_mass = self.weighted(lambda, |x| theta.theta(x));
        let kin = self.kinetic / (lambda * lambda);
        let lhs = (delta > 0.0).then(|| (theta_mass * (2.0 * kin / delta + 1.0)).sqrt());
        Step1Report {
            delta,
            theta_mass,
            condition2_lhs: lhs,
            a0: self.a0,
            c_const: self.c,
            n_norm: self.n,
            condition1_ok: delta > 0.0,
            condition2_ok: lhs.is_some_and(|l| l <= 0.5 * self.a0),
            lambda_0: None,
            lambda_1: None,
            lambda_2: None,
            c_0: None,
            chosen_lambda: None,
            h_norms: vec![],
            h_monotone: None,
        }
    }
}

/// Both Step-1 conditions for `field` with the 1D cutoff constants.
pub fn step1_check(field: &Field, chi: &ChiProfile, params: &PhysParams) -> Result<Step1Report> {
    Ok(Scaled1d::new(field, chi, params)?.report(1.0))
}

/// `δ_λ = −16λ^{−2}E(u₀) − C(1+N)²‖u₀‖^{6−2b} − N‖u₀‖²`.
pub fn delta_lambda(field: &Field, chi: &ChiProfile, params: &PhysParams, lambda: f64) -> Result<f64> {
    Ok(Scaled1d::new(field, chi, params)?.delta(lambda))
}

/// Ratio between consecutive scan points.
pub const LAMBDA_RATIO: f64 = 0.840_896_415_253_714_6; // 2^{-1/4}
pub const LAMBDA_FLOOR: f64 = 1e-8;

/// Scans `λ ↓ 0` geometrically below `min(1, λ₀)` for the first `u_λ(0)` that passes
/// Step 1. `λ = 1` is returned without a scan when `field` already passes.
pub fn step2_lambda_search(field: &Field, chi: &ChiProfile, params: &PhysParams) -> Result<Step1Report> {
    let s = Scaled1d::new(field, chi, params)?;
    if !(s.energy < 0.0) {
        return Err(InlsError::Precondition(format!("E(u0) = {} is not negative", s.energy)));
    }
    let lambda0 = (-16.0 * s.energy / s.tail_constant()).sqrt();
    let lambda1 = lambda0 / 2f64.sqrt();
    // λ²δ_λ grows as λ decreases, so its value at λ₁ bounds 2‖∂u_λ‖²/δ_λ below λ₁
    let c0 = 2.0 * s.kinetic / (lambda1 * lambda1 * s.delta(lambda1));
    let base = s.report(1.0);
    let finish = |mut r: Step1Report, chosen: f64, h: Vec<[f64; 2]>, lambda2: Option<f64>| {
        r.lambda_0 = Some(lambda0);
        r.lambda_1 = Some(lambda1);
        r.lambda_2 = lambda2;
        r.c_0 = Some(c0);
        r.chosen_lambda = Some(chosen);
        r.h_monotone = Some(h.windows(2).all(|w| w[1][1] < w[0][1]));
        r.h_norms = h;
        r
    };
    if base.passes() {
        return Ok(finish(base, 1.0, vec![[1.0, s.h_norm(1.0)]], None));
    }
    // the trace of ‖H u_λ‖ covers the whole geometric ladder from λ = 1; only rungs
    // below λ₀ can pass
    let mut lambdas = vec![1.0];
    while *lambdas.last().unwrap() * LAMBDA_RATIO >= LAMBDA_FLOOR {
        lambdas.push(lambdas.last().unwrap() * LAMBDA_RATIO);
    }
    let h: Vec<[f64; 2]> = parallel::map(&lambdas, |&l| [l, s.h_norm(l)]);
    let target = s.a0 * s.a0 / (4.0 * (c0 + 1.0));
    let lambda2 = h.iter().find(|p| p[0] < lambda1 && 4.0 * p[1] * p[1] <= target).map(|p| p[0]);
    let Some(i) = parallel::position_first(&lambdas, |&l| l < lambda0 && s.report(l).passes()) else {
        return Err(InlsError::Search(format!(
            "no lambda above {LAMBDA_FLOOR:e} passes Step 1 (lambda_0 = {lambda0:e}, C_0 = {c0:e}, a0 = {:e})",
            s.a0
        )));
    };
    let chosen = lambdas[i];
    Ok(finish(s.report(chosen), chosen, h, lambda2))
}

/// `u_λ(x) = λ^{-1/2}u(x/λ)` sampled on `target`, read by interpolation from `field`
/// (zero outside its grid).
pub fn scaled_1d_on(field: &Field, lambda: f64, target: Arc<RadialGrid>) -> Result<Field> {
    if field.grid().geometry() != Geometry::Cartesian1d || target.geometry() != Geometry::Cartesian1d {
        return param("1D scaling needs cartesian-1d grids");
    }
    let r_max = field.grid().r_max();
    let pre = lambda.powf(-0.5);
    Field::from_fn(target, |x| {
        let y = x / lambda;
        if y.abs() >= r_max {
            Complex64::new(0.0, 0.0)
        } else {
            field.interpolate(y) * pre
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub t: f64,
    /// `‖∇u(t)‖‖u(t)‖^σ`.
    pub product: f64,
    pub above: bool,
    /// Against `(1+δ′)` times the threshold; absent when the hypotheses fail.
    pub above_refined: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyTrack {
    pub sigma: f64,
    pub threshold_grad: f64,
    pub threshold_em: f64,
    /// `1 − E(u₀)M(u₀)^σ / (E(Q)M(Q)^σ)`.
    pub delta: f64,
    pub delta_prime: Option<f64>,
    /// Whether `u₀` meets both hypotheses of the intercritical blowup statement.
    pub applicable: bool,
    pub rows: Vec<DichotomyRow>,
}

/// Upper root `y = 1+δ′ ≥ 1` of `a y² − c y^p = 1 − δ`, with `a = (dα+2b)/(dα−4+2b)`,
/// `c = 4/(dα−4+2b)`, `p = (dα+2b)/2`. The left side equals 1 at `y = 1` and
/// decreases after it.
pub fn delta_prime(params: &PhysParams, delta: f64) -> Result<f64> {
    if params.regime != Regime::Intercritical {
        return param("delta' is defined for intercritical parameters");
    }
    if !(0.0..1.0).contains(&delta) {
        return param(format!("delta = {delta} outside [0, 1)"));
    }
    let s = params.d_alpha_2b();
    let den = s - 4.0;
    let g = |y: f64| s / den * y * y - 4.0 / den * y.powf(s / 2.0) - (1.0 - delta);
    if delta == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let m = 0.5 * (lo + hi);
        if g(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi) - 1.0)
}

/// Per recorded time, whether `‖∇u‖‖u‖^σ` stays above the ground-state value.
pub fn dichotomy_track(trajectory: &TrajectoryRecord, profile: &GroundStateProfile) -> Result<DichotomyTrack> {
    let p = &profile.params;
    let (Some(sigma), Some(em), Some(grad)) = (p.sigma, profile.threshold_em, profile.threshold_grad) else {
        return param("dichotomy tracking needs an intercritical ground state");
    };
    if p.regime != Regime::Intercritical {
        return param("dichotomy tracking needs intercritical parameters");
    }
    let o0 = trajectory.observables.first().ok_or_else(|| InlsError::InsufficientData("empty trajectory".into()))?;
    let product = |o: &Observables| o.kinetic.sqrt() * o.mass.powf(sigma / 2.0);
    let delta = 1.0 - o0.energy * o0.mass.powf(sigma) / em;
    let applicable = delta > 0.0 && delta < 1.0 && product(o0) > grad;
    let dp = if applicable { Some(delta_prime(p, delta)?) } else { None };
    let rows = trajectory
        .times
        .iter()
        .zip(&trajectory.observables)
        .map(|(&t, o)| {
            let x = product(o);
            DichotomyRow { t, product: x, above: x > grad, above_refined: dp.map(|d| x >= (1.0 + d) * grad) }
        })
        .collect();
    Ok(DichotomyTrack { sigma, threshold_grad: grad, threshold_em: em, delta, delta_prime: dp, applicable, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    ScaledGroundState,
    Remark41,
    CustomFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    NegativeEnergy,
    AboveThreshold,
    PositiveEnergyRemark41,
    #[serde(rename = "1d-step1")]
    OneDimStep1,
}

/// `[params]` section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub d: usize,
    pub b: f64,
    /// Defaults to the mass-critical power.
    pub alpha: Option<f64>,
    #[serde(default = "focusing")]
    pub mu: f64,
}

fn focusing() -> f64 {
    1.0
}

impl ParamSpec {
    pub fn build(&self) -> Result<PhysParams> {
        let alpha = self.alpha.unwrap_or((4.0 - 2.0 * self.b) / self.d as f64);
        PhysParams::new_allow_b_zero(self.d, self.b, alpha, self.mu)
    }
}

/// `[grid]` section; the geometry follows from `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self, d: usize) -> Result<Arc<RadialGrid>> {
        let g = if d == 1 { RadialGrid::cartesian_1d(self.r_max, self.n) } else { RadialGrid::radial(d, self.r_max, self.n) };
        Ok(Arc::new(g?))
    }
}

/// `[data]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub family: Family,
    /// Gaussian or ground-state multiplier. For Gaussians aimed at negative energy it
    /// is found by bisection when absent.
    pub amplitude: Option<f64>,
    #[serde(default = "unit")]
    pub width: f64,
    /// Quadratic phase `e^{i k |x|²}` applied to Gaussian data.
    #[serde(default)]
    pub phase: f64,
    /// Field file in the columnar format, for `custom-file`.
    pub file: Option<std::path::PathBuf>,
    /// Positive energy for the remark41 family.
    pub e_target: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

/// `[target]` section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub hypothesis: Hypothesis,
}

/// A scenario as read from its sectioned key-value file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub params: ParamSpec,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub target: TargetSpec,
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| InlsError::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if !(d.width > 0.0 && d.width.is_finite()) {
            return param(format!("width = {} must be positive", d.width));
        }
        if let Some(a) = d.amplitude {
            if !(a > 0.0 && a.is_finite()) {
                return param(format!("amplitude = {a} must be positive"));
            }
        }
        let ok = match self.target.hypothesis {
            Hypothesis::NegativeEnergy => matches!(d.family, Family::Gaussian | Family::CustomFile),
            Hypothesis::AboveThreshold => matches!(d.family, Family::ScaledGroundState | Family::Gaussian | Family::CustomFile),
            Hypothesis::PositiveEnergyRemark41 => d.family == Family::Remark41,
            Hypothesis::OneDimStep1 => matches!(d.family, Family::Gaussian | Family::CustomFile),
        };
        if !ok {
            return param(format!("family {:?} does not serve hypothesis {:?}", d.family, self.target.hypothesis));
        }
        if d.family == Family::CustomFile && d.file.is_none() {
            return param("custom-file needs data.file");
        }
        if d.family == Family::Remark41 && d.e_target.is_none() {
            return param("remark41 needs data.e_target");
        }
        if self.target.hypothesis == Hypothesis::OneDimStep1 && self.params.d != 1 {
            return param("1d-step1 needs d = 1");
        }
        Ok(())
    }
}

/// What was built and why it meets (or misses) its hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub hypothesis: Hypothesis,
    pub family: Family,
    pub statement: String,
    pub params: PhysParams,
    pub amplitude: Option<f64>,
    pub classify: ClassifyReport,
    pub hypothesis_met: bool,
    pub ground_state: Option<crate::ground_state::GroundStateSummary>,
    pub remark41: Option<Remark41Data>,
    pub step: Option<Step1Report>,
    pub cutoff: Option<ChiProfile>,
}

pub struct Scenario {
    pub params: PhysParams,
    pub field: Field,
    pub profile: Option<GroundStateProfile>,
    pub provenance: Provenance,
}

fn gaussian(grid: Arc<RadialGrid>, amplitude: f64, width: f64, phase: f64) -> Result<Field> {
    Field::from_fn(grid, |r| Complex64::from_polar(amplitude * (-(r / width).powi(2)).exp(), phase * r * r))
}

/// Builds the data a spec asks for. Construction failures come back as errors;
/// data that misses its hypothesis is returned with `hypothesis_met = false`.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let params = spec.params.build()?;
    let grid = spec.grid.build(params.d)?;
    let data = &spec.data;
    let mut amplitude = data.amplitude;
    let mut profile = None;
    let mut remark = None;
    let mut step = None;
    let mut cutoff = None;

    let load_file = || -> Result<Field> {
        let path = data.file.as_ref().expect("validated");
        let f = std::fs::File::open(path).map_err(|e| InlsError::Format(format!("{}: {e}", path.display())))?;
        let (p, field) = Field::read_columnar(std::io::BufReader::new(f))?;
        if p.d != params.d || p.b != params.b || p.alpha != params.alpha || p.mu != params.mu {
            return param(format!("{} was written for different parameters", path.display()));
        }
        Ok(field)
    };

    let mut field = match (spec.target.hypothesis, data.family) {
        (_, Family::CustomFile) => load_file()?,
        (Hypothesis::PositiveEnergyRemark41, _) => {
            let r = remark41_construct(grid.clone(), &params, data.e_target.expect("validated"), bump)?;
            let f = r.field.clone().expect("constructed");
            remark = Some(r);
            f
        }
        (Hypothesis::AboveThreshold, Family::ScaledGroundState) => {
            let q = crate::ground_state::solve_ground_state(&params, grid.clone(), crate::ground_state::DEFAULT_TOL)?;
            let c = amplitude.unwrap_or(1.1);
            amplitude = Some(c);
            let f = q.field().scaled(c);
            profile = Some(q);
            f
        }
        (_, Family::Gaussian) => match amplitude {
            Some(a) => gaussian(grid.clone(), a, data.width, data.phase)?,
            None if data.phase == 0.0 && params.is_focusing() => {
                let (f, a) = negative_energy_gaussian(grid.clone(), &params, data.width)?;
                amplitude = Some(a);
                f
            }
            None => return param("gaussian data needs an amplitude unless bisection to E = -1 applies"),
        },
        (h, f) => return param(format!("family {f:?} does not serve hypothesis {h:?}")),
    };

    if spec.target.hypothesis == Hypothesis::AboveThreshold && profile.is_none() && params.regime == Regime::Intercritical {
        profile = Some(crate::ground_state::solve_ground_state(&params, grid.clone(), crate::ground_state::DEFAULT_TOL)?);
    }
    if spec.target.hypothesis == Hypothesis::OneDimStep1 {
        let chi = crate::cutoffs::chi_profile(&build_1d_cutoff(), &params)?;
        let report = step2_lambda_search(&field, &chi, &params)?;
        let lambda = report.chosen_lambda.expect("search returns a lambda");
        if lambda != 1.0 {
            let target = Arc::new(RadialGrid::cartesian_1d(grid.r_max() * lambda, grid.n())?);
            field = scaled_1d_on(&field, lambda, target)?;
        }
        step = Some(report);
        cutoff = Some(chi);
    }

    let classify = classify(&field, &params, profile.as_ref())?;
    let hypothesis_met = match spec.target.hypothesis {
        Hypothesis::NegativeEnergy => classify.energy_sign < 0,
        Hypothesis::AboveThreshold => classify.prediction == Prediction::Blowup && classify.threshold_em.is_some(),
        Hypothesis::PositiveEnergyRemark41 => remark.as_ref().is_some_and(|r| r.discriminant > 0.0 && r.energy > 0.0),
        Hypothesis::OneDimStep1 => step.as_ref().is_some_and(|s| s.passes()),
    };
    let statement = match spec.target.hypothesis {
        Hypothesis::NegativeEnergy => "mass-critical blowup for negative energy",
        Hypothesis::AboveThreshold => "intercritical blowup above the ground-state threshold",
        Hypothesis::PositiveEnergyRemark41 => "positive-energy blowup through a negative variance polynomial",
        Hypothesis::OneDimStep1 => "1D blowup via the two-step rescaling argument",
    };
    Ok(Scenario {
        params,
        provenance: Provenance {
            hypothesis: spec.target.hypothesis,
            family: data.family,
            statement: statement.into(),
            params,
            amplitude,
            classify,
            hypothesis_met,
            ground_state: profile.as_ref().map(|p| p.summary()),
            remark41: remark,
            step,
            cutoff,
        },
        field,
        profile,
    })
}
