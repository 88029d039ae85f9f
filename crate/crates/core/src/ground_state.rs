//! Ground states of `ΔQ − Q + |x|^{-b} Q^{α+1} = 0`, the Pohozaev identities,
//! the sharp Gagliardo–Nirenberg constant and the intercritical thresholds.
//!
//! The primary solver shoots on `Q(0)` with an adaptive integrator that also
//! accumulates the norms, so they are continuum values rather than grid sums.
//! The decaying tail is recovered by integrating inward from a Bessel-K
//! asymptote and matching amplitudes where the bisection brackets still agree.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::{band_mul, BandedLu};
use crate::error::{param, InlsError, Result};
use crate::field::Field;
use crate::grid::{unit_sphere_area, RadialGrid};
use crate::observables;
use crate::ode::{integrate, Outcome, Tolerance};
use crate::params::{PhysParams, Regime};

pub const DEFAULT_TOL: f64 = 1e-10;
const ODE_RTOL: f64 = 1e-13;
const SHOOT_R_MAX: f64 = 80.0;
const TAIL_R_MIN: f64 = 40.0;
const TAIL_R_CAP: f64 = 600.0;
const MONITOR_STEP: f64 = 0.05;
const BRACKET_AGREEMENT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Shooting,
    Renormalization,
    /// Norms taken from grid quadrature of given samples.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct GroundStateProfile {
    pub params: PhysParams,
    pub grid: Arc<RadialGrid>,
    pub q: Vec<f64>,
    pub mass_q: f64,
    pub kinetic_q: f64,
    pub potential_q: f64,
    pub energy_q: f64,
    /// Sharp constant from the direct quotient.
    pub c_gn: f64,
    pub threshold_em: Option<f64>,
    pub threshold_grad: Option<f64>,
    pub x0: Option<f64>,
    pub residual: f64,
    pub method: Method,
    /// `Q(0)` when the solver determines it.
    pub q_origin: Option<f64>,
    pub iterations: usize,
}

/// Profiles with `Q(r_max)` above this are flagged as truncated in the summary.
pub const WALL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub em: f64,
    pub grad: f64,
    pub x0: f64,
}

impl GroundStateProfile {
    /// Builds a profile from sampled values with norms by grid quadrature.
    pub fn from_samples(params: PhysParams, grid: Arc<RadialGrid>, q: Vec<f64>) -> Result<Self> {
        check_grid(&params, &grid)?;
        let field = Field::from_real_values(grid.clone(), &q)?;
        let o = observables::observables(&field, &params.with_mu(1.0)?)?;
        let residual = discrete_residual(&params, &grid, &q);
        Ok(Self::assemble(params, grid, q, [o.mass, o.kinetic, o.potential], residual, Method::Sampled, None, 0))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        params: PhysParams,
        grid: Arc<RadialGrid>,
        q: Vec<f64>,
        norms: [f64; 3],
        residual: f64,
        method: Method,
        q_origin: Option<f64>,
        iterations: usize,
    ) -> Self {
        let [mass_q, kinetic_q, potential_q] = norms;
        let energy_q = kinetic_q / 2.0 - potential_q / (params.alpha + 2.0);
        let mut p = Self {
            params,
            grid,
            q,
            mass_q,
            kinetic_q,
            potential_q,
            energy_q,
            c_gn: 0.0,
            threshold_em: None,
            threshold_grad: None,
            x0: None,
            residual,
            method,
            q_origin,
            iterations,
        };
        p.c_gn = sharp_constant(&p).0;
        if let Ok(t) = thresholds(&p) {
            p.threshold_em = Some(t.em);
            p.threshold_grad = Some(t.grad);
            p.x0 = Some(t.x0);
        }
        p
    }

    /// `Q` at the outermost node.
    pub fn wall_value(&self) -> f64 {
        let r = self.grid.radii();
        let i = (0..r.len()).max_by(|&a, &b| r[a].total_cmp(&r[b])).expect("grid has nodes");
        self.q[i]
    }

    pub fn field(&self) -> Field {
        Field::from_real_values(self.grid.clone(), &self.q).expect("profile values are finite")
    }

    pub fn summary(&self) -> GroundStateSummary {
        let (r1, r2) = pohozaev_residuals(self);
        let (direct, closed) = sharp_constant(self);
        GroundStateSummary {
            params: self.params,
            b_zero_test_mode: self.params.b_zero_test_mode,
            method: self.method,
            grid: GridSummary {
                geometry: self.grid.geometry().to_string(),
                r_max: self.grid.r_max(),
                n: self.grid.n(),
            },
            norms: Norms {
                mass: self.mass_q,
                kinetic: self.kinetic_q,
                potential: self.potential_q,
                energy: self.energy_q,
                q_origin: self.q_origin,
                wall_value: self.wall_value(),
                truncated: self.wall_value() >= WALL_TOL,
            },
            c_gn_direct: direct,
            c_gn_closed: closed,
            thresholds: thresholds(self).ok(),
            residuals: Residuals { solver: self.residual, pohozaev_r1: r1, pohozaev_r2: r2 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSummary {
    pub geometry: String,
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Norms {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub q_origin: Option<f64>,
    pub wall_value: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Residuals {
    pub solver: f64,
    pub pohozaev_r1: f64,
    pub pohozaev_r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub params: PhysParams,
    pub b_zero_test_mode: bool,
    pub method: Method,
    pub grid: GridSummary,
    pub norms: Norms,
    pub c_gn_direct: f64,
    pub c_gn_closed: f64,
    pub thresholds: Option<Thresholds>,
    pub residuals: Residuals,
}

fn check_grid(params: &PhysParams, grid: &RadialGrid) -> Result<()> {
    if grid.d() != params.d {
        return param(format!("grid dimension {} does not match params.d = {}", grid.d(), params.d));
    }
    Ok(())
}

fn check_params(params: &PhysParams, grid: &RadialGrid) -> Result<()> {
    check_grid(params, grid)?;
    params.check_subcritical_energy()
}

/// `(r1, r2)`: relative defects of the two Pohozaev identities.
pub fn pohozaev_residuals(profile: &GroundStateProfile) -> (f64, f64) {
    let p = &profile.params;
    let g = p.gn_mass_exponent();
    let m = profile.mass_q;
    let r1 = (m - g / p.d_alpha_2b() * profile.kinetic_q).abs() / m;
    let r2 = (m - g / (2.0 * (p.alpha + 2.0)) * profile.potential_q).abs() / m;
    (r1, r2)
}

/// `(direct, closed_form)` values of the sharp Gagliardo–Nirenberg constant.
pub fn sharp_constant(profile: &GroundStateProfile) -> (f64, f64) {
    let p = &profile.params;
    let direct = gn_quotient_from_norms(p, profile.mass_q, profile.kinetic_q, profile.potential_q);
    (direct, closed_form_constant(p, profile.mass_q))
}

pub fn closed_form_constant(p: &PhysParams, mass_q: f64) -> f64 {
    let g = p.gn_mass_exponent();
    let s = p.d_alpha_2b();
    2.0 * (p.alpha + 2.0) / g * (g / s).powf(s / 4.0) / mass_q.powf(p.alpha / 2.0)
}

/// `∫|x|^{-b}|u|^{α+2} / (‖u‖^{(4−2b−(d−2)α)/2} ‖∇u‖^{(dα+2b)/2})`.
pub fn gn_quotient_from_norms(p: &PhysParams, mass: f64, kinetic: f64, potential: f64) -> f64 {
    potential / (mass.powf(p.gn_mass_exponent() / 4.0) * kinetic.powf(p.d_alpha_2b() / 4.0))
}

pub fn gn_quotient(field: &Field, params: &PhysParams) -> Result<f64> {
    let o = observables::observables(field, params)?;
    if o.mass == 0.0 || o.kinetic == 0.0 {
        return param("Gagliardo–Nirenberg quotient is undefined for the zero field");
    }
    Ok(gn_quotient_from_norms(params, o.mass, o.kinetic, o.potential))
}

pub fn thresholds(profile: &GroundStateProfile) -> Result<Thresholds> {
    let p = &profile.params;
    let sigma = match (p.regime, p.sigma) {
        (Regime::Intercritical, Some(s)) => s,
        _ => {
            return param(format!(
                "thresholds need intercritical parameters (alpha_low < alpha < alpha_high); regime is {}",
                p.regime
            ))
        }
    };
    let em = profile.energy_q * profile.mass_q.powf(sigma);
    let grad = profile.kinetic_q.sqrt() * profile.mass_q.powf(sigma / 2.0);
    let s = p.d_alpha_2b();
    let c = closed_form_constant(p, profile.mass_q);
    let x0 = (2.0 * (p.alpha + 2.0) / (s * c)).powf(2.0 / (s - 4.0));
    Ok(Thresholds { em, grad, x0 })
}

/// Discrete L² norm of `−ΔQ + Q − |x|^{-b}Q^{α+1}` with the grid's own operators.
pub fn discrete_residual(params: &PhysParams, grid: &RadialGrid, q: &[f64]) -> f64 {
    let band = grid.stiffness_band();
    let w = grid.weights();
    let s = grid.singular_weights(params.b);
    let aq = band_mul(&band, q);
    aq.iter()
        .zip(q)
        .zip(w.iter().zip(&s))
        .map(|((aq, q), (w, s))| {
            let r = aq + w * q - s * q.abs().powf(params.alpha) * q;
            r * r / w
        })
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------- shooting

#[derive(Clone, Copy)]
struct Ode {
    d: f64,
    b: f64,
    alpha: f64,
    c: f64,
}

type State = [f64; 6];

impl Ode {
    fn new(p: &PhysParams) -> Self {
        Self { d: p.d as f64, b: p.b, alpha: p.alpha, c: unit_sphere_area(p.d) }
    }

    /// `[Q, Q', mass, kinetic, potential, S]` with `S(r) = r^{d-1} Q'(r)` in integral form.
    fn rhs(&self, r: f64, y: &State) -> State {
        let (q, dq) = (y[0], y[1]);
        let rb = r.powf(-self.b);
        let nl = rb * q.abs().powf(self.alpha) * q;
        let rd = r.powf(self.d - 1.0);
        [
            dq,
            -(self.d - 1.0) / r * dq + q - nl,
            self.c * rd * q * q,
            self.c * rd * dq * dq,
            self.c * rd * rb * q.abs().powf(self.alpha + 2.0),
            rd * (q - nl),
        ]
    }

    /// Regular expansion near the origin, including the integrals over `[0, r]`.
    fn series(&self, q0: f64, r: f64) -> State {
        let Self { d, b, alpha, c: cd } = *self;
        let a = q0 / (2.0 * d);
        let c = -q0.powf(alpha + 1.0) / ((2.0 - b) * (d - b));
        let e = -(alpha + 1.0) * q0.powf(alpha) * c / ((4.0 - 2.0 * b) * (2.0 + d - 2.0 * b));
        let q = q0 + a * r * r + c * r.powf(2.0 - b) + e * r.powf(4.0 - 2.0 * b);
        let dq = 2.0 * a * r + (2.0 - b) * c * r.powf(1.0 - b) + (4.0 - 2.0 * b) * e * r.powf(3.0 - 2.0 * b);
        let (k1, k2) = (2.0 * a, (2.0 - b) * c);
        let kin = k1 * k1 * r.powf(d + 2.0) / (d + 2.0)
            + 2.0 * k1 * k2 * r.powf(d + 2.0 - b) / (d + 2.0 - b)
            + k2 * k2 * r.powf(d + 2.0 - 2.0 * b) / (d + 2.0 - 2.0 * b);
        [
            q,
            dq,
            cd * q0 * q0 * r.powf(d) / d,
            cd * kin,
            cd * q0.powf(alpha + 2.0) * r.powf(d - b) / (d - b),
            r.powf(d - 1.0) * dq,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    TooBig,
    TooSmall,
}

fn outward_tol(q0: f64) -> Tolerance {
    Tolerance { rtol: ODE_RTOL, atol: 1e-22 * q0.max(1.0), controlled: 6 }
}

fn classify(ode: &Ode, q0: f64, r_s: f64) -> Result<Shot> {
    let y0 = ode.series(q0, r_s);
    let out = integrate(
        |r, y| ode.rhs(r, y),
        r_s,
        y0,
        SHOOT_R_MAX,
        &[],
        |_, _| {},
        |_, y| y[0] < 0.0 || y[1] > 0.0,
        outward_tol(q0),
        r_s,
    )?;
    Ok(match out {
        Outcome::Stopped(_, y) if y[0] < 0.0 => Shot::TooBig,
        _ => Shot::TooSmall,
    })
}

fn bracket(ode: &Ode, r_s: f64) -> Result<(f64, f64, usize)> {
    let mut it = 0;
    let (mut lo, mut hi) = match classify(ode, 1.0, r_s)? {
        Shot::TooBig => {
            let mut hi = 1.0;
            loop {
                let lo = hi / 2.0;
                it += 1;
                if classify(ode, lo, r_s)? == Shot::TooSmall {
                    break (lo, hi);
                }
                hi = lo;
                if it > 200 {
                    return Err(InlsError::NoConvergence { iterations: it, residual: f64::NAN });
                }
            }
        }
        Shot::TooSmall => {
            let mut lo = 1.0;
            loop {
                let hi = lo * 2.0;
                it += 1;
                if classify(ode, hi, r_s)? == Shot::TooBig {
                    break (lo, hi);
                }
                lo = hi;
                if it > 200 {
                    return Err(InlsError::NoConvergence { iterations: it, residual: f64::NAN });
                }
            }
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        it += 1;
        match classify(ode, mid, r_s)? {
            Shot::TooBig => hi = mid,
            Shot::TooSmall => lo = mid,
        }
    }
    Ok((lo, hi, it))
}

/// `ln g` and `(ln g)'` for `g(r) = r^{1−d/2} K_ν(r)`, `ν = |d/2 − 1|`, from the
/// large-argument expansion of `K_ν`.
fn tail_log(d: f64, r: f64) -> (f64, f64) {
    let nu = (d / 2.0 - 1.0).abs();
    let mu4 = 4.0 * nu * nu;
    let (mut sum, mut dsum, mut term) = (1.0, 0.0, 1.0);
    for k in 1..200 {
        let kf = k as f64;
        let next = term * (mu4 - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * r);
        if next.abs() > term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        dsum += -kf * term / r;
        if term.abs() < 1e-18 {
            break;
        }
    }
    let ln_k = 0.5 * (std::f64::consts::PI / (2.0 * r)).ln() - r + sum.ln();
    let dln_k = -0.5 / r - 1.0 + dsum / sum;
    ((1.0 - d / 2.0) * r.ln() + ln_k, (1.0 - d / 2.0) / r + dln_k)
}

struct Sorted {
    /// node indices ordered by radius
    order: Vec<usize>,
    radii: Vec<f64>,
}

impl Sorted {
    fn new(grid: &RadialGrid) -> Self {
        let mut order: Vec<usize> = (0..grid.n()).collect();
        let r = grid.radii();
        order.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
        let radii = order.iter().map(|&i| r[i]).collect();
        Self { order, radii }
    }
}

/// Solves for the ground state by shooting. `tol` bounds the reported residual.
pub fn solve_ground_state(params: &PhysParams, grid: Arc<RadialGrid>, tol: f64) -> Result<GroundStateProfile> {
    check_params(params, &grid)?;
    let ode = Ode::new(params);
    let sorted = Sorted::new(&grid);
    let r_s = (1e-3 * sorted.radii[0]).min(1e-6);
    let (lo, hi, mut iterations) = bracket(&ode, r_s)?;

    let r_c = matching_radius(&ode, lo, hi, r_s)?;
    let n = grid.n();
    let (mut q, mut dq, mut s) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    let split = sorted.radii.partition_point(|&r| r <= r_c);
    let outs: Vec<f64> = sorted.radii[..split].to_vec();
    let out = integrate(
        |r, y| ode.rhs(r, y),
        r_s,
        ode.series(lo, r_s),
        r_c,
        &outs,
        |k, y| {
            let i = sorted.order[k];
            (q[i], dq[i], s[i]) = (y[0], y[1], y[5]);
        },
        |_, _| false,
        outward_tol(lo),
        r_s,
    )?;
    let y_out = match out {
        Outcome::Finished(y) => y,
        Outcome::Stopped(..) => unreachable!("no stop condition"),
    };

    let r_far = grid.r_max().max(TAIL_R_MIN).min(TAIL_R_CAP);
    let inward = |ln_amp: f64, outputs: &[f64], emit: &mut dyn FnMut(usize, &State)| -> Result<State> {
        let (lg, dlg) = tail_log(ode.d, r_far);
        let q_far = (ln_amp + lg).exp();
        let y0 = [q_far, q_far * dlg, 0.0, 0.0, 0.0, r_far.powf(ode.d - 1.0) * q_far * dlg];
        let tol = Tolerance { rtol: ODE_RTOL, atol: 1e-300, controlled: 6 };
        match integrate(|r, y| ode.rhs(r, y), r_far, y0, r_c, outputs, |k, y| emit(k, y), |_, _| false, tol, 0.01)? {
            Outcome::Finished(y) => Ok(y),
            Outcome::Stopped(..) => unreachable!("no stop condition"),
        }
    };
    let target = y_out[0].ln();
    let mismatch = |ln_amp: f64| -> Result<f64> { Ok(inward(ln_amp, &[], &mut |_, _| {})?[0].ln() - target) };
    let mut s0 = target - tail_log(ode.d, r_c).0;
    let mut f0 = mismatch(s0)?;
    let mut s1 = s0 - f0;
    let mut f1 = mismatch(s1)?;
    for _ in 0..60 {
        iterations += 1;
        if f1.abs() < 1e-14 || f1 == f0 {
            break;
        }
        let s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        (s0, f0) = (s1, f1);
        s1 = s2;
        f1 = mismatch(s1)?;
    }
    if !(f1.abs() < 1e-11) {
        return Err(InlsError::NoConvergence { iterations, residual: f1.abs() });
    }

    let mut far_outs: Vec<(f64, usize)> = Vec::new();
    for k in (split..n).rev() {
        if sorted.radii[k] <= r_far {
            far_outs.push((sorted.radii[k], sorted.order[k]));
        } else {
            let (lg, _) = tail_log(ode.d, sorted.radii[k]);
            let i = sorted.order[k];
            q[i] = (s1 + lg).exp();
            dq[i] = 0.0;
            s[i] = 0.0;
        }
    }
    let far_r: Vec<f64> = far_outs.iter().map(|x| x.0).collect();
    let y_in = inward(s1, &far_r, &mut |k, y| {
        let i = far_outs[k].1;
        (q[i], dq[i], s[i]) = (y[0], y[1], y[5]);
    })?;

    // the outward run starts from the series, which already holds the integrals over [0, r_s]
    let norms = [y_out[2] - y_in[2], y_out[3] - y_in[3], y_out[4] - y_in[4]];

    let w = grid.weights();
    let radii = grid.radii();
    let integral_form: f64 = (0..n)
        .filter(|&i| radii[i] <= r_far)
        .map(|i| {
            let res = dq[i] - s[i] / radii[i].powf(ode.d - 1.0);
            w[i] * res * res
        })
        .sum::<f64>()
        .sqrt();
    let jump = (y_in[1] - y_out[1]).abs();
    let residual = integral_form.max(jump);

    validate_profile(&q, &sorted, &grid)?;
    if !(residual <= tol) {
        return Err(InlsError::NoConvergence { iterations, residual });
    }
    Ok(GroundStateProfile::assemble(
        *params,
        grid,
        q,
        norms,
        residual,
        Method::Shooting,
        Some(0.5 * (lo + hi)),
        iterations,
    ))
}

/// Largest radius at which the two bracketing trajectories still agree.
fn matching_radius(ode: &Ode, lo: f64, hi: f64, r_s: f64) -> Result<f64> {
    let monitors: Vec<f64> = (1..).map(|k| k as f64 * MONITOR_STEP).take_while(|&r| r < SHOOT_R_MAX).collect();
    let run = |q0: f64| -> Result<Vec<f64>> {
        let mut vals = vec![f64::NAN; monitors.len()];
        integrate(
            |r, y| ode.rhs(r, y),
            r_s,
            ode.series(q0, r_s),
            SHOOT_R_MAX,
            &monitors,
            |k, y| vals[k] = y[0],
            |_, y| y[0] < 0.0 || y[1] > 0.0,
            outward_tol(q0),
            r_s,
        )?;
        Ok(vals)
    };
    let (a, b) = (run(lo)?, run(hi)?);
    let mut r_c = None;
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        let ok = x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0 && (x - y).abs() <= BRACKET_AGREEMENT * x;
        if !ok {
            break;
        }
        r_c = Some(monitors[k]);
    }
    match r_c {
        Some(r) if r >= 1.0 => Ok(r),
        _ => Err(InlsError::Numerical(
            "bracketing trajectories separate before r = 1; Q(0) could not be resolved".into(),
        )),
    }
}

fn validate_profile(q: &[f64], sorted: &Sorted, grid: &RadialGrid) -> Result<()> {
    let mut prev = f64::INFINITY;
    for &i in &sorted.order {
        let v = q[i];
        if !v.is_finite() || v < 0.0 {
            return Err(InlsError::Numerical(format!("ground state value {v} at node {i} is not a nonnegative number")));
        }
        if v > prev * (1.0 + 1e-12) {
            return Err(InlsError::Numerical(format!("ground state is not decreasing near r = {}", grid.radii()[i])));
        }
        prev = v;
    }
    Ok(())
}

// ------------------------------------------------------ renormalization

/// Spectral-renormalization (Petviashvili) iteration on the grid's discrete
/// operator `−Δ + 1`. Norms come from grid quadrature of the discrete solution.
pub fn solve_ground_state_renormalized(
    params: &PhysParams,
    grid: Arc<RadialGrid>,
    tol: f64,
    max_iter: usize,
) -> Result<GroundStateProfile> {
    check_params(params, &grid)?;
    let w = grid.weights().to_vec();
    let s = grid.singular_weights(params.b);
    let mut band = grid.stiffness_band();
    for (row, wi) in band.iter_mut().zip(&w) {
        row[3] += wi;
    }
    let lu = BandedLu::factor(band.clone())?;
    let alpha = params.alpha;
    let gamma = (alpha + 1.0) / alpha;
    let mut q: Vec<f64> = grid.radii().iter().map(|r| 2.0 * (-r * r / 2.0).exp()).collect();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let nl: Vec<f64> = q.iter().zip(&s).map(|(q, s)| s * q.abs().powf(alpha) * q).collect();
        let lq = band_mul(&band, &q);
        let num: f64 = q.iter().zip(&lq).map(|(a, b)| a * b).sum();
        let den: f64 = q.iter().zip(&nl).map(|(a, b)| a * b).sum();
        residual = lq
            .iter()
            .zip(&nl)
            .zip(&w)
            .map(|((l, n), w)| (l - n) * (l - n) / w)
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            let sorted = Sorted::new(&grid);
            validate_profile(&q, &sorted, &grid)?;
            let mut p = GroundStateProfile::from_samples(*params, grid, q)?;
            p.method = Method::Renormalization;
            p.residual = residual;
            p.iterations = it;
            return Ok(p);
        }
        if !(den > 0.0) {
            return Err(InlsError::Numerical("renormalization collapsed to the zero state".into()));
        }
        let m = (num / den).powf(gamma);
        let mut next = nl;
        lu.solve_in_place(&mut next);
        for (qi, ni) in q.iter_mut().zip(&next) {
            *qi = m * ni;
        }
    }
    Err(InlsError::NoConvergence { iterations: max_iter, residual })
}

/// `3^{1/4} sech^{1/2}(2x)`, the ground state for `d = 1`, `b = 0`, `α = 4`.
pub fn quintic_soliton(x: f64) -> f64 {
    3f64.powf(0.25) / (2.0 * x).cosh().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_log_matches_exact_half_integer_order() {
        // d = 3: r^{-1/2} K_{1/2}(r) = sqrt(π/2) e^{-r} / r
        for r in [12.0, 40.0] {
            let (lg, dlg) = tail_log(3.0, r);
            let want = 0.5 * (std::f64::consts::PI / 2.0).ln() - r - r.ln();
            assert!((lg - want).abs() < 1e-13);
            assert!((dlg - (-1.0 - 1.0 / r)).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_critical_parameters_rejected() {
        let p = PhysParams::new(3, 0.5, 3.0, 1.0).unwrap();
        let g = Arc::new(RadialGrid::radial(3, 30.0, 512).unwrap());
        assert!(matches!(solve_ground_state(&p, g, 1e-10), Err(InlsError::Parameter(_))));
    }

    #[test]
    fn short_domain_is_flagged_not_fatal() {
        let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
        let g = Arc::new(RadialGrid::radial(3, 8.0, 256).unwrap());
        let prof = solve_ground_state(&p, g, 1e-10).unwrap();
        assert!(prof.summary().norms.truncated);
    }
}
