//! Virial quantities `V_a = ∫ a |u|²`, their time derivatives, and the localized
//! upper bounds on `d²V_a/dt²` with every hidden constant made explicit.
//!
//! All integrals reuse the quadrature of the observables: node weights for `|u|²`,
//! the singular rule for `|x|^{-b}|u|^{α+2}`, and the staggered face derivative for
//! `|∂u|²`. With `a = |x|²` the second derivative therefore reproduces the
//! standard identity to rounding.

use serde::{Deserialize, Serialize};

use crate::cutoffs::{ChiProfile, CutoffFamily, CutoffKind};
use crate::error::{param, InlsError, Result};
use crate::field::Field;
use crate::grid::{unit_sphere_area, Geometry};
use crate::ground_state::GroundStateProfile;
use crate::observables::{check_compatible, energy_of, kinetic, mass, potential};
use crate::params::PhysParams;
use crate::parallel;

const CONST_SAMPLES: usize = 20_000;
/// Relative safety factor on sampled suprema (checked against a doubled sample).
const SUP_MARGIN: f64 = 1e-6;

/// The weight `a` of a virial potential.
#[derive(Debug, Clone)]
pub enum Weight {
    /// `a = |x|²`, giving the variance.
    Quadratic,
    Cutoff(CutoffFamily),
}

impl Weight {
    pub fn id(&self) -> String {
        match self {
            Weight::Quadratic => "quadratic".into(),
            Weight::Cutoff(f) => match f.kind() {
                CutoffKind::RadialQuadraticCapped => format!("phi_R={}", f.r_scale().unwrap_or(f64::NAN)),
                CutoffKind::OneDimensional => "theta_1d".into(),
            },
        }
    }

    /// `[a, a', a'', a''', a'''']` at signed `x`.
    pub fn derivs(&self, x: f64) -> [f64; 5] {
        match self {
            Weight::Quadratic => [x * x, 2.0 * x, 2.0, 0.0, 0.0],
            Weight::Cutoff(f) => f.weight_derivs(x),
        }
    }

    fn check(&self, field: &Field) -> Result<()> {
        if let Weight::Cutoff(f) = self {
            let d = field.grid().d();
            match f.kind() {
                CutoffKind::RadialQuadraticCapped if d < 2 => {
                    return param("the radial cutoff needs d >= 2; use the 1D cutoff in one dimension")
                }
                CutoffKind::OneDimensional if d != 1 => return param("the 1D cutoff needs d = 1"),
                _ => {}
            }
        }
        Ok(())
    }
}

/// `Δa` and `Δ²a` of a radial weight in dimension `d` (for `d = 1`, `a''` and `a''''`).
fn laplacians(a: &[f64; 5], x: f64, d: usize) -> (f64, f64) {
    if d == 1 {
        return (a[2], a[4]);
    }
    let df = d as f64;
    let r = x.abs();
    if r == 0.0 {
        return (df * a[2], 0.0);
    }
    let lap = a[2] + (df - 1.0) * a[1] / r;
    let bilap = a[4] + 2.0 * (df - 1.0) * a[3] / r
        + (df - 1.0) * (df - 3.0) * (a[2] / (r * r) - a[1] / (r * r * r));
    (lap, bilap)
}

/// `a'/r`, continuous through the origin.
fn slope_over_r(a: &[f64; 5], x: f64) -> f64 {
    if x == 0.0 {
        a[2]
    } else {
        a[1] / x
    }
}

pub fn virial_value(field: &Field, weight: &Weight) -> Result<f64> {
    weight.check(field)?;
    let g = field.grid();
    Ok(field
        .values()
        .iter()
        .zip(g.weights().iter().zip(g.nodes()))
        .map(|(u, (w, &x))| w * weight.derivs(x)[0] * u.norm_sqr())
        .sum())
}

/// `2 ∫ a'(r) Im(ū ∂_r u)`.
pub fn virial_first_derivative(field: &Field, weight: &Weight) -> Result<f64> {
    weight.check(field)?;
    let g = field.grid();
    let du = g.node_derivative(field.values());
    Ok(2.0
        * field
            .values()
            .iter()
            .zip(&du)
            .zip(g.weights().iter().zip(g.nodes()))
            .map(|((u, du), (w, &x))| w * weight.derivs(x)[1] * (u.conj() * du).im)
            .sum::<f64>())
}

/// `−∫Δ²a|u|² + 4∫a''|∂u|² − μ(2α/(α+2))∫Δa|x|^{-b}|u|^{α+2} − μ(4b/(α+2))∫(a'/r)|x|^{-b}|u|^{α+2}`.
pub fn virial_second_derivative(field: &Field, weight: &Weight, params: &PhysParams) -> Result<f64> {
    check_compatible(field, params)?;
    weight.check(field)?;
    let g = field.grid();
    let d = g.d();
    let (alpha, b, mu) = (params.alpha, params.b, params.mu);
    let sw = g.singular_weights(b);
    let faces = g.face_derivative(field.values());
    let grad: f64 = faces
        .iter()
        .zip(g.face_weights().iter().zip(g.face_positions()))
        .map(|(du, (w, &x))| w * weight.derivs(x)[2] * du.norm_sqr())
        .sum();
    let mut bilap_term = 0.0;
    let mut nl = 0.0;
    let p = (alpha + 2.0) / 2.0;
    for (j, u) in field.values().iter().enumerate() {
        let x = g.nodes()[j];
        let a = weight.derivs(x);
        let (lap, bilap) = laplacians(&a, x, d);
        let m2 = u.norm_sqr();
        bilap_term += g.weights()[j] * bilap * m2;
        nl += sw[j] * m2.powf(p) * (2.0 * alpha * lap + 4.0 * b * slope_over_r(&a, x));
    }
    Ok(-bilap_term + 4.0 * grad - mu * nl / (alpha + 2.0))
}

/// The standard right-hand side `8‖∇u‖² − 4(dα+2b)/(α+2) ∫|x|^{-b}|u|^{α+2}`.
pub fn standard_identity(field: &Field, params: &PhysParams) -> Result<f64> {
    check_compatible(field, params)?;
    Ok(8.0 * kinetic(field) - params.mu * 4.0 * params.d_alpha_2b() / (params.alpha + 2.0) * potential(field, params))
}

/// Constant of the radial Sobolev inequality `sup |x|^{(d−1)/2}|f| ≤ C ‖f‖^{1/2}‖∇f‖^{1/2}`,
/// from `r^{d−1}|f(r)|² ≤ 2 ∫_r^∞ s^{d−1}|f||f'| ds`. The same proof gives the
/// inequality with both norms restricted to `|x| > R` for the supremum over `|x| > R`.
pub fn radial_sobolev_constant(d: usize) -> f64 {
    (2.0 / unit_sphere_area(d)).sqrt()
}

/// `sup |x|^{(d−1)/2}|u| / (‖u‖^{1/2}‖∇u‖^{1/2})`, to be compared with [`radial_sobolev_constant`].
pub fn radial_sobolev_ratio(field: &Field) -> f64 {
    let g = field.grid();
    let e = (g.d() as f64 - 1.0) / 2.0;
    let sup = field.values().iter().zip(g.radii()).map(|(u, r)| r.powf(e) * u.norm()).fold(0.0, f64::max);
    let denom = (mass(field) * kinetic(field)).powf(0.25);
    if denom == 0.0 {
        0.0
    } else {
        sup / denom
    }
}

/// Dense-sample supremum of `f` over `s ∈ [lo, hi]`, taken at `n` and `2n` samples and padded.
fn sampled_sup(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let sup = |m: usize| (0..=m).map(|k| f(lo + (hi - lo) * k as f64 / m as f64)).fold(0.0, f64::max);
    sup(n).max(sup(2 * n)) * (1.0 + SUP_MARGIN)
}

/// Explicit constants behind the `O(·)` remainders, for `R = 1`; each is rescaled by the
/// appropriate power of `R` where it is used.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundConstants {
    /// `sup |Δ²θ|` over the transition region (`|Δ²φ_R| ≤ c/R²`).
    pub bilaplacian: f64,
    /// `sup [4(dα+2b) − 2αΔθ − 4bθ'/s]/(α+2)`, the coefficient of the tail potential.
    pub tail_potential: f64,
    /// Radial Sobolev constant `(2/|S^{d−1}|)^{1/2}`.
    pub radial_sobolev: f64,
    /// `‖χ₂^{d/(4−2b)}‖∞` and `‖∂ₛ χ₂^{d/(4−2b)}‖∞` (mass-critical refinement).
    pub w_sup: f64,
    pub w_slope_sup: f64,
}

pub fn bound_constants(chi: &ChiProfile, params: &PhysParams) -> Result<BoundConstants> {
    let fam = chi.family();
    if fam.kind() != CutoffKind::RadialQuadraticCapped {
        return param("localized bounds use the radial cutoff family");
    }
    if params.d < 2 || params.d != chi.d || params.b != chi.b {
        return param("chi profile does not match the parameters (need d >= 2)");
    }
    let unit = crate::cutoffs::build_radial_cutoff(1.0)?;
    let d = params.d;
    let (alpha, b) = (params.alpha, params.b);
    let df = d as f64;
    let bilaplacian = sampled_sup(1.0, 2.5, CONST_SAMPLES, |s| laplacians(&unit.weight_derivs(s), s, d).1.abs());
    let tail_potential = sampled_sup(1.0, 2.5, CONST_SAMPLES, |s| {
        let a = unit.weight_derivs(s);
        let lap = laplacians(&a, s, d).0;
        (4.0 * params.d_alpha_2b() - 2.0 * alpha * lap - 4.0 * b * a[1] / s) / (alpha + 2.0)
    });
    // w = χ₂^{d/(4−2b)} on the unit-R profile, with χ₂ written in s
    let chi2 = |s: f64| {
        let a = unit.weight_derivs(s);
        (2.0 - b) * (2.0 * df - laplacians(&a, s, d).0) + df * b * (2.0 - a[1] / s)
    };
    let ew = df / (4.0 - 2.0 * b);
    let w_sup = sampled_sup(1.0, 2.5, CONST_SAMPLES, |s| chi2(s).max(0.0).powf(ew));
    let dchi2 = |s: f64| {
        let a = unit.weight_derivs(s);
        let q = a[2] / s - a[1] / (s * s);
        -(2.0 - b) * (a[3] + (df - 1.0) * q) - df * b * q
    };
    let w_slope_sup = sampled_sup(1.0 + 1e-4, 2.5, CONST_SAMPLES, |s| {
        let c = chi2(s);
        if c <= 0.0 {
            0.0
        } else {
            (ew * c.powf(ew - 1.0) * dchi2(s)).abs()
        }
    });
    Ok(BoundConstants {
        bilaplacian,
        tail_potential,
        radial_sobolev: radial_sobolev_constant(d),
        w_sup,
        w_slope_sup,
    })
}

/// Terms of a localized bound; `value` is their sum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundTerms {
    pub value: f64,
    /// The unlocalized leading term (or `16E(u₀)` plus the χ-integral in the mass-critical case).
    pub main: f64,
    /// Terms that do not depend on `R`.
    pub eps_term: f64,
    /// Remainders carrying negative powers of `R`.
    pub r_power: f64,
    pub young: f64,
    pub r: f64,
    pub eps: f64,
    pub tail_mass: f64,
    pub constants: BoundConstants,
}

fn tail_mass(field: &Field, r: f64) -> f64 {
    let g = field.grid();
    field
        .values()
        .iter()
        .zip(g.weights().iter().zip(g.radii()))
        .filter(|(_, (_, &x))| x > r)
        .map(|(u, (w, _))| w * u.norm_sqr())
        .sum()
}

/// Young's inequality `xy ≤ η x^p + (1/q)(ηp)^{−q/p} y^q`.
fn young_coefficient(eta: f64, p: f64) -> (f64, f64) {
    let q = p / (p - 1.0);
    ((1.0 / q) * (eta * p).powf(-q / p), q)
}

fn check_radial(field: &Field, chi: &ChiProfile, params: &PhysParams) -> Result<f64> {
    check_compatible(field, params)?;
    if field.grid().geometry() != Geometry::RadialD || params.d < 2 {
        return param("localized virial bounds need radial data in d >= 2");
    }
    if !params.is_focusing() {
        return param("localized bounds are stated for the focusing equation");
    }
    chi.family().r_scale().ok_or_else(|| InlsError::Parameter("radial cutoff expected".into()))
}

/// Upper bound on `d²V_{φ_R}/dt²` for radial solutions and `0 < α ≤ 4`:
/// `8‖∇u‖² − 4(dα+2b)/(α+2)∫|x|^{-b}|u|^{α+2} + c_Δ M_R/R² + εK + young(ε) R^{−2[(d−1)α+2b]/(4−α)}`
/// (for `α = 4` the last two become `A R^{−[2(d−1)+b]} K`). Every remainder is
/// evaluated with the exterior mass `M_R = ∫_{|x|>R}|u|²` rather than its bound `M`.
pub fn localized_bound_general(field: &Field, chi: &ChiProfile, params: &PhysParams, eps: f64) -> Result<BoundTerms> {
    let r = check_radial(field, chi, params)?;
    let alpha = params.alpha;
    if alpha > 4.0 {
        return param(format!("alpha = {alpha} > 4 is outside the localized estimate"));
    }
    if !(eps > 0.0) && alpha < 4.0 {
        return param("eps must be positive");
    }
    let c = bound_constants(chi, params)?;
    let k = kinetic(field);
    let mt = tail_mass(field, r);
    let main = standard_identity(field, params)?;
    let r_bilap = c.bilaplacian * mt / (r * r);
    // ∫_{|x|>R}|x|^{-b}|u|^{α+2} ≤ R^{−β} (C_rs M_R^{1/4} K^{1/4})^α M_R
    let beta = (params.d as f64 - 1.0) * alpha / 2.0 + params.b;
    let amp = c.tail_potential * c.radial_sobolev.powf(alpha) * mt.powf(1.0 + alpha / 4.0);
    let (eps_term, young) = if alpha == 4.0 {
        (0.0, amp * r.powf(-beta) * k)
    } else {
        let (cy, q) = young_coefficient(eps, 4.0 / alpha);
        (eps * k, cy * (amp * r.powf(-beta)).powf(q))
    };
    Ok(BoundTerms {
        value: main + r_bilap + eps_term + young,
        main,
        eps_term,
        r_power: r_bilap + if alpha == 4.0 { 0.0 } else { young },
        young,
        r,
        eps,
        tail_mass: mt,
        constants: c,
    })
}

/// Upper bound on `d²V_{φ_R}/dt²` in the mass-critical case:
/// `16E(u₀) − 2∫_{|x|>R}(χ₁ − ε/(d+2−b) χ₂^{d/(2−b)})|∇u|²` plus explicit
/// `R^{−2}`, `εR^{−2}` and `ε^{−(2−b)/(2d−2+b)}R^{−2}` remainders.
pub fn localized_bound_mass_critical(
    field: &Field,
    chi: &ChiProfile,
    params: &PhysParams,
    eps: f64,
    energy0: f64,
) -> Result<BoundTerms> {
    let r = check_radial(field, chi, params)?;
    if !params.is_mass_critical() {
        return param("the refined bound needs alpha = (4 - 2b)/d");
    }
    if !(eps > 0.0) {
        return param(format!("eps = {eps} must be positive"));
    }
    let c = bound_constants(chi, params)?;
    let g = field.grid();
    let (d, b, alpha) = (params.d as f64, params.b, params.alpha);
    let mt = tail_mass(field, r);
    let faces = g.face_derivative(field.values());
    let chi_int: f64 = faces
        .iter()
        .zip(g.face_weights().iter().zip(g.face_positions()))
        .filter(|(_, (_, &x))| x > r)
        .map(|(du, (w, &x))| w * chi.positivity(x, eps) * du.norm_sqr())
        .sum();
    let main = 16.0 * energy0 - 2.0 * chi_int;
    let pref = 2.0 / (d + 2.0 - b);
    let r_bilap = c.bilaplacian * mt / (r * r);
    let r_grad = pref * eps * (c.w_slope_sup / r).powi(2) * mt;
    // ∫χ₂|x|^{-b}|u|^{α+2} ≤ R^{−β} C_rs^α ‖w‖∞^{α/2} M_R^{1+α/4} ‖∇(wu)‖^{α/2}, β q = 2
    let beta = (d - 1.0) * alpha / 2.0 + b;
    let amp = c.radial_sobolev.powf(alpha) * c.w_sup.powf(alpha / 2.0) * mt.powf(1.0 + alpha / 4.0);
    let (cy, q) = young_coefficient(eps / 2.0, 4.0 / alpha);
    let young = pref * cy * (amp * r.powf(-beta)).powf(q);
    Ok(BoundTerms {
        value: main + r_bilap + r_grad + young,
        main,
        eps_term: 0.0,
        r_power: r_bilap + r_grad + young,
        young,
        r,
        eps,
        tail_mass: mt,
        constants: c,
    })
}

/// Norms on `|x| > 1` entering the 1D estimate.
fn exterior_mass_1d(field: &Field) -> f64 {
    tail_mass(field, 1.0)
}

/// `16E(u₀) + C(1+N)^{2−b}‖u‖^{6−2b}_{L²(|x|>1)} + N‖u‖²_{L²(|x|>1)}` with the computed
/// constants; requires `‖u‖_{L²(|x|>1)} ≤ a₀`.
pub fn bound_1d(field: &Field, chi: &ChiProfile, energy0: f64) -> Result<f64> {
    if field.grid().geometry() != Geometry::Cartesian1d {
        return param("the 1D bound needs a cartesian-1d grid");
    }
    if chi.kind != CutoffKind::OneDimensional {
        return param("the 1D bound needs the 1D cutoff profile");
    }
    let (c, n, a0) = match (chi.c_const, chi.n_norm, chi.a0) {
        (Some(c), Some(n), Some(a0)) => (c, n, a0),
        _ => return param("1D cutoff constants missing"),
    };
    let m1 = exterior_mass_1d(field);
    if m1.sqrt() > a0 {
        return Err(InlsError::Precondition(format!(
            "tail norm ‖u‖_L²(|x|>1) = {:.6e} exceeds a0 = {a0:.6e}",
            m1.sqrt()
        )));
    }
    let b = chi.b;
    Ok(16.0 * energy0 + c * (1.0 + n).powf(2.0 - b) * m1.sqrt().powf(6.0 - 2.0 * b) + n * m1)
}

/// `f(x) = x²/2 − C_GN/(α+2) x^{(dα+2b)/2}` and its critical point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FFunction {
    pub c_gn: f64,
    pub alpha: f64,
    /// `(dα+2b)/2`.
    pub power: f64,
}

impl FFunction {
    pub fn from_profile(profile: &GroundStateProfile) -> Result<Self> {
        let p = &profile.params;
        if p.regime != crate::params::Regime::Intercritical {
            return param(format!("f is defined for intercritical parameters, got {}", p.regime));
        }
        Ok(Self { c_gn: profile.c_gn, alpha: p.alpha, power: p.d_alpha_2b() / 2.0 })
    }

    pub fn value(&self, x: f64) -> f64 {
        x * x / 2.0 - self.c_gn / (self.alpha + 2.0) * x.powf(self.power)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        x - self.c_gn * self.power / (self.alpha + 2.0) * x.powf(self.power - 1.0)
    }

    /// The unique positive zero of `f'`.
    pub fn x0(&self) -> f64 {
        ((self.alpha + 2.0) / (self.c_gn * self.power)).powf(1.0 / (self.power - 2.0))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdConsistency {
    pub checkpoints: usize,
    pub spacing: f64,
    /// `max |fd − formula| / max |formula|` over interior checkpoints.
    pub max_rel_first: f64,
    pub max_rel_second: f64,
    pub max_abs_first: f64,
    pub max_abs_second: f64,
    /// `(t, V, dV fd, dV formula, d²V fd, d²V formula)` at each interior checkpoint.
    pub rows: Vec<[f64; 6]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirialReport {
    pub cutoff_id: String,
    pub v: f64,
    pub dv_analytic: f64,
    pub d2v_analytic: f64,
    pub d2v_bound: Option<f64>,
    pub fd_consistency: Option<FdConsistency>,
}

impl VirialReport {
    pub fn evaluate(field: &Field, weight: &Weight, params: &PhysParams) -> Result<Self> {
        Ok(Self {
            cutoff_id: weight.id(),
            v: virial_value(field, weight)?,
            dv_analytic: virial_first_derivative(field, weight)?,
            d2v_analytic: virial_second_derivative(field, weight, params)?,
            d2v_bound: None,
            fd_consistency: None,
        })
    }

    /// Whether `d2v_analytic ≤ d2v_bound` up to `slack` times the scale of the terms.
    pub fn bound_holds(&self, slack: f64, scale: f64) -> Option<bool> {
        self.d2v_bound.map(|bd| self.d2v_analytic <= bd + slack * scale)
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Fourth-order centred differences of `V_a` over uniformly spaced checkpoints,
/// compared with the first- and second-derivative formulas.
pub fn trajectory_consistency(times: &[f64], fields: &[Field], weight: &Weight, params: &PhysParams) -> Result<FdConsistency> {
    let n = times.len();
    if n != fields.len() {
        return param("times and fields differ in length");
    }
    if n < 5 {
        return Err(InlsError::InsufficientData(format!("{n} checkpoints, need at least 5")));
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return param("checkpoints must be uniformly spaced in time");
    }
    let evals = parallel::map(fields, |f| -> Result<[f64; 3]> {
        Ok([
            virial_value(f, weight)?,
            virial_first_derivative(f, weight)?,
            virial_second_derivative(f, weight, params)?,
        ])
    });
    let evals: Vec<[f64; 3]> = evals.into_iter().collect::<Result<_>>()?;
    let v: Vec<f64> = evals.iter().map(|e| e[0]).collect();
    let mut rows = Vec::new();
    for i in 2..n - 2 {
        let d1 = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
        let d2 = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * h * h);
        rows.push([times[i], v[i], d1, evals[i][1], d2, evals[i][2]]);
    }
    let max_abs = |k: usize, j: usize| rows.iter().map(|r| (r[k] - r[j]).abs()).fold(0.0, f64::max);
    let scale = |j: usize| rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
    let (a1, a2) = (max_abs(2, 3), max_abs(4, 5));
    Ok(FdConsistency {
        checkpoints: n,
        spacing: h,
        max_rel_first: rel(a1, scale(3)),
        max_rel_second: rel(a2, scale(5)),
        max_abs_first: a1,
        max_abs_second: a2,
        rows,
    })
}

/// Mass-critical energy identity: `d²V/dt² = 16E(u)` for `a = |x|²`.
pub fn mass_critical_convexity(field: &Field, params: &PhysParams) -> Result<f64> {
    if !params.is_mass_critical() {
        return param("convexity identity needs the mass-critical exponent");
    }
    Ok(16.0 * energy_of(kinetic(field), potential(field, params), params))
}
