//! Cutoff weights for localized virial estimates.
//!
//! Both families share one profile `ϑ` on `s ≥ 0`: `2s` on `[0, 1]`,
//! `2[s − (s−1)³]` on `(1, 1+1/√3]`, a quintic Hermite bridge down to `0` on
//! `(1+1/√3, 2)` and `0` beyond. `θ = ∫ϑ`. The radial family uses
//! `φ_R(r) = R²θ(r/R)`; the 1D family extends `θ` evenly to the real line.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{param, InlsError, Result};
use crate::params::PhysParams;

/// End of the cubic band, `1 + 1/√3`.
pub const R1: f64 = 1.0 + 0.577_350_269_189_625_8;
const DEFAULT_SAMPLES: usize = 20_000;
const SAMPLE_SPAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    RadialQuadraticCapped,
    OneDimensional,
}

/// Quintic in `t = (s − R1)/L` joining the cubic band to zero with two matched derivatives.
#[derive(Debug, Clone, Copy)]
struct Bridge {
    c: [f64; 6],
    len: f64,
}

impl Bridge {
    fn new() -> Self {
        let len = 2.0 - R1;
        let v0 = 2.0 * (R1 - (R1 - 1.0).powi(3));
        let dd0 = -12.0 * (R1 - 1.0);
        let (c0, c1, c2) = (v0, 0.0, dd0 * len * len / 2.0);
        // P(1) = P'(1) = P''(1) = 0 for the top three coefficients
        let b = [-(c0 + c1 + c2), -(c1 + 2.0 * c2), -2.0 * c2];
        let m = [[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]];
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(m);
        let mut top = [0.0; 3];
        for (k, t) in top.iter_mut().enumerate() {
            let mut mk = m;
            for r in 0..3 {
                mk[r][k] = b[r];
            }
            *t = det(mk) / d;
        }
        Self { c: [c0, c1, c2, top[0], top[1], top[2]], len }
    }

    /// `[P, P', P'', P''']` with respect to `s`.
    fn eval(&self, s: f64) -> [f64; 4] {
        let t = (s - R1) / self.len;
        let c = &self.c;
        let p = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let p1 = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let p2 = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        let p3 = 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]);
        let l = self.len;
        [p, p1 / l, p2 / (l * l), p3 / (l * l * l)]
    }

    /// `∫_{R1}^{s} P`.
    fn integral(&self, s: f64) -> f64 {
        let t = (s - R1) / self.len;
        let mut acc = 0.0;
        let mut tp = t;
        for (k, ck) in self.c.iter().enumerate() {
            acc += ck * tp / (k as f64 + 1.0);
            tp *= t;
        }
        acc * self.len
    }
}

/// `[ϑ, ϑ', ϑ'', ϑ''']` at `s ≥ 0`.
fn vartheta(bridge: &Bridge, s: f64) -> [f64; 4] {
    if s <= 1.0 {
        [2.0 * s, 2.0, 0.0, 0.0]
    } else if s <= R1 {
        let e = s - 1.0;
        [2.0 * (s - e * e * e), 2.0 - 6.0 * e * e, -12.0 * e, -12.0]
    } else if s < 2.0 {
        bridge.eval(s)
    } else {
        [0.0; 4]
    }
}

fn theta_base(bridge: &Bridge, s: f64) -> f64 {
    let band = |s: f64| s * s - (s - 1.0).powi(4) / 2.0;
    if s <= 1.0 {
        s * s
    } else if s <= R1 {
        band(s)
    } else {
        band(R1) + bridge.integral(s.min(2.0))
    }
}

#[derive(Debug, Clone)]
pub struct CutoffFamily {
    kind: CutoffKind,
    r_scale: Option<f64>,
    cap: f64,
    n_norm: Option<f64>,
    bridge: Bridge,
}

pub fn build_radial_cutoff(r: f64) -> Result<CutoffFamily> {
    if !(r >= 1.0 && r.is_finite()) {
        return param(format!("cutoff radius R = {r} must be at least 1"));
    }
    let bridge = Bridge::new();
    Ok(CutoffFamily {
        kind: CutoffKind::RadialQuadraticCapped,
        r_scale: Some(r),
        cap: theta_base(&bridge, 2.0),
        n_norm: None,
        bridge,
    })
}

pub fn build_1d_cutoff() -> CutoffFamily {
    let bridge = Bridge::new();
    let mut fam = CutoffFamily {
        kind: CutoffKind::OneDimensional,
        r_scale: None,
        cap: theta_base(&bridge, 2.0),
        n_norm: None,
        bridge,
    };
    fam.n_norm = Some(fam.measure_n_norm(200_000));
    fam
}

impl CutoffFamily {
    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    /// `R` for the radial kind.
    pub fn r_scale(&self) -> Option<f64> {
        self.r_scale
    }

    /// Value of the unscaled `θ` on `s ≥ 2`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// `‖ϑ'‖∞ + ‖ϑ''‖∞ + ‖ϑ'''‖∞` (1D kind).
    pub fn n_norm(&self) -> Option<f64> {
        self.n_norm
    }

    /// Coefficients of the bridge polynomial in `t = (s − R1)/(2 − R1)`.
    pub fn bridge_coefficients(&self) -> [f64; 6] {
        self.bridge.c
    }

    fn measure_n_norm(&self, samples: usize) -> f64 {
        let mut m = [0.0_f64; 3];
        for k in 0..=samples {
            let s = 2.5 * k as f64 / samples as f64;
            let v = vartheta(&self.bridge, s);
            for j in 0..3 {
                m[j] = m[j].max(v[j + 1].abs());
            }
        }
        // the bridge's third derivative is largest at its left end, which a grid may straddle
        let left = vartheta(&self.bridge, R1 * (1.0 + f64::EPSILON));
        m[2] = m[2].max(left[3].abs());
        m.iter().sum()
    }

    /// `[θ, θ', θ'', θ''', θ'''']` of the unscaled profile at signed `x`
    /// (the 1D kind is even; the radial kind is evaluated at `|x|`).
    pub fn theta_derivs(&self, x: f64) -> [f64; 5] {
        let s = x.abs();
        let v = vartheta(&self.bridge, s);
        let th = theta_base(&self.bridge, s);
        match self.kind {
            CutoffKind::OneDimensional => {
                let sg = if x < 0.0 { -1.0 } else { 1.0 };
                [th, sg * v[0], v[1], sg * v[2], v[3]]
            }
            CutoffKind::RadialQuadraticCapped => [th, v[0], v[1], v[2], v[3]],
        }
    }

    pub fn theta(&self, x: f64) -> f64 {
        self.theta_derivs(x)[0]
    }

    /// Derivatives `[a, a', a'', a''', a'''']` of the weight actually used in
    /// the virial: `φ_R` for the radial kind, `θ` for the 1D kind.
    pub fn weight_derivs(&self, x: f64) -> [f64; 5] {
        match self.r_scale {
            Some(r) => {
                let t = self.theta_derivs(x / r);
                [r * r * t[0], r * t[1], t[2], t[3] / r, t[4] / (r * r)]
            }
            None => self.theta_derivs(x),
        }
    }

    /// Inner radius below which the weight is exactly `|x|²`.
    pub fn core_radius(&self) -> f64 {
        self.r_scale.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiProfile {
    pub kind: CutoffKind,
    pub r_scale: Option<f64>,
    pub d: usize,
    pub b: f64,
    /// Largest admissible ε in the mass-critical positivity condition (radial kind).
    pub eps_max: Option<f64>,
    /// 1D constants: `a₁`, `a₀ = a₁^{1/(4−b)}`, `C`, `N` and the bound on `|∂ₓ(ρ²)|`.
    pub a1: Option<f64>,
    pub a0: Option<f64>,
    pub c_const: Option<f64>,
    pub n_norm: Option<f64>,
    pub rho_bound: Option<f64>,
    pub samples: usize,
    #[serde(skip)]
    family: Option<CutoffFamily>,
}

impl ChiProfile {
    pub fn family(&self) -> &CutoffFamily {
        self.family.as_ref().expect("profile built from a family")
    }

    /// `χ₁` at signed `x` (radial: `r`).
    pub fn chi1(&self, x: f64) -> f64 {
        let a = self.family().weight_derivs(x);
        2.0 * (2.0 - a[2])
    }

    pub fn chi2(&self, x: f64) -> f64 {
        let a = self.family().weight_derivs(x);
        let r = x.abs();
        let b = self.b;
        // a'/r is even in x for both kinds
        let a1_over_r = if r == 0.0 { 2.0 } else { a[1] / x };
        match self.kind {
            CutoffKind::RadialQuadraticCapped => {
                let d = self.d as f64;
                let lap = a[2] + (d - 1.0) * a1_over_r;
                (2.0 - b) * (2.0 * d - lap) + d * b * (2.0 - a1_over_r)
            }
            CutoffKind::OneDimensional => match band_chi2_1d(r, b) {
                Some((c, _)) => c,
                None => (2.0 - b) * (2.0 - a[2]) + b * (2.0 - a1_over_r),
            },
        }
    }

    /// `ρ = χ₂^{1/(4−2b)}` (1D kind).
    pub fn rho(&self, x: f64) -> f64 {
        self.chi2(x).max(0.0).powf(1.0 / (4.0 - 2.0 * self.b))
    }

    /// `∂ₓ(ρ²) = ∂ₓχ₂ / ((2−b) χ₂^{(1−b)/(2−b)})` on `|x| > 1` (1D kind).
    pub fn rho_sq_derivative(&self, x: f64) -> f64 {
        let b = self.b;
        if let Some((c, dc)) = band_chi2_1d(x.abs(), b) {
            return x.signum() * dc / ((2.0 - b) * c.powf((1.0 - b) / (2.0 - b)));
        }
        let t = self.family().theta_derivs(x);
        let dchi2 = -(2.0 - b) * t[3] - b * (t[2] / x - t[1] / (x * x));
        let chi2 = self.chi2(x);
        if dchi2 == 0.0 {
            return 0.0;
        }
        dchi2 / ((2.0 - b) * chi2.powf((1.0 - b) / (2.0 - b)))
    }

    /// `χ₁ − ε/(d+2−b) χ₂^{d/(2−b)}` (radial kind).
    pub fn positivity(&self, r: f64, eps: f64) -> f64 {
        let d = self.d as f64;
        let b = self.b;
        self.chi1(r) - eps / (d + 2.0 - b) * self.chi2(r).max(0.0).powf(d / (2.0 - b))
    }
}

/// `(χ₂, dχ₂/ds)` on the cubic band `1 < s ≤ R1`, written in `e = s − 1` so
/// that nothing cancels as `s → 1⁺`.
fn band_chi2_1d(s: f64, b: f64) -> Option<(f64, f64)> {
    if !(s > 1.0 && s <= R1) {
        return None;
    }
    let e = s - 1.0;
    let chi2 = 6.0 * (2.0 - b) * e * e + 2.0 * b * e * e * e / s;
    let d = 12.0 * (2.0 - b) * e + 6.0 * b * e * e / s - 2.0 * b * e * e * e / (s * s);
    Some((chi2, d))
}

pub fn chi_profile(family: &CutoffFamily, params: &PhysParams) -> Result<ChiProfile> {
    chi_profile_with_samples(family, params, DEFAULT_SAMPLES)
}

/// Samples `s = r/R` (or `|x|`) in `(1, 3]`; beyond `s = 2` every quantity is constant.
fn exterior_samples(samples: usize) -> impl Iterator<Item = f64> {
    (1..=samples).map(move |k| 1.0 + (SAMPLE_SPAN - 1.0) * k as f64 / samples as f64)
}

pub fn chi_profile_with_samples(family: &CutoffFamily, params: &PhysParams, samples: usize) -> Result<ChiProfile> {
    let mut prof = ChiProfile {
        kind: family.kind,
        r_scale: family.r_scale,
        d: params.d,
        b: params.b,
        eps_max: None,
        a1: None,
        a0: None,
        c_const: None,
        n_norm: family.n_norm,
        rho_bound: None,
        samples,
        family: Some(family.clone()),
    };
    match family.kind {
        CutoffKind::RadialQuadraticCapped => {
            if params.d < 2 {
                return param("the radial cutoff family needs d >= 2");
            }
            let r = family.r_scale.expect("radial family has R");
            let pts: Vec<f64> = exterior_samples(samples).map(|s| s * r).collect();
            let feasible = |eps: f64| pts.iter().all(|&x| prof.positivity(x, eps) >= 0.0);
            prof.eps_max = Some(bisect_largest(feasible, "positivity condition")?);
        }
        CutoffKind::OneDimensional => {
            if params.d != 1 {
                return param("the 1D cutoff family needs d = 1");
            }
            let b = params.b;
            let pts: Vec<f64> = exterior_samples(samples).collect();
            let k = 2f64.powf(3.0 - 2.0 * b) / (3.0 - b);
            let feasible = |a: f64| pts.iter().all(|&x| prof.chi1(x) - a * k * prof.chi2(x) >= 0.0);
            let a1 = bisect_largest(feasible, "1D smallness condition")?;
            let rho_bound = rho_derivative_bound(&prof)?;
            let n = family.n_norm.expect("1D family has N");
            prof.a1 = Some(a1);
            prof.a0 = Some(a1.powf(1.0 / (4.0 - b)));
            prof.rho_bound = Some(rho_bound);
            prof.c_const = Some(2.0 / (3.0 - b) * 2f64.powf(1.0 - b) * (rho_bound / (1.0 + n)).powf(2.0 - b));
        }
    }
    Ok(prof)
}

/// Largest `v > 0` with `ok(v)`, assuming `ok` is monotone; relative resolution 1e-6.
fn bisect_largest(ok: impl Fn(f64) -> bool, what: &str) -> Result<f64> {
    let mut lo = 1e-12;
    if !ok(lo) {
        return Err(InlsError::Construction(format!("{what} fails for every positive value")));
    }
    let mut hi = 1.0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(InlsError::Construction(format!("{what} holds for unbounded values")));
        }
    }
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `sup_{|x|>1} |∂ₓ(ρ²)|` by dense sampling at `10⁵` points, refined once by a factor 2.
pub fn rho_derivative_bound(profile: &ChiProfile) -> Result<f64> {
    if profile.kind != CutoffKind::OneDimensional {
        return param("rho bound is defined for the 1D cutoff family");
    }
    let sup = |samples: usize| -> Result<f64> {
        let mut m = 0.0_f64;
        for x in exterior_samples(samples) {
            let v = profile.rho_sq_derivative(x);
            if !v.is_finite() {
                return Err(InlsError::Construction(format!("non-finite ∂(ρ²) at x = {x}")));
            }
            m = m.max(v.abs());
        }
        Ok(m)
    };
    Ok(sup(100_000)?.max(sup(200_000)?))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InvariantReport {
    pub samples: usize,
    /// Smallest sampled value of each quantity that must be nonnegative.
    pub min_two_minus_theta2: f64,
    pub min_two_minus_phi1_over_r: f64,
    pub min_two_d_minus_lap: f64,
    pub min_theta_minus_quarter_slope_sq: f64,
    pub min_chi1: f64,
    pub min_chi2: f64,
    /// Largest `ϑ'` on the bridge (must be negative).
    pub max_bridge_slope: f64,
    pub core_error: f64,
    pub cap_error: f64,
}

impl InvariantReport {
    pub fn all_hold(&self, slack: f64) -> bool {
        [
            self.min_two_minus_theta2,
            self.min_two_minus_phi1_over_r,
            self.min_two_d_minus_lap,
            self.min_theta_minus_quarter_slope_sq,
            self.min_chi1,
            self.min_chi2,
        ]
        .iter()
        .all(|&v| v >= -slack)
            && self.max_bridge_slope < 0.0
            && self.core_error <= slack
            && self.cap_error <= slack
    }
}

/// Samples every pointwise property of the family on `[0, 3·scale]` (and the mirror for 1D).
pub fn verify_invariants(chi: &ChiProfile, samples: usize) -> InvariantReport {
    let fam = chi.family();
    let scale = fam.core_radius();
    let d = chi.d as f64;
    let mut rep = InvariantReport {
        samples,
        min_two_minus_theta2: f64::INFINITY,
        min_two_minus_phi1_over_r: f64::INFINITY,
        min_two_d_minus_lap: f64::INFINITY,
        min_theta_minus_quarter_slope_sq: f64::INFINITY,
        min_chi1: f64::INFINITY,
        min_chi2: f64::INFINITY,
        max_bridge_slope: f64::NEG_INFINITY,
        core_error: 0.0,
        cap_error: 0.0,
    };
    let mirror = fam.kind == CutoffKind::OneDimensional;
    for k in 1..=samples {
        let mut xs = vec![SAMPLE_SPAN * scale * k as f64 / samples as f64];
        if mirror {
            xs.push(-xs[0]);
        }
        for x in xs {
            let a = fam.weight_derivs(x);
            let t = fam.theta_derivs(x / scale);
            let s = x.abs() / scale;
            let over_r = a[1] / x;
            rep.min_two_minus_theta2 = rep.min_two_minus_theta2.min(2.0 - a[2]);
            rep.min_two_minus_phi1_over_r = rep.min_two_minus_phi1_over_r.min(2.0 - over_r);
            let lap = a[2] + if mirror { 0.0 } else { (d - 1.0) * over_r };
            let dim = if mirror { 1.0 } else { d };
            rep.min_two_d_minus_lap = rep.min_two_d_minus_lap.min(2.0 * dim - lap);
            rep.min_theta_minus_quarter_slope_sq =
                rep.min_theta_minus_quarter_slope_sq.min(t[0] - t[1] * t[1] / 4.0);
            rep.min_chi1 = rep.min_chi1.min(chi.chi1(x));
            if s > 1.0 {
                rep.min_chi2 = rep.min_chi2.min(chi.chi2(x));
            }
            if s > R1 && s < 2.0 {
                rep.max_bridge_slope = rep.max_bridge_slope.max(t[2]);
            }
            if s <= 1.0 {
                rep.core_error = rep.core_error.max((a[0] - x * x).abs() / scale.powi(2));
            }
            if s >= 2.0 {
                rep.cap_error = rep.cap_error.max((t[0] - fam.cap).abs());
            }
        }
    }
    rep
}

/// CSV table `x, theta, theta1, theta2, theta3, chi1, chi2` of the weight actually used.
pub fn write_table<W: Write>(mut w: W, chi: &ChiProfile, xs: &[f64]) -> Result<()> {
    writeln!(w, "x,theta,theta1,theta2,theta3,chi1,chi2")?;
    for &x in xs {
        let a = chi.family().weight_derivs(x);
        writeln!(w, "{x:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", a[0], a[1], a[2], a[3], chi.chi1(x), chi.chi2(x))?;
    }
    Ok(())
}
