//! Conserved and monitored quantities, and the scaling symmetries of the equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::field::Field;
use crate::grid::Geometry;
use crate::params::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    pub variance: f64,
    pub radial_momentum: f64,
}

impl Observables {
    /// Assembles the record; `energy` is always derived from the other fields.
    pub fn from_parts(
        mass: f64,
        kinetic: f64,
        potential: f64,
        variance: f64,
        radial_momentum: f64,
        params: &PhysParams,
    ) -> Self {
        let energy = energy_of(kinetic, potential, params);
        Self { mass, kinetic, potential, energy, variance, radial_momentum }
    }
}

pub fn energy_of(kinetic: f64, potential: f64, params: &PhysParams) -> f64 {
    kinetic / 2.0 - params.mu * potential / (params.alpha + 2.0)
}

pub(crate) fn check_compatible(field: &Field, params: &PhysParams) -> Result<()> {
    if field.grid().d() != params.d {
        return param(format!(
            "grid dimension {} does not match params.d = {}",
            field.grid().d(),
            params.d
        ));
    }
    Ok(())
}

pub fn mass(field: &Field) -> f64 {
    let w = field.grid().weights();
    field.values().iter().zip(w).map(|(v, w)| w * v.norm_sqr()).sum()
}

pub fn kinetic(field: &Field) -> f64 {
    field.grid().dirichlet_energy(field.values())
}

/// `∫ |x|^{-b} |u|^{α+2}` with the singular quadrature rule.
pub fn potential(field: &Field, params: &PhysParams) -> f64 {
    let s = field.grid().singular_weights(params.b);
    potential_with(field.values(), &s, params.alpha)
}

pub(crate) fn potential_with(values: &[Complex64], singular_weights: &[f64], alpha: f64) -> f64 {
    let p = (alpha + 2.0) / 2.0;
    values.iter().zip(singular_weights).map(|(v, s)| s * v.norm_sqr().powf(p)).sum()
}

pub fn variance(field: &Field) -> f64 {
    let g = field.grid();
    field
        .values()
        .iter()
        .zip(g.weights().iter().zip(g.nodes()))
        .map(|(v, (w, x))| w * x * x * v.norm_sqr())
        .sum()
}

/// `Im ∫ ū x·∇u`.
pub fn radial_momentum(field: &Field) -> f64 {
    let g = field.grid();
    let du = g.node_derivative(field.values());
    field
        .values()
        .iter()
        .zip(&du)
        .zip(g.weights().iter().zip(g.nodes()))
        .map(|((u, du), (w, x))| w * x * (u.conj() * du).im)
        .sum()
}

pub fn observables(field: &Field, params: &PhysParams) -> Result<Observables> {
    check_compatible(field, params)?;
    Ok(Observables::from_parts(
        mass(field),
        kinetic(field),
        potential(field, params),
        variance(field),
        radial_momentum(field),
        params,
    ))
}

/// `x ↦ λ^{(2-b)/α} u(λx)`.
pub fn scale_field(field: &Field, lambda: f64, params: &PhysParams) -> Result<Field> {
    check_compatible(field, params)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("lambda = {lambda} must be positive and finite"));
    }
    field.resample(lambda, lambda.powf((2.0 - params.b) / params.alpha))
}

/// `x ↦ λ^{-1/2} u(x/λ)` on a one-dimensional Cartesian grid.
pub fn scale_field_1d_mass_critical(field: &Field, lambda: f64) -> Result<Field> {
    if field.grid().geometry() != Geometry::Cartesian1d {
        return param(format!(
            "mass-critical 1D scaling needs a cartesian-1d grid, got {}",
            field.grid().geometry()
        ));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("lambda = {lambda} must be positive and finite"));
    }
    field.resample(1.0 / lambda, lambda.powf(-0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use std::sync::Arc;

    #[test]
    fn zero_field_has_zero_observables() {
        let g = Arc::new(RadialGrid::radial(3, 6.0, 128).unwrap());
        let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
        let o = observables(&Field::zeros(g), &p).unwrap();
        assert_eq!(o, Observables::from_parts(0.0, 0.0, 0.0, 0.0, 0.0, &p));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = Arc::new(RadialGrid::radial(2, 6.0, 128).unwrap());
        let p = PhysParams::new(3, 0.5, 1.0, 1.0).unwrap();
        assert!(observables(&Field::zeros(g), &p).is_err());
    }

    #[test]
    fn gaussian_mass_in_1d() {
        let g = Arc::new(RadialGrid::cartesian_1d(10.0, 8192).unwrap());
        let f = Field::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        let want = (std::f64::consts::PI / 2.0).sqrt();
        assert!((mass(&f) - want).abs() < 1e-12);
        // ∫ x² e^{-2x²} = √(π/2)/4 and ∫ |e^{-x²}'|² = √(π/2)
        assert!((variance(&f) - want / 4.0).abs() < 1e-12);
        assert!((kinetic(&f) - want).abs() < 1e-10);
    }

    #[test]
    fn momentum_of_chirped_gaussian() {
        // u = e^{-r²/2 + i c r²}: Im ū r u_r = 2c r² e^{-r²}
        let c = 0.3;
        let g = Arc::new(RadialGrid::radial(2, 10.0, 2048).unwrap());
        let f = Field::from_fn(g, |r| Complex64::new(-r * r / 2.0, c * r * r).exp()).unwrap();
        let want = 2.0 * c * std::f64::consts::PI;
        assert!((radial_momentum(&f) - want).abs() < 1e-8);
    }

    #[test]
    fn energy_is_derived_bit_for_bit() {
        let g = Arc::new(RadialGrid::radial(2, 8.0, 512).unwrap());
        let p = PhysParams::new(2, 1.0, 1.5, 1.0).unwrap();
        let f = Field::from_real_fn(g, |r| 1.3 * (-r * r).exp()).unwrap();
        let o = observables(&f, &p).unwrap();
        assert_eq!(o.energy, o.kinetic / 2.0 - p.mu * o.potential / (p.alpha + 2.0));
    }

    #[test]
    fn non_cartesian_mass_critical_scaling_rejected() {
        let g = Arc::new(RadialGrid::radial(1, 8.0, 512).unwrap());
        let f = Field::zeros(g);
        assert!(scale_field_1d_mass_critical(&f, 0.5).is_err());
    }

    #[test]
    fn mass_critical_1d_scaling_law() {
        let g = Arc::new(RadialGrid::cartesian_1d(12.0, 8192).unwrap());
        let p = PhysParams::mass_critical(1, 0.5).unwrap();
        let u = Field::from_real_fn(g, |x| 1.2 * (-x * x).exp()).unwrap();
        let v = scale_field_1d_mass_critical(&u, 0.5).unwrap();
        let (ou, ov) = (observables(&u, &p).unwrap(), observables(&v, &p).unwrap());
        assert!(((ov.mass - ou.mass) / ou.mass).abs() < 1e-10);
        assert!((ov.energy / ou.energy - 4.0).abs() < 1e-8, "{}", ov.energy / ou.energy);
        let same = scale_field_1d_mass_critical(&u, 1.0).unwrap();
        assert_eq!(same.values(), u.values());
    }
}
