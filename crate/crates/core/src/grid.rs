//! Offset uniform grids, their quadrature rules and differentiation rules.
//!
//! Nodes sit at cell centres `r_j = (j + 1/2) h`, so neither the origin nor the
//! outer wall is ever a node and `|x|^{-b}` is only evaluated where it is finite.
//! Quadrature is the midpoint rule with local endpoint corrections: near the
//! origin the integrand behaves like `r^p g(r)` with `g` even, and the midpoint
//! error expansion is a series in `ζ(-p-2k, 1/2) h^{p+2k+1}`; at the wall the
//! ordinary Euler–Maclaurin terms are removed. Both are absorbed into a few
//! corrected weights.
//!
//! Derivatives live on cell faces `r = j h` and use the fourth-order staggered
//! stencil with mirror ghost nodes at the origin (radial symmetry) and at the
//! wall (homogeneous Neumann). The discrete Laplacian is `-W^{-1} Dᵀ W_f D`,
//! symmetric in the quadrature inner product.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::zeta::hurwitz_zeta;

/// Smallest admissible number of nodes.
pub const MIN_NODES: usize = 16;
const ORIGIN_CORRECTIONS: usize = 4;
const WALL_CORRECTIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// Radial functions in `R^d`; nodes are radii in `(0, r_max)`.
    RadialD,
    /// Functions on the line; nodes span `(-r_max, r_max)`.
    Cartesian1d,
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Geometry::RadialD => "radial-d",
            Geometry::Cartesian1d => "cartesian-1d",
        })
    }
}

impl std::str::FromStr for Geometry {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "radial-d" | "radial" => Ok(Geometry::RadialD),
            "cartesian-1d" | "cartesian" => Ok(Geometry::Cartesian1d),
            other => Err(format!("unknown geometry '{other}'")),
        }
    }
}

/// Area of the unit sphere `S^{d-1}`; equals 2 for `d = 1`.
pub fn unit_sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * unit_sphere_area(d - 2),
    }
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    geometry: Geometry,
    d: usize,
    r_max: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    radii: Vec<f64>,
    weights: Vec<f64>,
    face_positions: Vec<f64>,
    face_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn radial(d: usize, r_max: f64, n: usize) -> Result<Self> {
        if d == 0 {
            return param("dimension must be at least 1");
        }
        Self::check_common(r_max, n)?;
        let h = r_max / n as f64;
        let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let c = unit_sphere_area(d);
        let weights = half_line_weights(n, h, d as f64 - 1.0, c);
        let face_positions: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        let mut face_weights: Vec<f64> =
            face_positions.iter().map(|&r| c * r.powi(d as i32 - 1) * h).collect();
        face_weights[0] *= 0.5;
        face_weights[n] *= 0.5;
        Ok(Self {
            geometry: Geometry::RadialD,
            d,
            r_max,
            n,
            h,
            radii: nodes.clone(),
            nodes,
            weights,
            face_positions,
            face_weights,
        })
    }

    pub fn cartesian_1d(r_max: f64, n: usize) -> Result<Self> {
        Self::check_common(r_max, n)?;
        if n % 2 != 0 {
            return param(format!("cartesian-1d grids need an even node count, got {n}"));
        }
        let h = 2.0 * r_max / n as f64;
        let nodes: Vec<f64> = (0..n).map(|j| -r_max + (j as f64 + 0.5) * h).collect();
        let radii = nodes.iter().map(|x| x.abs()).collect();
        let weights = mirror(&half_line_weights(n / 2, h, 0.0, 1.0));
        let face_positions: Vec<f64> = (0..=n).map(|j| -r_max + j as f64 * h).collect();
        let mut face_weights = vec![h; n + 1];
        face_weights[0] *= 0.5;
        face_weights[n] *= 0.5;
        Ok(Self {
            geometry: Geometry::Cartesian1d,
            d: 1,
            r_max,
            n,
            h,
            nodes,
            radii,
            weights,
            face_positions,
            face_weights,
        })
    }

    pub fn new(geometry: Geometry, d: usize, r_max: f64, n: usize) -> Result<Self> {
        match geometry {
            Geometry::RadialD => Self::radial(d, r_max, n),
            Geometry::Cartesian1d => {
                if d != 1 {
                    return param(format!("cartesian-1d geometry requires d = 1, got {d}"));
                }
                Self::cartesian_1d(r_max, n)
            }
        }
    }

    fn check_common(r_max: f64, n: usize) -> Result<()> {
        if n < MIN_NODES {
            return param(format!("grid needs at least {MIN_NODES} nodes, got {n}"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return param(format!("r_max = {r_max} must be positive and finite"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    /// Signed node coordinates (radii for radial grids).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// `|x|` at every node.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    /// Weights for `∫ g dx` (the surface factor `c_d r^{d-1}` is included).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn face_positions(&self) -> &[f64] {
        &self.face_positions
    }
    pub fn face_weights(&self) -> &[f64] {
        &self.face_weights
    }

    /// Weights for `∫ |x|^{-b} g dx`, with the singular factor folded into the rule.
    pub fn singular_weights(&self, b: f64) -> Vec<f64> {
        if b == 0.0 {
            return self.weights.clone();
        }
        match self.geometry {
            Geometry::RadialD => {
                half_line_weights(self.n, self.h, self.d as f64 - 1.0 - b, unit_sphere_area(self.d))
            }
            Geometry::Cartesian1d => mirror(&half_line_weights(self.n / 2, self.h, -b, 1.0)),
        }
    }

    /// Volume of the computational domain (ball of radius `r_max`, or the interval).
    pub fn domain_volume(&self) -> f64 {
        match self.geometry {
            Geometry::RadialD => unit_sphere_area(self.d) * self.r_max.powi(self.d as i32) / self.d as f64,
            Geometry::Cartesian1d => 2.0 * self.r_max,
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Node index with a mirror rule for ghosts outside `0..n`.
    fn reflect(&self, j: isize) -> usize {
        let n = self.n as isize;
        // mirror about the origin (radial) or the left wall (cartesian)
        let k = if j < 0 {
            -j - 1
        } else if j >= n {
            2 * n - 1 - j
        } else {
            j
        };
        k as usize
    }

    /// Stencil of the staggered derivative at face `j`: (node, coefficient) pairs.
    pub(crate) fn face_stencil(&self, j: usize) -> [(usize, f64); 4] {
        let s = 1.0 / (24.0 * self.h);
        let j = j as isize;
        [
            (self.reflect(j - 2), s),
            (self.reflect(j - 1), -27.0 * s),
            (self.reflect(j), 27.0 * s),
            (self.reflect(j + 1), -s),
        ]
    }

    /// Fourth-order derivative on the `n + 1` cell faces. Zero at the origin
    /// face of radial grids and at the walls by the mirror rule.
    pub fn face_derivative(&self, u: &[Complex64]) -> Vec<Complex64> {
        (0..=self.n)
            .map(|j| self.face_stencil(j).iter().map(|&(k, c)| u[k] * c).sum())
            .collect()
    }

    /// Fourth-order centred derivative at the nodes.
    pub fn node_derivative(&self, u: &[Complex64]) -> Vec<Complex64> {
        let s = 1.0 / (12.0 * self.h);
        (0..self.n as isize)
            .map(|j| {
                let at = |o: isize| u[self.reflect(j + o)];
                (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) * s
            })
            .collect()
    }

    /// `Σ_f W_f |D u|_f²`, the discrete Dirichlet energy `∫ |∇u|²`.
    pub fn dirichlet_energy(&self, u: &[Complex64]) -> f64 {
        self.face_derivative(u)
            .iter()
            .zip(&self.face_weights)
            .map(|(g, w)| w * g.norm_sqr())
            .sum()
    }

    /// The symmetric band matrix `Dᵀ W_f D` with half bandwidth 3, stored as
    /// `band[i][3 + (k - i)]` for column `k`.
    pub fn stiffness_band(&self) -> Vec<[f64; 7]> {
        let mut band = vec![[0.0; 7]; self.n];
        for j in 0..=self.n {
            let st = self.face_stencil(j);
            let w = self.face_weights[j];
            for &(a, ca) in &st {
                for &(b, cb) in &st {
                    let off = b as isize - a as isize;
                    debug_assert!(off.abs() <= 3);
                    band[a][(3 + off) as usize] += w * ca * cb;
                }
            }
        }
        band
    }
}

/// Midpoint weights for `∫_0^{n h} c r^p g(r) dr` with corrections at both ends.
fn half_line_weights(n: usize, h: f64, p: f64, c: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|j| c * h * ((j as f64 + 0.5) * h).powf(p)).collect();
    let k_origin = ORIGIN_CORRECTIONS.min(n / 4);
    let origin_rhs: Vec<f64> = (0..k_origin)
        .map(|m| -hurwitz_zeta(-p - 2.0 * m as f64, 0.5))
        .collect();
    if origin_rhs.iter().any(|v| v.abs() > 1e-15) {
        let eta = solve_moments(k_origin, |j, m| (j as f64 + 0.5).powi(2 * m as i32), &origin_rhs);
        for (j, e) in eta.iter().enumerate() {
            w[j] += c * h.powf(p + 1.0) * e;
        }
    }
    let k_wall = WALL_CORRECTIONS.min(n / 4);
    let wall_rhs: Vec<f64> = (0..k_wall).map(|k| -hurwitz_zeta(-(k as f64), 0.5)).collect();
    let eta = solve_moments(k_wall, |j, k| (j as f64 + 0.5).powi(k as i32), &wall_rhs);
    for (j, e) in eta.iter().enumerate() {
        let idx = n - 1 - j;
        let r = (idx as f64 + 0.5) * h;
        w[idx] += c * r.powf(p) * h * e;
    }
    w
}

/// Solves `Σ_j η_j basis(j, m) = rhs[m]` by Gaussian elimination with partial pivoting.
fn solve_moments(k: usize, basis: impl Fn(usize, usize) -> f64, rhs: &[f64]) -> Vec<f64> {
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|m| {
            let mut row: Vec<f64> = (0..k).map(|j| basis(j, m)).collect();
            row.push(rhs[m]);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..=k {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][k] - s) / a[row][row];
    }
    x
}

/// Weights for the symmetric line from weights on the right half-line.
fn mirror(half: &[f64]) -> Vec<f64> {
    half.iter().rev().chain(half.iter()).copied().collect()
}
