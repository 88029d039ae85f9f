//! Complex fields sampled on a [`RadialGrid`] and their columnar text format.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{InlsError, Result};
use crate::grid::{Geometry, RadialGrid};
use crate::params::PhysParams;

/// Half-width of the Lagrange stencil used for resampling (8 points).
const INTERP_HALF: isize = 4;
/// A field counts as negligible near the wall when it is this small relative to its peak.
const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(InlsError::Parameter(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(InlsError::Numerical(format!("non-finite field value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Samples `f` at the signed node coordinates.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn from_real_values(grid: Arc<RadialGrid>, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_real_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Unchecked constructor for the time stepper, which reports non-finite values itself.
    pub(crate) fn from_raw(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, v| v * c)
    }

    /// `sqrt(Σ w |u - v|²)`.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn negligible_near_wall(&self) -> bool {
        let peak = self.max_abs();
        if peak == 0.0 {
            return true;
        }
        let n = self.values.len();
        let band = (n / 10).max(1);
        let tail = |vals: &[Complex64]| vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut worst = tail(&self.values[n - band..]);
        if self.grid.geometry() == Geometry::Cartesian1d {
            worst = worst.max(tail(&self.values[..band]));
        }
        worst <= TAIL_TOL * peak
    }

    /// Value at an arbitrary coordinate by 8-point Lagrange interpolation.
    /// Points beyond the wall read as zero; the caller decides whether that is acceptable.
    pub fn interpolate(&self, y: f64) -> Complex64 {
        let g = &*self.grid;
        let h = g.spacing();
        let (pos, origin) = match g.geometry() {
            Geometry::RadialD => (y.abs(), 0.0),
            Geometry::Cartesian1d => (y, -g.r_max()),
        };
        let s = (pos - origin) / h - 0.5;
        let n = g.n() as isize;
        if s > n as f64 - 0.5 || s < -0.5 && g.geometry() == Geometry::Cartesian1d {
            return Complex64::new(0.0, 0.0);
        }
        let k = s.floor() as isize;
        let t = s - k as f64;
        if t == 0.0 && (0..n).contains(&k) {
            return self.values[k as usize];
        }
        let idx = |j: isize| -> Option<usize> {
            if j < 0 {
                match g.geometry() {
                    Geometry::RadialD => Some((-j - 1) as usize),
                    Geometry::Cartesian1d => None,
                }
            } else if j >= n {
                None
            } else {
                Some(j as usize)
            }
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for m in (1 - INTERP_HALF)..=INTERP_HALF {
            let mut l = 1.0;
            for q in (1 - INTERP_HALF)..=INTERP_HALF {
                if q != m {
                    l *= (t - q as f64) / (m - q) as f64;
                }
            }
            if let Some(i) = idx(k + m) {
                acc += self.values[i] * l;
            }
        }
        acc
    }

    /// `x ↦ prefactor · u(stretch · x)` resampled on the same grid.
    pub fn resample(&self, stretch: f64, prefactor: f64) -> Result<Self> {
        if !(stretch > 0.0 && stretch.is_finite()) {
            return Err(InlsError::Parameter(format!("stretch {stretch} must be positive")));
        }
        if stretch == 1.0 {
            return Ok(self.scaled(prefactor));
        }
        let r_max = self.grid.r_max();
        let exceeds = self.grid.radii().iter().any(|&r| r * stretch > r_max);
        if exceeds && !self.negligible_near_wall() {
            return Err(InlsError::Resampling(format!(
                "resampled points reach |x| = {:.6} beyond r_max = {r_max} where the field is not negligible",
                self.grid.radii().iter().fold(0.0_f64, |a, &r| a.max(r)) * stretch
            )));
        }
        let values = self
            .grid
            .nodes()
            .iter()
            .map(|&x| self.interpolate(stretch * x) * prefactor)
            .collect();
        Field::new(self.grid.clone(), values)
    }

    /// Writes the columnar text format: a header line, then `r Re(u) Im(u)` rows.
    pub fn write_columnar<W: Write>(&self, mut w: W, params: &PhysParams) -> Result<()> {
        let g = &*self.grid;
        writeln!(
            w,
            "# d={} b={:e} alpha={:e} mu={} geometry={} r_max={:e} n={}",
            params.d,
            params.b,
            params.alpha,
            params.mu,
            g.geometry(),
            g.r_max(),
            g.n()
        )?;
        for (x, v) in g.nodes().iter().zip(&self.values) {
            writeln!(w, "{x:.17e} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads a field written by [`Field::write_columnar`]. Node coordinates in the
    /// file must match the grid rebuilt from the header.
    pub fn read_columnar<R: BufRead>(r: R) -> Result<(PhysParams, Field)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| InlsError::Format("empty field file".into()))??;
        let header = FieldHeader::parse(&header)?;
        let params = PhysParams::new_allow_b_zero(header.d, header.b, header.alpha, header.mu)?;
        let grid = Arc::new(RadialGrid::new(header.geometry, header.d, header.r_max, header.n)?);
        let mut values = Vec::with_capacity(header.n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = t
                .split_whitespace()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| InlsError::Format(format!("row {}: {e}", i + 2)))?;
            if cols.len() != 3 {
                return Err(InlsError::Format(format!("row {} has {} columns, expected 3", i + 2, cols.len())));
            }
            let k = values.len();
            if k >= header.n {
                return Err(InlsError::Format(format!("more than n = {} rows", header.n)));
            }
            let expected = grid.nodes()[k];
            if (cols[0] - expected).abs() > 1e-9 * header.r_max {
                return Err(InlsError::Format(format!(
                    "row {}: node {} does not match grid node {expected}",
                    i + 2,
                    cols[0]
                )));
            }
            values.push(Complex64::new(cols[1], cols[2]));
        }
        if values.len() != header.n {
            return Err(InlsError::Format(format!("expected {} rows, found {}", header.n, values.len())));
        }
        Ok((params, Field::new(grid, values)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub d: usize,
    pub b: f64,
    pub alpha: f64,
    pub mu: f64,
    pub geometry: Geometry,
    pub r_max: f64,
    pub n: usize,
}

impl FieldHeader {
    pub fn parse(line: &str) -> Result<Self> {
        let body = line
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| InlsError::Format("header must start with '#'".into()))?;
        let mut map = std::collections::BTreeMap::new();
        for tok in body.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| InlsError::Format(format!("malformed header token '{tok}'")))?;
            map.insert(k, v);
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| InlsError::Format(format!("header missing '{k}'")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse::<f64>().map_err(|e| InlsError::Format(format!("header '{k}': {e}")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?.parse::<usize>().map_err(|e| InlsError::Format(format!("header '{k}': {e}")))
        };
        Ok(Self {
            d: int("d")?,
            b: num("b")?,
            alpha: num("alpha")?,
            mu: num("mu")?,
            geometry: get("geometry")?.parse().map_err(InlsError::Format)?,
            r_max: num("r_max")?,
            n: int("n")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::radial(2, 8.0, 256).unwrap())
    }

    #[test]
    fn rejects_nan_and_wrong_length() {
        let g = grid();
        assert!(Field::new(g.clone(), vec![Complex64::new(0.0, 0.0); 10]).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 256];
        v[3].re = f64::NAN;
        assert!(Field::new(g, v).is_err());
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_accurate_between() {
        let g = grid();
        let f = Field::from_real_fn(g.clone(), |r| (-r * r).exp()).unwrap();
        for (i, &r) in g.nodes().iter().enumerate().take(20) {
            assert_eq!(f.interpolate(r), f.values()[i]);
            let y = r + 0.37 * g.spacing();
            assert!((f.interpolate(y).re - (-y * y).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn columnar_round_trip() {
        let g = Arc::new(RadialGrid::cartesian_1d(5.0, 64).unwrap());
        let f = Field::from_fn(g, |x| Complex64::new((-x * x).exp(), x.sin() * 1e-3)).unwrap();
        let p = PhysParams::mass_critical(1, 0.5).unwrap();
        let mut buf = Vec::new();
        f.write_columnar(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# d=1 b=5e-1 alpha=3e0 mu=1 geometry=cartesian-1d r_max=5e0 n=64"));
        let (p2, f2) = Field::read_columnar(&buf[..]).unwrap();
        assert_eq!(p2.d, 1);
        assert_eq!(p2.alpha, 3.0);
        assert_eq!(f2.values(), f.values());
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(Field::read_columnar("".as_bytes()).is_err());
        assert!(Field::read_columnar("d=1".as_bytes()).is_err());
        let bad = "# d=1 b=0.5 alpha=3 mu=1 geometry=radial-d r_max=1 n=16\n0.1 0 0\n";
        assert!(Field::read_columnar(bad.as_bytes()).is_err());
    }

    #[test]
    fn resampling_beyond_support_needs_negligible_tail() {
        let g = grid();
        let wide = Field::from_real_fn(g.clone(), |r| 1.0 / (1.0 + r * r)).unwrap();
        let err = wide.resample(2.0, 1.0).unwrap_err();
        assert!(matches!(err, InlsError::Resampling(_)));
        let narrow = Field::from_real_fn(g, |r| (-r * r).exp()).unwrap();
        assert!(narrow.resample(2.0, 1.0).is_ok());
    }
}
