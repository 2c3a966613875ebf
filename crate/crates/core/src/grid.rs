//! Periodic computational box and real fields sampled on it.
//!
//! The box is `[-L/2, L/2)^2` with `n` nodes per axis; node `i` sits at
//! `(i - n/2) * h`, so the origin is the node `(n/2, n/2)`. Fields are stored
//! row-major with the first index along `x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on the square `[-L/2, L/2)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    extent: f64,
    n: usize,
}

impl Grid2D {
    pub const MIN_POINTS: usize = 16;

    pub fn new(extent: f64, n: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Config(format!("box extent must be positive, got {extent}")));
        }
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { extent, n })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    /// Quadrature weight `h^2` of a single cell.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Angular wavenumber of FFT index `k`: `2*pi*k/L` for `k < n/2`, shifted
    /// by `-n` above. Index `n/2` is the Nyquist mode `-pi/h`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let signed = if k < n / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / self.extent
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    /// Largest resolvable wavenumber component, `pi/h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn radius(&self, i: usize, j: usize) -> f64 {
        self.coord(i).hypot(self.coord(j))
    }

    /// Same node count, box scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.extent * factor, self.n)
    }

    /// Same box, twice the nodes per axis.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.extent, self.n * 2)
    }
}

/// Real samples of a function on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.coords();
        let mut values = Vec::with_capacity(grid.len());
        for &x in &xs {
            for &y in &xs {
                values.push(f(x, y));
            }
        }
        Self::new(grid, values)
    }

    /// Samples a radial profile `f(|x|)`.
    pub fn from_radial(grid: Grid2D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x, y| f(x.hypot(y)))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// The same samples reinterpreted on a grid whose box is scaled by
    /// `factor`: the result represents `x -> u(x / factor)`.
    pub fn relabeled(&self, factor: f64) -> Result<Self> {
        Ok(Self { grid: self.grid.scaled(factor)?, values: self.values.clone() })
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Nonnegative up to roundoff: `min >= -1e-12 * max`.
    pub fn is_nonnegative(&self) -> bool {
        let max = self.max().max(0.0);
        self.min() >= -1e-12 * max
    }

    /// `h^2 * sum(f)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    /// `integral(u * v)`.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.cell_area() * dot(&self.values, &other.values)
    }

    /// `integral(u^2)`.
    pub fn mass(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_l2(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `integral(|u|^p)`.
    pub fn lp_pow(&self, p: f64) -> f64 {
        let sum: f64 = if p == 4.0 {
            self.values.iter().map(|v| {
                let v2 = v * v;
                v2 * v2
            }).sum()
        } else if p == 2.0 {
            self.values.iter().map(|v| v * v).sum()
        } else {
            self.values.iter().map(|v| v.abs().powf(p)).sum()
        };
        self.grid.cell_area() * sum
    }

    /// `integral(w * u^2)` for a weight sampled on the same grid.
    pub fn weighted_mass(&self, weight: &[f64]) -> f64 {
        debug_assert_eq!(weight.len(), self.values.len());
        let sum: f64 = self.values.iter().zip(weight).map(|(u, w)| w * u * u).sum();
        self.grid.cell_area() * sum
    }

    /// `integral(|x|^2 u^2)`.
    pub fn second_moment(&self) -> f64 {
        let n = self.grid.n;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += self.grid.radius(i, j).powi(2) * self.values[i * n + j].powi(2);
            }
        }
        self.grid.cell_area() * sum
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// Rescales in place so that `integral(u^2) = target`.
    pub fn normalize_mass(&mut self, target: f64) -> Result<()> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::ZeroField);
        }
        self.scale((target / m).sqrt());
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `self + alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    /// `L^2` distance to another field on the same grid.
    pub fn distance_l2(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(grid_mismatch(&self.grid, &other.grid));
        }
        let sum: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok((self.grid.cell_area() * sum).sqrt())
    }

    /// Fraction of the mass outside the disc of radius `0.9 * L/2`.
    pub fn outer_mass_fraction(&self) -> f64 {
        let n = self.grid.n;
        let r_cut = 0.45 * self.grid.extent;
        let mut outer = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = self.values[i * n + j];
                let w = v * v;
                total += w;
                if self.grid.radius(i, j) >= r_cut {
                    outer += w;
                }
            }
        }
        if total == 0.0 { 0.0 } else { outer / total }
    }

    /// Density centroid `integral(x u^2) / integral(u^2)`.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.grid.n;
        let (mut mx, mut my, mut m) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x = self.grid.coord(i);
            for j in 0..n {
                let w = self.values[i * n + j].powi(2);
                mx += x * w;
                my += self.grid.coord(j) * w;
                m += w;
            }
        }
        if m == 0.0 { (0.0, 0.0) } else { (mx / m, my / m) }
    }

    /// Periodic shift by whole cells so the centroid lands on the central node.
    pub fn recenter(&mut self) {
        let (cx, cy) = self.centroid();
        let h = self.grid.spacing();
        let n = self.grid.n as i64;
        let si = (cx / h).round() as i64;
        let sj = (cy / h).round() as i64;
        if si == 0 && sj == 0 {
            return;
        }
        let old = self.values.clone();
        for i in 0..n {
            for j in 0..n {
                let src_i = (i + si).rem_euclid(n) as usize;
                let src_j = (j + sj).rem_euclid(n) as usize;
                self.values[(i * n + j) as usize] = old[src_i * n as usize + src_j];
            }
        }
    }

    /// Largest deviation from the eight-fold symmetry of the square lattice,
    /// relative to the maximum value.
    pub fn asymmetry(&self) -> f64 {
        let n = self.grid.n;
        let c = n / 2;
        let max = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        let mirror = |k: usize| (2 * c + n - k) % n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                for w in [self.at(mirror(i), j), self.at(i, mirror(j)), self.at(j, i)] {
                    worst = worst.max((v - w).abs());
                }
            }
        }
        worst / max
    }

    /// Values along the positive `x` axis from the centre node outwards.
    pub fn axis_profile(&self) -> Vec<(f64, f64)> {
        let n = self.grid.n;
        let c = n / 2;
        (c..n).map(|i| (self.grid.coord(i), self.at(i, c))).collect()
    }

    /// Values along the diagonal from the centre node outwards.
    pub fn diagonal_profile(&self) -> Vec<(f64, f64)> {
        let n = self.grid.n;
        let c = n / 2;
        (c..n).map(|i| (self.grid.radius(i, i), self.at(i, i))).collect()
    }

    /// Whether the profile along the axis and the diagonal never increases
    /// by more than `rel_tol * max`.
    pub fn is_radially_nonincreasing(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.max().abs();
        let monotone = |p: Vec<(f64, f64)>| p.windows(2).all(|w| w[1].1 <= w[0].1 + slack);
        monotone(self.axis_profile()) && monotone(self.diagonal_profile())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn grid_mismatch(field: &Grid2D, op: &Grid2D) -> Error {
    Error::GridMismatch {
        field_n: field.n(),
        field_l: field.extent(),
        op_n: op.n(),
        op_l: op.extent(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_wavenumbers() {
        let g = Grid2D::new(16.0, 16).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.spacing() * g.n() as f64, g.extent());
        assert_eq!(g.wavenumber(0), 0.0);
        let kmax = g.wavenumbers().iter().fold(0.0f64, |a, k| a.max(k.abs()));
        assert!((kmax - PI).abs() < 1e-15);
        assert_eq!(g.nyquist(), PI);

        let g = Grid2D::new(16.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.0625);
        assert_eq!(g.coord(128), 0.0);
        assert_eq!(g.coord(0), -8.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Grid2D::new(16.0, 100), Err(Error::Config(_))));
        assert!(matches!(Grid2D::new(16.0, 8), Err(Error::Config(_))));
        assert!(matches!(Grid2D::new(0.0, 64), Err(Error::Config(_))));
        assert!(matches!(Grid2D::new(f64::NAN, 64), Err(Error::Config(_))));
    }

    #[test]
    fn gaussian_mass() {
        let g = Grid2D::new(16.0, 128).unwrap();
        let u = ScalarField::from_radial(g, |r| (-r * r / 2.0).exp()).unwrap();
        assert!((u.mass() - PI).abs() < 1e-12);
        assert!(u.asymmetry() < 1e-15);
        assert!(u.is_radially_nonincreasing(0.0));
        assert!(u.outer_mass_fraction() < 1e-20);
    }

    #[test]
    fn recenter_moves_bump_to_origin() {
        let g = Grid2D::new(16.0, 64).unwrap();
        let mut u = ScalarField::from_fn(g, |x, y| (-((x - 2.0).powi(2) + (y + 1.0).powi(2))).exp()).unwrap();
        u.recenter();
        let (cx, cy) = u.centroid();
        assert!(cx.abs() < 1e-9 && cy.abs() < 1e-9, "{cx} {cy}");
    }

    #[test]
    fn non_finite_rejected() {
        let g = Grid2D::new(16.0, 16).unwrap();
        let mut v = vec![0.0; 256];
        v[3] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite)));
    }
}
