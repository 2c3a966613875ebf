//! Spectral resampling of grid fields: `x -> u(c x)` evaluated by
//! trigonometric interpolation, with guards against aliasing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::spectral::spectral_tail_fraction;

/// Relative energy allowed past the band or outside the covered window.
pub const ALIAS_TOL: f64 = 1e-10;

/// Periodic Dirichlet kernel of the `n`-point trigonometric interpolant
/// (Nyquist mode split symmetrically), at offset `d` on a period `l`.
fn kernel(d: f64, n: usize, l: f64) -> f64 {
    let a = PI * d / l;
    let s = a.sin();
    if s.abs() < 1e-13 {
        return 1.0;
    }
    let nf = n as f64;
    (nf * a).sin() * a.cos() / (nf * s)
}

/// Row `i` holds the weights that evaluate the interpolant at `targets[i]`.
fn interpolation_matrix(src: &Grid2D, targets: &[f64]) -> Vec<f64> {
    let n = src.n();
    let l = src.extent();
    let half = 0.5 * l;
    let nodes = src.coords();
    let mut m = vec![0.0; targets.len() * n];
    for (i, &p) in targets.iter().enumerate() {
        if p < -half - 1e-12 * l || p > half + 1e-12 * l {
            continue;
        }
        let row = &mut m[i * n..(i + 1) * n];
        for (w, &x) in row.iter_mut().zip(&nodes) {
            *w = kernel(p - x, n, l);
        }
    }
    m
}

/// `c = a * b` for row-major `a: m x k`, `b: k x n`.
fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    // SAFETY: slice lengths match the declared shapes and strides.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            0.0,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
    c
}

/// Samples `x -> u(factor * x)` on `target`.
///
/// Rejects the request when more than [`ALIAS_TOL`] of the spectral energy
/// of `u` would land beyond the target Nyquist band, or when more than
/// [`ALIAS_TOL`] of the mass of `u` lies outside the window the target
/// box sees.
pub fn resample(u: &ScalarField, target: Grid2D, factor: f64) -> Result<ScalarField> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::Config(format!("resampling factor must be positive, got {factor}")));
    }
    let src = *u.grid();
    let band = target.nyquist() / factor;
    if band < src.nyquist() {
        let tail = spectral_tail_fraction(u, band);
        if tail > ALIAS_TOL {
            return Err(Error::Aliasing { factor, reason: format!("{tail:e} of the spectrum beyond the band") });
        }
    }
    let window = 0.5 * target.extent() * factor;
    if window < 0.5 * src.extent() {
        let outside = mass_outside_square(u, window);
        if outside > ALIAS_TOL {
            return Err(Error::Aliasing { factor, reason: format!("{outside:e} of the mass outside the window") });
        }
    }

    interpolate(u, target, factor)
}

/// Trigonometric interpolant of `u` at `factor * x` for the nodes `x` of
/// `target`, without the aliasing guards; zero outside the source box.
pub(crate) fn interpolate(u: &ScalarField, target: Grid2D, factor: f64) -> Result<ScalarField> {
    let src = *u.grid();
    let targets: Vec<f64> = target.coords().iter().map(|x| factor * x).collect();
    let d = interpolation_matrix(&src, &targets);
    let (m, n) = (target.n(), src.n());
    let dt = transpose(&d, m, n);
    let t = matmul(&d, u.values(), m, n, n);
    let out = matmul(&t, &dt, m, n, m);
    ScalarField::new(target, out)
}

/// Mass-preserving dilation `t u(t x)` on the same grid.
pub fn dilate(u: &ScalarField, t: f64) -> Result<ScalarField> {
    let mut v = resample(u, *u.grid(), t)?;
    v.scale(t);
    Ok(v)
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

fn mass_outside_square(u: &ScalarField, half_width: f64) -> f64 {
    let g = u.grid();
    let n = g.n();
    let xs = g.coords();
    let (mut out, mut total) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let w = u.at(i, j).powi(2);
            total += w;
            if xs[i].abs() > half_width || xs[j].abs() > half_width {
                out += w;
            }
        }
    }
    if total == 0.0 { 0.0 } else { out / total }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: Grid2D, w: f64) -> ScalarField {
        ScalarField::from_radial(g, |r| (-r * r / (2.0 * w * w)).exp()).unwrap()
    }

    #[test]
    fn identity_factor_reproduces_samples() {
        let g = Grid2D::new(16.0, 32).unwrap();
        let u = gaussian(g, 1.0);
        let v = resample(&u, g, 1.0).unwrap();
        let err = u.distance_l2(&v).unwrap();
        assert!(err < 1e-12, "{err:e}");
    }

    #[test]
    fn dilation_matches_analytic_gaussian() {
        let g = Grid2D::new(24.0, 128).unwrap();
        let u = gaussian(g, 1.0);
        for t in [0.7, 1.3, 1.77] {
            let v = dilate(&u, t).unwrap();
            let exact = ScalarField::from_radial(g, |r| t * (-(t * r).powi(2) / 2.0).exp()).unwrap();
            let err = v.distance_l2(&exact).unwrap();
            assert!(err < 1e-9, "t={t}: {err:e}");
            assert!((v.mass() - u.mass()).abs() < 1e-9 * u.mass());
        }
    }

    #[test]
    fn resample_onto_finer_grid() {
        let src = Grid2D::new(16.0, 64).unwrap();
        let dst = Grid2D::new(12.0, 128).unwrap();
        let u = gaussian(src, 1.0);
        let v = resample(&u, dst, 1.0).unwrap();
        let exact = gaussian(dst, 1.0);
        assert!(v.distance_l2(&exact).unwrap() < 1e-9);
    }

    #[test]
    fn guards_reject_aliasing_and_truncation() {
        let g = Grid2D::new(16.0, 32).unwrap();
        let u = gaussian(g, 0.6);
        assert!(matches!(dilate(&u, 3.0), Err(Error::Aliasing { .. })));
        let wide = gaussian(g, 2.5);
        assert!(matches!(dilate(&wide, 0.3), Err(Error::Aliasing { .. })));
        assert!(dilate(&u, 0.0).is_err());
    }
}
