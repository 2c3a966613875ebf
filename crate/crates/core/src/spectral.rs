//! Fourier transforms on the periodic grid and the fractional Laplacian.
//!
//! Transform convention (used everywhere in the crate): the forward
//! transform is the unnormalized DFT `u_hat[k] = sum_j u[j] e^{-i k x_j}`,
//! the inverse carries the `1/n^2`. Integrals pick up the cell area `h^2`,
//! so `integral(u^2) = h^2/n^2 * sum |u_hat|^2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{grid_mismatch, Grid2D, ScalarField};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    real_forward: Arc<dyn RealToComplex<f64>>,
    real_inverse: Arc<dyn ComplexToReal<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let mut real = RealFftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
                real_forward: real.plan_fft_forward(n),
                real_inverse: real.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transpose(buf: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Out-of-place transpose of a row-major `rows x cols` array.
fn transpose_into<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    const BLOCK: usize = 32;
    for bi in (0..rows).step_by(BLOCK) {
        for bj in (0..cols).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(rows) {
                for j in bj..(bj + BLOCK).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

fn fft2_in_place(buf: &mut [Complex64], n: usize, inverse: bool) {
    let p = plans(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
    fft.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
}

/// Unnormalized forward 2D DFT of a real field.
pub fn forward(u: &ScalarField) -> Vec<Complex64> {
    let n = u.grid().n();
    let mut buf: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, n, false);
    buf
}

/// Inverse 2D DFT (with the `1/n^2` factor). Returns real and imaginary parts.
pub fn inverse(mut spectrum: Vec<Complex64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    fft2_in_place(&mut spectrum, n, true);
    let scale = 1.0 / (n * n) as f64;
    let re = spectrum.iter().map(|c| c.re * scale).collect();
    let im = spectrum.iter().map(|c| c.im * scale).collect();
    (re, im)
}

/// Inverse transform keeping the real part; the imaginary remainder must
/// stay below `1e-10 * scale` in `L^2`.
pub(crate) fn inverse_real(spectrum: Vec<Complex64>, grid: Grid2D, scale: f64) -> Result<ScalarField> {
    let (re, im) = inverse(spectrum, grid.n());
    let im_norm = (grid.cell_area() * im.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if im_norm > 1e-10 * scale.max(f64::MIN_POSITIVE) && im_norm > 0.0 {
        return Err(Error::NumericalConsistency(format!(
            "inverse transform left an imaginary part of norm {im_norm:e} (scale {scale:e})"
        )));
    }
    ScalarField::new(grid, re)
}

/// Number of retained column wavenumbers in a half spectrum.
pub(crate) fn half_len(n: usize) -> usize {
    n / 2 + 1
}

/// Multiplicity of column index `j` of a half spectrum in the full one.
pub(crate) fn half_multiplicity(j: usize, n: usize) -> f64 {
    if j == 0 || j == n / 2 { 1.0 } else { 2.0 }
}

/// Forward transform of a real field, keeping the column wavenumbers
/// `0..=n/2`. Stored column-major: entry `(i, j)` sits at `j * n + i`.
pub(crate) fn forward_half(u: &[f64], n: usize) -> Vec<Complex64> {
    let p = plans(n);
    let h = half_len(n);
    let mut rows = vec![Complex64::default(); n * h];
    let mut input = vec![0.0; n];
    let mut scratch = vec![Complex64::default(); p.real_forward.get_scratch_len()];
    for (src, dst) in u.chunks_exact(n).zip(rows.chunks_exact_mut(h)) {
        input.copy_from_slice(src);
        p.real_forward.process_with_scratch(&mut input, dst, &mut scratch).expect("buffer lengths match the plan");
    }
    let mut cols = vec![Complex64::default(); n * h];
    transpose_into(&rows, &mut cols, n, h);
    let mut scratch = vec![Complex64::default(); p.forward.get_inplace_scratch_len()];
    p.forward.process_with_scratch(&mut cols, &mut scratch);
    cols
}

/// Inverse of [`forward_half`] with the `1/n^2` factor; the spectrum is
/// read as the half of a Hermitian one.
pub(crate) fn inverse_half(mut cols: Vec<Complex64>, n: usize) -> Vec<f64> {
    let p = plans(n);
    let h = half_len(n);
    let mut scratch = vec![Complex64::default(); p.inverse.get_inplace_scratch_len()];
    p.inverse.process_with_scratch(&mut cols, &mut scratch);
    let mut rows = vec![Complex64::default(); n * h];
    transpose_into(&cols, &mut rows, h, n);
    let scale = 1.0 / (n * n) as f64;
    let mut out = vec![0.0; n * n];
    let mut scratch = vec![Complex64::default(); p.real_inverse.get_scratch_len()];
    for (src, dst) in rows.chunks_exact_mut(h).zip(out.chunks_exact_mut(n)) {
        src[0].im = 0.0;
        src[h - 1].im = 0.0;
        p.real_inverse.process_with_scratch(src, dst, &mut scratch).expect("buffer lengths match the plan");
        dst.iter_mut().for_each(|v| *v *= scale);
    }
    out
}

/// Fourier multiplier `|xi|^{2s}` on a grid.
#[derive(Debug, Clone)]
pub struct FractionalSymbol {
    grid: Grid2D,
    order: f64,
    table: Vec<f64>,
    half: Vec<f64>,
}

impl FractionalSymbol {
    /// Builds the table for `s` in `(0, 1]`. The zero mode is exactly 0 and
    /// at `s = 1` the table is `|xi|^2` without a `powf`.
    pub fn new(grid: Grid2D, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidOrder { s, range: "(0, 1]" });
        }
        let ks = grid.wavenumbers();
        let n = grid.n();
        let mut table = Vec::with_capacity(n * n);
        for &kx in &ks {
            for &ky in &ks {
                let k2 = kx * kx + ky * ky;
                let m = if k2 == 0.0 {
                    0.0
                } else if s == 1.0 {
                    k2
                } else {
                    k2.powf(s)
                };
                table.push(m);
            }
        }
        let half = (0..half_len(n)).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| table[i * n + j]).collect();
        Ok(Self { grid, order: s, table, half })
    }

    /// `|xi|^2`, the ordinary spectral Laplacian.
    pub fn laplacian(grid: Grid2D) -> Self {
        Self::new(grid, 1.0).expect("s = 1 is admissible")
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn max(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_grid(&self, u: &ScalarField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(grid_mismatch(u.grid(), &self.grid));
        }
        Ok(())
    }

    /// Table on the half spectrum, laid out as [`forward_half`].
    pub(crate) fn half_table(&self) -> &[f64] {
        &self.half
    }

    /// Applies `multiplier(m_kl)` through the real transform pair.
    pub(crate) fn apply_real(&self, u: &[f64], multiplier: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.grid.n();
        let mut spec = forward_half(u, n);
        spec.iter_mut().zip(&self.half).for_each(|(c, &m)| *c *= multiplier(m));
        inverse_half(spec, n)
    }

    /// Applies `multiplier(m_kl)` in Fourier space.
    pub(crate) fn apply_with(&self, u: &ScalarField, multiplier: impl Fn(f64) -> f64) -> Result<ScalarField> {
        self.check_grid(u)?;
        let mut spec = forward(u);
        let mut peak = 0.0f64;
        for (c, &m) in spec.iter_mut().zip(&self.table) {
            let w = multiplier(m);
            peak = peak.max(w.abs());
            *c *= w;
        }
        inverse_real(spec, self.grid, u.norm_l2() * peak.max(1.0))
    }
}

/// `(-Delta)^s u` via the Fourier multiplier.
pub fn frac_laplacian(u: &ScalarField, sym: &FractionalSymbol) -> Result<ScalarField> {
    sym.apply_with(u, |m| m)
}

/// `integral |(-Delta)^{s/2} u|^2 = h^2/n^2 * sum m_kl |u_hat_kl|^2`.
pub fn frac_seminorm_sq(u: &ScalarField, sym: &FractionalSymbol) -> Result<f64> {
    sym.check_grid(u)?;
    let n = u.grid().n();
    let spec = forward_half(u.values(), n);
    let sum: f64 = spec
        .chunks_exact(n)
        .zip(sym.half_table().chunks_exact(n))
        .enumerate()
        .map(|(j, (col, m))| half_multiplicity(j, n) * col.iter().zip(m).map(|(c, &m)| m * c.norm_sqr()).sum::<f64>())
        .sum();
    Ok(u.grid().cell_area() * sum / u.grid().len() as f64)
}

/// `h^2/n^2 * sum |u_hat|^2`, the spectral side of Plancherel.
pub fn spectral_mass(u: &ScalarField) -> f64 {
    let spec = forward(u);
    let n2 = u.grid().len() as f64;
    u.grid().cell_area() * spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / n2
}

/// Fraction of the spectral energy outside the square band
/// `max(|xi_x|, |xi_y|) <= cutoff`.
pub fn spectral_tail_fraction(u: &ScalarField, cutoff: f64) -> f64 {
    let spec = forward(u);
    let ks = u.grid().wavenumbers();
    let n = u.grid().n();
    let (mut tail, mut total) = (0.0, 0.0);
    for (i, &kx) in ks.iter().enumerate() {
        for (j, &ky) in ks.iter().enumerate() {
            let e = spec[i * n + j].norm_sqr();
            total += e;
            if kx.abs().max(ky.abs()) > cutoff {
                tail += e;
            }
        }
    }
    if total == 0.0 { 0.0 } else { tail / total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> Grid2D {
        Grid2D::new(l, n).unwrap()
    }

    #[test]
    fn cosine_is_eigenfunction() {
        let g = grid(16.0, 64);
        let (kx, ky) = (g.wavenumber(3), g.wavenumber(5));
        let u = ScalarField::from_fn(g, |x, y| (kx * x + ky * y).cos()).unwrap();
        for s in [0.6, 0.75, 1.0] {
            let sym = FractionalSymbol::new(g, s).unwrap();
            let lu = frac_laplacian(&u, &sym).unwrap();
            let lam = (kx * kx + ky * ky).powf(s);
            let err = lu.values().iter().zip(u.values()).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-12 * lam, "s={s}: {err:e}");
            let semi = frac_seminorm_sq(&u, &sym).unwrap();
            assert!((semi - lam * u.mass()).abs() <= 1e-12 * lam * u.mass());
        }
    }

    #[test]
    fn constant_maps_to_zero() {
        let g = grid(16.0, 32);
        let u = ScalarField::from_fn(g, |_, _| 3.5).unwrap();
        let sym = FractionalSymbol::new(g, 0.8).unwrap();
        let lu = frac_laplacian(&u, &sym).unwrap();
        assert!(lu.values().iter().all(|v| v.abs() < 1e-13));
        assert_eq!(sym.table()[0], 0.0);
    }

    #[test]
    fn gaussian_laplacian_matches_analytic() {
        let g = grid(16.0, 128);
        let u = ScalarField::from_radial(g, |r| (-r * r / 2.0).exp()).unwrap();
        let sym = FractionalSymbol::laplacian(g);
        let lu = frac_laplacian(&u, &sym).unwrap();
        let exact = ScalarField::from_radial(g, |r| (2.0 - r * r) * (-r * r / 2.0).exp()).unwrap();
        let err = lu.distance_l2(&exact).unwrap();
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn gaussian_dirichlet_energy_is_pi() {
        let g = grid(16.0, 128);
        let u = ScalarField::from_radial(g, |r| (-r * r / 2.0).exp()).unwrap();
        let sym = FractionalSymbol::laplacian(g);
        let k = frac_seminorm_sq(&u, &sym).unwrap();
        assert!((k - PI).abs() < 1e-6 * PI);
        assert_eq!(frac_seminorm_sq(&ScalarField::zeros(g), &sym).unwrap(), 0.0);
    }

    #[test]
    fn unit_order_table_is_exact_square() {
        let g = grid(8.0, 32);
        let sym = FractionalSymbol::new(g, 1.0).unwrap();
        let ks = g.wavenumbers();
        for (i, &kx) in ks.iter().enumerate() {
            for (j, &ky) in ks.iter().enumerate() {
                assert_eq!(sym.table()[i * 32 + j].to_bits(), (kx * kx + ky * ky).to_bits());
            }
        }
        // reflection symmetry of the table, including the Nyquist row
        for i in 0..32 {
            for j in 0..32 {
                let ri = (32 - i) % 32;
                assert_eq!(sym.table()[i * 32 + j], sym.table()[ri * 32 + j]);
                assert_eq!(sym.table()[i * 32 + j], sym.table()[j * 32 + i]);
            }
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let u = ScalarField::zeros(grid(16.0, 32));
        let sym = FractionalSymbol::new(grid(16.0, 64), 0.9).unwrap();
        assert!(matches!(frac_laplacian(&u, &sym), Err(Error::GridMismatch { .. })));
        assert!(matches!(frac_seminorm_sq(&u, &sym), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn order_out_of_range() {
        let g = grid(16.0, 16);
        assert!(FractionalSymbol::new(g, 0.0).is_err());
        assert!(FractionalSymbol::new(g, 1.2).is_err());
    }
}
