//! Seeded random fields: localized band-limited samples for inequality
//! checks and perturbed Gaussians for solver initializations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{Grid2D, ScalarField};

/// The generator behind every randomized computation.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of [`random_field`] samples: a Gaussian window of width `width`
/// times a sum of `modes` plane waves with wavenumber at most `max_wavenumber`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub width: f64,
    pub modes: usize,
    pub max_wavenumber: f64,
}

impl FieldSpec {
    /// Window and band sized so the sample is resolved on `grid` and decays
    /// to round-off at the box edge.
    pub fn for_grid(grid: &Grid2D) -> Self {
        Self { width: grid.extent() / 20.0, modes: 6, max_wavenumber: 0.2 * grid.nyquist() }
    }
}

/// Sign-changing localized field
/// `exp(-|x - c|^2 / (2 w^2)) * sum_k a_k cos(xi_k . x + phi_k)`.
pub fn random_field<R: Rng>(grid: Grid2D, spec: &FieldSpec, rng: &mut R) -> Result<ScalarField> {
    let w = spec.width * rng.random_range(0.8..1.25);
    let (cx, cy) = (rng.random_range(-0.5 * w..0.5 * w), rng.random_range(-0.5 * w..0.5 * w));
    let waves: Vec<(f64, f64, f64, f64)> = (0..spec.modes)
        .map(|_| {
            let k = spec.max_wavenumber * rng.random::<f64>();
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            (k * angle.cos(), k * angle.sin(), phase, rng.random_range(-1.0..1.0))
        })
        .collect();
    ScalarField::from_fn(grid, |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        let window = (-(dx * dx + dy * dy) / (2.0 * w * w)).exp();
        window * waves.iter().map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).cos()).sum::<f64>()
    })
}

/// Nonnegative sample: the square of a [`random_field`] whose band is halved,
/// so the result has the same band.
pub fn random_nonnegative_field<R: Rng>(grid: Grid2D, spec: &FieldSpec, rng: &mut R) -> Result<ScalarField> {
    let half = FieldSpec { width: spec.width * std::f64::consts::SQRT_2, max_wavenumber: 0.5 * spec.max_wavenumber, ..*spec };
    Ok(random_field(grid, &half, rng)?.map(|v| v * v))
}

/// Positive starting guess of mass `mass`: a Gaussian of random width in
/// `[0.5, 2]`, offset by up to `0.25` from the origin, with a 20% random
/// smooth modulation.
pub fn random_initial_guess<R: Rng>(grid: Grid2D, mass: f64, rng: &mut R) -> Result<ScalarField> {
    let w = rng.random_range(0.5..2.0);
    let (cx, cy) = (rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25));
    let (kx, ky, ph) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU));
    let mut u = ScalarField::from_fn(grid, |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (-(dx * dx + dy * dy) / (2.0 * w * w)).exp() * (1.0 + 0.2 * (kx * x + ky * y + ph).cos())
    })?;
    u.normalize_mass(mass)?;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let g = Grid2D::new(16.0, 32).unwrap();
        let spec = FieldSpec::for_grid(&g);
        let a = random_field(g, &spec, &mut seeded_rng(7)).unwrap();
        let b = random_field(g, &spec, &mut seeded_rng(7)).unwrap();
        let c = random_field(g, &spec, &mut seeded_rng(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn samples_are_band_limited_and_localized() {
        let g = Grid2D::new(16.0, 64).unwrap();
        let spec = FieldSpec::for_grid(&g);
        let mut rng = seeded_rng(1);
        for _ in 0..20 {
            let u = random_field(g, &spec, &mut rng).unwrap();
            assert!(crate::spectral::spectral_tail_fraction(&u, 0.9 * g.nyquist()) < 1e-12);
            assert!(u.outer_mass_fraction() < 1e-12);
            let v = random_nonnegative_field(g, &spec, &mut rng).unwrap();
            assert!(v.min() >= 0.0);
        }
    }

    #[test]
    fn initial_guess_has_requested_mass() {
        let g = Grid2D::new(16.0, 64).unwrap();
        let u = random_initial_guess(g, 3.0, &mut seeded_rng(3)).unwrap();
        assert!((u.mass() - 3.0).abs() < 1e-12);
        assert!(u.min() > 0.0);
    }
}
