//! Symmetric decreasing rearrangement on the grid.

use crate::error::{Error, Result};
use crate::dilation::interpolate;
use crate::grid::{Grid2D, ScalarField};

/// Oversampling of the distribution function used by [`schwarz_rearrange`].
pub const OVERSAMPLE: usize = 4;

/// Equal-area rearrangement with the distribution function read off the
/// trigonometric interpolant on an [`OVERSAMPLE`]-times finer grid.
pub fn schwarz_rearrange(u: &ScalarField) -> Result<ScalarField> {
    schwarz_rearrange_with(u, OVERSAMPLE)
}

/// The samples of `u`, interpolated onto a grid `oversample` times finer and
/// sorted in decreasing order, define the decreasing distribution `d(a)` at
/// areas `a = (k + 1/2) h_f^2`; the node at distance `r` from the centre
/// receives `d(pi r^2)`, linearly interpolated.
pub fn schwarz_rearrange_with(u: &ScalarField, oversample: usize) -> Result<ScalarField> {
    if !u.is_nonnegative() {
        return Err(Error::NegativeInput { min: u.min() });
    }
    if oversample == 0 {
        return Err(Error::Config("oversampling factor must be positive".into()));
    }
    let g = *u.grid();
    let mut sorted = if oversample == 1 {
        u.values().to_vec()
    } else {
        let fine = Grid2D::new(g.extent(), g.n() * oversample)?;
        interpolate(u, fine, 1.0)?.into_values()
    };
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let last = sorted.len() - 1;
    let cells_per_node = (oversample * oversample) as f64;
    let n = g.n();
    let c = (n / 2) as f64;
    let values = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i as f64 - c, j as f64 - c)))
        .map(|(di, dj)| {
            let pos = std::f64::consts::PI * (di * di + dj * dj) * cells_per_node - 0.5;
            if pos <= 0.0 {
                return sorted[0].max(0.0);
            }
            let k = pos.floor() as usize;
            if k >= last {
                return sorted[last].max(0.0);
            }
            let f = pos - k as f64;
            ((1.0 - f) * sorted[k] + f * sorted[k + 1]).max(0.0)
        })
        .collect();
    ScalarField::new(g, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_decreasing_is_nearly_fixed() {
        let g = Grid2D::new(10.0, 128).unwrap();
        let u = ScalarField::from_radial(g, |r| (-r * r).exp()).unwrap();
        let v = schwarz_rearrange(&u).unwrap();
        assert!(u.distance_l2(&v).unwrap() <= 2e-3 * u.norm_l2());
    }

    #[test]
    fn shifted_bump_is_centred() {
        let g = Grid2D::new(16.0, 128).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (-((x - 2.0).powi(2) + (y + 1.0).powi(2))).exp()).unwrap();
        let v = schwarz_rearrange(&u).unwrap();
        assert!(v.asymmetry() < 1e-14);
        assert!(v.is_radially_nonincreasing(0.0));
        assert!((v.mass() - u.mass()).abs() < 1e-3 * u.mass());
        assert!((v.lp_pow(4.0) - u.lp_pow(4.0)).abs() < 2e-3 * u.lp_pow(4.0));
        assert!(v.second_moment() < u.second_moment());
    }

    #[test]
    fn bad_inputs_rejected() {
        let g = Grid2D::new(4.0, 16).unwrap();
        let u = ScalarField::from_fn(g, |x, _| x).unwrap();
        assert!(matches!(schwarz_rearrange(&u), Err(Error::NegativeInput { .. })));
        assert!(matches!(schwarz_rearrange_with(&u.abs(), 0), Err(Error::Config(_))));
    }
}
