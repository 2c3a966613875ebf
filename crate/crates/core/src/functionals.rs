//! Energy, multiplier, virial functional and the other scalar quantities
//! evaluated on grid fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::dilation::interpolate;
use crate::grid::{Grid2D, ScalarField};
use crate::potential::Potential;
use crate::spectral::{frac_seminorm_sq, FractionalSymbol};

/// Order, mass and trap of one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub s: f64,
    pub mass: f64,
    #[serde(default)]
    pub potential: Potential,
}

impl ProblemParams {
    pub fn harmonic(s: f64, mass: f64) -> Result<Self> {
        let p = Self { s, mass, potential: Potential::Harmonic };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.5 && self.s <= 1.0) {
            return Err(Error::InvalidOrder { s: self.s, range: "(1/2, 1]" });
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }
}

/// Terms of the energy of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub mass: f64,
    pub kinetic: f64,
    pub potential_term: f64,
    pub quartic: f64,
    pub total: f64,
    /// `(kinetic + potential_term - quartic) / mass`.
    pub multiplier: f64,
    /// `s K - integral(x.grad V / 2 u^2) - quartic / 2`; absent for tables
    /// without `r V'`.
    pub virial: Option<f64>,
}

/// Grid operator `(-Delta)^s + V` with the samples it needs cached.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    symbol: FractionalSymbol,
    potential: Vec<f64>,
    virial_weight: Option<Vec<f64>>,
}

impl Hamiltonian {
    pub fn new(p: &ProblemParams, grid: Grid2D) -> Result<Self> {
        p.validate()?;
        let virial_weight = match p.potential.virial_weight(&grid) {
            Ok(w) => Some(w),
            Err(Error::MissingVirialTerm) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            symbol: FractionalSymbol::new(grid, p.s)?,
            potential: p.potential.sample(&grid),
            virial_weight,
        })
    }

    /// Operator without a trap, `(-Delta)^s` alone.
    pub fn free(s: f64, grid: Grid2D) -> Result<Self> {
        Ok(Self { symbol: FractionalSymbol::new(grid, s)?, potential: vec![0.0; grid.len()], virial_weight: Some(vec![0.0; grid.len()]) })
    }

    pub fn grid(&self) -> &Grid2D {
        self.symbol.grid()
    }

    pub fn order(&self) -> f64 {
        self.symbol.order()
    }

    pub fn symbol(&self) -> &FractionalSymbol {
        &self.symbol
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.potential
    }

    pub fn virial_weight(&self) -> Option<&[f64]> {
        self.virial_weight.as_deref()
    }

    pub fn kinetic(&self, u: &ScalarField) -> Result<f64> {
        frac_seminorm_sq(u, &self.symbol)
    }

    pub fn apply_kinetic(&self, u: &ScalarField) -> Result<ScalarField> {
        self.symbol.check_grid(u)?;
        ScalarField::new(*self.grid(), self.symbol.apply_real(u.values(), |m| m))
    }

    /// `(-Delta)^s u + V u`.
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        let mut out = self.apply_kinetic(u)?;
        for ((o, v), x) in out.values_mut().iter_mut().zip(&self.potential).zip(u.values()) {
            *o += v * x;
        }
        Ok(out)
    }

    /// Euler-Lagrange residual `(-Delta)^s u + V u - u^3 - mu u`.
    pub fn el_residual(&self, u: &ScalarField, mu: f64) -> Result<ScalarField> {
        let mut out = self.apply(u)?;
        for (o, x) in out.values_mut().iter_mut().zip(u.values()) {
            *o -= x * x * x + mu * x;
        }
        Ok(out)
    }

    pub fn breakdown(&self, u: &ScalarField) -> Result<EnergyBreakdown> {
        u.check_finite()?;
        let kinetic = self.kinetic(u)?;
        Ok(self.breakdown_with_kinetic(u, kinetic))
    }

    pub(crate) fn breakdown_with_kinetic(&self, u: &ScalarField, kinetic: f64) -> EnergyBreakdown {
        let mass = u.mass();
        let potential_term = u.weighted_mass(&self.potential);
        let quartic = u.lp_pow(4.0);
        let total = 0.5 * (kinetic + potential_term) - 0.25 * quartic;
        let multiplier = if mass > 0.0 { (kinetic + potential_term - quartic) / mass } else { 0.0 };
        let virial = self
            .virial_weight
            .as_ref()
            .map(|w| self.order() * kinetic - u.weighted_mass(w) - 0.5 * quartic);
        EnergyBreakdown { mass, kinetic, potential_term, quartic, total, multiplier, virial }
    }
}

/// Energy terms of `u` for the problem `p`.
pub fn energy(u: &ScalarField, p: &ProblemParams) -> Result<EnergyBreakdown> {
    Hamiltonian::new(p, *u.grid())?.breakdown(u)
}

/// Virial functional `s K - integral(x.grad V / 2 u^2) - quartic / 2`.
pub fn virial(u: &ScalarField, p: &ProblemParams) -> Result<f64> {
    p.validate()?;
    let w = p.potential.virial_weight(u.grid())?;
    let sym = FractionalSymbol::new(*u.grid(), p.s)?;
    let k = frac_seminorm_sq(u, &sym)?;
    Ok(p.s * k - u.weighted_mass(&w) - 0.5 * u.lp_pow(4.0))
}

/// `integral(u^4) / (K^{1/s} M^{2 - 1/s})`, invariant under `u -> a u(b x)`
/// up to the mass factor.
pub fn gn_quotient(u: &ScalarField, s: f64) -> Result<f64> {
    let sym = FractionalSymbol::new(*u.grid(), s)?;
    gn_quotient_with(u, &sym)
}

pub fn gn_quotient_with(u: &ScalarField, sym: &FractionalSymbol) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let s = sym.order();
    let k = frac_seminorm_sq(u, sym)?;
    let m = u.mass();
    Ok(u.lp_pow(4.0) / (k.powf(1.0 / s) * m.powf(2.0 - 1.0 / s)))
}

/// Refinement of the grid on which `|u|` is formed in
/// [`modulus_seminorm_check`].
pub const MODULUS_OVERSAMPLE: usize = 4;

/// Seminorms of `|u|` and of `u`, in that order. A sign-changing `u` is
/// replaced by its trigonometric interpolant on a grid
/// [`MODULUS_OVERSAMPLE`] times finer before the modulus is taken.
pub fn modulus_seminorm_check(u: &ScalarField, s: f64) -> Result<(f64, f64)> {
    let sym = FractionalSymbol::new(*u.grid(), s)?;
    if u.min() >= 0.0 {
        let k = frac_seminorm_sq(u, &sym)?;
        return Ok((k, k));
    }
    let g = u.grid();
    let fine = Grid2D::new(g.extent(), g.n() * MODULUS_OVERSAMPLE)?;
    let v = interpolate(u, fine, 1.0)?;
    let sym = FractionalSymbol::new(fine, s)?;
    Ok((frac_seminorm_sq(&v.abs(), &sym)?, frac_seminorm_sq(&v, &sym)?))
}

/// Both sides of the interpolation bound
/// `|u|_{3/4}^2 <= |u|_s^{3/(2s)} M^{1 - 3/(4s)}` for `s > 3/4`, with
/// `|u|_s^2` the seminorm and `M` the mass.
pub fn interpolation_check(u: &ScalarField, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.75 && s <= 1.0) {
        return Err(Error::InvalidOrder { s, range: "(3/4, 1]" });
    }
    let low = frac_seminorm_sq(u, &FractionalSymbol::new(*u.grid(), 0.75)?)?;
    let high = frac_seminorm_sq(u, &FractionalSymbol::new(*u.grid(), s)?)?;
    let theta = 0.75 / s;
    Ok((low, high.powf(theta) * u.mass().powf(1.0 - theta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian() -> ScalarField {
        let g = Grid2D::new(16.0, 128).unwrap();
        ScalarField::from_radial(g, |r| (-r * r / 2.0).exp()).unwrap()
    }

    #[test]
    fn gaussian_energy_terms() {
        let p = ProblemParams::harmonic(1.0, PI).unwrap();
        let b = energy(&gaussian(), &p).unwrap();
        assert!((b.kinetic - PI).abs() < 1e-8);
        assert!((b.potential_term - PI).abs() < 1e-8);
        assert!((b.quartic - PI / 2.0).abs() < 1e-8);
        assert!((b.total - (PI - PI / 8.0)).abs() < 1e-8);
        assert!((b.virial.unwrap() + PI / 4.0).abs() < 1e-8);
        assert!((virial(&gaussian(), &p).unwrap() + PI / 4.0).abs() < 1e-8);
    }

    #[test]
    fn breakdown_identities() {
        let p = ProblemParams::harmonic(0.8, 2.0).unwrap();
        let g = Grid2D::new(12.0, 64).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (1.0 + 0.3 * x) * (-(x * x + 2.0 * y * y) / 3.0).exp()).unwrap();
        let b = energy(&u, &p).unwrap();
        let total = 0.5 * (b.kinetic + b.potential_term) - 0.25 * b.quartic;
        assert!((b.total - total).abs() <= 1e-12 * total.abs());
        let mu_n = b.kinetic + b.potential_term - b.quartic;
        assert!((b.multiplier * b.mass - mu_n).abs() <= 1e-12 * mu_n.abs());
    }

    #[test]
    fn zero_field() {
        let p = ProblemParams::harmonic(0.9, 1.0).unwrap();
        let z = ScalarField::zeros(Grid2D::new(8.0, 16).unwrap());
        let b = energy(&z, &p).unwrap();
        assert_eq!((b.kinetic, b.potential_term, b.quartic, b.total, b.multiplier), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(virial(&z, &p).unwrap(), 0.0);
        assert!(matches!(gn_quotient(&z, 0.9), Err(Error::ZeroField)));
    }

    #[test]
    fn kinetic_scales_under_dilation() {
        let g = Grid2D::new(32.0, 128).unwrap();
        let u = ScalarField::from_radial(g, |r| (-r * r / 4.0).exp()).unwrap();
        let h = Hamiltonian::free(1.0, g).unwrap();
        let lam = 2.0;
        let v = ScalarField::from_radial(g, |r| lam * (-(lam * r).powi(2) / 4.0).exp()).unwrap();
        let ratio = h.kinetic(&v).unwrap() / h.kinetic(&u).unwrap();
        assert!((ratio - lam * lam).abs() < 1e-10);
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::harmonic(0.5, 1.0).is_err());
        assert!(ProblemParams::harmonic(1.1, 1.0).is_err());
        assert!(ProblemParams::harmonic(0.9, 0.0).is_err());
    }

    #[test]
    fn interpolation_is_equality_for_unit_mode() {
        let g = Grid2D::new(2.0 * PI, 32).unwrap();
        let u = ScalarField::from_fn(g, |x, _| x.cos()).unwrap();
        let (lhs, rhs) = interpolation_check(&u, 0.9).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!(interpolation_check(&u, 0.7).is_err());
    }

    #[test]
    fn modulus_of_a_bump_pair_is_strictly_lower() {
        let g = Grid2D::new(16.0, 64).unwrap();
        let bump = |x: f64, y: f64| (-(x * x + y * y)).exp();
        let u = ScalarField::from_fn(g, |x, y| bump(x - 2.0, y) - bump(x + 2.0, y)).unwrap();
        for s in [0.6, 0.9, 0.99] {
            let (lhs, rhs) = modulus_seminorm_check(&u, s).unwrap();
            assert!(lhs < rhs, "s={s}: {lhs} >= {rhs}");
        }
    }

    #[test]
    fn modulus_of_a_cosine_mode() {
        let g = Grid2D::new(2.0 * PI, 32).unwrap();
        let u = ScalarField::from_fn(g, |x, _| x.cos()).unwrap();
        for s in [0.6, 0.9] {
            let (lhs, rhs) = modulus_seminorm_check(&u, s).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-8), "s={s}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn modulus_of_nonnegative_field_is_exact() {
        let u = gaussian();
        let (a, b) = modulus_seminorm_check(&u, 0.8).unwrap();
        assert_eq!(a, b);
    }
}
