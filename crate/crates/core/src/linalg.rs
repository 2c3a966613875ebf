//! Preconditioned conjugate gradients for the shifted operator
//! `(-Delta)^s + V + sigma`.

use crate::error::{Error, Result};
use crate::functionals::Hamiltonian;
use crate::grid::{dot, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `|r| / |b|`.
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from the
/// contents of `x`. Stops when `|r| <= rel_tol |b|`.
pub fn pcg(
    mut apply_a: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    mut precond: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }
    let ax = apply_a(x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    for it in 0..max_iter {
        if res <= rel_tol {
            return Ok(CgOutcome { iterations: it, residual: res });
        }
        let ap = apply_a(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NumericalConsistency(format!("operator is not positive definite (p.Ap = {pap:e})")));
        }
        let alpha = rz / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        res = dot(&r, &r).sqrt() / b_norm;
        z = precond(&r)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if res <= rel_tol {
        Ok(CgOutcome { iterations: max_iter, residual: res })
    } else {
        Err(Error::NonConvergence { iterations: max_iter, residual: res })
    }
}

/// `A = (-Delta)^s + V + shift` with the preconditioner
/// `alpha (V + alpha)^{-1/2} ((-Delta)^s + alpha)^{-1} (V + alpha)^{-1/2}`.
pub struct ShiftedOperator<'a> {
    h: &'a Hamiltonian,
    shift: f64,
    alpha: f64,
    half_weight: Vec<f64>,
}

impl<'a> ShiftedOperator<'a> {
    pub fn new(h: &'a Hamiltonian, shift: f64) -> Self {
        let alpha = shift.abs().max(1.0);
        let half_weight = h.potential_values().iter().map(|v| (alpha / (v + alpha)).sqrt()).collect();
        Self { h, shift, alpha, half_weight }
    }

    fn field(&self, v: &[f64]) -> ScalarField {
        ScalarField::from_parts_unchecked(*self.h.grid(), v.to_vec())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.h.apply_kinetic(&self.field(x))?.into_values();
        for ((o, v), xi) in out.iter_mut().zip(self.h.potential_values()).zip(x) {
            *o += (v + self.shift) * xi;
        }
        Ok(out)
    }

    pub fn precondition(&self, r: &[f64]) -> Result<Vec<f64>> {
        let w: Vec<f64> = r.iter().zip(&self.half_weight).map(|(r, w)| r * w).collect();
        let alpha = self.alpha;
        let mut z = self.h.symbol().apply_real(&w, |m| 1.0 / (m + alpha));
        for (zi, w) in z.iter_mut().zip(&self.half_weight) {
            *zi *= w;
        }
        Ok(z)
    }

    /// Solves `A x = b` in place, warm-started from `x`.
    pub fn solve(&self, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome> {
        pcg(|v| self.apply(v), |r| self.precondition(r), b, x, rel_tol, max_iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::ProblemParams;
    use crate::grid::Grid2D;

    #[test]
    fn dense_spd_system() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let mul = |v: &[f64]| -> Result<Vec<f64>> {
            Ok((0..3).map(|i| (0..3).map(|j| a[3 * i + j] * v[j]).sum()).collect())
        };
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        let out = pcg(mul, |r| Ok(r.to_vec()), &b, &mut x, 1e-14, 10).unwrap();
        assert!(out.iterations <= 3);
        let ax = mul(&x).unwrap();
        for (l, r) in ax.iter().zip(&b) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_trap_operator_inverts() {
        let g = Grid2D::new(16.0, 64).unwrap();
        let h = Hamiltonian::new(&ProblemParams::harmonic(0.9, 1.0).unwrap(), g).unwrap();
        let op = ShiftedOperator::new(&h, 0.5);
        let b = ScalarField::from_fn(g, |x, y| (-(x * x + y * y) / 4.0).exp() * (1.0 + x)).unwrap();
        let mut x = vec![0.0; g.len()];
        let out = op.solve(b.values(), &mut x, 1e-12, 200).unwrap();
        assert!(out.iterations < 80, "{}", out.iterations);
        let ax = op.apply(&x).unwrap();
        let err = ax.iter().zip(b.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-10 * b.values().iter().map(|v| v * v).sum::<f64>().sqrt());
    }
}
