use crate::classical::DiffusivityField;
use crate::error::{Error, Result};
use crate::fracops::terms::PowerTermSum;
use crate::fracops::{has_zero_trace, rl_derivative_of_integral, two_sided_terms};

/// Interior sample count for the strong-form residual.
pub const RESIDUAL_POINTS: usize = 100;

/// Exact solution with its source f = -D(K D I^β_θ u).
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub u_exact: PowerTermSum,
    pub k: DiffusivityField,
    pub beta: f64,
    pub theta: f64,
    pub f: PowerTermSum,
    /// D I^β_θ u.
    pub flux_potential: PowerTermSum,
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn manufacture(u_exact: &PowerTermSum, k: &DiffusivityField, beta: f64, theta: f64) -> Result<ManufacturedCase> {
    if !has_zero_trace(u_exact) {
        return Err(Error::Parameter("the exact solution must vanish at both endpoints".into()));
    }
    let coeffs = k
        .polynomial_coeffs()
        .ok_or_else(|| Error::UnsupportedRepresentation("manufactured sources need a polynomial diffusivity".into()))?;
    let flux_potential = rl_derivative_of_integral(u_exact, beta, theta)?;
    let mut f = flux_potential.multiply_polynomial(&coeffs).derivative()?.scaled(-1.0);
    f.clean(1e-15);
    Ok(ManufacturedCase { u_exact: u_exact.clone(), k: k.clone(), beta, theta, f, flux_potential })
}

impl ManufacturedCase {
    /// I^β_θ u.
    pub fn exact_integral(&self) -> Result<PowerTermSum> {
        two_sided_terms(&self.u_exact, self.beta, self.theta)
    }

    /// max |f - f̃| / max(1, |f|) over interior points, where
    /// f̃ = -(K' D I u + K D² I u) is built along a separate path.
    pub fn strong_residual(&self) -> Result<f64> {
        let coeffs = self.k.polynomial_coeffs().expect("checked at construction");
        let dk = poly_derivative(&coeffs);
        let second = self.flux_potential.derivative()?;
        let mut worst = 0.0f64;
        for i in 1..=RESIDUAL_POINTS {
            let x = i as f64 / (RESIDUAL_POINTS + 1) as f64;
            let alt = -(horner(&dk, x) * self.flux_potential.eval(x) + horner(&coeffs, x) * second.eval(x));
            let f = self.f.eval(x);
            worst = worst.max((f - alt).abs() / f.abs().max(1.0));
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::oracle_frac_integral;
    use crate::fracops::special::gamma_unchecked;

    #[test]
    fn one_sided_source_matches_oracle() {
        let u = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let k = DiffusivityField::constant(1.0).unwrap();
        let case = manufacture(&u, &k, 0.3, 1.0).unwrap();
        // D² lI^σ u = lI^σ D²u + Du(0) x^{σ-1}/Γ(σ) since u(0) = 0
        for i in 1..=10 {
            let x = i as f64 / 10.0;
            let oracle = -(oracle_frac_integral(|_| -2.0, 0.3, x, 64).unwrap() + x.powf(-0.7) / gamma_unchecked(0.3));
            assert!((case.f.eval(x) - oracle).abs() < 1e-10 * oracle.abs().max(1.0), "{x}");
        }
    }

    #[test]
    fn zero_solution() {
        let k = DiffusivityField::polynomial(vec![1.0, 1.0]).unwrap();
        let case = manufacture(&PowerTermSum::zero(), &k, 0.4, 0.2).unwrap();
        assert!(case.f.is_empty());
    }

    #[test]
    fn variable_k_residual() {
        let u = PowerTermSum::polynomial(&[0.0, 0.0, 1.0, -2.0, 1.0]);
        let k = DiffusivityField::polynomial(vec![1.0, 1.0]).unwrap();
        let case = manufacture(&u, &k, 0.25, 0.4).unwrap();
        assert!(case.strong_residual().unwrap() <= 1e-9);
    }

    #[test]
    fn rejects_nonzero_trace() {
        let k = DiffusivityField::constant(1.0).unwrap();
        assert!(manufacture(&PowerTermSum::polynomial(&[1.0]), &k, 0.3, 0.5).is_err());
    }
}
