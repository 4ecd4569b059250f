//! Riemann–Liouville fractional integrals, Caputo derivatives and the
//! two-sided operator I^β_θ = θ·lI^β + (1-θ)·rI^β on (0, 1).

pub mod oracle;
pub mod piecewise;
pub mod special;
pub mod terms;

use serde::{Deserialize, Serialize};

use crate::error::{check_closed_unit, check_open_unit, Error, Result};
pub use oracle::{oracle_frac_integral, oracle_left_piecewise, oracle_right_piecewise};
pub use piecewise::PiecewisePoly;
pub use special::{beta_fn, gamma, ln_gamma};
pub use terms::{AsTerms, PowerTerm, PowerTermSum, Side};

use special::gamma_unchecked;

/// A fractional order μ = m - σ with integer m and σ ∈ [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    pub mu: f64,
    pub m: u32,
    pub sigma: f64,
}

impl FracOrder {
    /// Order of a fractional integral, σ ∈ (0, 1).
    pub fn integral(sigma: f64) -> Result<Self> {
        check_open_unit("sigma", sigma)?;
        Ok(Self { mu: -sigma, m: 0, sigma })
    }

    /// Order of a derivative μ > 0, split as m - σ with m = ⌈μ⌉.
    pub fn derivative(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Parameter(format!("derivative order must be positive, got {mu}")));
        }
        let m = mu.ceil();
        Ok(Self { mu, m: m as u32, sigma: m - mu })
    }
}

fn check_point(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("evaluation point {x} lies outside [0, 1]")));
    }
    Ok(())
}

/// Closed form of lI^σ w.
pub fn left_integral_terms(w: &impl AsTerms, sigma: f64) -> Result<PowerTermSum> {
    check_open_unit("sigma", sigma)?;
    w.to_terms().left_integral(sigma)
}

/// Closed form of rI^σ w.
pub fn right_integral_terms(w: &impl AsTerms, sigma: f64) -> Result<PowerTermSum> {
    check_open_unit("sigma", sigma)?;
    w.to_terms().right_integral(sigma)
}

/// Closed form of I^β_θ w, using the supplied Gamma function.
pub fn two_sided_terms_with(
    w: &impl AsTerms,
    beta: f64,
    theta: f64,
    gamma_fn: &dyn Fn(f64) -> f64,
) -> Result<PowerTermSum> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    let t = w.to_terms();
    let mut out = PowerTermSum::zero();
    if theta > 0.0 {
        out = &out + &t.left_integral_with(beta, gamma_fn)?.scaled(theta);
    }
    if theta < 1.0 {
        out = &out + &t.right_integral_with(beta, gamma_fn)?.scaled(1.0 - theta);
    }
    Ok(out)
}

/// Closed form of I^β_θ w.
pub fn two_sided_terms(w: &impl AsTerms, beta: f64, theta: f64) -> Result<PowerTermSum> {
    two_sided_terms_with(w, beta, theta, &gamma_unchecked)
}

/// lI^σ w(x) = (1/Γ(σ)) ∫_0^x w(s)(x-s)^{σ-1} ds, evaluated by the power rule.
pub fn left_frac_integral(w: &impl AsTerms, sigma: f64, x: f64) -> Result<f64> {
    check_point(x)?;
    Ok(left_integral_terms(w, sigma)?.eval(x))
}

/// rI^σ w(x) = (1/Γ(σ)) ∫_x^1 w(s)(s-x)^{σ-1} ds.
pub fn right_frac_integral(w: &impl AsTerms, sigma: f64, x: f64) -> Result<f64> {
    check_point(x)?;
    Ok(right_integral_terms(w, sigma)?.eval(x))
}

/// I^β_θ w(x).
pub fn two_sided_integral(w: &impl AsTerms, beta: f64, theta: f64, x: f64) -> Result<f64> {
    check_point(x)?;
    Ok(two_sided_terms(w, beta, theta)?.eval(x))
}

fn check_caputo_input(w: &PowerTermSum, m: u32) -> Result<()> {
    for t in w.terms() {
        let inside = t.anchor > 1e-14 && t.anchor < 1.0 - 1e-14;
        if inside && t.exponent < m as f64 - 1e-12 {
            return Err(Error::UnsupportedRepresentation(format!(
                "term with exponent {} at interior point {} is not {m} times differentiable",
                t.exponent, t.anchor
            )));
        }
    }
    Ok(())
}

/// Left Caputo derivative lD^μ w = lI^σ D^m w with μ = m - σ.
pub fn caputo_left(w: &impl AsTerms, mu: f64) -> Result<PowerTermSum> {
    let order = FracOrder::derivative(mu)?;
    let t = w.to_terms();
    check_caputo_input(&t, order.m)?;
    let d = t.derivative_n(order.m as usize)?;
    if order.sigma == 0.0 {
        return Ok(d);
    }
    d.left_integral(order.sigma)
}

/// Right Caputo derivative rD^μ w = (-1)^m rI^σ D^m w.
pub fn caputo_right(w: &impl AsTerms, mu: f64) -> Result<PowerTermSum> {
    let order = FracOrder::derivative(mu)?;
    let t = w.to_terms();
    check_caputo_input(&t, order.m)?;
    let d = t.derivative_n(order.m as usize)?;
    let sign = if order.m % 2 == 0 { 1.0 } else { -1.0 };
    if order.sigma == 0.0 {
        return Ok(d.scaled(sign));
    }
    Ok(d.right_integral(order.sigma)?.scaled(sign))
}

/// D(I^β_θ w) in closed form.
///
/// When w(0) = w(1) = 0 the derivative commutes with both integrals, so the
/// result is θ·lI^β Dw + (1-θ)·rI^β Dw. Otherwise the closed form of I^β_θ w
/// is differentiated term by term, which keeps the boundary contributions
/// g(0)x^{β-1}/Γ(β) and -g(1)(1-x)^{β-1}/Γ(β).
pub fn rl_derivative_of_integral(w: &impl AsTerms, beta: f64, theta: f64) -> Result<PowerTermSum> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    let t = w.to_terms();
    let scale = t.max_abs_coeff().max(1.0);
    if t.eval(0.0).abs() <= 1e-13 * scale && t.eval(1.0).abs() <= 1e-13 * scale {
        let d = t.derivative()?;
        return two_sided_terms(&d, beta, theta);
    }
    two_sided_terms(&t, beta, theta)?.derivative()
}

/// ‖·‖-style check that a representation has zero trace.
pub fn has_zero_trace(w: &PowerTermSum) -> bool {
    let scale = w.max_abs_coeff().max(1.0);
    w.eval(0.0).abs() <= 1e-12 * scale && w.eval(1.0).abs() <= 1e-12 * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_GAMMA_1_5: f64 = 1.128_379_167_095_512_6;

    fn zigzag() -> PiecewisePoly {
        PiecewisePoly::new(
            vec![0.0, 0.25, 0.75, 1.0],
            vec![vec![0.0, 4.0], vec![1.0, -4.0], vec![-1.0, 4.0]],
            true,
        )
        .unwrap()
    }

    #[test]
    fn unit_function_left_and_right() {
        let one = PowerTermSum::constant(1.0);
        assert!((left_frac_integral(&one, 0.5, 1.0).unwrap() - INV_GAMMA_1_5).abs() < 1e-14);
        assert!((right_frac_integral(&one, 0.5, 0.0).unwrap() - INV_GAMMA_1_5).abs() < 1e-14);
        assert_eq!(left_frac_integral(&PowerTermSum::zero(), 0.3, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn identity_on_x_at_left_end() {
        // rI^{1/2} s at x = 0 is ∫_0^1 s^{1/2} ds / Γ(1/2)
        let w = PowerTermSum::monomial(1.0, 1.0);
        let v = right_frac_integral(&w, 0.5, 0.0).unwrap();
        let reference = (2.0 / 3.0) / gamma(0.5).unwrap();
        assert!((v - reference).abs() < 1e-14, "{v} vs {reference}");
        let oracle = oracle_right_piecewise(&|s| s, &[], 0.5, 0.0, 64).unwrap();
        assert!((v - oracle).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_point() {
        let one = PowerTermSum::constant(1.0);
        assert!(matches!(left_frac_integral(&one, 0.5, 1.5), Err(Error::Domain(_))));
        assert!(matches!(right_frac_integral(&one, 0.5, -0.1), Err(Error::Domain(_))));
        assert!(matches!(left_frac_integral(&one, 1.5, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn two_sided_midpoint() {
        let one = PowerTermSum::constant(1.0);
        let v = two_sided_integral(&one, 0.5, 0.5, 0.5).unwrap();
        assert!((v - 0.797_884_560_802_865_4).abs() < 1e-12);
        let l = left_frac_integral(&one, 0.3, 0.4).unwrap();
        let r = right_frac_integral(&one, 0.3, 0.4).unwrap();
        assert_eq!(two_sided_integral(&one, 0.3, 1.0, 0.4).unwrap(), l);
        assert_eq!(two_sided_integral(&one, 0.3, 0.0, 0.4).unwrap(), r);
    }

    #[test]
    fn zigzag_profile_first_and_last_branch() {
        let dw = zigzag().derivative();
        for beta in [0.2, 0.5, 0.8] {
            let g = gamma(beta + 1.0).unwrap();
            for x in [0.05, 0.1, 0.2, 0.25] {
                let v = left_frac_integral(&dw, beta, x).unwrap();
                assert!((v - 4.0 / g * x.powf(beta)).abs() < 1e-13);
            }
            for x in [0.75, 0.8, 0.95] {
                let v = right_frac_integral(&dw, beta, x).unwrap();
                assert!((v - 4.0 / g * (1.0 - x).powf(beta)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn caputo_examples() {
        let x = PowerTermSum::monomial(1.0, 1.0);
        let d = caputo_left(&x, 0.5).unwrap();
        for p in [0.1, 0.4, 0.9] {
            assert!((d.eval(p) - p.sqrt() / gamma(1.5).unwrap()).abs() < 1e-14);
        }
        assert!(caputo_left(&PowerTermSum::constant(2.5), 0.7).unwrap().is_empty());
        let x2 = PowerTermSum::monomial(1.0, 2.0);
        let d2 = caputo_left(&x2, 0.5).unwrap();
        assert!((d2.eval(0.6) - 2.0 * 0.6f64.powf(1.5) / gamma(2.5).unwrap()).abs() < 1e-14);
        let bad = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, 0.5, Side::Left, 0.5)]);
        assert!(matches!(caputo_left(&bad, 0.7), Err(Error::UnsupportedRepresentation(_))));
    }

    #[test]
    fn commutation_and_fallback_agree_for_zero_trace() {
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let commuted = rl_derivative_of_integral(&w, 0.4, 0.7).unwrap();
        let direct = two_sided_terms(&w, 0.4, 0.7).unwrap().derivative().unwrap();
        for k in 1..50 {
            let x = k as f64 / 50.0;
            assert!((commuted.eval(x) - direct.eval(x)).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn fallback_keeps_boundary_terms() {
        // D lI^β 1 = x^{β-1}/Γ(β)
        let one = PowerTermSum::constant(1.0);
        let d = rl_derivative_of_integral(&one, 0.3, 1.0).unwrap();
        for x in [0.2, 0.5, 0.9] {
            assert!((d.eval(x) - x.powf(-0.7) / gamma(0.3).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn frac_order_split() {
        let o = FracOrder::derivative(1.3).unwrap();
        assert_eq!(o.m, 2);
        assert!((o.sigma - 0.7).abs() < 1e-15);
        assert!(FracOrder::integral(1.0).is_err());
        assert!(FracOrder::derivative(0.0).is_err());
    }
}
