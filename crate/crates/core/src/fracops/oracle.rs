//! Brute-force quadrature for Riemann–Liouville integrals of callables.
//!
//! Used as the independent reference for the closed-form term algebra.
//! The panel ending at x carries the (x-s)^{σ-1} singularity as a
//! Gauss–Jacobi weight. Earlier panels use the substitution t = (x-s)^σ,
//! which turns the kernel into a constant and leaves a smooth integrand.

use crate::error::{Error, Result};
use crate::fracops::special::gamma_unchecked;
use crate::quadrature::{gauss_jacobi, gauss_legendre};

fn check(sigma: f64, n_nodes: usize) -> Result<()> {
    if n_nodes < 2 {
        return Err(Error::Parameter(format!("oracle needs at least 2 nodes, got {n_nodes}")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!("order must lie in (0, 1), got {sigma}")));
    }
    Ok(())
}

/// (1/Γ(σ)) ∫_0^x f(s) (x-s)^{σ-1} ds for f continuous on [0, x].
pub fn oracle_frac_integral<F: Fn(f64) -> f64>(f: F, sigma: f64, x: f64, n_nodes: usize) -> Result<f64> {
    oracle_left_piecewise(&f, &[], sigma, x, n_nodes)
}

/// Left integral for f smooth between the given breakpoints.
pub fn oracle_left_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    sigma: f64,
    x: f64,
    n_nodes: usize,
) -> Result<f64> {
    check(sigma, n_nodes)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < x).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let last = pts.last().copied().unwrap_or(0.0);

    // final panel [last, x] with the Jacobi weight (x-s)^{σ-1}
    let jac = gauss_jacobi(n_nodes, sigma - 1.0, 0.0)?;
    let half = 0.5 * (x - last);
    let scale = half.powf(sigma);
    let mut total: f64 = jac
        .nodes
        .iter()
        .zip(&jac.weights)
        .map(|(t, w)| w * f(last + (1.0 + t) * half))
        .sum::<f64>()
        * scale;

    // earlier panels in the variable t = (x-s)^σ
    let gl = gauss_legendre(n_nodes);
    let mut lo = 0.0;
    for &hi in &pts {
        let t_hi = (x - lo).powf(sigma);
        let t_lo = (x - hi).powf(sigma);
        let th = 0.5 * (t_hi - t_lo);
        let tm = 0.5 * (t_hi + t_lo);
        let panel: f64 = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(u, w)| {
                let t = tm + th * u;
                w * f(x - t.powf(1.0 / sigma))
            })
            .sum::<f64>()
            * th
            / sigma;
        total += panel;
        lo = hi;
    }
    Ok(total / gamma_unchecked(sigma))
}

/// (1/Γ(σ)) ∫_x^1 f(s) (s-x)^{σ-1} ds for f smooth between breakpoints.
pub fn oracle_right_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    sigma: f64,
    x: f64,
    n_nodes: usize,
) -> Result<f64> {
    let g = |s: f64| f(1.0 - s);
    let mirrored: Vec<f64> = breaks.iter().map(|b| 1.0 - b).collect();
    oracle_left_piecewise(&g, &mirrored, sigma, 1.0 - x, n_nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function() {
        let v = oracle_frac_integral(|_| 1.0, 0.5, 1.0, 64).unwrap();
        assert!((v - 1.128_379_167_095_512_6).abs() < 1e-12);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(oracle_frac_integral(f64::cos, 0.5, 0.0, 16).unwrap(), 0.0);
    }

    #[test]
    fn too_few_nodes() {
        assert!(matches!(oracle_frac_integral(|_| 1.0, 0.5, 1.0, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn quadratic_matches_power_rule() {
        let v = oracle_frac_integral(|s| s * s, 0.25, 1.0, 64).unwrap();
        let exact = gamma_unchecked(3.0) / gamma_unchecked(3.25);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn piecewise_step() {
        // step at 0.4: ∫_{0.4}^{1} (1-s)^{-1/2} ds / Γ(1/2) = 2·0.6^{1/2}/Γ(1/2)
        let f = |s: f64| if s >= 0.4 { 1.0 } else { 0.0 };
        let v = oracle_left_piecewise(&f, &[0.4], 0.5, 1.0, 32).unwrap();
        let exact = 2.0 * 0.6f64.sqrt() / gamma_unchecked(0.5);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn doubling_nodes_reduces_error_for_smooth_integrand() {
        // cos is entire; compare against a 128-node reference
        let reference = oracle_frac_integral(f64::cos, 0.3, 0.9, 128).unwrap();
        let e4 = (oracle_frac_integral(f64::cos, 0.3, 0.9, 2).unwrap() - reference).abs();
        let e8 = (oracle_frac_integral(f64::cos, 0.3, 0.9, 4).unwrap() - reference).abs();
        assert!(e8 < e4);
    }
}
