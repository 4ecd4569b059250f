//! Gauss–Legendre and Gauss–Jacobi rules on [-1, 1].
//!
//! Rules are cached per thread. Gauss–Jacobi rules come from the
//! Golub–Welsch eigenvalue method; Gauss–Legendre rules from Newton
//! iteration on the three-term recurrence.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fracops::special::gamma_unchecked;

/// Nodes and weights of an n-point rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

thread_local! {
    static LEGENDRE_CACHE: RefCell<HashMap<usize, Rc<GaussRule>>> = RefCell::new(HashMap::new());
    static JACOBI_CACHE: RefCell<HashMap<(usize, u64, u64), Rc<GaussRule>>> = RefCell::new(HashMap::new());
}

/// n-point Gauss–Legendre rule. Panics if n == 0.
pub fn gauss_legendre(n: usize) -> Rc<GaussRule> {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    LEGENDRE_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(compute_legendre(n)))
            .clone()
    })
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    // (P_n(x), P_n'(x)) by the three-term recurrence
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

fn compute_legendre(n: usize) -> GaussRule {
    if n == 1 {
        return GaussRule { nodes: vec![0.0], weights: vec![2.0] };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// n-point Gauss–Jacobi rule for the weight (1-t)^alpha (1+t)^beta.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Rc<GaussRule>> {
    if n == 0 {
        return Err(Error::Parameter("Gauss–Jacobi rule needs at least one node".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::Parameter(format!(
            "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
        )));
    }
    if alpha == 0.0 && beta == 0.0 {
        return Ok(gauss_legendre(n));
    }
    let key = (n, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = JACOBI_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(rule);
    }
    let rule = Rc::new(compute_jacobi(n, alpha, beta)?);
    JACOBI_CACHE.with(|c| c.borrow_mut().insert(key, rule.clone()));
    Ok(rule)
}

fn compute_jacobi(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let fi = i as f64;
        let diag = if i == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * fi + ab) * (2.0 * fi + ab + 2.0))
        };
        jac[(i, i)] = diag;
        if i + 1 < n {
            let k = fi + 1.0;
            let off = if i == 0 {
                (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
            } else {
                let t = 2.0 * k + ab;
                (4.0 * k * (k + a) * (k + b) * (k + ab) / (t * t * (t + 1.0) * (t - 1.0))).sqrt()
            };
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma_unchecked(a + 1.0) * gamma_unchecked(b + 1.0)
        / gamma_unchecked(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], mu0 * v0 * v0)
        })
        .collect();
    if pairs.iter().any(|(x, w)| !x.is_finite() || !w.is_finite()) {
        return Err(Error::Numeric(format!("Gauss–Jacobi({n}, {a}, {b}) produced non-finite values")));
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Nodes and weights on [lo, hi] for the weight (x-lo)^a_lo (hi-x)^a_hi.
pub fn weighted_rule(n: usize, lo: f64, hi: f64, a_lo: f64, a_hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = gauss_jacobi(n, a_hi, a_lo)?;
    let half = 0.5 * (hi - lo);
    let scale = half.powf(a_lo + a_hi + 1.0);
    let nodes = rule.nodes.iter().map(|t| lo + (1.0 + t) * half).collect();
    let weights = rule.weights.iter().map(|w| w * scale).collect();
    Ok((nodes, weights))
}

/// Composite Gauss–Legendre integration of a smooth function on [lo, hi].
pub fn integrate_smooth<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let rule = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// Gauss–Legendre on pieces graded geometrically toward both ends of [lo, hi].
/// Integrates functions with algebraic endpoint behaviour such as (x-lo)^β.
pub fn integrate_graded<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize, levels: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let ratio = 0.15;
    let mid = 0.5 * (lo + hi);
    let half = mid - lo;
    let mut total = 0.0;
    let mut outer = half;
    for _ in 0..levels {
        let inner = outer * ratio;
        total += integrate_smooth(f, lo + inner, lo + outer, n);
        total += integrate_smooth(f, hi - outer, hi - inner, n);
        outer = inner;
    }
    total += integrate_smooth(f, lo, lo + outer, n);
    total += integrate_smooth(f, hi - outer, hi, n);
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::special::beta_fn;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 8, 16, 33] {
            let rule = gauss_legendre(n);
            for k in 0..(2 * n) {
                let approx: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-14, "n={n} k={k}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn jacobi_integrates_weighted_monomials() {
        // ∫_{-1}^{1} (1-t)^a (1+t)^b (1+t)^k dt = 2^{a+b+k+1} B(a+1, b+k+1)
        for &(a, b) in &[(-0.5, 0.0), (0.3, -0.7), (-0.25, -0.25), (0.0, 0.6)] {
            let n = 12;
            let rule = gauss_jacobi(n, a, b).unwrap();
            for k in 0..(2 * n) {
                let approx: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * (1.0 + t).powi(k as i32))
                    .sum();
                let exact = 2f64.powf(a + b + k as f64 + 1.0) * beta_fn(a + 1.0, b + k as f64 + 1.0).unwrap();
                assert!(((approx - exact) / exact).abs() < 1e-12, "(a,b)=({a},{b}) k={k}");
            }
        }
    }

    #[test]
    fn jacobi_rejects_bad_exponents() {
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
        assert!(gauss_jacobi(0, 0.1, 0.0).is_err());
    }

    #[test]
    fn graded_handles_endpoint_powers() {
        let f = |x: f64| x.powf(0.3) * (1.0 - x).powf(0.4);
        let exact = beta_fn(1.3, 1.4).unwrap();
        let approx = integrate_graded(&f, 0.0, 1.0, 16, 18);
        assert!((approx - exact).abs() < 1e-13, "{approx} vs {exact}");
    }
}
