//! Integration of products of truncated-power sums against a weight that is
//! smooth between given breakpoints.
//!
//! The range is split at every anchor and weight breakpoint. On each cell a
//! factor separates into a smooth part and non-integer powers anchored at
//! the cell ends; every pairing of those pieces is integrated with a
//! Gauss–Jacobi rule carrying the combined endpoint exponents, and the
//! smooth pieces with Gauss–Legendre. Cells whose nearest outside
//! singularity is closer than the cell length are bisected first.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fracops::terms::{PowerTerm, PowerTermSum, Side};
use crate::quadrature::{gauss_legendre, weighted_rule};

const TOL: f64 = 1e-14;
const MAX_DEPTH: usize = 48;

/// Node counts per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRule {
    /// Gauss–Legendre nodes for smooth products.
    pub legendre: usize,
    /// Gauss–Jacobi nodes when an endpoint power is absorbed in the weight.
    pub jacobi: usize,
}

impl Default for CellRule {
    fn default() -> Self {
        Self { legendre: 8, jacobi: 32 }
    }
}

impl CellRule {
    pub fn new(legendre: usize, jacobi: usize) -> Self {
        Self { legendre, jacobi }
    }

    /// Multiply both node counts.
    pub fn times(self, factor: usize) -> Self {
        Self { legendre: self.legendre * factor, jacobi: self.jacobi * factor }
    }
}

/// A weight function with the points where it may fail to be smooth.
pub struct Weight<'a> {
    pub func: &'a (dyn Fn(f64) -> f64 + Sync),
    pub breaks: &'a [f64],
}

fn unit(_: f64) -> f64 {
    1.0
}

impl Weight<'static> {
    pub fn unit() -> Self {
        Weight { func: &unit, breaks: &[] }
    }
}

struct Parts<'t> {
    smooth: Vec<&'t PowerTerm>,
    lo: Vec<(f64, f64)>,
    hi: Vec<(f64, f64)>,
}

fn classify<'t>(f: &'t PowerTermSum, p: f64, q: f64, nearest: &mut f64) -> Parts<'t> {
    let mut parts = Parts { smooth: Vec::new(), lo: Vec::new(), hi: Vec::new() };
    for t in f.terms() {
        match t.side {
            Side::Left if t.anchor >= q - TOL => continue,
            Side::Right if t.anchor <= p + TOL => continue,
            _ => {}
        }
        if t.is_polynomial() {
            parts.smooth.push(t);
            continue;
        }
        match t.side {
            Side::Left if (t.anchor - p).abs() <= TOL => push_merged(&mut parts.lo, t.coeff, t.exponent),
            Side::Right if (t.anchor - q).abs() <= TOL => push_merged(&mut parts.hi, t.coeff, t.exponent),
            Side::Left => {
                *nearest = nearest.min(p - t.anchor);
                parts.smooth.push(t);
            }
            Side::Right => {
                *nearest = nearest.min(t.anchor - q);
                parts.smooth.push(t);
            }
        }
    }
    parts
}

fn push_merged(list: &mut Vec<(f64, f64)>, c: f64, e: f64) {
    if let Some(entry) = list.iter_mut().find(|(_, x)| (x - e).abs() <= 1e-12) {
        entry.0 += c;
    } else {
        list.push((c, e));
    }
}

fn breakpoints(factors: &[&PowerTermSum], weight: &Weight, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for f in factors {
        for t in f.terms() {
            if t.anchor > lo + TOL && t.anchor < hi - TOL {
                pts.push(t.anchor);
            }
        }
    }
    for &b in weight.breaks {
        if b > lo + TOL && b < hi - TOL {
            pts.push(b);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    pts
}

/// ∫_lo^hi Π factors · weight dx.
pub fn integrate_product(
    factors: &[&PowerTermSum],
    weight: &Weight,
    lo: f64,
    hi: f64,
    rule: CellRule,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let pts = breakpoints(factors, weight, lo, hi);
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate_cell(factors, weight, w[0], w[1], rule, 0)?;
    }
    Ok(total)
}

fn integrate_cell(
    factors: &[&PowerTermSum],
    weight: &Weight,
    p: f64,
    q: f64,
    rule: CellRule,
    depth: usize,
) -> Result<f64> {
    let len = q - p;
    let mut nearest = f64::INFINITY;
    let parts: Vec<Parts> = factors.iter().map(|f| classify(f, p, q, &mut nearest)).collect();
    if nearest < len && depth < MAX_DEPTH {
        let m = 0.5 * (p + q);
        return Ok(integrate_cell(factors, weight, p, m, rule, depth + 1)?
            + integrate_cell(factors, weight, m, q, rule, depth + 1)?);
    }

    // which factors are the same object, so smooth values can be shared
    let alias: Vec<usize> = (0..factors.len())
        .map(|i| (0..i).find(|&j| std::ptr::eq(factors[i], factors[j])).unwrap_or(i))
        .collect();

    // enumerate one choice per factor: smooth, a low-end power, or a high-end power
    let sizes: Vec<usize> = parts.iter().map(|pp| 1 + pp.lo.len() + pp.hi.len()).collect();
    let mut rules: HashMap<(u64, u64), (Vec<f64>, Vec<f64>, Vec<Option<Vec<f64>>>)> = HashMap::new();
    let mut choice = vec![0usize; factors.len()];
    let mut total = 0.0;
    loop {
        let mut coeff = 1.0;
        let mut a_lo = 0.0;
        let mut a_hi = 0.0;
        for (k, &c) in choice.iter().enumerate() {
            let pp = &parts[k];
            if c == 0 {
                continue;
            }
            if c <= pp.lo.len() {
                coeff *= pp.lo[c - 1].0;
                a_lo += pp.lo[c - 1].1;
            } else {
                let (cc, e) = pp.hi[c - 1 - pp.lo.len()];
                coeff *= cc;
                a_hi += e;
            }
        }
        if coeff != 0.0 {
            if a_lo <= -1.0 || a_hi <= -1.0 {
                return Err(Error::Numeric(format!(
                    "integrand not integrable on [{p}, {q}]: endpoint exponents {a_lo}, {a_hi}"
                )));
            }
            let key = (a_lo.to_bits(), a_hi.to_bits());
            if !rules.contains_key(&key) {
                let (nodes, mut weights) = if a_lo == 0.0 && a_hi == 0.0 {
                    let gl = gauss_legendre(rule.legendre);
                    let half = 0.5 * len;
                    (
                        gl.nodes.iter().map(|t| p + (1.0 + t) * half).collect::<Vec<_>>(),
                        gl.weights.iter().map(|w| w * half).collect::<Vec<_>>(),
                    )
                } else {
                    weighted_rule(rule.jacobi, p, q, a_lo, a_hi)?
                };
                for (w, &x) in weights.iter_mut().zip(&nodes) {
                    *w *= (weight.func)(x);
                }
                rules.insert(key, (nodes, weights, vec![None; factors.len()]));
            }
            let entry = rules.get_mut(&key).unwrap();
            for (k, &c) in choice.iter().enumerate() {
                if c == 0 && entry.2[alias[k]].is_none() {
                    let vals = entry.0.iter().map(|&x| parts[k].smooth.iter().map(|t| t.eval(x)).sum()).collect();
                    entry.2[alias[k]] = Some(vals);
                }
            }
            let (_, weights, smooth) = &*entry;
            let mut s = 0.0;
            for (i, w) in weights.iter().enumerate() {
                let mut v = *w;
                for (k, &c) in choice.iter().enumerate() {
                    if c == 0 {
                        v *= smooth[alias[k]].as_ref().unwrap()[i];
                    }
                }
                s += v;
            }
            total += coeff * s;
        }
        // advance the mixed-radix counter
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Ok(total);
            }
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// ∫_lo^hi f dx.
pub fn integral(f: &PowerTermSum, lo: f64, hi: f64) -> Result<f64> {
    integrate_product(&[f], &Weight::unit(), lo, hi, CellRule::default())
}

/// ∫_lo^hi f·g dx.
pub fn inner(f: &PowerTermSum, g: &PowerTermSum, lo: f64, hi: f64, rule: CellRule) -> Result<f64> {
    integrate_product(&[f, g], &Weight::unit(), lo, hi, rule)
}

/// Single-term moment ∫_p^q weight(x)·(x-a)_+^e (left) or (a-x)_+^e (right),
/// for the assembly loops.
pub fn power_moment(anchor: f64, side: Side, exponent: f64, weight: &Weight, p: f64, q: f64, rule: CellRule) -> Result<f64> {
    let f = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, anchor, side, exponent)]);
    integrate_product(&[&f], weight, p, q, rule)
}

/// Closed form of ∫_p^q (x-a)^e dx for a ≤ p, computed without cancellation.
pub fn power_integral_left(a: f64, e: f64, p: f64, q: f64) -> f64 {
    let e1 = e + 1.0;
    let d = p - a;
    if d <= 0.0 {
        return (q - a).powf(e1) / e1;
    }
    d.powf(e1) * (e1 * ((q - p) / d).ln_1p()).exp_m1() / e1
}

/// Closed form of ∫_p^q (a-x)^e dx for a ≥ q.
pub fn power_integral_right(a: f64, e: f64, p: f64, q: f64) -> f64 {
    power_integral_left(-a, e, -q, -p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::special::beta_fn;

    #[test]
    fn negative_power_at_left_end() {
        let f = PowerTermSum::monomial(1.0, -0.25);
        let v = integral(&f, 0.0, 1.0).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn two_endpoint_powers() {
        let f = PowerTermSum::monomial(1.0, 0.3);
        let g = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, 1.0, Side::Right, -0.4)]);
        let v = inner(&f, &g, 0.0, 1.0, CellRule::default()).unwrap();
        let exact = beta_fn(1.3, 0.6).unwrap();
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn interior_anchors_and_nearby_singularity() {
        // (x-0.5)_+^0.5 · (x - 0.4999)_+^{0.5} over [0, 1]
        let f = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, 0.5, Side::Left, 0.5)]);
        let g = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, 0.4999, Side::Left, 0.5)]);
        let v = inner(&f, &g, 0.0, 1.0, CellRule::default()).unwrap();
        let h = |x: f64| (x - 0.5).max(0.0).sqrt() * (x - 0.4999).max(0.0).sqrt();
        let reference = crate::quadrature::integrate_graded(&h, 0.5, 1.0, 32, 40);
        assert!((v - reference).abs() < 1e-12, "{v} vs {reference}");
    }

    #[test]
    fn weight_breaks_are_respected() {
        let step = |x: f64| if x < 0.3 { 2.0 } else { 5.0 };
        let w = Weight { func: &step, breaks: &[0.3] };
        let f = PowerTermSum::monomial(1.0, 1.0);
        let v = integrate_product(&[&f], &w, 0.0, 1.0, CellRule::default()).unwrap();
        let exact = 2.0 * 0.09 / 2.0 + 5.0 * (1.0 - 0.09) / 2.0;
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn closed_form_moments() {
        let a = 0.1;
        let q = 0.7 + 1e-9;
        let v = power_integral_left(a, 0.4, 0.7, q);
        let approx = (q - 0.7) * (0.6f64 + 0.5e-9).powf(0.4);
        assert!(((v - approx) / approx).abs() < 1e-8);
        let r = power_integral_right(0.9, 0.3, 0.1, 0.5);
        let exact = (0.8f64.powf(1.3) - 0.4f64.powf(1.3)) / 1.3;
        assert!((r - exact).abs() < 1e-15);
    }
}
