//! Sums of truncated powers c·(x-a)_+^e and c·(a-x)_+^e.
//!
//! The image of piecewise polynomials under Riemann–Liouville integrals
//! stays inside this family, so every operator in the crate that can be
//! evaluated in closed form goes through [`PowerTermSum`].

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::special::gamma_unchecked;

/// Tolerance on exponent equality used when merging terms.
pub const EXPONENT_TOL: f64 = 1e-12;
const ANCHOR_TOL: f64 = 1e-14;

/// Which side of the anchor a truncated power lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// (x - a)_+^e, supported on x ≥ a.
    Left,
    /// (a - x)_+^e, supported on x ≤ a.
    Right,
}

/// One truncated power term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub anchor: f64,
    pub side: Side,
    pub exponent: f64,
}

pub(crate) fn is_integer(e: f64) -> bool {
    (e - e.round()).abs() < EXPONENT_TOL
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl PowerTerm {
    pub fn new(coeff: f64, anchor: f64, side: Side, exponent: f64) -> Self {
        Self { coeff, anchor, side, exponent }
    }

    /// Distance from the anchor into the support (negative outside).
    #[inline]
    pub fn reach(&self, x: f64) -> f64 {
        match self.side {
            Side::Left => x - self.anchor,
            Side::Right => self.anchor - x,
        }
    }

    /// Value of the power without the coefficient. Steps (exponent 0) are
    /// one on the closed support.
    #[inline]
    pub fn basis(&self, x: f64) -> f64 {
        let d = self.reach(x);
        if d < 0.0 {
            return 0.0;
        }
        if self.exponent == 0.0 {
            return 1.0;
        }
        if d == 0.0 {
            return if self.exponent > 0.0 { 0.0 } else { f64::INFINITY };
        }
        if is_integer(self.exponent) {
            d.powi(self.exponent.round() as i32)
        } else {
            d.powf(self.exponent)
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let b = self.basis(x);
        if b == 0.0 {
            0.0
        } else {
            self.coeff * b
        }
    }

    /// True when the exponent is a nonnegative integer, so the term is a
    /// polynomial on its support.
    pub fn is_polynomial(&self) -> bool {
        self.exponent >= -EXPONENT_TOL && is_integer(self.exponent)
    }

    /// True when the value or first derivative is unbounded at the anchor.
    pub fn singular_at_anchor(&self) -> bool {
        self.exponent < 1.0 && !is_integer(self.exponent)
    }

    /// True when the term vanishes identically on the open unit interval.
    pub fn vanishes_on_unit(&self) -> bool {
        match self.side {
            Side::Left => self.anchor >= 1.0 - ANCHOR_TOL,
            Side::Right => self.anchor <= ANCHOR_TOL,
        }
    }
}

/// Finite sum of truncated power terms on (0, 1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerTermSum {
    terms: Vec<PowerTerm>,
}

impl PowerTermSum {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn from_terms(terms: Vec<PowerTerm>) -> Self {
        let mut s = Self { terms };
        s.simplify();
        s
    }

    /// Constant c on [0, ∞).
    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![PowerTerm::new(c, 0.0, Side::Left, 0.0)])
    }

    /// c·x^p.
    pub fn monomial(c: f64, p: f64) -> Self {
        Self::from_terms(vec![PowerTerm::new(c, 0.0, Side::Left, p)])
    }

    /// Σ coeffs[k]·x^k.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| PowerTerm::new(c, 0.0, Side::Left, k as f64))
                .collect(),
        )
    }

    /// Σ coeffs[k]·(1-x)^k, anchored at the right end.
    pub fn polynomial_from_right(coeffs: &[f64]) -> Self {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| PowerTerm::new(c, 1.0, Side::Right, k as f64))
                .collect(),
        )
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PowerTerm) {
        self.terms.push(term);
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// True if any term has a non-integer exponent below one.
    pub fn has_singular_terms(&self) -> bool {
        self.terms.iter().any(|t| t.singular_at_anchor())
    }

    /// True if every exponent is a nonnegative integer.
    pub fn is_piecewise_polynomial(&self) -> bool {
        self.terms.iter().all(|t| t.is_polynomial())
    }

    /// Sorted, deduplicated anchors.
    pub fn anchors(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.terms.iter().map(|t| t.anchor).collect();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() <= ANCHOR_TOL);
        a
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    /// Merge terms with equal side, anchor and exponent; drop zero terms.
    pub fn simplify(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        self.terms.retain(|t| t.coeff != 0.0);
        self.terms.sort_by(|p, q| {
            p.side
                .cmp(&q.side)
                .then(p.anchor.total_cmp(&q.anchor))
                .then(p.exponent.total_cmp(&q.exponent))
        });
        let mut merged: Vec<PowerTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.side == t.side
                    && (last.anchor - t.anchor).abs() <= ANCHOR_TOL
                    && (last.exponent - t.exponent).abs() <= EXPONENT_TOL
                {
                    last.coeff += t.coeff;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.retain(|t| t.coeff != 0.0);
        self.terms = merged;
    }

    /// Drop coefficients that are negligible relative to the largest one.
    pub fn clean(&mut self, rel_tol: f64) {
        let cut = rel_tol * self.max_abs_coeff();
        self.terms.retain(|t| t.coeff.abs() > cut);
    }

    /// Drop terms vanishing identically on (0, 1).
    pub fn prune_unit(&mut self) {
        self.terms.retain(|t| !t.vanishes_on_unit());
    }

    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|t| PowerTerm { coeff: c * t.coeff, ..*t }).collect(),
        }
    }

    /// w(1 - x): swaps left and right anchoring.
    pub fn reflected(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| PowerTerm {
                    anchor: 1.0 - t.anchor,
                    side: match t.side {
                        Side::Left => Side::Right,
                        Side::Right => Side::Left,
                    },
                    ..*t
                })
                .collect(),
        )
    }

    /// First derivative on (0, 1).
    ///
    /// Steps anchored strictly inside the interval have a delta derivative and
    /// are rejected. Exponents in (0, 1) produce integrable negative powers.
    pub fn derivative(&self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let inside = t.anchor > ANCHOR_TOL && t.anchor < 1.0 - ANCHOR_TOL;
            if t.exponent.abs() <= EXPONENT_TOL {
                if inside {
                    return Err(Error::UnsupportedRepresentation(format!(
                        "jump at x = {} has no pointwise derivative",
                        t.anchor
                    )));
                }
                continue;
            }
            if t.exponent < 0.0 && (0.0..=1.0).contains(&t.anchor) {
                return Err(Error::UnsupportedRepresentation(format!(
                    "derivative of exponent {} at x = {} is not integrable",
                    t.exponent, t.anchor
                )));
            }
            let sign = match t.side {
                Side::Left => 1.0,
                Side::Right => -1.0,
            };
            let e = if is_integer(t.exponent) { t.exponent.round() } else { t.exponent };
            out.push(PowerTerm::new(sign * e * t.coeff, t.anchor, t.side, e - 1.0));
        }
        Ok(Self::from_terms(out))
    }

    /// k-th derivative.
    pub fn derivative_n(&self, k: usize) -> Result<Self> {
        let mut d = self.clone();
        for _ in 0..k {
            d = d.derivative()?;
        }
        Ok(d)
    }

    /// Antiderivative vanishing at x = 0.
    pub fn antiderivative(&self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.terms.len() + 1);
        for t in &self.terms {
            if t.exponent <= -1.0 + EXPONENT_TOL {
                return Err(Error::UnsupportedRepresentation(format!(
                    "exponent {} is not integrable",
                    t.exponent
                )));
            }
            let e1 = t.exponent + 1.0;
            match t.side {
                Side::Left => {
                    if t.anchor < -ANCHOR_TOL {
                        return Err(Error::UnsupportedRepresentation(
                            "left term anchored below zero".into(),
                        ));
                    }
                    out.push(PowerTerm::new(t.coeff / e1, t.anchor, Side::Left, e1));
                }
                Side::Right => {
                    if t.anchor <= ANCHOR_TOL {
                        continue;
                    }
                    out.push(PowerTerm::new(t.coeff * t.anchor.powf(e1) / e1, 0.0, Side::Left, 0.0));
                    out.push(PowerTerm::new(-t.coeff / e1, t.anchor, Side::Right, e1));
                }
            }
        }
        Ok(Self::from_terms(out))
    }

    /// Product with the polynomial Σ coeffs[j]·x^j, re-expanded about each anchor.
    pub fn multiply_polynomial(&self, coeffs: &[f64]) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            for (j, &q) in coeffs.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                for i in 0..=j as u32 {
                    let c = binomial(j as u32, i) * t.anchor.powi((j as u32 - i) as i32);
                    let c = match t.side {
                        Side::Left => c,
                        Side::Right => c * if i % 2 == 0 { 1.0 } else { -1.0 },
                    };
                    if c == 0.0 {
                        continue;
                    }
                    out.push(PowerTerm::new(t.coeff * q * c, t.anchor, t.side, t.exponent + i as f64));
                }
            }
        }
        Self::from_terms(out)
    }

    /// Rewrite every right term as left terms, valid on [0, 1].
    /// Needs integer exponents on the converted terms.
    pub fn to_left_form(&self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match t.side {
                Side::Left => out.push(*t),
                Side::Right => {
                    if t.anchor <= ANCHOR_TOL {
                        continue;
                    }
                    if !t.is_polynomial() {
                        return Err(Error::UnsupportedRepresentation(format!(
                            "right term (a - x)^{} at a = {} has no left-anchored closed form",
                            t.exponent, t.anchor
                        )));
                    }
                    let p = t.exponent.round() as u32;
                    // (a-x)^p expanded about 0
                    for j in 0..=p {
                        let c = binomial(p, j) * t.anchor.powi((p - j) as i32) * if j % 2 == 0 { 1.0 } else { -1.0 };
                        out.push(PowerTerm::new(t.coeff * c, 0.0, Side::Left, j as f64));
                    }
                    if t.anchor < 1.0 - ANCHOR_TOL {
                        let s = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
                        out.push(PowerTerm::new(-s * t.coeff, t.anchor, Side::Left, p as f64));
                    }
                }
            }
        }
        let mut s = Self::from_terms(out);
        s.clean(1e-15);
        Ok(s)
    }

    /// Rewrite every left term as right terms, valid on [0, 1].
    pub fn to_right_form(&self) -> Result<Self> {
        Ok(self.reflected().to_left_form()?.reflected())
    }

    /// Left Riemann–Liouville integral of order sigma > 0 from 0, with the
    /// Gamma function supplied by the caller.
    pub fn left_integral_with(&self, sigma: f64, gamma: &dyn Fn(f64) -> f64) -> Result<Self> {
        let left = self.to_left_form()?;
        let mut out = Vec::with_capacity(left.terms.len());
        for t in &left.terms {
            if t.anchor < -ANCHOR_TOL {
                return Err(Error::UnsupportedRepresentation("left term anchored below zero".into()));
            }
            if t.exponent <= -1.0 + EXPONENT_TOL {
                return Err(Error::UnsupportedRepresentation(format!(
                    "exponent {} is not integrable",
                    t.exponent
                )));
            }
            let factor = gamma(t.exponent + 1.0) / gamma(t.exponent + 1.0 + sigma);
            out.push(PowerTerm::new(t.coeff * factor, t.anchor, Side::Left, t.exponent + sigma));
        }
        Ok(Self::from_terms(out))
    }

    pub fn left_integral(&self, sigma: f64) -> Result<Self> {
        self.left_integral_with(sigma, &gamma_unchecked)
    }

    /// Right Riemann–Liouville integral of order sigma > 0 toward 1.
    pub fn right_integral_with(&self, sigma: f64, gamma: &dyn Fn(f64) -> f64) -> Result<Self> {
        Ok(self.reflected().left_integral_with(sigma, gamma)?.reflected())
    }

    pub fn right_integral(&self, sigma: f64) -> Result<Self> {
        self.right_integral_with(sigma, &gamma_unchecked)
    }

    /// Product with the indicator of x ≤ b, for left-anchored polynomial
    /// terms. The result is valid on the whole real half-line x ≥ 0, which is
    /// what the zero extension past b needs.
    pub fn truncated_at(&self, b: f64) -> Result<Self> {
        let mut out = self.terms.clone();
        for t in &self.terms {
            if t.side == Side::Right {
                if t.anchor > b + ANCHOR_TOL {
                    return Err(Error::UnsupportedRepresentation(
                        "right term extends beyond the truncation point".into(),
                    ));
                }
                continue;
            }
            if t.anchor >= b - ANCHOR_TOL {
                out.retain(|u| u != t);
                continue;
            }
            if !t.is_polynomial() {
                return Err(Error::UnsupportedRepresentation(format!(
                    "cannot truncate non-polynomial term with exponent {}",
                    t.exponent
                )));
            }
            let p = t.exponent.round() as u32;
            for j in 0..=p {
                let c = binomial(p, j) * (b - t.anchor).powi((p - j) as i32);
                out.push(PowerTerm::new(-t.coeff * c, b, Side::Left, j as f64));
            }
        }
        let mut s = Self::from_terms(out);
        s.clean(1e-15);
        Ok(s)
    }
}

impl Add for &PowerTermSum {
    type Output = PowerTermSum;
    fn add(self, rhs: &PowerTermSum) -> PowerTermSum {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        PowerTermSum::from_terms(terms)
    }
}

impl Add for PowerTermSum {
    type Output = PowerTermSum;
    fn add(self, rhs: PowerTermSum) -> PowerTermSum {
        &self + &rhs
    }
}

impl Sub for &PowerTermSum {
    type Output = PowerTermSum;
    fn sub(self, rhs: &PowerTermSum) -> PowerTermSum {
        self + &rhs.scaled(-1.0)
    }
}

impl Sub for PowerTermSum {
    type Output = PowerTermSum;
    fn sub(self, rhs: PowerTermSum) -> PowerTermSum {
        &self - &rhs
    }
}

impl Neg for PowerTermSum {
    type Output = PowerTermSum;
    fn neg(self) -> PowerTermSum {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &PowerTermSum {
    type Output = PowerTermSum;
    fn mul(self, c: f64) -> PowerTermSum {
        self.scaled(c)
    }
}

impl Mul<f64> for PowerTermSum {
    type Output = PowerTermSum;
    fn mul(self, c: f64) -> PowerTermSum {
        self.scaled(c)
    }
}

/// Anything with an exact truncated-power representation on [0, 1].
pub trait AsTerms {
    fn to_terms(&self) -> PowerTermSum;
}

impl AsTerms for PowerTermSum {
    fn to_terms(&self) -> PowerTermSum {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn evaluation_of_steps_and_powers() {
        let s = PowerTermSum::from_terms(vec![
            PowerTerm::new(2.0, 0.5, Side::Left, 0.0),
            PowerTerm::new(1.0, 0.5, Side::Right, 2.0),
        ]);
        assert_eq!(s.eval(0.25), 0.0625);
        assert_eq!(s.eval(0.75), 2.0);
    }

    #[test]
    fn side_conversion_preserves_values() {
        let s = PowerTermSum::from_terms(vec![
            PowerTerm::new(1.5, 0.3, Side::Left, 2.0),
            PowerTerm::new(-0.7, 0.6, Side::Right, 1.0),
            PowerTerm::new(0.4, 0.2, Side::Left, 0.0),
        ]);
        let l = s.to_left_form().unwrap();
        let r = s.to_right_form().unwrap();
        for k in 1..50 {
            let x = k as f64 / 50.0 + 0.0031;
            if x >= 1.0 {
                continue;
            }
            assert!(close(l.eval(x), s.eval(x), 1e-13), "left form at {x}");
            assert!(close(r.eval(x), s.eval(x), 1e-13), "right form at {x}");
        }
        assert!(l.terms().iter().all(|t| t.side == Side::Left));
        assert!(r.terms().iter().all(|t| t.side == Side::Right));
    }

    #[test]
    fn polynomial_product_matches_pointwise() {
        let s = PowerTermSum::from_terms(vec![
            PowerTerm::new(1.0, 0.25, Side::Left, 0.5),
            PowerTerm::new(2.0, 0.75, Side::Right, 1.3),
        ]);
        let q = [1.0, -2.0, 0.5];
        let p = s.multiply_polynomial(&q);
        for k in 0..40 {
            let x = (k as f64 + 0.5) / 40.0;
            let expect = s.eval(x) * (1.0 - 2.0 * x + 0.5 * x * x);
            assert!(close(p.eval(x), expect, 1e-13));
        }
    }

    #[test]
    fn derivative_and_antiderivative_round_trip() {
        let s = PowerTermSum::from_terms(vec![
            PowerTerm::new(1.0, 0.0, Side::Left, 1.5),
            PowerTerm::new(-3.0, 0.4, Side::Left, 2.0),
            PowerTerm::new(0.5, 0.8, Side::Right, 1.25),
        ]);
        let d = s.derivative().unwrap();
        let back = d.antiderivative().unwrap();
        let offset = s.eval(0.0);
        for k in 1..30 {
            let x = k as f64 / 30.0;
            assert!(close(back.eval(x) + offset, s.eval(x), 1e-12), "x = {x}");
        }
    }

    #[test]
    fn interior_jump_has_no_derivative() {
        let s = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, 0.5, Side::Left, 0.0)]);
        assert!(matches!(s.derivative(), Err(Error::UnsupportedRepresentation(_))));
        // a step at the boundary is constant inside
        assert!(PowerTermSum::constant(3.0).derivative().unwrap().is_empty());
    }

    #[test]
    fn truncation_zeroes_the_tail() {
        let s = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let t = s.truncated_at(1.0).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!(close(t.eval(x), s.eval(x), 1e-14));
        }
        for x in [1.2, 2.0, 7.5] {
            assert!(t.eval(x).abs() < 1e-12, "tail at {x} = {}", t.eval(x));
        }
    }

    #[test]
    fn merge_respects_exponent_tolerance() {
        let s = PowerTermSum::from_terms(vec![
            PowerTerm::new(1.0, 0.0, Side::Left, 0.5),
            PowerTerm::new(1.0, 0.0, Side::Left, 0.5 + 1e-13),
            PowerTerm::new(1.0, 0.0, Side::Left, 0.5 + 1e-9),
        ]);
        assert_eq!(s.len(), 2);
    }
}
