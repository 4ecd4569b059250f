//! Piecewise polynomials on a partition of [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::terms::{AsTerms, PowerTerm, PowerTermSum, Side};

/// Piecewise polynomial. Piece i lives on [b_i, b_{i+1}] with coefficients
/// in powers of (x - b_i).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breakpoints: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    continuous: bool,
}

fn horner(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * y + a)
}

/// Coefficients of p(y + shift) given those of p(y).
fn taylor_shift(c: &[f64], shift: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            out[j] += shift * out[j + 1];
        }
    }
    out
}

impl PiecewisePoly {
    /// Builds the function and validates the partition. With
    /// `require_continuity` the pieces must agree at interior breakpoints
    /// to 1e-12.
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<Vec<f64>>, require_continuity: bool) -> Result<Self> {
        if breakpoints.len() < 2 || coeffs.len() != breakpoints.len() - 1 {
            return Err(Error::Parameter(format!(
                "{} breakpoints need {} coefficient vectors, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                coeffs.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Parameter("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("breakpoints must be strictly increasing".into()));
        }
        let pp = Self { breakpoints, coeffs, continuous: false };
        let continuous = pp.jump_sizes().iter().all(|j| j.abs() <= 1e-12);
        if require_continuity && !continuous {
            return Err(Error::Parameter("pieces disagree at an interior breakpoint".into()));
        }
        Ok(Self { continuous, ..pp })
    }

    /// Build from coefficients in powers of x rather than local offsets.
    pub fn from_global(breakpoints: Vec<f64>, global: Vec<Vec<f64>>, require_continuity: bool) -> Result<Self> {
        if global.len() + 1 != breakpoints.len() {
            return Err(Error::Parameter("coefficient count does not match partition".into()));
        }
        let local = global
            .iter()
            .zip(&breakpoints)
            .map(|(c, &b)| taylor_shift(c, b))
            .collect();
        Self::new(breakpoints, local, require_continuity)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().map(|c| c.len().saturating_sub(1)).max().unwrap_or(0)
    }

    fn piece_index(&self, x: f64) -> usize {
        let n = self.coeffs.len();
        match self.breakpoints[1..n].binary_search_by(|b| b.total_cmp(&x)) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.piece_index(x.clamp(0.0, 1.0));
        horner(&self.coeffs[i], x - self.breakpoints[i])
    }

    /// Value jumps p_i(b_i) - p_{i-1}(b_i) at the interior breakpoints.
    pub fn jump_sizes(&self) -> Vec<f64> {
        (1..self.coeffs.len())
            .map(|i| {
                let h = self.breakpoints[i] - self.breakpoints[i - 1];
                horner(&self.coeffs[i], 0.0) - horner(&self.coeffs[i - 1], h)
            })
            .collect()
    }

    pub fn derivative(&self) -> Self {
        let coeffs: Vec<Vec<f64>> = self
            .coeffs
            .iter()
            .map(|c| c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect())
            .collect();
        let mut d = Self { breakpoints: self.breakpoints.clone(), coeffs, continuous: false };
        d.continuous = d.jump_sizes().iter().all(|j| j.abs() <= 1e-12);
        d
    }
}

impl AsTerms for PiecewisePoly {
    fn to_terms(&self) -> PowerTermSum {
        let mut terms = Vec::new();
        for (k, &c) in self.coeffs[0].iter().enumerate() {
            terms.push(PowerTerm::new(c, 0.0, Side::Left, k as f64));
        }
        for i in 1..self.coeffs.len() {
            let h = self.breakpoints[i] - self.breakpoints[i - 1];
            let prev = taylor_shift(&self.coeffs[i - 1], h);
            let cur = &self.coeffs[i];
            let len = prev.len().max(cur.len());
            let scale = prev.iter().chain(cur.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..len {
                let d = cur.get(k).copied().unwrap_or(0.0) - prev.get(k).copied().unwrap_or(0.0);
                if d.abs() > 1e-15 * scale {
                    terms.push(PowerTerm::new(d, self.breakpoints[i], Side::Left, k as f64));
                }
            }
        }
        PowerTermSum::from_terms(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PiecewisePoly {
        PiecewisePoly::new(
            vec![0.0, 0.25, 0.75, 1.0],
            vec![vec![0.0, 4.0], vec![1.0, -4.0], vec![-1.0, 4.0]],
            true,
        )
        .unwrap()
    }

    #[test]
    fn evaluates_pieces() {
        let w = sample();
        assert_eq!(w.eval(0.25), 1.0);
        assert_eq!(w.eval(0.5), 0.0);
        assert_eq!(w.eval(0.75), -1.0);
        assert_eq!(w.eval(1.0), 0.0);
    }

    #[test]
    fn terms_agree_with_pieces() {
        let w = PiecewisePoly::from_global(
            vec![0.0, 0.3, 1.0],
            vec![vec![0.0, 1.0, 2.0], vec![0.27, -0.8, 0.5]],
            false,
        )
        .unwrap();
        let t = w.to_terms();
        for k in 0..=40 {
            let x = k as f64 / 40.0 + 1e-9;
            let x = x.min(1.0);
            assert!((t.eval(x) - w.eval(x)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn rejects_bad_partitions() {
        assert!(PiecewisePoly::new(vec![0.0, 0.5, 0.5, 1.0], vec![vec![0.0]; 3], false).is_err());
        assert!(PiecewisePoly::new(vec![0.1, 1.0], vec![vec![0.0]], false).is_err());
        assert!(PiecewisePoly::new(vec![0.0, 0.5, 1.0], vec![vec![0.0], vec![1.0]], true).is_err());
    }

    #[test]
    fn derivative_is_piecewise_constant() {
        let d = sample().derivative();
        assert_eq!(d.eval(0.1), 4.0);
        assert_eq!(d.eval(0.5), -4.0);
        assert_eq!(d.eval(0.9), 4.0);
        assert!(!d.is_continuous());
    }
}
