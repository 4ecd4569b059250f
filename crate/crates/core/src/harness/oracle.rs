use serde::{Deserialize, Serialize};

use crate::classical::DiffusivityField;
use crate::error::{check_closed_unit, check_open_unit, Error, Result};
use crate::fracops::terms::{AsTerms, PowerTermSum};
use crate::fracops::{has_zero_trace, oracle_left_piecewise, oracle_right_piecewise};
use crate::quadrature::integrate_graded;

/// Which bilinear form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    B,
    A,
}

const INNER_NODES: usize = 64;
const OUTER_NODES: usize = 16;
const LEVELS: usize = 14;
const AGREEMENT: f64 = 1e-7;

fn evaluate(dw: &PowerTermSum, dv: &PowerTermSum, k: &DiffusivityField, beta: f64, theta: f64, inner: usize, outer: usize, levels: usize) -> Result<f64> {
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    cuts.extend(dw.anchors());
    cuts.extend(dv.anchors());
    cuts.extend(k.breaks());
    cuts.retain(|&c| (0.0..=1.0).contains(&c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let jumps: Vec<f64> = dw.anchors().into_iter().filter(|&a| a > 0.0 && a < 1.0).collect();
    let f = |s: f64| dw.eval(s);
    let failure = std::cell::Cell::new(false);
    let integrand = |x: f64| {
        let mut profile = 0.0;
        if theta > 0.0 {
            match oracle_left_piecewise(&f, &jumps, beta, x, inner) {
                Ok(v) => profile += theta * v,
                Err(_) => failure.set(true),
            }
        }
        if theta < 1.0 {
            match oracle_right_piecewise(&f, &jumps, beta, x, inner) {
                Ok(v) => profile += (1.0 - theta) * v,
                Err(_) => failure.set(true),
            }
        }
        k.eval(x) * profile * dv.eval(x)
    };
    let total: f64 = cuts.windows(2).map(|c| integrate_graded(&integrand, c[0], c[1], outer, levels)).sum();
    if failure.get() || !total.is_finite() {
        return Err(Error::Oracle("inner fractional integral failed".into()));
    }
    Ok(total)
}

/// B(w, v) or A(w, v) by nested brute-force quadrature: each inner
/// fractional integral by its own singular rule, the outer integral by
/// Gauss–Legendre graded toward every breakpoint. Two resolutions must
/// agree or an oracle error is returned.
pub fn oracle_bilinear(w: &impl AsTerms, v: &impl AsTerms, k: &DiffusivityField, beta: f64, theta: f64, form: Form) -> Result<f64> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    if form == Form::A && beta >= 0.5 {
        return Err(Error::Parameter(format!("form A requires β < 1/2, got {beta}")));
    }
    let (wt, vt) = (w.to_terms(), v.to_terms());
    if !has_zero_trace(&wt) || !has_zero_trace(&vt) {
        return Err(Error::Parameter("w and v must vanish at both endpoints".into()));
    }
    let dw = wt.derivative()?;
    let dv = vt.derivative()?;
    if dw.is_empty() || dv.is_empty() {
        return Ok(0.0);
    }
    let fine = evaluate(&dw, &dv, k, beta, theta, INNER_NODES, OUTER_NODES, LEVELS)?;
    let coarse = evaluate(&dw, &dv, k, beta, theta, INNER_NODES / 2, OUTER_NODES / 2 + 4, LEVELS - 3)?;
    if (fine - coarse).abs() > AGREEMENT * fine.abs().max(1e-8) {
        return Err(Error::Oracle(format!("resolutions disagree: {fine} vs {coarse}")));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::{bilinear_b, find_coercivity_violation};
    use crate::petrov::bilinear_a;

    #[test]
    fn matches_closed_form_b() {
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let k = DiffusivityField::constant(1.0).unwrap();
        let b = bilinear_b(&w, &w, &k, 0.5, 0.5).unwrap();
        let o = oracle_bilinear(&w, &w, &k, 0.5, 0.5, Form::B).unwrap();
        assert!(b > 0.0);
        assert!((b - o).abs() < 1e-6 * b.abs(), "{b} vs {o}");
    }

    #[test]
    fn matches_closed_form_a() {
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let v = PowerTermSum::polynomial(&[0.0, 0.0, 1.0, -1.0]);
        let k = DiffusivityField::polynomial(vec![1.0, 0.5]).unwrap();
        let a = bilinear_a(&w, &v, &k, 0.3, 1.0).unwrap();
        let o = oracle_bilinear(&w, &v, &k, 0.3, 1.0, Form::A).unwrap();
        assert!((a - o).abs() < 1e-6 * a.abs(), "{a} vs {o}");
        let zero = PowerTermSum::zero();
        assert_eq!(oracle_bilinear(&zero, &v, &k, 0.3, 1.0, Form::A).unwrap(), 0.0);
    }

    #[test]
    fn confirms_certificate() {
        let c = find_coercivity_violation(0.5, 0.25).unwrap();
        let o = oracle_bilinear(&c.w, &c.w, &c.k, 0.5, 0.25, Form::B).unwrap();
        assert!(o < 0.0);
        assert!((o - c.value).abs() < 1e-6 * c.value.abs(), "{} vs {o}", c.value);
    }
}
