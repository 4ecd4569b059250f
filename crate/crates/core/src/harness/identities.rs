use serde::Serialize;

use crate::fracops::special::gamma_unchecked;
use crate::fracops::terms::{AsTerms, PowerTerm, PowerTermSum, Side};
use crate::fracops::{caputo_left, caputo_right, oracle_left_piecewise};
use crate::galerkin::zigzag_w;
use crate::integrate::{inner, CellRule};
use crate::spaces::{j_seminorm, l2_norm, SeminormSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Defect compared with a tolerance.
    Equality,
    /// Ratio that must be finite and positive.
    Sanity,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub params: String,
    pub kind: CheckKind,
    pub defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn equality(&mut self, identity: &str, params: String, defect: f64, tolerance: f64) {
        let passed = defect.is_finite() && defect <= tolerance;
        self.checks.push(IdentityCheck { identity: identity.into(), params, kind: CheckKind::Equality, defect, tolerance, passed });
    }

    fn sanity(&mut self, identity: &str, params: String, ratio: f64) {
        let passed = ratio.is_finite() && ratio > 0.0;
        self.checks.push(IdentityCheck { identity: identity.into(), params, kind: CheckKind::Sanity, defect: ratio, tolerance: 0.0, passed });
    }

    fn error(&mut self, identity: &str, params: String, e: crate::Error) {
        self.checks.push(IdentityCheck {
            identity: identity.into(),
            params: format!("{params}; {e}"),
            kind: CheckKind::Equality,
            defect: f64::NAN,
            tolerance: 0.0,
            passed: false,
        });
    }
}

/// Γ(x)(1 + 10⁻³x): a deliberately wrong Gamma function for negative controls.
pub fn faulty_gamma(x: f64) -> f64 {
    gamma_unchecked(x) * (1.0 + 1e-3 * x)
}

/// Zero-trace test functions: polynomial bubbles and a piecewise-linear zigzag.
pub fn default_battery() -> Vec<PowerTermSum> {
    vec![
        PowerTermSum::polynomial(&[0.0, 1.0, -1.0]),
        PowerTermSum::polynomial(&[0.0, 0.0, 1.0, -1.0]),
        PowerTermSum::polynomial(&[0.0, 1.0, -2.0, 1.0]),
        PowerTermSum::polynomial(&[0.0, 0.0, 1.0, -2.0, 1.0]),
        PowerTermSum::polynomial(&[0.0, 0.5, -1.5, 1.0]),
        zigzag_w().to_terms(),
    ]
}

const POWER_TOL: f64 = 1e-10;
const SEMIGROUP_TOL: f64 = 1e-8;
const ADJOINT_TOL: f64 = 1e-8;
const COMMUTATION_TOL: f64 = 1e-10;
const COS_TOL: f64 = 1e-3;

fn samples() -> impl Iterator<Item = f64> {
    (1..=10).map(|i| i as f64 / 10.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn identity_suite(betas: &[f64], mus: &[f64], battery: &[PowerTermSum]) -> IdentityReport {
    identity_suite_with_gamma(betas, mus, battery, &gamma_unchecked)
}

/// Runs every identity with `gamma_fn` inside the closed-form operators;
/// oracles always use the true Gamma function.
pub fn identity_suite_with_gamma(
    betas: &[f64],
    mus: &[f64],
    battery: &[PowerTermSum],
    gamma_fn: &dyn Fn(f64) -> f64,
) -> IdentityReport {
    let mut report = IdentityReport::default();
    power_rule(&mut report, betas, gamma_fn);
    semigroup(&mut report, betas, mus, battery, gamma_fn);
    adjoint(&mut report, mus, battery, gamma_fn);
    commutation(&mut report, betas, battery, gamma_fn);
    cosine(&mut report, mus, battery);
    sanity(&mut report, mus, battery);
    report
}

fn power_rule(report: &mut IdentityReport, betas: &[f64], gamma_fn: &dyn Fn(f64) -> f64) {
    for &sigma in betas {
        for (anchor, p) in [(0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (0.0, 3.0), (0.3, 2.0)] {
            let params = format!("sigma={sigma}, (x-{anchor})_+^{p}");
            let t = PowerTermSum::from_terms(vec![PowerTerm::new(1.0, anchor, Side::Left, p)]);
            let closed = match t.left_integral_with(sigma, gamma_fn) {
                Ok(c) => c,
                Err(e) => {
                    report.error("power_rule", params, e);
                    continue;
                }
            };
            let mut worst = 0.0f64;
            for x in samples() {
                let f = |s: f64| if s >= anchor { (s - anchor).powf(p) } else { 0.0 };
                match oracle_left_piecewise(&f, &[anchor], sigma, x, 64) {
                    Ok(o) => worst = worst.max(rel(closed.eval(x), o)),
                    Err(e) => {
                        worst = f64::NAN;
                        report.error("power_rule", params.clone(), e);
                        break;
                    }
                }
            }
            if !worst.is_nan() {
                report.equality("power_rule", params, worst, POWER_TOL);
            }
        }
    }
}

fn semigroup(report: &mut IdentityReport, betas: &[f64], mus: &[f64], battery: &[PowerTermSum], g: &dyn Fn(f64) -> f64) {
    for &a in mus {
        for &b in betas {
            for (wi, w) in battery.iter().enumerate() {
                let params = format!("mu={a}, sigma={b}, w#{wi}");
                let run = || -> crate::Result<f64> {
                    let lhs = w.left_integral_with(b, g)?.left_integral_with(a, g)?;
                    let rhs = w.left_integral_with(a + b, g)?;
                    let rl = w.right_integral_with(b, g)?.right_integral_with(a, g)?;
                    let rr = w.right_integral_with(a + b, g)?;
                    Ok(samples()
                        .chain([0.05])
                        .map(|x| rel(lhs.eval(x), rhs.eval(x)).max(rel(rl.eval(x), rr.eval(x))))
                        .fold(0.0, f64::max))
                };
                match run() {
                    Ok(d) => report.equality("semigroup", params, d, SEMIGROUP_TOL),
                    Err(e) => report.error("semigroup", params, e),
                }
            }
        }
    }
}

fn adjoint(report: &mut IdentityReport, mus: &[f64], battery: &[PowerTermSum], g: &dyn Fn(f64) -> f64) {
    let mut partners = battery.to_vec();
    partners.push(PowerTermSum::polynomial(&[0.0, 1.0]));
    partners.push(PowerTermSum::polynomial(&[1.0, 0.0, 2.0]));
    for &mu in mus {
        for (wi, w) in battery.iter().enumerate() {
            for (vi, v) in partners.iter().enumerate() {
                let params = format!("mu={mu}, w#{wi}, v#{vi}");
                let run = || -> crate::Result<f64> {
                    let a = inner(&w.left_integral_with(mu, g)?, v, 0.0, 1.0, CellRule::default())?;
                    let b = inner(w, &v.right_integral_with(mu, g)?, 0.0, 1.0, CellRule::default())?;
                    Ok((a - b).abs() / a.abs().max(b.abs()).max(1.0))
                };
                match run() {
                    Ok(d) => report.equality("adjoint", params, d, ADJOINT_TOL),
                    Err(e) => report.error("adjoint", params, e),
                }
            }
        }
    }
}

fn commutation(report: &mut IdentityReport, betas: &[f64], battery: &[PowerTermSum], g: &dyn Fn(f64) -> f64) {
    let mut funcs = battery.to_vec();
    funcs.push(PowerTermSum::polynomial(&[1.0, 2.0, -0.5]));
    funcs.push(PowerTermSum::polynomial(&[-0.7, 0.0, 0.0, 1.0]));
    for &sigma in betas {
        for (wi, w) in funcs.iter().enumerate() {
            let params = format!("sigma={sigma}, w#{wi}");
            let run = || -> crate::Result<f64> {
                let dw = w.derivative()?;
                let (w0, w1) = (w.eval(0.0), w.eval(1.0));
                let dl = w.left_integral_with(sigma, g)?.derivative()?;
                let ld = dw.left_integral_with(sigma, g)?;
                let dr = w.right_integral_with(sigma, g)?.derivative()?;
                let rd = dw.right_integral_with(sigma, g)?;
                let gs = g(sigma);
                Ok(samples()
                    .map(|x| 0.95 * x)
                    .map(|x| {
                        let left = ld.eval(x) + w0 * x.powf(sigma - 1.0) / gs;
                        let right = rd.eval(x) - w1 * (1.0 - x).powf(sigma - 1.0) / gs;
                        rel(dl.eval(x), left).max(rel(dr.eval(x), right))
                    })
                    .fold(0.0, f64::max))
            };
            match run() {
                Ok(d) => report.equality("commutation", params, d, COMMUTATION_TOL),
                Err(e) => report.error("commutation", params, e),
            }
        }
    }
}

fn cosine(report: &mut IdentityReport, mus: &[f64], battery: &[PowerTermSum]) {
    for &mu in mus {
        for (wi, w) in battery.iter().enumerate() {
            let params = format!("mu={mu}, w#{wi}");
            let run = || -> crate::Result<f64> {
                let l = caputo_left(w, mu)?;
                let r = caputo_right(w, mu)?;
                let cross = inner(&l, &r, 0.0, 1.0, CellRule::default().times(2))?;
                let norm = j_seminorm(w, mu, SeminormSide::Left)?;
                let n2 = norm * norm;
                Ok((cross - (std::f64::consts::PI * mu).cos() * n2).abs() / n2)
            };
            match run() {
                Ok(d) => report.equality("cosine", params, d, COS_TOL),
                Err(e) => report.error("cosine", params, e),
            }
        }
    }
}

fn sanity(report: &mut IdentityReport, mus: &[f64], battery: &[PowerTermSum]) {
    for &mu in mus {
        for (wi, w) in battery.iter().enumerate() {
            let params = format!("mu={mu}, w#{wi}");
            let run = || -> crate::Result<(f64, f64, f64)> {
                let l = j_seminorm(w, mu, SeminormSide::Left)?;
                let r = j_seminorm(w, mu, SeminormSide::Right)?;
                let s = j_seminorm(w, mu, SeminormSide::TwoSided { theta: 0.5 })?;
                Ok((l2_norm(w)? / l, l / r, s / l))
            };
            match run() {
                Ok((poincare, equiv, sym)) => {
                    report.sanity("poincare_ratio", params.clone(), poincare);
                    report.sanity("left_right_equivalence", params.clone(), equiv);
                    report.sanity("two_sided_equivalence", params, sym);
                }
                Err(e) => report.error("norm_sanity", params, e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let r = identity_suite(&[0.2, 0.5, 0.8], &[0.25, 0.5, 0.75], &default_battery());
        let bad: Vec<_> = r.failures().collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn faulty_gamma_fails() {
        let r = identity_suite_with_gamma(&[0.3], &[0.4], &default_battery(), &faulty_gamma);
        assert!(!r.all_passed());
        assert!(r.failures().any(|c| c.identity == "power_rule"));
    }

    #[test]
    fn cosine_example() {
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let mut r = IdentityReport::default();
        cosine(&mut r, &[0.75], &[w]);
        assert!(r.all_passed(), "{:?}", r.checks);
    }

    #[test]
    fn empty_report_is_not_a_pass() {
        assert!(!IdentityReport::default().all_passed());
    }
}
