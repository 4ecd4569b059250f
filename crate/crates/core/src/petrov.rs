//! Petrov–Galerkin form A(u, v) = (K D I^β_θ u, Dv) for 0 < β < 1/2: the
//! discrete solve, the particular solutions u_l and u_r, the wellposedness
//! indicator Ξ, the solve through the integral-equation characterization
//! and the regularity report.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{fractional_stiffness, load_vector};
use crate::classical::{perturbation_residual, solve_wf, solve_wl_wr, BoundarySolution, DiffusivityField};
use crate::error::{check_closed_unit, check_open_unit, Error, Result};
use crate::fracops::special::gamma_unchecked;
use crate::fracops::terms::{AsTerms, PowerTerm, PowerTermSum, Side};
use crate::fracops::{has_zero_trace, left_frac_integral, rl_derivative_of_integral, right_frac_integral, two_sided_terms};
use crate::galerkin::{weighted_product, DiscreteSolution};
use crate::integrate::{integrate_product, CellRule, Weight};
use crate::linalg::{least_squares, relative_residual, Factorization};
use crate::quadrature::gauss_legendre;
use crate::spaces::{build_partition, j_seminorm, Boundary, FemSpace, GridFunction, Grading, Partition, SeminormSide};

/// Largest relative residual accepted from a square solve.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// |Ξ| above this is wellposed.
pub const XI_TOL: f64 = 1e-6;
/// |Ξ| at or below this is violated.
pub const XI_VIOLATION_TOL: f64 = 1e-8;

fn check_pg_params(beta: f64, theta: f64) -> Result<()> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    if beta >= 0.5 {
        return Err(Error::Parameter(format!(
            "the Petrov–Galerkin formulation requires β < 1/2, got β = {beta}"
        )));
    }
    Ok(())
}

/// A(w, v) for zero-trace w and v.
pub fn bilinear_a(w: &impl AsTerms, v: &impl AsTerms, k: &DiffusivityField, beta: f64, theta: f64) -> Result<f64> {
    check_pg_params(beta, theta)?;
    let wt = w.to_terms();
    let vt = v.to_terms();
    if !has_zero_trace(&wt) || !has_zero_trace(&vt) {
        return Err(Error::Parameter("w and v must vanish at both endpoints".into()));
    }
    if wt.is_empty() || vt.is_empty() {
        return Ok(0.0);
    }
    let flux = rl_derivative_of_integral(&wt, beta, theta)?;
    weighted_product(k, &flux, &vt.derivative()?, CellRule::default())
}

/// Assembled Petrov–Galerkin system. Rows follow the test hats, columns the
/// trial hats; with a finer test space the system is solved in the
/// least-squares sense.
#[derive(Debug, Clone)]
pub struct PgSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
    pub trial: Arc<FemSpace>,
    pub test: Arc<FemSpace>,
    pub beta: f64,
    pub theta: f64,
    pub k: DiffusivityField,
}

/// Test space on the partition refined `factor` times by halving.
pub fn refined_test_space(trial: &Arc<FemSpace>, factor: usize) -> Result<Arc<FemSpace>> {
    match factor {
        1 => Ok(trial.clone()),
        2 => Ok(Arc::new(FemSpace::hats(trial.partition().refined()))),
        _ => Err(Error::Parameter(format!("test refinement factor must be 1 or 2, got {factor}"))),
    }
}

pub fn assemble_pg(
    trial: Arc<FemSpace>,
    test: Arc<FemSpace>,
    k: &DiffusivityField,
    beta: f64,
    theta: f64,
    f: &PowerTermSum,
) -> Result<PgSystem> {
    check_pg_params(beta, theta)?;
    if trial.boundary() != Boundary::ZeroTrace || test.boundary() != Boundary::ZeroTrace {
        return Err(Error::Parameter("trial and test spaces must have zero trace".into()));
    }
    let matrix = fractional_stiffness(trial.partition(), test.partition(), k, beta, theta)?;
    let rhs = load_vector(&test, f)?;
    Ok(PgSystem { matrix, rhs, trial, test, beta, theta, k: k.clone() })
}

fn solver_hint(e: Error) -> Error {
    match e {
        Error::Solver { message, condition } => Error::Solver {
            message: format!("{message}; check the wellposedness indicator for this diffusivity"),
            condition,
        },
        other => other,
    }
}

pub fn pg_solve(system: &PgSystem) -> Result<DiscreteSolution> {
    let (x, condition) = if system.matrix.is_square() {
        let f = Factorization::new(&system.matrix).map_err(solver_hint)?;
        (f.solve(&system.rhs), f.condition())
    } else {
        least_squares(&system.matrix, &system.rhs).map_err(solver_hint)?
    };
    let residual = if system.matrix.is_square() {
        relative_residual(&system.matrix, &x, &system.rhs)
    } else {
        let at = system.matrix.transpose();
        let normal = &at * &system.matrix;
        let rhs = &at * nalgebra::DVector::from_column_slice(&system.rhs);
        relative_residual(&normal, &x, rhs.as_slice())
    };
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Solver {
            message: format!("relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"),
            condition,
        });
    }
    Ok(DiscreteSolution { u: GridFunction::new(system.trial.clone(), x)?, condition, relative_residual: residual })
}

/// (Dg, Dψ_i) for every interior hat when g is known at the nodes.
fn nodal_stiffness_rhs(p: &Partition, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let x = p.nodes();
    let v: Vec<f64> = x.iter().map(|&t| g(t)).collect();
    (1..x.len() - 1)
        .map(|t| (v[t] - v[t - 1]) / (x[t] - x[t - 1]) - (v[t + 1] - v[t]) / (x[t + 1] - x[t]))
        .collect()
}

/// u_l and u_r from the unit-coefficient systems (D I^β_θ u, Dv) = (Dw, Dv)
/// with w = w_l and w = w_r.
#[derive(Debug, Clone)]
pub struct ParticularSolutions {
    pub u_l: GridFunction,
    pub u_r: GridFunction,
    pub condition: f64,
}

pub fn solve_ul_ur(k: &DiffusivityField, beta: f64, theta: f64, space: Arc<FemSpace>) -> Result<ParticularSolutions> {
    check_pg_params(beta, theta)?;
    let p = space.partition();
    let unit = DiffusivityField::constant(1.0)?;
    let matrix = fractional_stiffness(p, p, &unit, beta, theta)?;
    let f = Factorization::new(&matrix).map_err(solver_hint)?;
    let (u_l, u_r) = if k.is_constant() {
        (GridFunction::zero(space.clone()), GridFunction::zero(space.clone()))
    } else {
        let (wl, wr) = solve_wl_wr(k)?;
        let bl = nodal_stiffness_rhs(p, |x| wl.value(x));
        let br = nodal_stiffness_rhs(p, |x| wr.value(x));
        (GridFunction::new(space.clone(), f.solve(&bl))?, GridFunction::new(space.clone(), f.solve(&br))?)
    };
    Ok(ParticularSolutions { u_l, u_r, condition: f.condition() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Wellposed,
    Violated,
    Inconclusive,
}

pub fn classify(xi: f64) -> Verdict {
    if xi.abs() > XI_TOL {
        Verdict::Wellposed
    } else if xi.abs() <= XI_VIOLATION_TOL {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WellposednessReport {
    /// 1 + θ·lI^β u_l(1) - (1-θ)·rI^β u_l(0).
    pub xi: f64,
    /// 1 - lI^β u_r(1) + (1-θ)·rI^β u_r(0).
    pub xi_alternative: f64,
    pub xi_discrepancy: f64,
    /// Determinant of the 2×2 system for the constants, without using u_r = -u_l.
    pub determinant: f64,
    pub left_functional: f64,
    pub right_functional: f64,
    pub u_l_norm: f64,
    pub u_r_norm: f64,
    pub sum_l2: f64,
    pub perturbation_residual: f64,
    pub condition: f64,
    pub tolerance: f64,
    pub violation_tolerance: f64,
    pub verdict: Verdict,
}

pub fn wellposedness_indicator(k: &DiffusivityField, beta: f64, theta: f64, space: Arc<FemSpace>) -> Result<WellposednessReport> {
    let ps = solve_ul_ur(k, beta, theta, space)?;
    let ll = left_frac_integral(&ps.u_l, beta, 1.0)?;
    let rl = right_frac_integral(&ps.u_l, beta, 0.0)?;
    let lr = left_frac_integral(&ps.u_r, beta, 1.0)?;
    let rr = right_frac_integral(&ps.u_r, beta, 0.0)?;
    let xi = 1.0 + theta * ll - (1.0 - theta) * rl;
    let xi_alternative = 1.0 - lr + (1.0 - theta) * rr;
    let determinant = (1.0 - (1.0 - theta) * rl) * (1.0 - theta * lr) - (1.0 - theta) * theta * rr * ll;
    let mu = 1.0 - beta;
    let sum: Vec<f64> = ps.u_l.coefficients.iter().zip(&ps.u_r.coefficients).map(|(a, b)| a + b).collect();
    let sum = GridFunction::new(ps.u_l.space.clone(), sum)?;
    Ok(WellposednessReport {
        xi,
        xi_alternative,
        xi_discrepancy: (xi - xi_alternative).abs(),
        determinant,
        left_functional: ll,
        right_functional: rl,
        u_l_norm: j_seminorm(&ps.u_l, mu, SeminormSide::Left)?,
        u_r_norm: j_seminorm(&ps.u_r, mu, SeminormSide::Left)?,
        sum_l2: crate::spaces::l2_norm(&sum)?,
        perturbation_residual: perturbation_residual(k),
        condition: ps.condition,
        tolerance: XI_TOL,
        violation_tolerance: XI_VIOLATION_TOL,
        verdict: classify(xi),
    })
}

/// Ξ for the one-sided problems in closed form:
/// θ = 1: (1-β)∫(1-s)^{-β}/(R(1)K(s)) ds; θ = 0: (1-β)∫s^{-β}/(R(1)K(s)) ds,
/// with R(1) = ∫ 1/K.
pub fn one_sided_xi(k: &DiffusivityField, beta: f64, theta: f64) -> Result<f64> {
    check_open_unit("beta", beta)?;
    let term = if theta == 1.0 {
        PowerTerm::new(1.0, 1.0, Side::Right, -beta)
    } else if theta == 0.0 {
        PowerTerm::new(1.0, 0.0, Side::Left, -beta)
    } else {
        return Err(Error::Parameter(format!("closed form needs θ ∈ {{0, 1}}, got {theta}")));
    };
    let kernel = PowerTermSum::from_terms(vec![term]);
    let inv = |x: f64| k.inverse(x);
    let breaks = k.breaks();
    let w = Weight { func: &inv, breaks: &breaks };
    let integral = integrate_product(&[&kernel], &w, 0.0, 1.0, CellRule::new(16, 48))?;
    let r1 = crate::classical::HarmonicProfile::new(k).total();
    Ok((1.0 - beta) * integral / r1)
}

fn xi_only(k: &DiffusivityField, beta: f64, theta: f64, space: Arc<FemSpace>) -> Result<f64> {
    let ps = solve_ul_ur(k, beta, theta, space)?;
    Ok(1.0 + theta * left_frac_integral(&ps.u_l, beta, 1.0)? - (1.0 - theta) * right_frac_integral(&ps.u_l, beta, 0.0)?)
}

/// Ξ extrapolated from uniform meshes with n and 2n cells, assuming an
/// O(h²) error. Returns (extrapolated Ξ, |Ξ_2n - Ξ_n| / 3).
pub fn extrapolated_xi(k: &DiffusivityField, beta: f64, theta: f64, n: usize) -> Result<(f64, f64)> {
    let coarse = xi_only(k, beta, theta, Arc::new(FemSpace::hats(build_partition(n, Grading::Uniform)?)))?;
    let fine = xi_only(k, beta, theta, Arc::new(FemSpace::hats(build_partition(2 * n, Grading::Uniform)?)))?;
    Ok(((4.0 * fine - coarse) / 3.0, (fine - coarse).abs() / 3.0))
}

/// ‖R(1)^{-1}/K - 1‖_{L²(0,1)}.
pub fn perturbation_check(k: &DiffusivityField) -> f64 {
    perturbation_residual(k)
}

#[derive(Debug, Clone)]
pub struct CharacterizationSolve {
    pub u: GridFunction,
    pub c_l: f64,
    pub c_r: f64,
    /// Sup of the integral-equation defect on 201 uniform points.
    pub residual: f64,
    /// Relative residual of the bordered collocation system.
    pub system_residual: f64,
    pub condition: f64,
}

/// Ramp coefficients of hat m in left form Σ a_k (x - x_k)_+ and right form
/// Σ b_k (x_k - x)_+.
fn hat_ramps(x: &[f64], m: usize) -> ([(usize, f64); 3], [(usize, f64); 3]) {
    let a = 1.0 / (x[m] - x[m - 1]);
    let b = 1.0 / (x[m + 1] - x[m]);
    ([(m - 1, a), (m, -(a + b)), (m + 1, b)], [(m - 1, a), (m, -(a + b)), (m + 1, b)])
}

/// Collocates the integral equation
/// I^β_θ u - (1-θ)c_l w_l - θ c_r w_r = w_f, c_l = rI^β u(0), c_r = lI^β u(1)
/// at the interior nodes, with c_l and c_r as extra unknowns.
pub fn solve_via_characterization(
    k: &DiffusivityField,
    beta: f64,
    theta: f64,
    f: &PowerTermSum,
    space: Arc<FemSpace>,
) -> Result<CharacterizationSolve> {
    check_pg_params(beta, theta)?;
    let x = space.partition().nodes().to_vec();
    let n = x.len() - 1;
    let m = n - 1;
    let (wl, wr) = solve_wl_wr(k)?;
    let wf = solve_wf(k, f)?;
    let g2 = 1.0 / gamma_unchecked(2.0 + beta);
    let e = 1.0 + beta;
    let mut a = DMatrix::<f64>::zeros(m + 2, m + 2);
    for j in 0..m {
        let (left, right) = hat_ramps(&x, j + 1);
        for i in 0..m {
            let xi = x[i + 1];
            let l: f64 = left.iter().filter(|(k, _)| x[*k] < xi).map(|&(k, c)| c * (xi - x[k]).powf(e)).sum();
            let r: f64 = right.iter().filter(|(k, _)| x[*k] > xi).map(|&(k, c)| c * (x[k] - xi).powf(e)).sum();
            a[(i, j)] = (theta * l + (1.0 - theta) * r) * g2;
        }
        a[(m, j)] = -right.iter().map(|&(k, c)| c * x[k].powf(e)).sum::<f64>() * g2;
        a[(m + 1, j)] = -left.iter().map(|&(k, c)| c * (1.0 - x[k]).powf(e)).sum::<f64>() * g2;
    }
    for i in 0..m {
        a[(i, m)] = -(1.0 - theta) * wl.value(x[i + 1]);
        a[(i, m + 1)] = -theta * wr.value(x[i + 1]);
    }
    a[(m, m)] = 1.0;
    a[(m + 1, m + 1)] = 1.0;
    let mut rhs = vec![0.0; m + 2];
    for i in 0..m {
        rhs[i] = wf.value(x[i + 1])?;
    }
    let fac = Factorization::new(&a).map_err(|e| {
        Error::WellposednessViolation(format!("bordered characterization system cannot be solved: {e}"))
    })?;
    let sol = fac.solve(&rhs);
    let system_residual = relative_residual(&a, &sol, &rhs);
    if !(system_residual <= RESIDUAL_TOL) {
        return Err(Error::Numeric(format!("characterization system residual {system_residual:.3e}")));
    }
    let u = GridFunction::new(space, sol[..m].to_vec())?;
    let (c_l, c_r) = (sol[m], sol[m + 1]);
    let iu = two_sided_terms(&u, beta, theta)?;
    let mut residual = 0.0f64;
    for s in 0..=200 {
        let t = s as f64 / 200.0;
        let d = iu.eval(t) - (1.0 - theta) * c_l * wl.value(t) - theta * c_r * wr.value(t) - wf.value(t)?;
        residual = residual.max(d.abs());
    }
    Ok(CharacterizationSolve { u, c_l, c_r, residual, system_residual, condition: fac.condition() })
}

/// |g(0)| + |g(1)| for g = I^β_θ φ - (1-θ)(rI^β φ(0))(1-x) - θ(lI^β φ(1))x.
pub fn boundary_identity_defect(phi: &impl AsTerms, beta: f64, theta: f64) -> Result<f64> {
    let t = phi.to_terms();
    let i = two_sided_terms(&t, beta, theta)?;
    let r0 = right_frac_integral(&t, beta, 0.0)?;
    let l1 = left_frac_integral(&t, beta, 1.0)?;
    let g0 = i.eval(0.0) - (1.0 - theta) * r0;
    let g1 = i.eval(1.0) - theta * l1;
    Ok(g0.abs() + g1.abs())
}

/// (k, ‖D^k I^β_θ u‖_{L²}) for k = 0..=k_max, from
/// D^k I^β_θ u = (1-θ)(rI^β u(0)) D^k w_l + θ(lI^β u(1)) D^k w_r + D^k w_f.
pub fn regularity_report(
    u: &GridFunction,
    k: &DiffusivityField,
    f: &PowerTermSum,
    beta: f64,
    theta: f64,
    k_max: usize,
) -> Result<Vec<(usize, f64)>> {
    check_pg_params(beta, theta)?;
    if k_max > 4 {
        return Err(Error::Parameter(format!("k_max must be at most 4, got {k_max}")));
    }
    if k_max >= 1 && k.polynomial_coeffs().is_none() {
        return Err(Error::UnsupportedRepresentation(
            "derivatives of the profiles need a constant or polynomial diffusivity".into(),
        ));
    }
    let (wl, wr) = solve_wl_wr(k)?;
    let wf = solve_wf(k, f)?;
    let c_l = right_frac_integral(u, beta, 0.0)?;
    let c_r = left_frac_integral(u, beta, 1.0)?;
    (0..=k_max)
        .map(|order| {
            let eval = |x: f64, wl: &BoundarySolution, wr: &BoundarySolution| -> Result<f64> {
                Ok((1.0 - theta) * c_l * wl.derivative(order, x)? + theta * c_r * wr.derivative(order, x)? + wf.derivative(order, x)?)
            };
            let rule = gauss_legendre(8);
            let panels = 64;
            let mut sq = 0.0;
            for p in 0..panels {
                let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
                let half = 0.5 * (b - a);
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    let v = eval(a + (1.0 + t) * half, &wl, &wr)?;
                    sq += w * half * v * v;
                }
            }
            Ok((order, sq.sqrt()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::oracle_left_piecewise;
    use crate::spaces::{build_partition, l2_norm, Grading};

    fn space(n: usize) -> Arc<FemSpace> {
        Arc::new(FemSpace::hats(build_partition(n, Grading::Uniform).unwrap()))
    }

    fn bubble() -> PowerTermSum {
        PowerTermSum::polynomial(&[0.0, 1.0, -1.0])
    }

    #[test]
    fn rejects_large_beta() {
        let k = DiffusivityField::constant(1.0).unwrap();
        assert!(matches!(bilinear_a(&bubble(), &bubble(), &k, 0.7, 0.5), Err(Error::Parameter(_))));
        assert!(assemble_pg(space(4), space(4), &k, 0.5, 0.5, &PowerTermSum::zero()).is_err());
    }

    #[test]
    fn bilinear_a_one_sided_oracle() {
        let k = DiffusivityField::constant(1.0).unwrap();
        let a = bilinear_a(&bubble(), &bubble(), &k, 0.3, 1.0).unwrap();
        // D lI^0.3 (x - x²) = x^0.3/Γ(1.3) - 2x^1.3/Γ(2.3) against Dv = 1 - 2x
        let flux = |x: f64| {
            let h = 1e-5;
            let f = |t: f64| oracle_left_piecewise(&|s: f64| s - s * s, &[0.0], 0.3, t, 64).unwrap();
            (f(x + h) - f(x - h)) / (2.0 * h)
        };
        let oracle = crate::quadrature::integrate_graded(&|x| flux(x) * (1.0 - 2.0 * x), 0.0, 1.0, 16, 10);
        assert!((a - oracle).abs() < 1e-6 * a.abs(), "{a} vs {oracle}");
        assert_eq!(bilinear_a(&PowerTermSum::zero(), &bubble(), &k, 0.3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_k_particular_solutions_vanish() {
        let k = DiffusivityField::constant(3.0).unwrap();
        let r = wellposedness_indicator(&k, 0.3, 0.4, space(16)).unwrap();
        assert_eq!(r.xi, 1.0);
        assert_eq!(r.verdict, Verdict::Wellposed);
        assert_eq!(r.u_l_norm, 0.0);
    }

    #[test]
    fn particular_solutions_are_negatives() {
        let k = DiffusivityField::polynomial(vec![1.0, 2.0, -1.0]).unwrap();
        let ps = solve_ul_ur(&k, 0.25, 0.6, space(32)).unwrap();
        let sum: Vec<f64> = ps.u_l.coefficients.iter().zip(&ps.u_r.coefficients).map(|(a, b)| a + b).collect();
        let s = GridFunction::new(ps.u_l.space.clone(), sum).unwrap();
        assert!(l2_norm(&s).unwrap() < 1e-12);
        assert!(l2_norm(&ps.u_l).unwrap() > 1e-6);
    }

    #[test]
    fn xi_is_scale_invariant() {
        let k = DiffusivityField::polynomial(vec![1.0, 0.5]).unwrap();
        let a = wellposedness_indicator(&k, 0.3, 0.3, space(16)).unwrap();
        let b = wellposedness_indicator(&k.scaled(7.0).unwrap(), 0.3, 0.3, space(16)).unwrap();
        assert!((a.xi - b.xi).abs() < 1e-10);
        assert!((a.xi - a.determinant).abs() < 1e-10);
    }

    #[test]
    fn one_sided_closed_form_for_unit_k() {
        let k = DiffusivityField::constant(1.0).unwrap();
        assert!((one_sided_xi(&k, 0.3, 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((one_sided_xi(&k, 0.3, 0.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn one_sided_discrete_xi_approaches_closed_form() {
        let k = DiffusivityField::polynomial(vec![1.0, 1.0]).unwrap();
        let exact = one_sided_xi(&k, 0.3, 1.0).unwrap();
        let e1 = (wellposedness_indicator(&k, 0.3, 1.0, space(16)).unwrap().xi - exact).abs();
        let e2 = (wellposedness_indicator(&k, 0.3, 1.0, space(64)).unwrap().xi - exact).abs();
        assert!(e2 < e1 && e2 < 1e-4, "{e1} {e2}");
    }

    #[test]
    fn characterization_matches_pg_for_stepwise_k() {
        let k = DiffusivityField::piecewise_constant(vec![0.5], vec![1.0, 2.5]).unwrap();
        let f = PowerTermSum::polynomial(&[1.0, 1.0]);
        let sp = space(16);
        let pg = pg_solve(&assemble_pg(sp.clone(), sp.clone(), &k, 0.3, 0.4, &f).unwrap()).unwrap();
        let ch = solve_via_characterization(&k, 0.3, 0.4, &f, sp).unwrap();
        for (a, b) in pg.u.coefficients.iter().zip(&ch.u.coefficients) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!((ch.c_l - right_frac_integral(&ch.u, 0.3, 0.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_source_characterization() {
        let k = DiffusivityField::polynomial(vec![1.0, 0.3]).unwrap();
        let ch = solve_via_characterization(&k, 0.2, 0.5, &PowerTermSum::zero(), space(8)).unwrap();
        assert_eq!(ch.c_l, 0.0);
        assert_eq!(ch.c_r, 0.0);
        assert!(ch.u.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn regularity_for_unit_k() {
        let k = DiffusivityField::constant(1.0).unwrap();
        let sp = space(16);
        let zero = GridFunction::zero(sp.clone());
        let r = regularity_report(&zero, &k, &PowerTermSum::zero(), 0.3, 0.5, 3).unwrap();
        assert!(r.iter().all(|&(_, v)| v == 0.0));
        let f = PowerTermSum::constant(2.0);
        let u = solve_via_characterization(&k, 0.3, 0.5, &f, sp).unwrap().u;
        let r = regularity_report(&u, &k, &f, 0.3, 0.5, 2).unwrap();
        assert!((r[2].1 - 2.0).abs() < 1e-12);
        let pc = DiffusivityField::piecewise_constant(vec![0.5], vec![1.0, 2.0]).unwrap();
        assert!(matches!(regularity_report(&u, &pc, &f, 0.3, 0.5, 2), Err(Error::UnsupportedRepresentation(_))));
    }

    #[test]
    fn boundary_identity() {
        let phi = bubble();
        assert!(boundary_identity_defect(&phi, 0.3, 0.2).unwrap() < 1e-14);
    }

    #[test]
    fn refined_test_space_converges() {
        let k = DiffusivityField::constant(1.0).unwrap();
        let f = PowerTermSum::constant(1.0);
        let solve = |n: usize, factor: usize| {
            let sp = space(n);
            let test = refined_test_space(&sp, factor).unwrap();
            pg_solve(&assemble_pg(sp, test, &k, 0.3, 0.5, &f).unwrap()).unwrap().u
        };
        let reference = solve(128, 1);
        let dist = |u: &GridFunction| {
            let s = 400;
            ((0..s).map(|i| (i as f64 + 0.5) / s as f64).map(|x| (u.eval(x) - reference.eval(x)).powi(2)).sum::<f64>() / s as f64).sqrt()
        };
        let e8 = dist(&solve(8, 2));
        let e16 = dist(&solve(16, 2));
        assert!(e16 < e8, "{e8} {e16}");
    }

    #[test]
    fn extrapolated_xi_tracks_closed_form() {
        let k = DiffusivityField::polynomial(vec![1.0, -0.6, 0.0, -0.2]).unwrap();
        let exact = one_sided_xi(&k, 0.4, 1.0).unwrap();
        let raw = wellposedness_indicator(&k, 0.4, 1.0, space(128)).unwrap().xi;
        let (xi, estimate) = extrapolated_xi(&k, 0.4, 1.0, 64).unwrap();
        assert!((xi - exact).abs() < 0.1 * (raw - exact).abs(), "{xi} {raw} {exact}");
        assert!(estimate > 0.0 && estimate < 1e-3);
    }
}
