//! Galerkin form B(w, v) = θ(K lI^β Dw, Dv) + (1-θ)(K rI^β Dw, Dv), its
//! finite element discretization and the construction of variable
//! diffusivities for which B loses coercivity.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::assembly::{fractional_stiffness, load_vector};
use crate::classical::DiffusivityField;
use crate::error::{check_closed_unit, check_open_unit, Error, Result};
use crate::fracops::special::gamma_unchecked;
use crate::fracops::terms::{AsTerms, PowerTerm, PowerTermSum, Side};
use crate::fracops::{has_zero_trace, two_sided_terms, PiecewisePoly};
use crate::integrate::{integrate_product, CellRule, Weight};
use crate::linalg::{relative_residual, Factorization};
use crate::spaces::{FemSpace, GridFunction};

/// Integral of K·F·G over (0, 1).
pub(crate) fn weighted_product(k: &DiffusivityField, f: &PowerTermSum, g: &PowerTermSum, rule: CellRule) -> Result<f64> {
    let kf = |x: f64| k.eval(x);
    let breaks = k.breaks();
    integrate_product(&[f, g], &Weight { func: &kf, breaks: &breaks }, 0.0, 1.0, rule)
}

fn zero_trace_terms(w: &impl AsTerms, name: &str) -> Result<PowerTermSum> {
    let t = w.to_terms();
    if !has_zero_trace(&t) {
        return Err(Error::Parameter(format!("{name} must vanish at both endpoints")));
    }
    Ok(t)
}

/// B(w, v) for zero-trace w and v.
pub fn bilinear_b(w: &impl AsTerms, v: &impl AsTerms, k: &DiffusivityField, beta: f64, theta: f64) -> Result<f64> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    let dw = zero_trace_terms(w, "w")?.derivative()?;
    let dv = zero_trace_terms(v, "v")?.derivative()?;
    if dw.is_empty() || dv.is_empty() {
        return Ok(0.0);
    }
    let profile = two_sided_terms(&dw, beta, theta)?;
    weighted_product(k, &profile, &dv, CellRule::default())
}

/// λ(β) = 2^{1+β} - 1 - 3^β for β ∈ [0, 1].
pub fn lambda_beta(beta: f64) -> f64 {
    2f64.powf(1.0 + beta) - 1.0 - 3f64.powf(beta)
}

/// The piecewise-linear w equal to 4x, 4(1/2 - x), -4(1 - x) on
/// [0, 1/4], [1/4, 3/4], [3/4, 1].
pub fn zigzag_w() -> PiecewisePoly {
    PiecewisePoly::new(
        vec![0.0, 0.25, 0.75, 1.0],
        vec![vec![0.0, 4.0], vec![1.0, -4.0], vec![-1.0, 4.0]],
        true,
    )
    .expect("fixed breakpoints are valid")
}

/// (lI^β Dw, rI^β Dw) for w from [`zigzag_w`]:
/// lI^β Dw = (4/Γ(β+1))[x^β - 2(x - 1/4)_+^β + 2(x - 3/4)_+^β],
/// rI^β Dw = (4/Γ(β+1))[(1 - x)^β - 2(3/4 - x)_+^β + 2(1/4 - x)_+^β].
pub fn zigzag_profiles(beta: f64) -> Result<(PowerTermSum, PowerTermSum)> {
    check_open_unit("beta", beta)?;
    let c = 4.0 / gamma_unchecked(beta + 1.0);
    let left = PowerTermSum::from_terms(vec![
        PowerTerm::new(c, 0.0, Side::Left, beta),
        PowerTerm::new(-2.0 * c, 0.25, Side::Left, beta),
        PowerTerm::new(2.0 * c, 0.75, Side::Left, beta),
    ]);
    let right = PowerTermSum::from_terms(vec![
        PowerTerm::new(c, 1.0, Side::Right, beta),
        PowerTerm::new(-2.0 * c, 0.75, Side::Right, beta),
        PowerTerm::new(2.0 * c, 0.25, Side::Right, beta),
    ]);
    Ok((left, right))
}

/// Witness (K, w) with B(w, w) < 0.
#[derive(Debug, Clone, Serialize)]
pub struct CoercivityCertificate {
    pub k: DiffusivityField,
    pub w: PiecewisePoly,
    pub value: f64,
    pub beta: f64,
    pub theta: f64,
    pub delta: f64,
    pub k_l: f64,
    pub k_r: f64,
    /// Interval where K = 1.
    pub band: (f64, f64),
    /// Bound on the two-sided profile inside the band.
    pub threshold: f64,
    pub shrink_steps: usize,
    /// Halvings needed for the first negative value.
    pub first_negative_step: usize,
}

/// Number of scan points used to bracket δ.
pub const DELTA_SCAN_POINTS: usize = 512;
/// Maximum number of halvings of the outer diffusivity.
pub const MAX_SHRINK_STEPS: usize = 60;
/// Relative change of B(w, w) per halving below which shrinking stops.
pub const OUTER_SHARE: f64 = 1e-3;

/// Finds δ with profile ≤ threshold on the band next to 1/4 (or 3/4).
fn find_delta(profile: &PowerTermSum, threshold: f64, mirrored: bool) -> Result<f64> {
    let at = |t: f64| profile.eval(if mirrored { 0.75 + t } else { 0.25 - t });
    if at(0.0) > threshold {
        return Err(Error::SearchFailure(format!(
            "profile {} at the band edge exceeds the threshold {threshold}",
            at(0.0)
        )));
    }
    let step = 0.25 / DELTA_SCAN_POINTS as f64;
    let mut inside = 0.0;
    for m in 1..=DELTA_SCAN_POINTS {
        let t = m as f64 * step;
        if at(t) > threshold {
            let mut hi = t;
            for _ in 0..60 {
                let mid = 0.5 * (inside + hi);
                if at(mid) <= threshold {
                    inside = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(inside);
        }
        inside = t;
    }
    Ok(0.25)
}

fn three_piece_k(band: (f64, f64), s: f64) -> Result<DiffusivityField> {
    let mut breaks = Vec::new();
    let mut values = Vec::new();
    if band.0 > 0.0 {
        breaks.push(band.0);
        values.push(s);
    }
    values.push(1.0);
    if band.1 < 1.0 {
        breaks.push(band.1);
        values.push(s);
    }
    DiffusivityField::piecewise_constant(breaks, values)
}

/// Builds a three-piece K with a unit band next to 1/4 (θ ≤ 1/2) or 3/4
/// (θ > 1/2) and shrinks the outer values until B(w, w) < 0.
pub fn find_coercivity_violation(beta: f64, theta: f64) -> Result<CoercivityCertificate> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    let (l, r) = zigzag_profiles(beta)?;
    let profile = &l.scaled(theta) + &r.scaled(1.0 - theta);
    let threshold = -(4f64.powf(1.0 - beta)) * lambda_beta(beta) / (4.0 * gamma_unchecked(beta + 1.0));
    let mirrored = theta > 0.5;
    let delta = find_delta(&profile, threshold, mirrored)?;
    if delta <= 0.0 {
        return Err(Error::SearchFailure("empty band".into()));
    }
    let band = if mirrored { (0.75, 0.75 + delta) } else { (0.25 - delta, 0.25) };
    let w = zigzag_w();
    let value_at = |s: f64| -> Result<(DiffusivityField, f64)> {
        let k = three_piece_k(band, s)?;
        let v = bilinear_b(&w, &w, &k, beta, theta)?;
        Ok((k, v))
    };
    let mut s = 1.0;
    for step in 0..=MAX_SHRINK_STEPS {
        let (mut k, mut value) = value_at(s)?;
        if value < 0.0 {
            // Keep shrinking until the outer pieces no longer cancel the band.
            let first_negative_step = step;
            let mut steps = step;
            while steps < MAX_SHRINK_STEPS {
                let (k_next, v_next) = value_at(0.5 * s)?;
                let settled = (value - v_next).abs() <= OUTER_SHARE * v_next.abs();
                (k, value, s) = (k_next, v_next, 0.5 * s);
                steps += 1;
                if settled {
                    break;
                }
            }
            return Ok(CoercivityCertificate {
                k,
                w,
                value,
                beta,
                theta,
                delta,
                k_l: s,
                k_r: s,
                band,
                threshold,
                shrink_steps: steps,
                first_negative_step,
            });
        }
        s *= 0.5;
    }
    Err(Error::SearchFailure(format!(
        "B(w, w) stayed nonnegative after {MAX_SHRINK_STEPS} halvings (β = {beta}, θ = {theta})"
    )))
}

/// Assembled Galerkin system.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    /// Entry (i, j) is B(φ_j, φ_i).
    pub matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
    pub space: Arc<FemSpace>,
    pub beta: f64,
    pub theta: f64,
    pub k: DiffusivityField,
}

pub fn assemble_galerkin(
    space: Arc<FemSpace>,
    k: &DiffusivityField,
    beta: f64,
    theta: f64,
    f: &PowerTermSum,
) -> Result<GalerkinSystem> {
    check_open_unit("beta", beta)?;
    check_closed_unit("theta", theta)?;
    if space.boundary() != crate::spaces::Boundary::ZeroTrace {
        return Err(Error::Parameter("the Galerkin space must have zero trace".into()));
    }
    let p = space.partition();
    let matrix = fractional_stiffness(p, p, k, beta, theta)?;
    let rhs = load_vector(&space, f)?;
    Ok(GalerkinSystem { matrix, rhs, space, beta, theta, k: k.clone() })
}

/// Discrete solution with solver diagnostics.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub u: GridFunction,
    pub condition: f64,
    pub relative_residual: f64,
}

pub fn galerkin_solve(system: &GalerkinSystem) -> Result<DiscreteSolution> {
    let f = Factorization::new(&system.matrix)?;
    let x = f.solve(&system.rhs);
    let relative_residual = relative_residual(&system.matrix, &x, &system.rhs);
    Ok(DiscreteSolution { u: GridFunction::new(system.space.clone(), x)?, condition: f.condition(), relative_residual })
}
