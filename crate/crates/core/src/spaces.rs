//! Partitions of [0, 1], piecewise-linear finite element spaces and the
//! norms used to measure discretization error.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_closed_unit, check_open_unit, Error, Result};
use crate::fracops::special::gamma_unchecked;
use crate::fracops::terms::{AsTerms, PowerTerm, PowerTermSum, Side};
use crate::fracops::PiecewisePoly;
use crate::integrate::{integrate_product, CellRule, Weight};
use crate::quadrature::{gauss_legendre, weighted_rule};

/// Node distribution of a partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// x_i = (i/n)^r, clustered at 0.
    Graded { exponent: f64 },
    /// x_i = 1 - ((n-i)/n)^r, clustered at 1.
    GradedRight { exponent: f64 },
}

/// Partition 0 = x_0 < x_1 < … < x_n = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    nodes: Vec<f64>,
    grading: Grading,
}

/// Builds a partition with n cells.
pub fn build_partition(n: usize, grading: Grading) -> Result<Partition> {
    if n < 2 {
        return Err(Error::Parameter(format!("a partition needs at least 2 cells, got {n}")));
    }
    let nf = n as f64;
    let nodes: Vec<f64> = match grading {
        Grading::Uniform => (0..=n).map(|i| i as f64 / nf).collect(),
        Grading::Graded { exponent } | Grading::GradedRight { exponent } => {
            if !(exponent >= 1.0) || !exponent.is_finite() {
                return Err(Error::Parameter(format!("grading exponent must be ≥ 1, got {exponent}")));
            }
            let left: Vec<f64> = (0..=n).map(|i| (i as f64 / nf).powf(exponent)).collect();
            if matches!(grading, Grading::Graded { .. }) {
                left
            } else {
                left.iter().rev().map(|x| 1.0 - x).collect()
            }
        }
    };
    Partition::from_nodes(nodes, grading)
}

impl Partition {
    /// Partition from explicit nodes.
    pub fn from_nodes(mut nodes: Vec<f64>, grading: Grading) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Parameter("a partition needs at least 2 cells".into()));
        }
        // pin the ends exactly
        nodes[0] = 0.0;
        *nodes.last_mut().unwrap() = 1.0;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("partition nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, grading })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn cell_width(&self, c: usize) -> f64 {
        self.nodes[c + 1] - self.nodes[c]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_width(c)).fold(0.0, f64::max)
    }

    pub fn min_width(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_width(c)).fold(f64::INFINITY, f64::min)
    }

    /// Bisects every cell.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(1.0);
        Self { nodes, grading: self.grading }
    }

    /// Adds the given points as nodes.
    pub fn with_extra_nodes(&self, extra: &[f64]) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        for &x in extra {
            if x > 0.0 && x < 1.0 && !nodes.iter().any(|n| (n - x).abs() < 1e-12) {
                nodes.push(x);
            }
        }
        nodes.sort_by(f64::total_cmp);
        Self::from_nodes(nodes, self.grading)
    }

    /// Index of the cell containing x (the left cell at a node).
    pub fn locate(&self, x: f64) -> usize {
        let n = self.n_cells();
        match self.nodes.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.saturating_sub(1).min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }
}

/// Boundary behaviour of a finite element space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    ZeroTrace,
    Free,
}

/// Continuous piecewise-linear space on a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FemSpace {
    partition: Partition,
    degree: usize,
    boundary: Boundary,
}

impl FemSpace {
    /// Only degree one is implemented.
    pub fn new(partition: Partition, degree: usize, boundary: Boundary) -> Result<Self> {
        if degree != 1 {
            return Err(Error::Parameter(format!("only degree 1 is supported, got {degree}")));
        }
        Ok(Self { partition, degree, boundary })
    }

    /// Zero-trace hat space.
    pub fn hats(partition: Partition) -> Self {
        Self { partition, degree: 1, boundary: Boundary::ZeroTrace }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dof_count(&self) -> usize {
        match self.boundary {
            Boundary::ZeroTrace => self.partition.n_cells() - 1,
            Boundary::Free => self.partition.n_cells() + 1,
        }
    }

    /// Partition node carrying degree of freedom i.
    pub fn dof_node(&self, i: usize) -> usize {
        match self.boundary {
            Boundary::ZeroTrace => i + 1,
            Boundary::Free => i,
        }
    }

    /// Nodal values (length n+1) of the function with the given coefficients.
    pub fn nodal_values(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.partition.n_cells() + 1];
        for (i, c) in coefficients.iter().enumerate() {
            v[self.dof_node(i)] = *c;
        }
        v
    }

    /// Nodal interpolant of f.
    pub fn interpolate<F: Fn(f64) -> f64>(self: &Arc<Self>, f: F) -> GridFunction {
        let coefficients = (0..self.dof_count()).map(|i| f(self.partition.nodes[self.dof_node(i)])).collect();
        GridFunction { space: self.clone(), coefficients }
    }
}

/// Basis functions of a degree-one space; φ_i(x_j) = δ_ij.
pub fn hat_basis(space: &FemSpace) -> Vec<PiecewisePoly> {
    (0..space.dof_count()).map(|i| hat_function(space, i)).collect()
}

/// The i-th basis function.
pub fn hat_function(space: &FemSpace, i: usize) -> PiecewisePoly {
    let nodes = space.partition.nodes();
    let k = space.dof_node(i);
    let n = nodes.len() - 1;
    let mut coeffs = vec![vec![0.0, 0.0]; n];
    if k > 0 {
        coeffs[k - 1] = vec![0.0, 1.0 / (nodes[k] - nodes[k - 1])];
    }
    if k < n {
        coeffs[k] = vec![1.0, -1.0 / (nodes[k + 1] - nodes[k])];
    }
    PiecewisePoly::new(nodes.to_vec(), coeffs, true).expect("valid partition")
}

/// Hat function as a three-term truncated-power sum (or two at the ends).
pub fn hat_terms(space: &FemSpace, i: usize) -> PowerTermSum {
    let nodes = space.partition.nodes();
    let k = space.dof_node(i);
    let n = nodes.len() - 1;
    let mut terms = Vec::with_capacity(4);
    let left = if k > 0 { 1.0 / (nodes[k] - nodes[k - 1]) } else { 0.0 };
    let right = if k < n { 1.0 / (nodes[k + 1] - nodes[k]) } else { 0.0 };
    if k > 0 {
        terms.push(PowerTerm::new(left, nodes[k - 1], Side::Left, 1.0));
    } else {
        terms.push(PowerTerm::new(1.0, 0.0, Side::Left, 0.0));
    }
    terms.push(PowerTerm::new(-(left + right), nodes[k], Side::Left, 1.0));
    if k < n {
        terms.push(PowerTerm::new(right, nodes[k + 1], Side::Left, 1.0));
    }
    PowerTermSum::from_terms(terms)
}

/// A function in a finite element space.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub space: Arc<FemSpace>,
    pub coefficients: Vec<f64>,
}

impl GridFunction {
    pub fn new(space: Arc<FemSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.dof_count() {
            return Err(Error::Parameter(format!(
                "expected {} coefficients, got {}",
                space.dof_count(),
                coefficients.len()
            )));
        }
        Ok(Self { space, coefficients })
    }

    pub fn zero(space: Arc<FemSpace>) -> Self {
        let n = space.dof_count();
        Self { space, coefficients: vec![0.0; n] }
    }

    pub fn nodal_values(&self) -> Vec<f64> {
        self.space.nodal_values(&self.coefficients)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = self.space.partition();
        let c = p.locate(x.clamp(0.0, 1.0));
        let v = self.nodal_values();
        let (a, b) = (p.nodes[c], p.nodes[c + 1]);
        let t = (x - a) / (b - a);
        v[c] * (1.0 - t) + v[c + 1] * t
    }
}

impl AsTerms for GridFunction {
    fn to_terms(&self) -> PowerTermSum {
        let nodes = self.space.partition().nodes();
        let v = self.nodal_values();
        let n = nodes.len() - 1;
        let slopes: Vec<f64> = (0..n).map(|c| (v[c + 1] - v[c]) / (nodes[c + 1] - nodes[c])).collect();
        let mut terms = Vec::with_capacity(n + 2);
        if v[0] != 0.0 {
            terms.push(PowerTerm::new(v[0], 0.0, Side::Left, 0.0));
        }
        terms.push(PowerTerm::new(slopes[0], 0.0, Side::Left, 1.0));
        for k in 1..n {
            terms.push(PowerTerm::new(slopes[k] - slopes[k - 1], nodes[k], Side::Left, 1.0));
        }
        PowerTermSum::from_terms(terms)
    }
}

/// (w, v) on (0, 1) with `quad_order` Gauss–Legendre nodes per smooth cell.
pub fn l2_inner(w: &impl AsTerms, v: &impl AsTerms, quad_order: usize) -> Result<f64> {
    if quad_order < 1 {
        return Err(Error::Parameter("quadrature order must be at least 1".into()));
    }
    let (a, b) = (w.to_terms(), v.to_terms());
    let rule = CellRule::new(quad_order, CellRule::default().jacobi.max(quad_order));
    integrate_product(&[&a, &b], &Weight::unit(), 0.0, 1.0, rule)
}

/// ‖w‖_{L²(0,1)}.
pub fn l2_norm(w: &impl AsTerms) -> Result<f64> {
    let a = w.to_terms();
    Ok(integrate_product(&[&a, &a], &Weight::unit(), 0.0, 1.0, CellRule::default())?.max(0.0).sqrt())
}

/// Which fractional derivative a seminorm measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SeminormSide {
    Left,
    Right,
    TwoSided { theta: f64 },
}

/// Pieces of ‖lD^μ w̃‖²_{L²(ℝ)} for the zero extension w̃ of w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftSeminormParts {
    /// ∫_0^1 (lD^μ w)².
    pub interior: f64,
    /// ∫_1^∞ (lD^μ w̃)².
    pub tail: f64,
}

impl LeftSeminormParts {
    pub fn total(&self) -> f64 {
        self.interior + self.tail
    }
}

fn zero_trace_derivative(w: &PowerTermSum) -> Result<PowerTermSum> {
    let scale = w.max_abs_coeff().max(1.0);
    if w.eval(0.0).abs() > 1e-10 * scale || w.eval(1.0).abs() > 1e-10 * scale {
        return Err(Error::Parameter("J-seminorms need w(0) = w(1) = 0".into()));
    }
    let left = w.to_left_form()?;
    if !left.is_piecewise_polynomial() {
        return Err(Error::UnsupportedRepresentation(
            "J-seminorms are computed for piecewise polynomials only".into(),
        ));
    }
    let mut d = left.derivative()?;
    d.prune_unit();
    Ok(d)
}

/// Squared L² norm of lD^μ of the zero extension, split into the part on
/// (0, 1) and the tail on (1, ∞).
pub fn left_seminorm_parts(w: &impl AsTerms, mu: f64) -> Result<LeftSeminormParts> {
    check_open_unit("mu", mu)?;
    let dw = zero_trace_derivative(&w.to_terms())?;
    if dw.is_empty() {
        return Ok(LeftSeminormParts { interior: 0.0, tail: 0.0 });
    }
    let sigma = 1.0 - mu;
    let rule = CellRule::default();
    let inner = dw.left_integral(sigma)?;
    let interior = integrate_product(&[&inner, &inner], &Weight::unit(), 0.0, 1.0, rule)?;

    // (1, 2]: closed form of the truncated derivative
    let truncated = dw.truncated_at(1.0)?;
    let ext = truncated.left_integral(sigma)?;
    let near = integrate_product(&[&ext, &ext], &Weight::unit(), 1.0, 2.0, rule)?;

    // [2, ∞): x = 2/y, the integrand behaves like y^{2μ} near y = 0
    let far = far_tail(&dw, mu)?;
    Ok(LeftSeminormParts { interior, tail: near + far })
}

fn far_tail(dw: &PowerTermSum, mu: f64) -> Result<f64> {
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(dw.anchors().into_iter().filter(|&a| a > 0.0 && a < 1.0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let gl = gauss_legendre(16);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(16 * cuts.len());
    for c in cuts.windows(2) {
        let half = 0.5 * (c[1] - c[0]);
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            let s = c[0] + (1.0 + t) * half;
            samples.push((s, w * half * dw.eval(s)));
        }
    }
    let g = gamma_unchecked(1.0 - mu);
    let value = |x: f64| samples.iter().map(|(s, w)| w * (x - s).powf(-mu)).sum::<f64>() / g;
    let (ys, ws) = weighted_rule(24, 0.0, 1.0, 2.0 * mu, 0.0)?;
    Ok(ys
        .iter()
        .zip(&ws)
        .map(|(&y, &w)| {
            let v = value(2.0 / y);
            w * v * v * 2.0 * y.powf(-2.0 - 2.0 * mu)
        })
        .sum())
}

/// |w|_{J^μ} for the zero extension of w: ‖lD^μ w̃‖, ‖rD^μ w̃‖, or
/// (θ²|w|²_l + (1-θ)²|w|²_r)^{1/2}, all as L²(ℝ) norms.
pub fn j_seminorm(w: &impl AsTerms, mu: f64, side: SeminormSide) -> Result<f64> {
    let t = w.to_terms();
    match side {
        SeminormSide::Left => Ok(left_seminorm_parts(&t, mu)?.total().max(0.0).sqrt()),
        SeminormSide::Right => Ok(left_seminorm_parts(&t.reflected(), mu)?.total().max(0.0).sqrt()),
        SeminormSide::TwoSided { theta } => {
            check_closed_unit("theta", theta)?;
            let l = left_seminorm_parts(&t, mu)?.total();
            let r = left_seminorm_parts(&t.reflected(), mu)?.total();
            Ok((theta * theta * l + (1.0 - theta) * (1.0 - theta) * r).max(0.0).sqrt())
        }
    }
}

/// Left J-seminorm of w_h - w_exact at order μ.
pub fn energy_error(w_h: &impl AsTerms, w_exact: &impl AsTerms, mu: f64) -> Result<f64> {
    let diff = &w_h.to_terms() - &w_exact.to_terms();
    j_seminorm(&diff, mu, SeminormSide::Left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::oracle::oracle_left_piecewise;
    use crate::quadrature::integrate_graded;

    #[test]
    fn partition_examples() {
        let p = build_partition(4, Grading::Uniform).unwrap();
        assert_eq!(p.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = build_partition(4, Grading::Graded { exponent: 2.0 }).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.0625, 0.25, 0.5625, 1.0]);
        assert_eq!(build_partition(2, Grading::Uniform).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert!(matches!(build_partition(1, Grading::Uniform), Err(Error::Parameter(_))));
        let r = build_partition(4, Grading::GradedRight { exponent: 2.0 }).unwrap();
        assert!((r.nodes()[3] - 0.9375).abs() < 1e-15);
    }

    #[test]
    fn hat_counts_and_values() {
        let p = build_partition(2, Grading::Uniform).unwrap();
        let s = FemSpace::hats(p.clone());
        let hats = hat_basis(&s);
        assert_eq!(hats.len(), 1);
        assert_eq!(hats[0].eval(0.5), 1.0);
        assert_eq!(hat_basis(&FemSpace::hats(build_partition(4, Grading::Uniform).unwrap())).len(), 3);
        let free = FemSpace::new(p, 1, Boundary::Free).unwrap();
        let hats = hat_basis(&free);
        assert_eq!(hats.len(), 3);
        assert_eq!(hats[0].eval(0.0), 1.0);
        assert_eq!(hats[2].eval(1.0), 1.0);
    }

    #[test]
    fn hat_terms_match_piecewise_form() {
        let p = build_partition(5, Grading::Graded { exponent: 1.5 }).unwrap();
        let s = FemSpace::new(p, 1, Boundary::Free).unwrap();
        for i in 0..s.dof_count() {
            let a = hat_function(&s, i);
            let b = hat_terms(&s, i);
            for k in 0..=50 {
                let x = k as f64 / 50.0;
                assert!((a.eval(x) - b.eval(x)).abs() < 1e-13, "hat {i} at {x}");
            }
        }
    }

    #[test]
    fn l2_examples() {
        let one = PowerTermSum::constant(1.0);
        let x = PowerTermSum::monomial(1.0, 1.0);
        assert!((l2_inner(&one, &one, 8).unwrap() - 1.0).abs() < 1e-15);
        assert!((l2_inner(&x, &x, 8).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let s = PowerTermSum::monomial(1.0, -0.25);
        assert!((l2_inner(&s, &one, 8).unwrap() - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn seminorm_interior_matches_oracle() {
        // w = x(1-x), μ = 1/2: ∫_0^1 (lI^{1/2}(1-2s))² dx by brute force
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let parts = left_seminorm_parts(&w, 0.5).unwrap();
        let g = |x: f64| oracle_left_piecewise(&|s: f64| 1.0 - 2.0 * s, &[], 0.5, x, 48).unwrap();
        let sq = |x: f64| g(x).powi(2);
        let reference = integrate_graded(&sq, 0.0, 1.0, 24, 20);
        assert!((parts.interior - reference).abs() < 1e-10, "{} vs {reference}", parts.interior);
    }

    #[test]
    fn seminorm_tail_matches_direct_quadrature() {
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        let mu = 0.6;
        let parts = left_seminorm_parts(&w, mu).unwrap();
        // tail by direct quadrature of ∫_0^1 (1-2s)(x-s)^{-μ} ds / Γ(1-μ)
        let gm = gamma_unchecked(1.0 - mu);
        let g = |x: f64| {
            let f = |s: f64| (1.0 - 2.0 * s) * (x - s).powf(-mu);
            integrate_graded(&f, 0.0, 1.0, 24, 14) / gm
        };
        let sq = |x: f64| g(x).powi(2);
        let near = integrate_graded(&sq, 1.0, 3.0, 24, 14);
        let far = {
            // x = 3/y on (0, 1]
            let h = |y: f64| sq(3.0 / y) * 3.0 / (y * y);
            integrate_graded(&h, 0.0, 1.0, 24, 12)
        };
        assert!((parts.tail - (near + far)).abs() < 1e-8 * parts.tail.max(1e-3), "{} vs {}", parts.tail, near + far);
    }

    #[test]
    fn zero_and_reflection() {
        assert_eq!(j_seminorm(&PowerTermSum::zero(), 0.7, SeminormSide::Left).unwrap(), 0.0);
        let w = PowerTermSum::polynomial(&[0.0, 1.0, 0.5, -1.5]);
        let l = j_seminorm(&w, 0.7, SeminormSide::Left).unwrap();
        let r = j_seminorm(&w.reflected(), 0.7, SeminormSide::Right).unwrap();
        assert_eq!(l, r);
        let t = j_seminorm(&w, 0.7, SeminormSide::TwoSided { theta: 1.0 }).unwrap();
        assert!((t - l).abs() < 1e-15);
    }

    #[test]
    fn seminorm_requires_zero_trace() {
        let w = PowerTermSum::polynomial(&[1.0, 1.0]);
        assert!(j_seminorm(&w, 0.5, SeminormSide::Left).is_err());
    }

    #[test]
    fn grid_function_terms() {
        let p = build_partition(6, Grading::Uniform).unwrap();
        let s = Arc::new(FemSpace::hats(p));
        let u = s.interpolate(|x| x * (1.0 - x));
        let t = u.to_terms();
        for k in 0..=60 {
            let x = k as f64 / 60.0;
            assert!((t.eval(x) - u.eval(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_error_of_identical_inputs() {
        let w = PowerTermSum::polynomial(&[0.0, 1.0, -1.0]);
        assert_eq!(energy_error(&w, &w, 0.75).unwrap(), 0.0);
        let z = PowerTermSum::zero();
        let a = energy_error(&z, &w, 0.75).unwrap();
        let b = j_seminorm(&w, 0.75, SeminormSide::Left).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
