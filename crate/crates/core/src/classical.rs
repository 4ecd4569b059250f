//! Second-order diffusion problems -(K w')' = f that drive the
//! characterization of the fractional problem: the harmonic profiles
//! w_l, w_r with unit boundary data and the source response w_f.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracops::terms::PowerTermSum;
use crate::integrate::{integrate_product, CellRule, Weight};
use crate::quadrature::integrate_smooth;
use crate::spaces::{hat_terms, Boundary, FemSpace, GridFunction};

/// Representation of the diffusivity K(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DiffusivityKind {
    Constant { value: f64 },
    /// values[i] on (breaks[i-1], breaks[i]) with breaks strictly inside (0, 1).
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Σ coeffs[k] x^k.
    Polynomial { coeffs: Vec<f64> },
    /// Table on nodes from 0 to 1; 1/K is interpolated linearly.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

/// Diffusivity with verified bounds 0 < K_m ≤ K ≤ K_M.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusivityField {
    kind: DiffusivityKind,
    k_min: f64,
    k_max: f64,
}

/// Number of sample points used to verify the bounds.
pub const BOUND_SAMPLES: usize = 1000;

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl DiffusivityField {
    pub fn new(kind: DiffusivityKind) -> Result<Self> {
        match &kind {
            DiffusivityKind::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::Domain(format!("constant diffusivity must be positive, got {value}")));
                }
            }
            DiffusivityKind::PiecewiseConstant { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::Parameter(format!(
                        "{} breaks need {} values, got {}",
                        breaks.len(),
                        breaks.len() + 1,
                        values.len()
                    )));
                }
                if breaks.iter().any(|&b| !(b > 0.0 && b < 1.0)) || breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Parameter("breaks must be strictly increasing inside (0, 1)".into()));
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::Domain("piecewise diffusivity values must be positive".into()));
                }
            }
            DiffusivityKind::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Parameter("polynomial diffusivity needs finite coefficients".into()));
                }
            }
            DiffusivityKind::Tabulated { nodes, values } => {
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::Parameter("tabulated diffusivity needs matching nodes and values".into()));
                }
                if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Parameter("table nodes must increase from 0 to 1".into()));
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::Domain("tabulated diffusivity values must be positive".into()));
                }
            }
        }
        let mut field = Self { kind, k_min: f64::INFINITY, k_max: 0.0 };
        let mut probe: Vec<f64> = (0..=BOUND_SAMPLES).map(|i| i as f64 / BOUND_SAMPLES as f64).collect();
        probe.extend(field.breaks());
        for x in probe {
            let k = field.eval(x);
            field.k_min = field.k_min.min(k);
            field.k_max = field.k_max.max(k);
        }
        if !(field.k_min > 0.0) || !field.k_max.is_finite() {
            return Err(Error::Domain(format!(
                "diffusivity violates positive bounds: sampled range [{}, {}]",
                field.k_min, field.k_max
            )));
        }
        Ok(field)
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(DiffusivityKind::Constant { value })
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(DiffusivityKind::PiecewiseConstant { breaks, values })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(DiffusivityKind::Polynomial { coeffs })
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(DiffusivityKind::Tabulated { nodes, values })
    }

    pub fn kind(&self) -> &DiffusivityKind {
        &self.kind
    }

    /// (K_m, K_M) from sampling.
    pub fn bounds(&self) -> (f64, f64) {
        (self.k_min, self.k_max)
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            DiffusivityKind::Constant { .. } => true,
            DiffusivityKind::PiecewiseConstant { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
            DiffusivityKind::Polynomial { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
            DiffusivityKind::Tabulated { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    /// Piecewise constant with every break on one of the given nodes.
    pub fn is_piecewise_constant_on(&self, nodes: &[f64]) -> bool {
        match &self.kind {
            DiffusivityKind::Constant { .. } => true,
            DiffusivityKind::PiecewiseConstant { breaks, .. } => {
                breaks.iter().all(|b| nodes.iter().any(|n| (n - b).abs() < 1e-14))
            }
            _ => self.is_constant(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            DiffusivityKind::Constant { value } => *value,
            DiffusivityKind::PiecewiseConstant { breaks, values } => {
                let i = breaks.partition_point(|&b| b <= x);
                values[i]
            }
            DiffusivityKind::Polynomial { coeffs } => horner(coeffs, x),
            DiffusivityKind::Tabulated { .. } => 1.0 / self.inverse(x),
        }
    }

    /// 1/K(x).
    pub fn inverse(&self, x: f64) -> f64 {
        match &self.kind {
            DiffusivityKind::Tabulated { nodes, values } => {
                let x = x.clamp(0.0, 1.0);
                let i = nodes.partition_point(|&b| b <= x).clamp(1, nodes.len() - 1);
                let (a, b) = (nodes[i - 1], nodes[i]);
                let t = (x - a) / (b - a);
                (1.0 - t) / values[i - 1] + t / values[i]
            }
            _ => 1.0 / self.eval(x),
        }
    }

    /// Interior points where K may fail to be smooth.
    pub fn breaks(&self) -> Vec<f64> {
        match &self.kind {
            DiffusivityKind::PiecewiseConstant { breaks, .. } => breaks.clone(),
            DiffusivityKind::Tabulated { nodes, .. } => nodes[1..nodes.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// cK.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let kind = match &self.kind {
            DiffusivityKind::Constant { value } => DiffusivityKind::Constant { value: c * value },
            DiffusivityKind::PiecewiseConstant { breaks, values } => DiffusivityKind::PiecewiseConstant {
                breaks: breaks.clone(),
                values: values.iter().map(|v| c * v).collect(),
            },
            DiffusivityKind::Polynomial { coeffs } => {
                DiffusivityKind::Polynomial { coeffs: coeffs.iter().map(|v| c * v).collect() }
            }
            DiffusivityKind::Tabulated { nodes, values } => DiffusivityKind::Tabulated {
                nodes: nodes.clone(),
                values: values.iter().map(|v| c * v).collect(),
            },
        };
        Self::new(kind)
    }

    fn smooth_pieces(&self, p: f64, q: f64) -> Vec<(f64, f64)> {
        let mut pts = vec![p];
        pts.extend(self.breaks().into_iter().filter(|&b| b > p && b < q));
        pts.push(q);
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// ∫_p^q K.
    pub fn integral(&self, p: f64, q: f64) -> f64 {
        self.smooth_pieces(p, q)
            .into_iter()
            .map(|(a, b)| match &self.kind {
                DiffusivityKind::Constant { value } => value * (b - a),
                DiffusivityKind::PiecewiseConstant { .. } => self.eval(0.5 * (a + b)) * (b - a),
                _ => integrate_chunked(|x| self.eval(x), a, b),
            })
            .sum()
    }

    /// ∫_p^q 1/K.
    pub fn inverse_integral(&self, p: f64, q: f64) -> f64 {
        self.smooth_pieces(p, q)
            .into_iter()
            .map(|(a, b)| match &self.kind {
                DiffusivityKind::Constant { value } => (b - a) / value,
                DiffusivityKind::PiecewiseConstant { .. } => (b - a) / self.eval(0.5 * (a + b)),
                DiffusivityKind::Tabulated { .. } => 0.5 * (b - a) * (self.inverse(a) + self.inverse(b)),
                DiffusivityKind::Polynomial { .. } => integrate_chunked(|x| self.inverse(x), a, b),
            })
            .sum()
    }

    /// D^j(1/K)(x) for smooth representations.
    pub fn inverse_derivative(&self, j: usize, x: f64) -> Result<f64> {
        if j == 0 {
            return Ok(self.inverse(x));
        }
        match &self.kind {
            DiffusivityKind::Constant { .. } => Ok(0.0),
            DiffusivityKind::Polynomial { coeffs } => {
                // g = 1/K, K g = 1 ⇒ g^{(j)} = -(1/K) Σ_{i=1..j} C(j,i) K^{(i)} g^{(j-i)}
                let mut kd = vec![horner(coeffs, x)];
                let mut c = coeffs.clone();
                for _ in 0..j {
                    c = poly_derivative(&c);
                    kd.push(horner(&c, x));
                }
                let mut g = vec![1.0 / kd[0]];
                for n in 1..=j {
                    let s: f64 = (1..=n).map(|i| binomial(n, i) * kd[i] * g[n - i]).sum();
                    g.push(-s / kd[0]);
                }
                Ok(g[j])
            }
            _ if self.is_constant() => Ok(0.0),
            _ => Err(Error::UnsupportedRepresentation(
                "derivatives of 1/K need a constant or polynomial diffusivity".into(),
            )),
        }
    }

    /// Polynomial coefficients when K is constant or polynomial.
    pub fn polynomial_coeffs(&self) -> Option<Vec<f64>> {
        match &self.kind {
            DiffusivityKind::Constant { value } => Some(vec![*value]),
            DiffusivityKind::Polynomial { coeffs } => Some(coeffs.clone()),
            _ if self.is_constant() => Some(vec![self.eval(0.5)]),
            _ => None,
        }
    }
}

fn integrate_chunked<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let chunks = ((b - a) / 0.0625).ceil().max(1.0) as usize;
    let h = (b - a) / chunks as f64;
    (0..chunks)
        .map(|i| integrate_smooth(&f, a + i as f64 * h, if i + 1 == chunks { b } else { a + (i + 1) as f64 * h }, 16))
        .sum()
}

/// R(x) = ∫_0^x ds/K(s), tabulated at knots for fast evaluation.
#[derive(Debug, Clone)]
pub struct HarmonicProfile {
    field: DiffusivityField,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

impl HarmonicProfile {
    pub fn new(field: &DiffusivityField) -> Self {
        let mut knots: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        knots.extend(field.breaks());
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut cumulative = vec![0.0];
        for w in knots.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + field.inverse_integral(w[0], w[1]));
        }
        Self { field: field.clone(), knots, cumulative }
    }

    pub fn field(&self) -> &DiffusivityField {
        &self.field
    }

    /// R(x).
    pub fn resistivity_integral(&self, x: f64) -> f64 {
        if let DiffusivityKind::Constant { value } = self.field.kind {
            return x / value;
        }
        let k = self.knots.partition_point(|&b| b <= x).clamp(1, self.knots.len() - 1) - 1;
        self.cumulative[k] + self.field.inverse_integral(self.knots[k], x)
    }

    /// R(1).
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }
}

/// Which harmonic profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSide {
    /// w_l: 1 at x = 0, 0 at x = 1.
    Left,
    /// w_r: 0 at x = 0, 1 at x = 1.
    Right,
}

/// w_l or w_r, with exact derivatives D^k w = ±D^{k-1}(1/K)/R(1).
#[derive(Debug, Clone)]
pub struct BoundarySolution {
    profile: Arc<HarmonicProfile>,
    side: ProfileSide,
}

impl BoundarySolution {
    pub fn side(&self) -> ProfileSide {
        self.side
    }

    pub fn profile(&self) -> &HarmonicProfile {
        &self.profile
    }

    pub fn value(&self, x: f64) -> f64 {
        let wr = if self.profile.field.is_constant() {
            x
        } else {
            self.profile.resistivity_integral(x) / self.profile.total()
        };
        match self.side {
            ProfileSide::Right => wr,
            ProfileSide::Left => {
                if self.profile.field.is_constant() {
                    1.0 - x
                } else {
                    (self.profile.total() - self.profile.resistivity_integral(x)) / self.profile.total()
                }
            }
        }
    }

    /// k-th derivative at x.
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        if k == 0 {
            return Ok(self.value(x));
        }
        let d = self.profile.field.inverse_derivative(k - 1, x)? / self.profile.total();
        Ok(match self.side {
            ProfileSide::Right => d,
            ProfileSide::Left => -d,
        })
    }
}

/// Closed-form w_l and w_r.
pub fn solve_wl_wr(field: &DiffusivityField) -> Result<(BoundarySolution, BoundarySolution)> {
    let (lo, hi) = field.bounds();
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::Domain("diffusivity violates positive bounds".into()));
    }
    let profile = Arc::new(HarmonicProfile::new(field));
    Ok((
        BoundarySolution { profile: profile.clone(), side: ProfileSide::Left },
        BoundarySolution { profile, side: ProfileSide::Right },
    ))
}

/// w_f(x) = ∫_0^x (c - F(s))/K(s) ds with F' = f, F(0) = 0 and c fixed by w_f(1) = 0.
#[derive(Debug, Clone)]
pub struct SourceSolution {
    profile: Arc<HarmonicProfile>,
    antiderivative: PowerTermSum,
    source_derivatives: Vec<std::result::Result<PowerTermSum, Error>>,
    c: f64,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

fn integrate_over_k(field: &DiffusivityField, g: &PowerTermSum, p: f64, q: f64) -> Result<f64> {
    let inv = |x: f64| field.inverse(x);
    let breaks = field.breaks();
    let w = Weight { func: &inv, breaks: &breaks };
    integrate_product(&[g], &w, p, q, CellRule::new(16, 32))
}

impl SourceSolution {
    pub fn constant_c(&self) -> f64 {
        self.c
    }

    pub fn field(&self) -> &DiffusivityField {
        &self.profile.field
    }

    /// ∫_0^x F/K.
    fn cumulative_fk(&self, x: f64) -> Result<f64> {
        let k = self.knots.partition_point(|&b| b <= x).clamp(1, self.knots.len() - 1) - 1;
        Ok(self.cumulative[k] + integrate_over_k(&self.profile.field, &self.antiderivative, self.knots[k], x)?)
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if self.antiderivative.is_empty() {
            return Ok(0.0);
        }
        Ok(self.c * self.profile.resistivity_integral(x) - self.cumulative_fk(x)?)
    }

    /// k-th derivative at x, through D^{k-1}[(c - F)/K].
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        if k == 0 {
            return self.value(x);
        }
        let field = &self.profile.field;
        let n = k - 1;
        let mut total = 0.0;
        for i in 0..=n {
            let d_cf = if i == 0 {
                self.c - self.antiderivative.eval(x)
            } else {
                match self.source_derivatives.get(i - 1) {
                    Some(Ok(d)) => -d.eval(x),
                    Some(Err(e)) => return Err(e.clone()),
                    None => return Err(Error::Parameter(format!("derivative order {k} exceeds the supported range"))),
                }
            };
            if d_cf == 0.0 {
                continue;
            }
            total += binomial(n, i) * d_cf * field.inverse_derivative(n - i, x)?;
        }
        Ok(total)
    }
}

/// Highest derivative order available from [`SourceSolution::derivative`].
pub const MAX_SOURCE_DERIVATIVE: usize = 5;

/// Solves -(K w_f')' = f with w_f(0) = w_f(1) = 0 by double integration.
pub fn solve_wf(field: &DiffusivityField, f: &PowerTermSum) -> Result<SourceSolution> {
    let profile = Arc::new(HarmonicProfile::new(field));
    let antiderivative = f.antiderivative()?;
    let mut source_derivatives = Vec::new();
    let mut d = Ok(f.clone());
    for _ in 0..MAX_SOURCE_DERIVATIVE {
        let next = d.as_ref().map_err(|e: &Error| e.clone()).and_then(|t| t.derivative());
        source_derivatives.push(d);
        d = next;
    }
    let mut knots: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
    knots.extend(field.breaks());
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut cumulative = vec![0.0];
    for w in knots.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + integrate_over_k(field, &antiderivative, w[0], w[1])?);
    }
    let total_fk = *cumulative.last().unwrap();
    if !total_fk.is_finite() {
        return Err(Error::Numeric(format!("quadrature of F/K failed: {total_fk}")));
    }
    let c = total_fk / profile.total();
    Ok(SourceSolution { profile, antiderivative, source_derivatives, c, knots, cumulative })
}

/// Linear finite elements for -(K w')' = f with zero boundary values.
/// The stiffness matrix is tridiagonal and symmetric positive definite.
pub fn fem_second_order(field: &DiffusivityField, f: &PowerTermSum, space: Arc<FemSpace>) -> Result<GridFunction> {
    if space.boundary() != Boundary::ZeroTrace {
        return Err(Error::Parameter("fem_second_order needs a zero-trace space".into()));
    }
    let nodes = space.partition().nodes().to_vec();
    let n = nodes.len() - 1;
    let a: Vec<f64> = (0..n)
        .map(|c| {
            let h = nodes[c + 1] - nodes[c];
            field.integral(nodes[c], nodes[c + 1]) / (h * h)
        })
        .collect();
    let m = n - 1;
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let hat = hat_terms(&space, i);
        rhs.push(integrate_product(&[f, &hat], &Weight::unit(), nodes[i], nodes[i + 2], CellRule::default())?);
    }
    let diag: Vec<f64> = (0..m).map(|i| a[i] + a[i + 1]).collect();
    let off: Vec<f64> = (0..m.saturating_sub(1)).map(|i| -a[i + 1]).collect();
    let u = thomas(&off, &diag, &off, &rhs)?;
    GridFunction::new(space, u)
}

/// Tridiagonal solve; `lower[i]` couples row i+1 to column i.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Numeric("zero pivot in tridiagonal solve".into()));
    }
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::Numeric("zero pivot in tridiagonal solve".into()));
        }
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// ‖(∫_0^1 ds/K)^{-1}/K - 1‖_{L²(0,1)}.
pub fn perturbation_residual(field: &DiffusivityField) -> f64 {
    if field.is_constant() {
        return 0.0;
    }
    let profile = HarmonicProfile::new(field);
    let r1 = profile.total();
    let mut pts = vec![0.0];
    pts.extend(field.breaks());
    pts.push(1.0);
    let sq: f64 = pts
        .windows(2)
        .map(|w| integrate_chunked(|x| (field.inverse(x) / r1 - 1.0).powi(2), w[0], w[1]))
        .sum();
    sq.max(0.0).sqrt()
}
