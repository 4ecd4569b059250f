//! Dense fractional stiffness matrices on hat spaces.
//!
//! For a trial hat φ_j, Dφ_j is a sum of three steps, so
//! lI^β Dφ_j = Σ_k λ_jk (x - x_k)_+^β / Γ(1+β) and likewise on the right.
//! A test hat has constant slope on each of its two cells, hence every
//! entry reduces to the moments ∫_c K (x - x_k)_+^β and ∫_c K (x_k - x)_+^β.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::classical::{DiffusivityField, DiffusivityKind};
use crate::error::{Error, Result};
use crate::fracops::special::gamma_unchecked;
use crate::fracops::terms::{PowerTermSum, Side};
use crate::integrate::{integrate_product, power_integral_left, power_integral_right, power_moment, CellRule, Weight};
use crate::quadrature::{gauss_legendre, weighted_rule};
use crate::spaces::{hat_terms, FemSpace, Partition};

const NODE_TOL: f64 = 1e-13;
const SMOOTH_NODES: usize = 12;
const ENDPOINT_NODES: usize = 16;

struct CellMoments {
    left: Vec<f64>,
    right: Vec<f64>,
}

fn cell_moments(p: f64, q: f64, anchors: &[f64], k: &DiffusivityField, beta: f64) -> Result<CellMoments> {
    let n = anchors.len();
    let mut m = CellMoments { left: vec![0.0; n], right: vec![0.0; n] };
    let breaks = k.breaks();
    let inner_break = breaks.iter().any(|&b| b > p + NODE_TOL && b < q - NODE_TOL);
    let kfun = |x: f64| k.eval(x);
    let weight = Weight { func: &kfun, breaks: &breaks };
    let len = q - p;

    let stepwise = k.is_constant() || matches!(k.kind(), DiffusivityKind::PiecewiseConstant { .. });
    if stepwise && !inner_break {
        let kc = k.eval(0.5 * (p + q));
        for (i, &a) in anchors.iter().enumerate() {
            if a < q - NODE_TOL {
                m.left[i] = kc * power_integral_left(a.min(p), beta, p, q);
            }
            if a > p + NODE_TOL {
                m.right[i] = kc * power_integral_right(a.max(q), beta, p, q);
            }
        }
        return Ok(m);
    }

    if inner_break {
        for (i, &a) in anchors.iter().enumerate() {
            if a < q - NODE_TOL {
                m.left[i] = power_moment(a, Side::Left, beta, &weight, p, q, CellRule::default())?;
            }
            if a > p + NODE_TOL {
                m.right[i] = power_moment(a, Side::Right, beta, &weight, p, q, CellRule::default())?;
            }
        }
        return Ok(m);
    }

    let gl = gauss_legendre(SMOOTH_NODES);
    let half = 0.5 * len;
    let xs: Vec<f64> = gl.nodes.iter().map(|t| p + (1.0 + t) * half).collect();
    let ws: Vec<f64> = gl.weights.iter().zip(&xs).map(|(w, &x)| w * half * k.eval(x)).collect();
    let (lx, lw) = weighted_rule(ENDPOINT_NODES, p, q, beta, 0.0)?;
    let (rx, rw) = weighted_rule(ENDPOINT_NODES, p, q, 0.0, beta)?;
    for (i, &a) in anchors.iter().enumerate() {
        if a < q - NODE_TOL {
            m.left[i] = if (a - p).abs() <= NODE_TOL {
                lx.iter().zip(&lw).map(|(&x, w)| w * k.eval(x)).sum()
            } else if p - a >= len {
                xs.iter().zip(&ws).map(|(&x, w)| w * (x - a).powf(beta)).sum()
            } else {
                power_moment(a, Side::Left, beta, &weight, p, q, CellRule::default())?
            };
        }
        if a > p + NODE_TOL {
            m.right[i] = if (a - q).abs() <= NODE_TOL {
                rx.iter().zip(&rw).map(|(&x, w)| w * k.eval(x)).sum()
            } else if a - q >= len {
                xs.iter().zip(&ws).map(|(&x, w)| w * (a - x).powf(beta)).sum()
            } else {
                power_moment(a, Side::Right, beta, &weight, p, q, CellRule::default())?
            };
        }
    }
    Ok(m)
}

fn check_nested(trial: &Partition, test: &Partition) -> Result<()> {
    let t = test.nodes();
    for &x in trial.nodes() {
        let i = t.partition_point(|&y| y < x - NODE_TOL);
        if i >= t.len() || (t[i] - x).abs() > NODE_TOL {
            return Err(Error::Parameter(format!("trial node {x} is not a node of the test partition")));
        }
    }
    Ok(())
}

/// Matrix (K D I^β_θ φ_j, D ψ_i) with φ_j the trial hats and ψ_i the test
/// hats. Every trial node must be a test node.
pub fn fractional_stiffness(trial: &Partition, test: &Partition, k: &DiffusivityField, beta: f64, theta: f64) -> Result<DMatrix<f64>> {
    check_nested(trial, test)?;
    let anchors = trial.nodes();
    let tn = test.nodes();
    let cells: Vec<CellMoments> = (0..test.n_cells())
        .into_par_iter()
        .map(|c| cell_moments(tn[c], tn[c + 1], anchors, k, beta))
        .collect::<Result<_>>()?;

    let big_n = trial.n_cells();
    let h: Vec<f64> = (0..big_n).map(|c| anchors[c + 1] - anchors[c]).collect();
    let scale = 1.0 / gamma_unchecked(1.0 + beta);
    let rows = test.n_cells() - 1;
    let cols = big_n - 1;
    let row_data: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let t = i + 1;
            let support = [(t - 1, 1.0 / (tn[t] - tn[t - 1])), (t, -1.0 / (tn[t + 1] - tn[t]))];
            (0..cols)
                .map(|j| {
                    let m = j + 1;
                    let (a, b) = (1.0 / h[m - 1], 1.0 / h[m]);
                    let lam = [(m - 1, a), (m, -(a + b)), (m + 1, b)];
                    let rho = [(m - 1, -a), (m, a + b), (m + 1, -b)];
                    support
                        .iter()
                        .map(|&(c, slope)| {
                            let mc = &cells[c];
                            let s: f64 = lam.iter().map(|&(k, l)| theta * l * mc.left[k]).sum::<f64>()
                                + rho.iter().map(|&(k, r)| (1.0 - theta) * r * mc.right[k]).sum::<f64>();
                            slope * s
                        })
                        .sum::<f64>()
                        * scale
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(rows, cols, |i, j| row_data[i][j]))
}

/// Load vector ⟨f, ψ_i⟩ over the hats of `space`.
pub fn load_vector(space: &FemSpace, f: &PowerTermSum) -> Result<Vec<f64>> {
    let nodes = space.partition().nodes();
    (0..space.dof_count())
        .into_par_iter()
        .map(|i| {
            if f.is_empty() {
                return Ok(0.0);
            }
            let hat = hat_terms(space, i);
            let t = space.dof_node(i);
            integrate_product(&[f, &hat], &Weight::unit(), nodes[t - 1], nodes[t + 1], CellRule::default())
        })
        .collect()
}
