use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manufactured::ManufacturedCase;
use crate::error::{Error, Result};
use crate::fracops::terms::AsTerms;
use crate::galerkin::{assemble_galerkin, galerkin_solve};
use crate::petrov::{assemble_pg, pg_solve, solve_via_characterization};
use crate::spaces::{build_partition, energy_error, l2_norm, FemSpace, GridFunction, Grading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Galerkin,
    Petrov,
    Characterization,
}

impl Method {
    /// Order of the energy seminorm natural to the formulation.
    pub fn energy_order(self, beta: f64) -> f64 {
        match self {
            Method::Galerkin => 1.0 - 0.5 * beta,
            Method::Petrov | Method::Characterization => 1.0 - beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub err_l2: Option<f64>,
    pub err_energy: Option<f64>,
    /// log2 of the energy-error ratio to the previous row.
    pub order: Option<f64>,
    pub order_l2: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub method: Method,
    pub mu: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Energy orders of the last `count` refinement pairs.
    pub fn last_orders(&self, count: usize) -> Vec<Option<f64>> {
        let n = self.rows.len();
        self.rows[n.saturating_sub(count)..].iter().map(|r| r.order).collect()
    }
}

fn solve_row(case: &ManufacturedCase, method: Method, n: usize, mu: f64) -> Result<(f64, f64)> {
    let space = Arc::new(FemSpace::hats(build_partition(n, Grading::Uniform)?));
    let u: GridFunction = match method {
        Method::Galerkin => galerkin_solve(&assemble_galerkin(space, &case.k, case.beta, case.theta, &case.f)?)?.u,
        Method::Petrov => pg_solve(&assemble_pg(space.clone(), space, &case.k, case.beta, case.theta, &case.f)?)?.u,
        Method::Characterization => solve_via_characterization(&case.k, case.beta, case.theta, &case.f, space)?.u,
    };
    let diff = &u.to_terms() - &case.u_exact;
    Ok((l2_norm(&diff)?, energy_error(&u, &case.u_exact, mu)?))
}

fn order(prev: Option<f64>, cur: Option<f64>) -> Option<f64> {
    match (prev, cur) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
        _ => None,
    }
}

/// Errors against the exact solution on uniform meshes; rows run in
/// parallel and failures are recorded per row.
pub fn convergence_study(case: &ManufacturedCase, method: Method, n_list: &[usize]) -> Result<ConvergenceTable> {
    if n_list.len() < 4 {
        return Err(Error::Parameter(format!("need at least 4 mesh sizes, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Parameter("mesh sizes must double at each step".into()));
    }
    let mu = method.energy_order(case.beta);
    let results: Vec<Result<(f64, f64)>> = n_list.par_iter().map(|&n| solve_row(case, method, n, mu)).collect();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for (&n, r) in n_list.iter().zip(results) {
        let (err_l2, err_energy, failure) = match r {
            Ok((a, b)) => (Some(a), Some(b), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        let prev = rows.last();
        rows.push(ConvergenceRow {
            n,
            h: 1.0 / n as f64,
            err_l2,
            err_energy,
            order: order(prev.and_then(|p| p.err_energy), err_energy),
            order_l2: order(prev.and_then(|p| p.err_l2), err_l2),
            failure,
        });
    }
    Ok(ConvergenceTable { method, mu, rows })
}
