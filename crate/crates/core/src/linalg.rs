//! Dense direct solves with a 1-norm condition estimate.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Largest condition estimate accepted by [`Factorization::new`].
pub const MAX_CONDITION: f64 = 1e14;

/// LU factorization with partial pivoting and its condition estimate.
pub struct Factorization {
    lu: LU<f64, Dyn, Dyn>,
    l: DMatrix<f64>,
    u: DMatrix<f64>,
    condition: f64,
}

impl Factorization {
    /// Factors a square matrix; fails when it is singular or the estimated
    /// condition number exceeds [`MAX_CONDITION`].
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::Parameter(format!("expected a nonempty square matrix, got {}x{}", a.nrows(), a.ncols())));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("matrix has non-finite entries".into()));
        }
        let lu = a.clone().lu();
        let u = lu.u();
        if u.diagonal().iter().any(|&d| d == 0.0) {
            return Err(Error::Solver { message: "matrix is singular".into(), condition: f64::INFINITY });
        }
        let l = lu.l();
        let mut f = Self { lu, l, u, condition: f64::NAN };
        f.condition = one_norm(a) * f.inverse_norm_estimate();
        if !(f.condition <= MAX_CONDITION) {
            return Err(Error::Solver { message: "matrix is ill-conditioned".into(), condition: f.condition });
        }
        Ok(f)
    }

    /// Estimate of ‖A‖₁‖A⁻¹‖₁.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(b);
        self.lu.solve(&rhs).expect("factor checked nonsingular").as_slice().to_vec()
    }

    /// Solves Aᵀz = b from the same factors.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        // PA = LU, so Aᵀ = Uᵀ Lᵀ P
        let mut z = DVector::from_column_slice(b);
        let ok = self.u.tr_solve_upper_triangular_mut(&mut z) && self.l.tr_solve_lower_triangular_mut(&mut z);
        debug_assert!(ok);
        self.lu.p().inv_permute_rows(&mut z);
        z.as_slice().to_vec()
    }

    /// Hager's estimate of ‖A⁻¹‖₁.
    fn inverse_norm_estimate(&self) -> f64 {
        let n = self.u.nrows();
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        est
    }
}

pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// ‖Ax - b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞).
pub fn relative_residual(a: &DMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
    let r = a * DVector::from_column_slice(x) - DVector::from_column_slice(b);
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let a_inf = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let denom = a_inf * inf(x) + inf(b);
    if denom == 0.0 {
        return 0.0;
    }
    inf(r.as_slice()) / denom
}

/// (A + Aᵀ)/2.
pub fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Whether the symmetric part admits a Cholesky factorization.
pub fn symmetric_part_is_positive_definite(a: &DMatrix<f64>) -> bool {
    symmetric_part(a).cholesky().is_some()
}

/// Smallest eigenvalue of the symmetric part.
pub fn symmetric_part_min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_part(a).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Least-squares solve through the normal equations AᵀA x = Aᵀb.
pub fn least_squares(a: &DMatrix<f64>, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let at = a.transpose();
    let normal = &at * a;
    let rhs = &at * DVector::from_column_slice(b);
    let f = Factorization::new(&normal)?;
    Ok((f.solve(rhs.as_slice()), f.condition()))
}
