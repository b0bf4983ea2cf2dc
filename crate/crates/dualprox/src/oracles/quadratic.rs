//! Strongly convex quadratic costs `f(x) = xᵀQx + rᵀx` with closed-form
//! conjugate and coupled argmin.

use nalgebra::{DMatrix, DVector};

use super::OracleError;

#[derive(Debug, Clone)]
enum QuadForm {
    Diagonal {
        diag: DVector<f64>,
        inv_diag: DVector<f64>,
    },
    Dense {
        q: DMatrix<f64>,
        q_inv: DMatrix<f64>,
    },
}

/// `f(x) = xᵀQx + rᵀx` with symmetric positive-definite `Q`.
///
/// Note the quadratic carries no 1/2 factor, so the Hessian is `2Q` and the
/// strong-convexity modulus is `σ = 2·λ_min(Q)`. Diagonal `Q` gets dedicated
/// storage since every sampled instance uses it.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    form: QuadForm,
    r: DVector<f64>,
    sigma: f64,
}

impl QuadraticOracle {
    /// Diagonal `Q` given by its diagonal entries (all must be positive).
    pub fn diagonal(diag: DVector<f64>, r: DVector<f64>) -> Result<Self, OracleError> {
        if diag.len() != r.len() {
            return Err(OracleError::DimensionMismatch {
                expected: diag.len(),
                got: r.len(),
            });
        }
        if diag.iter().any(|&q| q <= 0.0 || !q.is_finite()) {
            return Err(OracleError::NotPositiveDefinite);
        }
        let sigma = 2.0 * diag.min();
        let inv_diag = diag.map(|q| 1.0 / q);
        Ok(Self {
            form: QuadForm::Diagonal { diag, inv_diag },
            r,
            sigma,
        })
    }

    /// Dense symmetric positive-definite `Q`.
    pub fn dense(q: DMatrix<f64>, r: DVector<f64>) -> Result<Self, OracleError> {
        let d = q.nrows();
        if q.ncols() != d || r.len() != d {
            return Err(OracleError::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(OracleError::NotPositiveDefinite);
        }
        let chol = q.clone().cholesky().ok_or(OracleError::NotPositiveDefinite)?;
        let q_inv = chol.inverse();
        let eigs = q.clone().symmetric_eigen().eigenvalues;
        let lambda_min = eigs.min();
        if lambda_min <= 0.0 {
            return Err(OracleError::NotPositiveDefinite);
        }
        Ok(Self {
            form: QuadForm::Dense { q, q_inv },
            r,
            sigma: 2.0 * lambda_min,
        })
    }

    /// Scalar convenience for 1-D instances: `f(x) = q·x² + r·x`.
    pub fn scalar(q: f64, r: f64) -> Result<Self, OracleError> {
        Self::diagonal(DVector::from_element(1, q), DVector::from_element(1, r))
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// Strong-convexity modulus `σ = 2·λ_min(Q)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.r
    }

    /// Diagonal of `Q` when diagonally stored.
    pub fn diag(&self) -> Option<&DVector<f64>> {
        match &self.form {
            QuadForm::Diagonal { diag, .. } => Some(diag),
            QuadForm::Dense { .. } => None,
        }
    }

    /// `Q` as a dense matrix (copies for the diagonal case).
    pub fn q_matrix(&self) -> DMatrix<f64> {
        match &self.form {
            QuadForm::Diagonal { diag, .. } => DMatrix::from_diagonal(diag),
            QuadForm::Dense { q, .. } => q.clone(),
        }
    }

    /// `f(x) = xᵀQx + rᵀx`.
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let quad = match &self.form {
            QuadForm::Diagonal { diag, .. } => {
                x.iter().zip(diag.iter()).map(|(&xi, &qi)| qi * xi * xi).sum::<f64>()
            }
            QuadForm::Dense { q, .. } => x.dot(&(q * x)),
        };
        quad + self.r.dot(x)
    }

    fn solve_q(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.form {
            QuadForm::Diagonal { inv_diag, .. } => v.component_mul(inv_diag),
            QuadForm::Dense { q_inv, .. } => q_inv * v,
        }
    }

    /// `∇f(x) = 2Qx + r`.
    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.form {
            QuadForm::Diagonal { diag, .. } => 2.0 * x.component_mul(diag) + &self.r,
            QuadForm::Dense { q, .. } => 2.0 * (q * x) + &self.r,
        }
    }

    /// `argmin_x { xᵀv + f(x) } = −½·Q⁻¹(v + r)`.
    ///
    /// This is also `∇f*(−v)`: the gradient of the conjugate equals the
    /// coupled minimizer with flipped sign.
    pub fn argmin_coupled(&self, v: &DVector<f64>) -> DVector<f64> {
        -0.5 * self.solve_q(&(v + &self.r))
    }

    /// `f*(y) = ¼·(y−r)ᵀQ⁻¹(y−r)`.
    pub fn conjugate(&self, y: &DVector<f64>) -> f64 {
        let diff = y - &self.r;
        0.25 * diff.dot(&self.solve_q(&diff))
    }
}
