use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::cost;
use crate::error::{check_dim, Error, Result};

/// Number of rank-one updates after which the factor and inverse are rebuilt
/// from the accumulated matrix.
pub const REFACTOR_PERIOD: usize = 10_000;

/// Symmetric positive-definite matrix kept together with its lower Cholesky
/// factor and its inverse.
///
/// Only PSD rank-one additions are supported, so the smallest eigenvalue never
/// drops below the value recorded at construction (`floor`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    mat: DMatrix<f64>,
    chol: DMatrix<f64>,
    inv: DMatrix<f64>,
    floor: f64,
    since_refactor: usize,
}

impl SpdMatrix {
    /// `scale · I_dim`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param(
                "scale",
                format!("must be finite and positive, got {scale}"),
            ));
        }
        Ok(Self {
            mat: DMatrix::from_diagonal_element(dim, dim, scale),
            chol: DMatrix::from_diagonal_element(dim, dim, scale.sqrt()),
            inv: DMatrix::from_diagonal_element(dim, dim, 1.0 / scale),
            floor: scale,
            since_refactor: 0,
        })
    }

    /// Factorizes a dense symmetric matrix. The input is symmetrized first.
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::param("matrix", "must be square and nonempty"));
        }
        let mat = (&mat + mat.transpose()) * 0.5;
        let d = mat.nrows();
        cost::charge(d * d * d);
        let chol = mat.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let floor = SymmetricEigen::new(mat.clone()).eigenvalues.min();
        if !(floor > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            inv: chol.inverse(),
            chol: chol.l(),
            mat,
            floor,
            since_refactor: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Lower-triangular `L` with `M = L Lᵀ`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// Lower bound on the smallest eigenvalue.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `M ← M + w·v vᵀ` in `O(d²)`: Givens update of the factor and
    /// Sherman–Morrison update of the inverse.
    pub fn rank1_update(&mut self, v: &DVector<f64>, w: f64) -> Result<()> {
        check_dim(self.dim(), v.len())?;
        if w < 0.0 || w.is_nan() {
            return Err(Error::NegativeWeight(w));
        }
        if w == 0.0 {
            return Ok(());
        }
        let d = self.dim();
        cost::charge(d * d);

        self.mat.ger(w, v, v, 1.0);

        let mut x = v * w.sqrt();
        for k in 0..d {
            let lkk = self.chol[(k, k)];
            let r = lkk.hypot(x[k]);
            let c = r / lkk;
            let s = x[k] / lkk;
            self.chol[(k, k)] = r;
            for i in k + 1..d {
                let lik = (self.chol[(i, k)] + s * x[i]) / c;
                self.chol[(i, k)] = lik;
                x[i] = c * x[i] - s * lik;
            }
        }

        let u = &self.inv * v;
        let denom = 1.0 + w * v.dot(&u);
        self.inv.ger(-w / denom, &u, &u, 1.0);

        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_PERIOD {
            self.refactorize()?;
        }
        Ok(())
    }

    /// Rebuilds the factor and inverse from the stored matrix.
    pub fn refactorize(&mut self) -> Result<()> {
        let d = self.dim();
        cost::charge(d * d * d);
        let chol = self
            .mat
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        self.inv = chol.inverse();
        self.chol = chol.l();
        self.since_refactor = 0;
        Ok(())
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        Ok(&self.mat * x)
    }

    /// `xᵀ M x`.
    pub fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        Ok(self.quad_form(x))
    }

    fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for j in 0..d {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            acc += self.mat[(j, j)] * xj * xj;
            for i in j + 1..d {
                acc += 2.0 * self.mat[(i, j)] * x[i] * xj;
            }
        }
        acc
    }

    /// `xᵀ M⁻¹ x = ‖L⁻¹x‖²`, computed with a triangular solve against the factor.
    pub fn inv_norm_sq(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.solve_lower(x)?.norm_squared())
    }

    /// `xᵀ M⁻¹ x` from the stored inverse; cheaper, used by planners.
    pub fn inv_norm_sq_cached(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        Ok(x.dot(&(&self.inv * x)).max(0.0))
    }

    /// `L⁻¹ x`.
    pub fn solve_lower(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        self.chol
            .solve_lower_triangular(x)
            .ok_or(Error::NotPositiveDefinite)
    }

    /// `L⁻ᵀ x`.
    pub fn solve_upper(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        self.chol
            .tr_solve_lower_triangular(x)
            .ok_or(Error::NotPositiveDefinite)
    }

    /// `Lᵀ x`.
    pub fn factor_t_mul(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        Ok(self.chol.tr_mul(x))
    }

    /// `M⁻¹ x` via the stored inverse.
    pub fn solve(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        cost::charge(self.dim() * self.dim());
        Ok(&self.inv * x)
    }

    pub fn log_det(&self) -> f64 {
        self.chol.diagonal().iter().map(|l| 2.0 * l.ln()).sum()
    }

    /// Smallest eigenvalue, `O(d³)`.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        cost::charge(d * d * d);
        SymmetricEigen::new(self.mat.clone()).eigenvalues.min()
    }

    /// Eigen-decomposition of the matrix, `O(d³)`.
    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let d = self.dim();
        cost::charge(d * d * d);
        SymmetricEigen::new(self.mat.clone())
    }
}
