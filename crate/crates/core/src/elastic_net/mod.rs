//! Elastic-net sparse coding
//!
//! ```text
//! alpha*(x, D) = argmin_a  1/2 ||x - D a||^2 + lambda1 ||a||_1 + lambda2/2 ||a||^2
//! ```
//!
//! solved by a homotopy (LARS-style) path over the l1 weight that keeps a
//! Cholesky factor of `D_A^T D_A + lambda2 I` for the active set `A`. The
//! factor is handed to the gradient engine, which reuses it instead of
//! refactorizing.

mod cholesky;
pub mod coordinate_descent;
mod homotopy;
mod kkt;

use alloc::format;
use alloc::vec::Vec;

pub use cholesky::{CholeskyFactor, Singular};
pub use homotopy::Coder;
pub use kkt::{check_kkt, KktReport};

use crate::dictionary::Dictionary;
use crate::error::{shape_err, Error, Result};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetParams {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Tolerance on the optimality residuals.
    pub tol: f64,
    /// Cap on the active-set size; `None` means `min(4p, 10m)`.
    pub max_active: Option<usize>,
    /// Permits `lambda1 = lambda2 = 0` (plain least squares on the path).
    pub allow_unregularized: bool,
}

impl ElasticNetParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let params = Self {
            lambda1,
            lambda2,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda1 must be finite and >= 0, got {}", self.lambda1)));
        }
        if !(self.lambda2.is_finite() && self.lambda2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda2 must be finite and >= 0, got {}", self.lambda2)));
        }
        if self.lambda1 == 0.0 && self.lambda2 == 0.0 && !self.allow_unregularized {
            return Err(Error::InvalidParameter(
                "lambda1 = lambda2 = 0 is unregularized least squares; set allow_unregularized to request it".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_active == Some(0) {
            return Err(Error::InvalidParameter("max_active must be >= 1".into()));
        }
        Ok(())
    }

    pub fn active_cap(&self, m: usize, p: usize) -> usize {
        self.max_active.unwrap_or_else(|| (4 * p).min(10 * m))
    }
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        Self {
            lambda1: 0.15,
            lambda2: 0.01,
            tol: 1e-6,
            max_active: None,
            allow_unregularized: false,
        }
    }
}

/// Solution of one elastic-net problem together with the byproducts needed
/// downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub alpha: Vector,
    /// Active indices in the order they are stored in `chol`.
    pub active: Vec<usize>,
    /// `signs[k] = sign(alpha[active[k]])`, each `+1.0` or `-1.0`.
    pub signs: Vec<f64>,
    /// Factor of `D_A^T D_A + lambda2 I` with rows/columns ordered as `active`.
    pub chol: CholeskyFactor,
    pub objective: f64,
}

impl SparseCode {
    pub fn zero(p: usize, objective: f64) -> Self {
        Self {
            alpha: Vector::zeros(p),
            active: Vec::new(),
            signs: Vec::new(),
            chol: CholeskyFactor::new(),
            objective,
        }
    }

    pub fn p(&self) -> usize {
        self.alpha.len()
    }
}

/// Value of the elastic-net objective at `alpha`.
pub fn objective(x: &Vector, dict: &Dictionary, alpha: &Vector, lambda1: f64, lambda2: f64) -> f64 {
    let r = x - dict.atoms() * alpha;
    0.5 * r.norm_squared() + lambda1 * alpha.lp_norm(1) + 0.5 * lambda2 * alpha.norm_squared()
}

/// Solves the elastic net for a single signal.
pub fn solve(x: &Vector, dict: &Dictionary, params: &ElasticNetParams) -> Result<SparseCode> {
    Coder::new(dict).encode(x, params)
}

/// Solves the elastic net for every column of `signals`, sharing one Gram
/// matrix.
pub fn batch_solve(signals: &Matrix, dict: &Dictionary, params: &ElasticNetParams) -> Result<Vec<SparseCode>> {
    if signals.ncols() == 0 {
        return Err(Error::Empty("signal batch"));
    }
    let coder = Coder::new(dict);
    signals
        .column_iter()
        .map(|col| coder.encode(&col.into_owned(), params))
        .collect()
}

/// Closed form of the active coefficients given the active set and signs:
/// `(D_A^T D_A + lambda2 I)^{-1} (D_A^T x - lambda1 s_A)`, via a fresh dense
/// factorization.
pub fn active_closed_form(
    x: &Vector,
    dict: &Dictionary,
    active: &[usize],
    signs: &[f64],
    params: &ElasticNetParams,
) -> Result<Vector> {
    if active.is_empty() {
        return Err(Error::Empty("active set"));
    }
    if active.len() != signs.len() {
        return Err(shape_err("active_closed_form signs", active.len(), signs.len()));
    }
    if x.len() != dict.m() {
        return Err(shape_err("active_closed_form signal", dict.m(), x.len()));
    }
    if let Some(&bad) = active.iter().find(|&&j| j >= dict.p()) {
        return Err(shape_err("active_closed_form index", format!("< {}", dict.p()), bad));
    }
    let sub = dict.atoms().select_columns(active);
    let system = sub.tr_mul(&sub) + Matrix::identity(active.len(), active.len()) * params.lambda2;
    let rhs = sub.tr_mul(x) - Vector::from_column_slice(signs) * params.lambda1;
    let chol = system.cholesky().ok_or(Error::SingularGram)?;
    // Cholesky in nalgebra does not reject tiny pivots; verify the solve.
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGram);
    }
    Ok(sol)
}

fn validate_inputs(x: &Vector, dict: &Dictionary, params: &ElasticNetParams) -> Result<()> {
    params.validate()?;
    if x.len() != dict.m() {
        return Err(shape_err("signal", dict.m(), x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal"));
    }
    Ok(())
}
