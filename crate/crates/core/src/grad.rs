//! Gradients of the task-driven objective through the sparse coding step.
//!
//! For a sample with code `alpha` on active set `A`, the auxiliary vector is
//! `beta_A = (D_A^T D_A + lambda2 I)^{-1} grad_alpha l_s`, `beta` zero off `A`,
//! and
//!
//! ```text
//! grad_W = grad_W l_s(y, W, alpha)
//! grad_D = -D beta alpha^T + (x~ - D alpha) beta^T      x~ = Z x or x
//! grad_Z = D beta x^T
//! ```
//!
//! At points where the active set is about to change the gradient is only
//! one-sided; the value returned is the one of the computed active set.

use crate::elastic_net::SparseCode;
use crate::error::{shape_err, Error, Result};
use crate::losses::Label;
use crate::model::Model;
use crate::{Matrix, Vector};

/// `beta*` from the code's own Cholesky factor (two triangular solves).
/// The factor already includes `lambda2`.
pub fn compute_beta(code: &SparseCode, grad_alpha: &Vector) -> Result<Vector> {
    if code.chol.dim() != code.active.len() {
        return Err(Error::StaleCholesky {
            factor: code.chol.dim(),
            active: code.active.len(),
        });
    }
    if grad_alpha.len() != code.p() {
        return Err(shape_err("grad_alpha", code.p(), grad_alpha.len()));
    }
    let mut beta = Vector::zeros(code.p());
    if code.active.is_empty() {
        return Ok(beta);
    }
    let rhs: alloc::vec::Vec<f64> = code.active.iter().map(|&j| grad_alpha[j]).collect();
    let sol = code.chol.solve(&rhs);
    for (&j, v) in code.active.iter().zip(sol) {
        beta[j] = v;
    }
    Ok(beta)
}

/// Per-sample quantities from which all gradients are assembled. The
/// dictionary gradient is supported on the active columns only, so it is
/// kept in factored form.
#[derive(Debug, Clone)]
pub struct SampleTerms {
    pub loss: f64,
    pub code: SparseCode,
    pub beta: Vector,
    pub grad_w: Matrix,
    /// `D beta`
    pub d_beta: Vector,
    /// `x~ - D alpha`
    pub residual: Vector,
}

impl SampleTerms {
    pub fn compute(label: &Label, x: &Vector, model: &Model) -> Result<Self> {
        let input = model.encoder_input(x)?;
        let code = crate::elastic_net::Coder::new(&model.dictionary).encode(&input, &model.coding)?;
        Self::from_code(label, x, &input, model, code)
    }

    /// Same as [`SampleTerms::compute`] for a code already solved against
    /// `input = encoder_input(x)`.
    pub fn from_code(label: &Label, x: &Vector, input: &Vector, model: &Model, code: SparseCode) -> Result<Self> {
        let eval = model.loss.eval(label, x, &model.w, &code.alpha)?;
        let beta = compute_beta(&code, &eval.grad_alpha)?;
        let d = model.dictionary.atoms();
        let d_beta = sparse_product(d, &code.active, &beta);
        let residual = input - sparse_product(d, &code.active, &code.alpha);
        Ok(Self {
            loss: eval.value,
            code,
            beta,
            grad_w: eval.grad_w,
            d_beta,
            residual,
        })
    }

    /// `acc += scale * (-D beta alpha^T + (x~ - D alpha) beta^T)`.
    pub fn add_grad_d(&self, acc: &mut Matrix, scale: f64) {
        for &j in &self.code.active {
            let mut col = acc.column_mut(j);
            col.axpy(-scale * self.code.alpha[j], &self.d_beta, 1.0);
            col.axpy(scale * self.beta[j], &self.residual, 1.0);
        }
    }

    /// `acc += scale * D beta x^T`.
    pub fn add_grad_z(&self, acc: &mut Matrix, x: &Vector, scale: f64) {
        acc.ger(scale, &self.d_beta, x, 1.0);
    }
}

fn sparse_product(d: &Matrix, active: &[usize], coef: &Vector) -> Vector {
    let mut out = Vector::zeros(d.nrows());
    for &j in active {
        out.axpy(coef[j], &d.column(j), 1.0);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGradients {
    pub grad_w: Matrix,
    pub grad_d: Matrix,
    pub grad_z: Option<Matrix>,
    pub beta: Vector,
}

/// Dense per-sample gradients of `l_s(y, W, alpha*(x~, D))` for a code
/// solved against the model's encoder input.
pub fn grad_sample(label: &Label, x: &Vector, model: &Model, code: &SparseCode) -> Result<SampleGradients> {
    let input = model.encoder_input(x)?;
    if code.p() != model.dictionary.p() {
        return Err(shape_err("code length", model.dictionary.p(), code.p()));
    }
    let terms = SampleTerms::from_code(label, x, &input, model, code.clone())?;
    let mut grad_d = Matrix::zeros(model.dictionary.m(), model.dictionary.p());
    terms.add_grad_d(&mut grad_d, 1.0);
    let grad_z = model.z.as_ref().map(|z| {
        let mut g = Matrix::zeros(z.nrows(), z.ncols());
        terms.add_grad_z(&mut g, x, 1.0);
        g
    });
    Ok(SampleGradients {
        grad_w: terms.grad_w,
        grad_d,
        grad_z,
        beta: terms.beta,
    })
}

/// Gradient in `D` of the reconstruction loss `l_u(x, D)`:
/// `-(x - D alpha) alpha^T`.
pub fn unsup_grad_d(x: &Vector, d: &Matrix, code: &SparseCode) -> Result<Matrix> {
    if x.len() != d.nrows() {
        return Err(shape_err("unsup_grad_d signal", d.nrows(), x.len()));
    }
    if code.p() != d.ncols() {
        return Err(shape_err("unsup_grad_d code", d.ncols(), code.p()));
    }
    let mut g = Matrix::zeros(d.nrows(), d.ncols());
    add_unsup_grad_d(&mut g, x, d, code, 1.0);
    Ok(g)
}

/// `acc += scale * (-(x - D alpha) alpha^T)`, touching active columns only.
pub fn add_unsup_grad_d(acc: &mut Matrix, x: &Vector, d: &Matrix, code: &SparseCode, scale: f64) {
    let residual = x - sparse_product(d, &code.active, &code.alpha);
    for &j in &code.active {
        acc.column_mut(j).axpy(-scale * code.alpha[j], &residual, 1.0);
    }
}
