use alloc::vec::Vec;

use super::Executor;
use crate::data::Sample;
use crate::elastic_net::Coder;
use crate::error::{Error, Result};
use crate::losses::{Label, TaskLoss};
use crate::model::Model;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarmStartOptions {
    /// Gradient-norm stopping threshold for the iterative losses.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for WarmStartOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iter: 1000,
        }
    }
}

/// Fits `W` for the fixed dictionary (and transform) of `model` by minimizing
/// `mean l_s(y_i, W, alpha_i) + nu/2 ||W||_F^2`, with codes computed once.
///
/// The square loss is solved through its normal equations; the other losses
/// by gradient descent with backtracking, starting from `W = 0`.
pub fn warm_start_w<E: Executor>(model: &Model, data: &[Sample], nu: f64, opts: &WarmStartOptions, exec: &E) -> Result<Matrix> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("nu must be finite and >= 0, got {nu}")));
    }
    let coder = Coder::new(&model.dictionary);
    let codes: Vec<Vector> = exec
        .map(data, |s: &Sample| -> Result<Vector> { Ok(coder.encode(&model.encoder_input(&s.x)?, &model.coding)?.alpha) })
        .into_iter()
        .collect::<Result<_>>()?;
    let (rows, p) = (model.w.nrows(), model.w.ncols());
    match model.loss {
        TaskLoss::Square => ridge(data, &codes, rows, p, nu),
        loss => descend(loss, data, &codes, rows, p, nu, opts),
    }
}

fn ridge(data: &[Sample], codes: &[Vector], q: usize, p: usize, nu: f64) -> Result<Matrix> {
    let n = data.len() as f64;
    let mut gram = Matrix::zeros(p, p);
    let mut cross = Matrix::zeros(q, p);
    for (s, a) in data.iter().zip(codes) {
        let Label::Target(y) = &s.label else {
            return Err(Error::InvalidLabel(alloc::format!("{:?} does not fit the square loss", s.label)));
        };
        if y.len() != q {
            return Err(crate::error::shape_err("target", q, y.len()));
        }
        gram.syger(1.0 / n, a, a, 1.0);
        cross.ger(1.0 / n, y, a, 1.0);
    }
    gram.fill_upper_triangle_with_lower_triangle();
    for i in 0..p {
        gram[(i, i)] += nu;
    }
    let scale = gram.diagonal().amax().max(f64::MIN_POSITIVE);
    let chol = gram.clone().cholesky().ok_or(Error::SingularNormalEquations)?;
    let l = chol.l_dirty();
    if (0..p).any(|i| l[(i, i)] * l[(i, i)] <= 1e-12 * scale) {
        return Err(Error::SingularNormalEquations);
    }
    // W G = C  <=>  G W^T = C^T
    let wt = chol.solve(&cross.transpose());
    if wt.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularNormalEquations);
    }
    Ok(wt.transpose())
}

fn objective(loss: TaskLoss, data: &[Sample], codes: &[Vector], w: &Matrix, nu: f64, grad: bool) -> Result<(f64, Matrix)> {
    let n = data.len() as f64;
    let mut value = 0.0;
    let mut g = Matrix::zeros(w.nrows(), w.ncols());
    for (s, a) in data.iter().zip(codes) {
        let e = loss.eval(&s.label, &s.x, w, a)?;
        value += e.value;
        if grad {
            g += e.grad_w;
        }
    }
    g /= n;
    g += w * nu;
    Ok((value / n + 0.5 * nu * w.norm_squared(), g))
}

fn descend(loss: TaskLoss, data: &[Sample], codes: &[Vector], rows: usize, p: usize, nu: f64, opts: &WarmStartOptions) -> Result<Matrix> {
    let mut w = Matrix::zeros(rows, p);
    let (mut f, mut g) = objective(loss, data, codes, &w, nu, true)?;
    let mut step = 1.0;
    for _ in 0..opts.max_iter {
        let gn2 = g.norm_squared();
        if gn2.sqrt() <= opts.grad_tol {
            break;
        }
        loop {
            let trial = &w - &g * step;
            let (ft, _) = objective(loss, data, codes, &trial, nu, false)?;
            if ft <= f - 0.5 * step * gn2 {
                w = trial;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok(w);
            }
        }
        (f, g) = objective(loss, data, codes, &w, nu, true)?;
        step *= 2.0;
    }
    Ok(w)
}
