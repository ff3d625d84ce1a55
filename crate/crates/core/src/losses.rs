//! Supervised losses `l_s(y, W, alpha)` with gradients in `W` and `alpha`.
//!
//! All losses here are twice continuously differentiable, which is what the
//! gradient formulas of the bilevel objective rely on. Intercepts are not
//! modelled; append a constant coordinate to the signal (and a matching atom)
//! if one is needed.

use alloc::format;

use crate::error::{shape_err, Error, Result};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskLoss {
    /// `1/2 ||y - W alpha||^2`, `W` is `q x p`.
    Square,
    /// `log(1 + exp(-y w^T alpha))`, `W` is `1 x p`.
    Logistic,
    /// `log(1 + exp(-y x^T W alpha))`, `W` is `m x p`.
    BilinearLogistic,
    /// Softmax cross-entropy over the rows of `W` (`q x p`).
    Softmax,
}

impl TaskLoss {
    pub fn name(&self) -> &'static str {
        match self {
            TaskLoss::Square => "square",
            TaskLoss::Logistic => "logistic",
            TaskLoss::BilinearLogistic => "bilinear_logistic",
            TaskLoss::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "square" => Some(TaskLoss::Square),
            "logistic" => Some(TaskLoss::Logistic),
            "bilinear_logistic" => Some(TaskLoss::BilinearLogistic),
            "softmax" => Some(TaskLoss::Softmax),
            _ => None,
        }
    }

    /// Evaluates the loss. `x` is the raw input signal; only the bilinear
    /// loss reads it.
    pub fn eval(&self, label: &Label, x: &Vector, w: &Matrix, alpha: &Vector) -> Result<LossEval> {
        match (self, label) {
            (TaskLoss::Square, Label::Target(y)) => square_loss(y, w, alpha),
            (TaskLoss::Logistic, Label::Binary(y)) => logistic_loss(*y, w, alpha),
            (TaskLoss::BilinearLogistic, Label::Binary(y)) => bilinear_logistic_loss(*y, x, w, alpha),
            (TaskLoss::Softmax, Label::Class(y)) => softmax_loss(*y, w, alpha),
            (loss, label) => Err(Error::InvalidLabel(format!("{label:?} does not fit the {} loss", loss.name()))),
        }
    }
}

/// Supervision attached to a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Label {
    /// Real-valued regression target.
    Target(Vector),
    /// Binary label, must be `-1` or `+1`.
    Binary(i8),
    /// Class label in `1..=q`.
    Class(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    /// Same shape as `W`.
    pub grad_w: Matrix,
    pub grad_alpha: Vector,
}

fn check_alpha(w: &Matrix, alpha: &Vector, context: &'static str) -> Result<()> {
    if w.ncols() != alpha.len() {
        return Err(shape_err(context, format!("W with {} columns", alpha.len()), format!("{}x{}", w.nrows(), w.ncols())));
    }
    Ok(())
}

fn check_binary(y: i8) -> Result<f64> {
    match y {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(Error::InvalidLabel(format!("binary label must be -1 or +1, got {other}"))),
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Logistic sigmoid `1 / (1 + exp(-z))`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

pub fn square_loss(y: &Vector, w: &Matrix, alpha: &Vector) -> Result<LossEval> {
    check_alpha(w, alpha, "square loss")?;
    if y.len() != w.nrows() {
        return Err(shape_err("square loss target", w.nrows(), y.len()));
    }
    let residual = y - w * alpha;
    Ok(LossEval {
        value: 0.5 * residual.norm_squared(),
        grad_w: -(&residual * alpha.transpose()),
        grad_alpha: -w.tr_mul(&residual),
    })
}

/// Logistic loss with `w` stored as a `1 x p` matrix.
pub fn logistic_loss(y: i8, w: &Matrix, alpha: &Vector) -> Result<LossEval> {
    let y = check_binary(y)?;
    check_alpha(w, alpha, "logistic loss")?;
    if w.nrows() != 1 {
        return Err(shape_err("logistic loss weights", "1 row", w.nrows()));
    }
    let score = w.row(0).dot(&alpha.transpose());
    let margin = y * score;
    let s = sigmoid(-margin);
    Ok(LossEval {
        value: log1p_exp(-margin),
        grad_w: Matrix::from_row_slice(1, alpha.len(), alpha.as_slice()) * (-y * s),
        grad_alpha: w.row(0).transpose() * (-y * s),
    })
}

pub fn bilinear_logistic_loss(y: i8, x: &Vector, w: &Matrix, alpha: &Vector) -> Result<LossEval> {
    let y = check_binary(y)?;
    check_alpha(w, alpha, "bilinear loss")?;
    if x.len() != w.nrows() {
        return Err(shape_err("bilinear loss signal", w.nrows(), x.len()));
    }
    let wtx = w.tr_mul(x);
    let margin = y * wtx.dot(alpha);
    let s = sigmoid(-margin);
    Ok(LossEval {
        value: log1p_exp(-margin),
        grad_w: (x * alpha.transpose()) * (-y * s),
        grad_alpha: wtx * (-y * s),
    })
}

/// Softmax cross-entropy, `y` in `1..=q`.
pub fn softmax_loss(y: usize, w: &Matrix, alpha: &Vector) -> Result<LossEval> {
    check_alpha(w, alpha, "softmax loss")?;
    let q = w.nrows();
    if y == 0 || y > q {
        return Err(Error::InvalidLabel(format!("class label {y} outside 1..={q}")));
    }
    let scores = w * alpha;
    let top = scores.max();
    let shifted = scores.map(|s| libm::exp(s - top));
    let total = shifted.sum();
    let lse = top + libm::log(total);
    let mut resid = shifted / total;
    resid[y - 1] -= 1.0;
    Ok(LossEval {
        value: lse - scores[y - 1],
        grad_w: &resid * alpha.transpose(),
        grad_alpha: w.tr_mul(&resid),
    })
}
