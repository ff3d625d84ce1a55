use alloc::format;

use crate::dictionary::Dictionary;
use crate::elastic_net::{Coder, ElasticNetParams, SparseCode};
use crate::error::{shape_err, Error, Result};
use crate::losses::{Label, LossEval, TaskLoss};
use crate::{Matrix, Vector};

/// Parameters `(D, W, Z)` of a task-driven model together with the loss and
/// the elastic-net weights used to encode signals.
///
/// Without a transform the encoder sees `x` directly and `D` is `m x p`.
/// With `Z` (`r x m`) the encoder sees `Z x` and `D` is `r x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub dictionary: Dictionary,
    pub w: Matrix,
    pub z: Option<Matrix>,
    pub loss: TaskLoss,
    pub coding: ElasticNetParams,
}

impl Model {
    pub fn new(dictionary: Dictionary, w: Matrix, z: Option<Matrix>, loss: TaskLoss, coding: ElasticNetParams) -> Result<Self> {
        let model = Self {
            dictionary,
            w,
            z,
            loss,
            coding,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.coding.validate()?;
        let p = self.dictionary.p();
        if self.w.ncols() != p {
            return Err(shape_err("W columns", p, self.w.ncols()));
        }
        if let Some(z) = &self.z {
            if z.nrows() != self.dictionary.m() {
                return Err(shape_err("Z rows", self.dictionary.m(), z.nrows()));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("Z"));
            }
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("W"));
        }
        match self.loss {
            TaskLoss::Logistic if self.w.nrows() != 1 => Err(shape_err("logistic W rows", 1, self.w.nrows())),
            TaskLoss::BilinearLogistic if self.w.nrows() != self.signal_dim() => {
                Err(shape_err("bilinear W rows", self.signal_dim(), self.w.nrows()))
            }
            _ if self.w.nrows() == 0 => Err(Error::InvalidParameter(format!("{} head needs at least one output", self.loss.name()))),
            _ => Ok(()),
        }
    }

    /// Dimension of raw input signals.
    pub fn signal_dim(&self) -> usize {
        match &self.z {
            Some(z) => z.ncols(),
            None => self.dictionary.m(),
        }
    }

    /// `Z x` when a transform is present, else `x`.
    pub fn encoder_input(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.signal_dim() {
            return Err(shape_err("signal", self.signal_dim(), x.len()));
        }
        Ok(match &self.z {
            Some(z) => z * x,
            None => x.clone(),
        })
    }

    pub fn encode(&self, x: &Vector) -> Result<SparseCode> {
        let input = self.encoder_input(x)?;
        Coder::new(&self.dictionary).encode(&input, &self.coding)
    }

    /// Supervised loss of one sample under the current parameters.
    pub fn sample_loss(&self, label: &Label, x: &Vector) -> Result<(SparseCode, LossEval)> {
        let code = self.encode(x)?;
        let eval = self.loss.eval(label, x, &self.w, &code.alpha)?;
        Ok((code, eval))
    }
}
