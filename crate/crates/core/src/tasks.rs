//! Task heads: which loss a task trains with, how `W` is shaped, and how a
//! trained model turns a signal into a prediction.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Sample;
use crate::dictionary::{project_dictionary, Dictionary};
use crate::elastic_net::Coder;
use crate::error::{shape_err, Error, Result};
use crate::losses::{Label, TaskLoss};
use crate::model::Model;
use crate::trainer::{Executor, Sequential};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Regression,
    BinaryLinear,
    BinaryBilinear,
    MulticlassOneVsAll,
    MulticlassSoftmax,
    MulticlassRegression,
    CompressedSensing,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::Regression,
        TaskKind::BinaryLinear,
        TaskKind::BinaryBilinear,
        TaskKind::MulticlassOneVsAll,
        TaskKind::MulticlassSoftmax,
        TaskKind::MulticlassRegression,
        TaskKind::CompressedSensing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Regression => "regression",
            TaskKind::BinaryLinear => "binary_linear",
            TaskKind::BinaryBilinear => "binary_bilinear",
            TaskKind::MulticlassOneVsAll => "multiclass_ova",
            TaskKind::MulticlassSoftmax => "multiclass_softmax",
            TaskKind::MulticlassRegression => "multiclass_regression",
            TaskKind::CompressedSensing => "compressed_sensing",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn loss(&self) -> TaskLoss {
        match self {
            TaskKind::Regression | TaskKind::MulticlassRegression | TaskKind::CompressedSensing => TaskLoss::Square,
            TaskKind::BinaryLinear | TaskKind::MulticlassOneVsAll => TaskLoss::Logistic,
            TaskKind::BinaryBilinear => TaskLoss::BilinearLogistic,
            TaskKind::MulticlassSoftmax => TaskLoss::Softmax,
        }
    }

    pub fn is_classification(&self) -> bool {
        !matches!(self, TaskKind::Regression | TaskKind::CompressedSensing)
    }
}

/// Task kind with its dimensions: signal size `m`, atom count `p`, output
/// size or class count `q`, and measurement count `r` for compressed sensing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub r: Option<usize>,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, m: usize, p: usize, q: usize, r: Option<usize>) -> Result<Self> {
        let spec = Self { kind, m, p, q, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.p == 0 || self.q == 0 {
            return Err(Error::InvalidParameter(format!("dimensions must be >= 1 (m={}, p={}, q={})", self.m, self.p, self.q)));
        }
        match (self.kind, self.r) {
            (TaskKind::CompressedSensing, Some(0)) => Err(Error::InvalidParameter("r must be >= 1".into())),
            (TaskKind::CompressedSensing, Some(_)) => Ok(()),
            (TaskKind::CompressedSensing, None) => Err(Error::MissingTransform),
            (_, Some(_)) => Err(Error::InvalidParameter(format!("{} takes no transform", self.kind.name()))),
            _ => Ok(()),
        }
    }

    pub fn has_transform(&self) -> bool {
        self.r.is_some()
    }

    /// Rows of the dictionary, i.e. the dimension the coder sees.
    pub fn encoder_dim(&self) -> usize {
        self.r.unwrap_or(self.m)
    }

    pub fn w_rows(&self) -> usize {
        match self.kind {
            TaskKind::Regression | TaskKind::MulticlassSoftmax | TaskKind::MulticlassRegression => self.q,
            TaskKind::BinaryLinear | TaskKind::MulticlassOneVsAll => 1,
            TaskKind::BinaryBilinear | TaskKind::CompressedSensing => self.m,
        }
    }

    /// Number of independent `(D, W)` heads.
    pub fn heads(&self) -> usize {
        if self.kind == TaskKind::MulticlassOneVsAll {
            self.q
        } else {
            1
        }
    }

    /// Converts a raw label into what the head's loss expects. For one-vs-all
    /// this is the label seen by head `head` (0-based).
    pub fn training_label(&self, label: &Label, head: usize) -> Result<Label> {
        match (self.kind, label) {
            (TaskKind::MulticlassOneVsAll, Label::Class(c)) => {
                check_class(*c, self.q)?;
                Ok(Label::Binary(if *c == head + 1 { 1 } else { -1 }))
            }
            (TaskKind::MulticlassRegression, Label::Class(c)) => {
                check_class(*c, self.q)?;
                let mut t = Vector::zeros(self.q);
                t[c - 1] = 1.0;
                Ok(Label::Target(t))
            }
            (TaskKind::MulticlassSoftmax, Label::Class(c)) => {
                check_class(*c, self.q)?;
                Ok(label.clone())
            }
            (TaskKind::BinaryLinear | TaskKind::BinaryBilinear, Label::Binary(_)) => Ok(label.clone()),
            (TaskKind::Regression, Label::Target(t)) if t.len() == self.q => Ok(label.clone()),
            (TaskKind::CompressedSensing, Label::Target(t)) if t.len() == self.m => Ok(label.clone()),
            (kind, label) => Err(Error::InvalidLabel(format!("{label:?} does not fit a {} task", kind.name()))),
        }
    }

    /// Relabels a dataset for head `head`.
    pub fn training_set(&self, data: &[Sample], head: usize) -> Result<Vec<Sample>> {
        data.iter()
            .map(|s| Ok(Sample::new(self.training_label(&s.label, head)?, s.x.clone())))
            .collect()
    }

    pub fn check_model(&self, model: &Model) -> Result<()> {
        let ok = model.loss == self.kind.loss()
            && model.signal_dim() == self.m
            && model.dictionary.m() == self.encoder_dim()
            && model.dictionary.p() == self.p
            && model.w.nrows() == self.w_rows()
            && model.z.is_some() == self.has_transform();
        if ok {
            Ok(())
        } else {
            Err(Error::TaskMismatch(format!(
                "{} task (m={}, p={}, q={}, r={:?}) vs model with D {}x{}, W {}x{}, loss {}",
                self.kind.name(),
                self.m,
                self.p,
                self.q,
                self.r,
                model.dictionary.m(),
                model.dictionary.p(),
                model.w.nrows(),
                model.w.ncols(),
                model.loss.name()
            )))
        }
    }
}

fn check_class(c: usize, q: usize) -> Result<()> {
    if c == 0 || c > q {
        return Err(Error::InvalidLabel(format!("class label {c} outside 1..={q}")));
    }
    Ok(())
}

/// `W alpha*(x, D)`.
pub fn predict_regression(model: &Model, x: &Vector) -> Result<Vector> {
    let code = model.encode(x)?;
    Ok(&model.w * &code.alpha)
}

fn sign_label(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

/// `sign(w^T alpha*)` with a zero score mapped to `+1`; returns the score too.
pub fn classify_binary(model: &Model, x: &Vector) -> Result<(i8, f64)> {
    if model.w.nrows() != 1 {
        return Err(shape_err("linear head W rows", 1, model.w.nrows()));
    }
    let code = model.encode(x)?;
    let score = model.w.row(0).transpose().dot(&code.alpha);
    Ok((sign_label(score), score))
}

/// `sign(x^T W alpha*)` with a zero score mapped to `+1`.
pub fn classify_bilinear(model: &Model, x: &Vector) -> Result<(i8, f64)> {
    if model.w.nrows() != x.len() {
        return Err(shape_err("bilinear head W rows", x.len(), model.w.nrows()));
    }
    let code = model.encode(x)?;
    let score = x.dot(&(&model.w * &code.alpha));
    Ok((sign_label(score), score))
}

/// 1-based index of the largest score; the lowest index wins ties.
pub fn argmax_class(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::Empty("class scores"));
    }
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    Ok(best + 1)
}

/// Multi-class prediction: one-vs-all takes one binary model per class;
/// softmax and regression heads take a single model with `q` rows.
pub fn classify_multiclass(kind: TaskKind, models: &[Model], x: &Vector) -> Result<(usize, Vec<f64>)> {
    if models.is_empty() {
        return Err(Error::Empty("model list"));
    }
    let scores: Vec<f64> = match kind {
        TaskKind::MulticlassOneVsAll => models
            .iter()
            .map(|m| classify_binary(m, x).map(|(_, s)| s))
            .collect::<Result<_>>()?,
        TaskKind::MulticlassSoftmax | TaskKind::MulticlassRegression => {
            if models.len() != 1 {
                return Err(Error::TaskMismatch(format!("{} expects one model, got {}", kind.name(), models.len())));
            }
            predict_regression(&models[0], x)?.iter().copied().collect()
        }
        other => return Err(Error::TaskMismatch(format!("{} is not a multi-class task", other.name()))),
    };
    Ok((argmax_class(&scores)?, scores))
}

/// `W alpha*(Z x, D)`.
pub fn cs_reconstruct(model: &Model, x: &Vector) -> Result<Vector> {
    if model.z.is_none() {
        return Err(Error::MissingTransform);
    }
    predict_regression(model, x)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Values(Vector),
    Binary { label: i8, score: f64 },
    Class { label: usize, scores: Vec<f64> },
}

/// A task together with its trained heads.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskModel {
    pub spec: TaskSpec,
    pub heads: Vec<Model>,
}

impl TaskModel {
    pub fn new(spec: TaskSpec, heads: Vec<Model>) -> Result<Self> {
        spec.validate()?;
        if heads.len() != spec.heads() {
            return Err(Error::TaskMismatch(format!("{} task needs {} heads, got {}", spec.kind.name(), spec.heads(), heads.len())));
        }
        for h in &heads {
            spec.check_model(h)?;
        }
        Ok(Self { spec, heads })
    }

    pub fn predict(&self, x: &Vector) -> Result<Prediction> {
        let alphas = self
            .heads
            .iter()
            .map(|h| h.encode(x).map(|c| c.alpha))
            .collect::<Result<Vec<_>>>()?;
        self.predict_from_codes(x, &alphas)
    }

    /// Applies the prediction rule to precomputed codes, one per head.
    pub fn predict_from_codes(&self, x: &Vector, alphas: &[Vector]) -> Result<Prediction> {
        if alphas.len() != self.heads.len() {
            return Err(shape_err("head codes", self.heads.len(), alphas.len()));
        }
        let head = &self.heads[0];
        if x.len() != head.signal_dim() {
            return Err(shape_err("signal", head.signal_dim(), x.len()));
        }
        let alpha = &alphas[0];
        Ok(match self.spec.kind {
            TaskKind::Regression | TaskKind::CompressedSensing => Prediction::Values(&head.w * alpha),
            TaskKind::BinaryLinear => {
                let score = head.w.row(0).transpose().dot(alpha);
                Prediction::Binary {
                    label: sign_label(score),
                    score,
                }
            }
            TaskKind::BinaryBilinear => {
                let score = x.dot(&(&head.w * alpha));
                Prediction::Binary {
                    label: sign_label(score),
                    score,
                }
            }
            TaskKind::MulticlassOneVsAll => {
                let scores: Vec<f64> = self.heads.iter().zip(alphas).map(|(h, a)| h.w.row(0).transpose().dot(a)).collect();
                Prediction::Class {
                    label: argmax_class(&scores)?,
                    scores,
                }
            }
            TaskKind::MulticlassSoftmax | TaskKind::MulticlassRegression => {
                let scores: Vec<f64> = (&head.w * alpha).iter().copied().collect();
                Prediction::Class {
                    label: argmax_class(&scores)?,
                    scores,
                }
            }
        })
    }

    /// Predicts every signal, sharing one coder per head across the batch.
    pub fn predict_batch<E: Executor>(&self, xs: &[Vector], exec: &E) -> Result<Vec<Prediction>> {
        let coders: Vec<Coder<'_>> = self.heads.iter().map(|h| Coder::new(&h.dictionary)).collect();
        exec.map(xs, |x: &Vector| -> Result<Prediction> {
            let alphas = self
                .heads
                .iter()
                .zip(&coders)
                .map(|(h, c)| Ok(c.encode(&h.encoder_input(x)?, &h.coding)?.alpha))
                .collect::<Result<Vec<_>>>()?;
            self.predict_from_codes(x, &alphas)
        })
        .into_iter()
        .collect()
    }

    /// Label the prediction corresponds to, for error-rate evaluation.
    pub fn predict_label(&self, x: &Vector) -> Result<Label> {
        Ok(prediction_label(self.predict(x)?))
    }

    /// Classification error rate, or mean squared error per coordinate for
    /// regression-type tasks.
    pub fn validation_error(&self, data: &[Sample]) -> Result<f64> {
        self.validation_error_with(data, &Sequential)
    }

    pub fn validation_error_with<E: Executor>(&self, data: &[Sample], exec: &E) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let xs: Vec<Vector> = data.iter().map(|s| s.x.clone()).collect();
        let preds = self.predict_batch(&xs, exec)?;
        let mut total = 0.0;
        let mut count = 0usize;
        for (s, pred) in data.iter().zip(preds) {
            let pred = prediction_label(pred);
            match (&pred, &s.label) {
                (Label::Target(a), Label::Target(b)) => {
                    if a.len() != b.len() {
                        return Err(shape_err("target", a.len(), b.len()));
                    }
                    total += (a - b).norm_squared();
                    count += a.len();
                }
                (a, b) => {
                    if core::mem::discriminant(a) != core::mem::discriminant(b) {
                        return Err(Error::InvalidLabel(format!("{b:?} does not fit a {} task", self.spec.kind.name())));
                    }
                    total += f64::from(u8::from(a != b));
                    count += 1;
                }
            }
        }
        Ok(total / count as f64)
    }
}

fn prediction_label(p: Prediction) -> Label {
    match p {
        Prediction::Values(v) => Label::Target(v),
        Prediction::Binary { label, .. } => Label::Binary(label),
        Prediction::Class { label, .. } => Label::Class(label),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineZ {
    RandomGaussian,
    Pca,
    Identity,
}

/// Fixed sensing matrices: i.i.d. Gaussian entries with standard deviation
/// `1/sqrt(m)`, the top-`r` principal directions of centered `data` as rows,
/// or the `r x m` identity.
pub fn make_baseline_z<R: Rng + ?Sized>(kind: BaselineZ, data: Option<&[Vector]>, r: usize, m: usize, rng: &mut R) -> Result<Matrix> {
    if r == 0 || m == 0 {
        return Err(Error::InvalidParameter("r and m must be >= 1".into()));
    }
    match kind {
        BaselineZ::Identity => Ok(Matrix::identity(r, m)),
        BaselineZ::RandomGaussian => {
            let normal = Normal::new(0.0, 1.0 / libm::sqrt(m as f64)).map_err(|e| Error::InvalidParameter(format!("{e}")))?;
            Ok(Matrix::from_fn(r, m, |_, _| normal.sample(rng)))
        }
        BaselineZ::Pca => {
            let data = data.ok_or_else(|| Error::InsufficientData("PCA baseline needs data".into()))?;
            if r > m {
                return Err(Error::InvalidParameter(format!("PCA needs r <= m, got r={r}, m={m}")));
            }
            pca_rows(data, r, m)
        }
    }
}

fn pca_rows(data: &[Vector], r: usize, m: usize) -> Result<Matrix> {
    if data.len() < 2 {
        return Err(Error::InsufficientData(format!("PCA needs at least 2 signals, got {}", data.len())));
    }
    let mut mean = Vector::zeros(m);
    for x in data {
        if x.len() != m {
            return Err(shape_err("PCA signal", m, x.len()));
        }
        mean += x;
    }
    mean /= data.len() as f64;
    let mut cov = Matrix::zeros(m, m);
    for x in data {
        let c = x - &mean;
        cov.syger(1.0, &c, &c, 1.0);
    }
    cov.fill_upper_triangle_with_lower_triangle();
    cov /= (data.len() - 1) as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut z = Matrix::zeros(r, m);
    for (row, &k) in order.iter().take(r).enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        // Fix the sign so the output does not depend on solver internals.
        if let Some(first) = v.iter().position(|e| e.abs() > 1e-12) {
            if v[first] < 0.0 {
                v.neg_mut();
            }
        }
        z.set_row(row, &v.transpose());
    }
    Ok(z)
}

/// Overcomplete 2-D DCT dictionary for `side x side` patches with `p` atoms.
///
/// The 1-D dictionary has `K = ceil(sqrt(p))` atoms `cos(i k pi / K)`,
/// `i = 0..side`; non-constant atoms are centered, all are normalized. The 2-D
/// dictionary is the Kronecker product of the 1-D one with itself, truncated
/// to its first `p` columns when `K^2 > p`.
pub fn overcomplete_dct(side: usize, p: usize) -> Result<Matrix> {
    if side == 0 || p == 0 {
        return Err(Error::InvalidParameter("DCT side and atom count must be >= 1".into()));
    }
    let mut k = libm::sqrt(p as f64) as usize;
    while k * k < p {
        k += 1;
    }
    let mut one_d = Matrix::from_fn(side, k, |i, j| libm::cos((i * j) as f64 * core::f64::consts::PI / k as f64));
    for (j, mut col) in one_d.column_iter_mut().enumerate() {
        if j > 0 {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let full = one_d.kronecker(&one_d);
    Ok(full.columns(0, p).into_owned())
}

/// DCT baseline for compressed sensing: `Pi_D(Z D')`.
pub fn dct_baseline(z: &Matrix, side: usize, p: usize) -> Result<Dictionary> {
    if z.ncols() != side * side {
        return Err(shape_err("DCT baseline Z columns", side * side, z.ncols()));
    }
    project_dictionary(z * overcomplete_dct(side, p)?)
}
