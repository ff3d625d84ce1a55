//! Projected stochastic gradient descent over `(D, W, Z)`, its
//! initialization and the semi-supervised continuation schedule.

mod exec;
mod init;
mod schedule;
mod warm;

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

pub use exec::{Executor, Sequential};
pub use init::{init_unsupervised, InitOptions};
pub use schedule::{continuation_schedule, mu_ladder, select_learning_rate, ContinuationStage, RhoTrial};
pub use warm::{warm_start_w, WarmStartOptions};

use crate::data::{Sample, SampleStream};
use crate::dictionary::Dictionary;
use crate::elastic_net::Coder;
use crate::error::{Error, Result};
use crate::grad::{add_unsup_grad_d, SampleTerms};
use crate::model::Model;
use crate::{Matrix, Vector};

pub use crate::dictionary::project_dictionary;

/// Samples in the moving-average objective estimate.
pub const TELEMETRY_WINDOW: usize = 1000;
/// Training aborts once the objective estimate exceeds this multiple of its
/// initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Constraint set for `W` or `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamConstraint {
    Unconstrained,
    /// Frobenius-norm ball of the given radius.
    FrobeniusBall(f64),
}

impl ParamConstraint {
    pub fn project(&self, m: &mut Matrix) {
        if let ParamConstraint::FrobeniusBall(r) = *self {
            let n = m.norm();
            if n > r {
                *m *= r / n;
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ParamConstraint::FrobeniusBall(r) if !(r.is_finite() && r > 0.0) => {
                Err(Error::InvalidParameter(format!("Frobenius ball radius must be > 0, got {r}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Ridge weight on `W`.
    pub nu: f64,
    /// Ridge weight on `Z`.
    pub nu_z: f64,
    pub rho: f64,
    pub t0: f64,
    /// Total iterations `T`.
    pub iterations: usize,
    /// Mini-batch size.
    pub batch: usize,
    /// Weight of the unsupervised term in the dictionary update.
    pub mu: f64,
    pub seed: u64,
    pub w_constraint: ParamConstraint,
    pub z_constraint: ParamConstraint,
    /// Telemetry interval in iterations.
    pub log_every: usize,
}

impl TrainConfig {
    /// Defaults for `iterations` steps: `nu = 1e-9`, batch 200, `t0 = T/10`.
    pub fn new(iterations: usize, rho: f64) -> Self {
        Self {
            nu: 1e-9,
            nu_z: 1e-9,
            rho,
            t0: default_t0(iterations),
            iterations,
            batch: 200,
            mu: 0.0,
            seed: 0,
            w_constraint: ParamConstraint::Unconstrained,
            z_constraint: ParamConstraint::Unconstrained,
            log_every: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} out of range: {v}")));
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return bad("rho", self.rho);
        }
        if !(self.t0.is_finite() && self.t0 >= 1.0) {
            return bad("t0", self.t0);
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return bad("nu", self.nu);
        }
        if !(self.nu_z.is_finite() && self.nu_z >= 0.0) {
            return bad("nu_z", self.nu_z);
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return bad("mu", self.mu);
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidParameter("batch must be >= 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidParameter("log_every must be >= 1".into()));
        }
        self.w_constraint.validate()?;
        self.z_constraint.validate()
    }
}

/// `t0 = T/10`, at least one.
pub fn default_t0(iterations: usize) -> f64 {
    (iterations as f64 / 10.0).max(1.0)
}

/// `min(rho, rho t0 / t)` for `t >= 1`.
pub fn learning_rate(t: usize, rho: f64, t0: f64) -> f64 {
    let t = t.max(1) as f64;
    rho.min(rho * t0 / t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryPoint {
    pub iteration: usize,
    /// Moving average of the per-sample cost plus regularizers.
    pub objective: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub config: TrainConfig,
    pub telemetry: Vec<TelemetryPoint>,
}

struct Window {
    values: VecDeque<f64>,
}

impl Window {
    fn new() -> Self {
        Self {
            values: VecDeque::with_capacity(TELEMETRY_WINDOW),
        }
    }

    fn push(&mut self, v: f64) {
        if self.values.len() == TELEMETRY_WINDOW {
            self.values.pop_front();
        }
        self.values.push_back(v);
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

fn regularizer(model: &Model, cfg: &TrainConfig) -> f64 {
    let mut r = 0.5 * cfg.nu * model.w.norm_squared();
    if let Some(z) = &model.z {
        r += 0.5 * cfg.nu_z * z.norm_squared();
    }
    r
}

/// Gradients of one mini-batch, averaged over its size.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    pub grad_w: Matrix,
    /// `(1 - mu)` supervised plus `mu` unsupervised dictionary gradient.
    pub grad_d: Matrix,
    pub grad_z: Option<Matrix>,
    /// Per-sample costs `(1 - mu) l_s + mu l_u`.
    pub costs: Vec<f64>,
}

/// Codes the batch against the current parameters and averages the
/// gradients in sample order.
pub fn batch_gradients<E: Executor>(model: &Model, labeled: &[&Sample], unlabeled: &[&Vector], mu: f64, exec: &E) -> Result<BatchGradients> {
    if labeled.is_empty() {
        return Err(Error::Empty("mini-batch"));
    }
    let coder = Coder::new(&model.dictionary);
    let terms = exec.map(labeled, |s: &&Sample| -> Result<SampleTerms> {
        let input = model.encoder_input(&s.x)?;
        let code = coder.encode(&input, &model.coding)?;
        SampleTerms::from_code(&s.label, &s.x, &input, model, code)
    });
    let unsup = if mu > 0.0 {
        exec.map(unlabeled, |x: &&Vector| -> Result<(Vector, crate::SparseCode)> {
            let input = model.encoder_input(x)?;
            let code = coder.encode(&input, &model.coding)?;
            Ok((input, code))
        })
    } else {
        Vec::new()
    };

    let (m, p) = (model.dictionary.m(), model.dictionary.p());
    let mut grad_w = Matrix::zeros(model.w.nrows(), model.w.ncols());
    let mut grad_d = Matrix::zeros(m, p);
    let mut grad_z = model.z.as_ref().map(|z| Matrix::zeros(z.nrows(), z.ncols()));
    let mut costs = Vec::with_capacity(labeled.len());
    for (s, term) in labeled.iter().zip(terms) {
        let term = term?;
        grad_w += &term.grad_w;
        if mu < 1.0 {
            term.add_grad_d(&mut grad_d, 1.0 - mu);
        }
        if let Some(gz) = grad_z.as_mut() {
            term.add_grad_z(gz, &s.x, 1.0);
        }
        costs.push((1.0 - mu) * term.loss);
    }
    for (k, item) in unsup.into_iter().enumerate() {
        let (input, code) = item?;
        add_unsup_grad_d(&mut grad_d, &input, model.dictionary.atoms(), &code, mu);
        if let Some(c) = costs.get_mut(k) {
            *c += mu * code.objective;
        }
    }
    let scale = 1.0 / labeled.len() as f64;
    grad_w *= scale;
    grad_d *= scale;
    if let Some(gz) = grad_z.as_mut() {
        *gz *= scale;
    }
    Ok(BatchGradients {
        grad_w,
        grad_d,
        grad_z,
        costs,
    })
}

/// Applies one projected step of size `rho_t`.
pub fn apply_step(model: &mut Model, grads: &BatchGradients, rho_t: f64, cfg: &TrainConfig) -> Result<()> {
    let step_w = &grads.grad_w + &model.w * cfg.nu;
    model.w -= step_w * rho_t;
    cfg.w_constraint.project(&mut model.w);

    let atoms = model.dictionary.atoms() - &grads.grad_d * rho_t;
    model.dictionary = Dictionary::from_projected(atoms)?;

    if let (Some(z), Some(gz)) = (model.z.as_mut(), grads.grad_z.as_ref()) {
        let step_z = gz + &*z * cfg.nu_z;
        *z -= step_z * rho_t;
        cfg.z_constraint.project(z);
    }
    Ok(())
}

/// Runs `cfg.iterations` projected SGD steps starting from `model`.
///
/// Each step draws `cfg.batch` labeled samples (and as many unlabeled signals
/// when `mu > 0`), codes them with the current dictionary and applies the
/// averaged gradients. The semi-supervised weight `mu` only mixes the
/// dictionary gradient; `W` and `Z` follow their supervised gradients.
pub fn train<E: Executor>(
    mut model: Model,
    labeled: &mut SampleStream<'_, Sample>,
    mut unlabeled: Option<&mut SampleStream<'_, Vector>>,
    cfg: &TrainConfig,
    exec: &E,
) -> Result<TrainedModel> {
    cfg.validate()?;
    model.validate()?;
    if cfg.mu > 0.0 && unlabeled.is_none() {
        return Err(Error::InvalidParameter(format!("mu = {} needs an unlabeled stream", cfg.mu)));
    }
    let mut window = Window::new();
    let mut initial: Option<f64> = None;
    let mut telemetry = Vec::new();
    for t in 1..=cfg.iterations {
        let rho_t = learning_rate(t, cfg.rho, cfg.t0);
        let batch: Vec<&Sample> = (0..cfg.batch).map(|_| labeled.next_sample()).collect();
        let unl: Vec<&Vector> = match unlabeled.as_mut() {
            Some(stream) if cfg.mu > 0.0 => (0..cfg.batch).map(|_| stream.next_sample()).collect(),
            _ => Vec::new(),
        };
        let grads = batch_gradients(&model, &batch, &unl, cfg.mu, exec)?;
        for &c in &grads.costs {
            window.push(c);
        }
        let objective = window.mean() + regularizer(&model, cfg);
        let start = *initial.get_or_insert(objective);
        let diverged = |objective: f64| Error::Diverged {
            iteration: t,
            objective,
            initial: start,
            rho: cfg.rho,
        };
        if !objective.is_finite() || (start > 0.0 && objective > DIVERGENCE_FACTOR * start) {
            return Err(diverged(objective));
        }
        if t == 1 || t % cfg.log_every == 0 || t == cfg.iterations {
            telemetry.push(TelemetryPoint {
                iteration: t,
                objective,
                learning_rate: rho_t,
            });
        }
        match apply_step(&mut model, &grads, rho_t, cfg) {
            Err(Error::NonFinite(_)) => return Err(diverged(f64::NAN)),
            other => other?,
        }
        if model.w.iter().any(|v| !v.is_finite()) || model.z.as_ref().is_some_and(|z| z.iter().any(|v| !v.is_finite())) {
            return Err(diverged(f64::NAN));
        }
    }
    Ok(TrainedModel {
        model,
        config: cfg.clone(),
        telemetry,
    })
}

/// Mean supervised loss over `data` plus `nu/2 ||W||_F^2`.
pub fn empirical_objective<E: Executor>(model: &Model, data: &[Sample], nu: f64, exec: &E) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let coder = Coder::new(&model.dictionary);
    let losses = exec.map(data, |s: &Sample| -> Result<f64> {
        let code = coder.encode(&model.encoder_input(&s.x)?, &model.coding)?;
        Ok(model.loss.eval(&s.label, &s.x, &model.w, &code.alpha)?.value)
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / data.len() as f64 + 0.5 * nu * model.w.norm_squared())
}
