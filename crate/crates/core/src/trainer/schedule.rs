use alloc::format;
use alloc::vec::Vec;

use super::{train, Executor, TrainConfig, TrainedModel};
use crate::data::{Sample, SampleStream};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::Vector;

/// `[1, (k-1)/k, ..., 1/k, 0]`.
pub fn mu_ladder(steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| (steps - i) as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStage {
    pub mu: f64,
    /// Parameters the stage started from.
    pub initial: Model,
    pub trained: TrainedModel,
}

/// Trains once per value of `mu_values` (descending), each stage starting
/// from the previous stage's parameters with the same iteration budget.
pub fn continuation_schedule<E: Executor>(
    model: Model,
    labeled: &mut SampleStream<'_, Sample>,
    mut unlabeled: Option<&mut SampleStream<'_, Vector>>,
    cfg: &TrainConfig,
    mu_values: &[f64],
    exec: &E,
) -> Result<Vec<ContinuationStage>> {
    if mu_values.is_empty() {
        return Err(Error::Empty("mu schedule"));
    }
    if mu_values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(format!("mu schedule must be descending: {mu_values:?}")));
    }
    let mut stages: Vec<ContinuationStage> = Vec::with_capacity(mu_values.len());
    let mut current = model;
    for &mu in mu_values {
        let stage_cfg = TrainConfig { mu, ..cfg.clone() };
        let trained = train(current.clone(), labeled, unlabeled.as_deref_mut(), &stage_cfg, exec)?;
        let next = trained.model.clone();
        stages.push(ContinuationStage {
            mu,
            initial: current,
            trained,
        });
        current = next;
    }
    Ok(stages)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoTrial {
    pub rho: f64,
    /// Validation score, `+inf` if the run diverged.
    pub score: f64,
}

/// Short runs for each candidate `rho`, scored by `score` (lower is better).
/// Every run sees the same sample order. Ties go to the smaller `rho`.
#[allow(clippy::too_many_arguments)]
pub fn select_learning_rate<E, F>(
    model: &Model,
    labeled: &[Sample],
    unlabeled: Option<&[Vector]>,
    cfg: &TrainConfig,
    grid: &[f64],
    budget: usize,
    score: F,
    exec: &E,
) -> Result<(f64, Vec<RhoTrial>)>
where
    E: Executor,
    F: Fn(&Model) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::Empty("rho grid"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut trials = Vec::with_capacity(sorted.len());
    for &rho in &sorted {
        let trial_cfg = TrainConfig {
            rho,
            iterations: budget,
            t0: cfg.t0.min(budget as f64).max(1.0),
            ..cfg.clone()
        };
        let mut stream = SampleStream::new(labeled, cfg.seed)?;
        let mut unl = match unlabeled {
            Some(u) => Some(SampleStream::new(u, cfg.seed ^ UNLABELED_SALT)?),
            None => None,
        };
        let s = match train(model.clone(), &mut stream, unl.as_mut(), &trial_cfg, exec) {
            Ok(t) => score(&t.model)?,
            Err(Error::Diverged { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        trials.push(RhoTrial {
            rho,
            score: if s.is_nan() { f64::INFINITY } else { s },
        });
    }
    let best = trials.iter().fold(trials[0], |best, t| if t.score < best.score { *t } else { best });
    Ok((best.rho, trials))
}

/// Mixed into the seed of unlabeled streams so they do not mirror the
/// labeled order.
pub const UNLABELED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
