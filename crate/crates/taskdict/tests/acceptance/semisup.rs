//! Continuation from a purely unsupervised objective to a purely supervised
//! one, with a tenth of the training signals labeled.

use taskdict::taskdict_core::data::SampleStream;
use taskdict::taskdict_core::trainer::{continuation_schedule, mu_ladder, Sequential, TrainConfig};
use taskdict::taskdict_core::Vector;

use crate::synthetic::{baseline, error, two_class};
use crate::{median, Outcome};

const STAGE_ITERATIONS: usize = 500;

struct Run {
    first: f64,
    last: f64,
}

fn trial(seed: u64) -> Run {
    let data = two_class(2000, 500, seed);
    let labeled = &data.train[..200];
    let pool: Vec<Vector> = data.train.iter().map(|s| s.x.clone()).collect();
    let start = baseline(labeled, &pool, seed);
    let mut cfg = TrainConfig::new(STAGE_ITERATIONS, 0.1);
    cfg.batch = 50;
    cfg.nu = 1e-4;
    cfg.seed = seed;
    let mut lab = SampleStream::new(labeled, seed).unwrap();
    let mut unl = SampleStream::new(&pool, seed ^ 0x5eed).unwrap();
    let stages = continuation_schedule(start, &mut lab, Some(&mut unl), &cfg, &mu_ladder(10), &Sequential).unwrap();
    Run {
        first: error(&stages[0].trained.model, &data.test),
        last: error(&stages.last().unwrap().trained.model, &data.test),
    }
}

pub fn run() -> Outcome {
    let runs: Vec<Run> = (0..3).map(|s| trial(200 + s)).collect();
    let first = median(runs.iter().map(|r| r.first).collect());
    let last = median(runs.iter().map(|r| r.last).collect());
    let per_seed: Vec<String> = runs.iter().map(|r| format!("{:.1}%->{:.1}%", 100.0 * r.first, 100.0 * r.last)).collect();
    Outcome {
        passed: last <= first,
        detail: format!(
            "median test error after mu=1 stage {:.2}%, after mu=0 stage {:.2}%; per seed {}",
            100.0 * first,
            100.0 * last,
            per_seed.join(", ")
        ),
    }
}
