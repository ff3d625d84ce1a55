//! Synthetic two-class task: signals mix high-energy atoms shared by both
//! classes (random signs) with low-energy atoms planted per class (positive
//! coefficients, so class membership is linear in the codes). A dictionary fit for
//! reconstruction spends its atoms on the shared part, so the class signal
//! is only partly visible in its codes.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskdict::taskdict_core::data::{normalize, Sample, SampleStream};
use taskdict::taskdict_core::tasks::{TaskKind, TaskModel, TaskSpec};
use taskdict::taskdict_core::trainer::{init_unsupervised, select_learning_rate, train, warm_start_w, InitOptions, Sequential, TrainConfig, WarmStartOptions};
use taskdict::taskdict_core::{ElasticNetParams, Label, Matrix, Model, TaskLoss, Vector};

use crate::gaussian_matrix;

pub const M: usize = 30;
pub const P: usize = 50;
const SHARED: usize = 40;
const PER_CLASS: usize = 12;

pub struct TwoClass {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

fn unit_columns(mut d: Matrix) -> Matrix {
    for mut c in d.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    d
}

pub fn two_class(n_train: usize, n_test: usize, seed: u64) -> TwoClass {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = unit_columns(gaussian_matrix(M, SHARED, &mut rng));
    let planted = [unit_columns(gaussian_matrix(M, PER_CLASS, &mut rng)), unit_columns(gaussian_matrix(M, PER_CLASS, &mut rng))];
    let shared_idx: Vec<usize> = (0..SHARED).collect();
    let class_idx: Vec<usize> = (0..PER_CLASS).collect();
    let sample = |rng: &mut ChaCha8Rng| {
        let c = rng.random_range(0..2usize);
        let mut x = Vector::zeros(M);
        for &j in shared_idx.choose_multiple(rng, 3) {
            x.axpy(rng.random_range(0.6..1.2) * if rng.random::<bool>() { 1.0 } else { -1.0 }, &shared.column(j), 1.0);
        }
        for &j in class_idx.choose_multiple(rng, 2) {
            x.axpy(rng.random_range(0.2..0.4), &planted[c].column(j), 1.0);
        }
        for v in x.iter_mut() {
            *v += 0.02 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        Sample::new(Label::Binary(if c == 0 { -1 } else { 1 }), normalize(&x))
    };
    let train = (0..n_train).map(|_| sample(&mut rng)).collect();
    let test = (0..n_test).map(|_| sample(&mut rng)).collect();
    TwoClass { train, test }
}

pub fn coding() -> ElasticNetParams {
    ElasticNetParams::new(0.15, 0.01).unwrap()
}

pub fn error(model: &Model, data: &[Sample]) -> f64 {
    let spec = TaskSpec::new(TaskKind::BinaryLinear, M, P, 1, None).unwrap();
    TaskModel::new(spec, vec![model.clone()]).unwrap().validation_error_with(data, &Sequential).unwrap()
}

/// Unsupervised dictionary on the training signals plus a warm-started `w`.
pub fn baseline(train_set: &[Sample], pool: &[Vector], seed: u64) -> Model {
    let mut stream = SampleStream::new(pool, seed).unwrap();
    let dict = init_unsupervised(&mut stream, P, &coding(), &InitOptions { passes: 5, batch: 100 }, &Sequential).unwrap();
    let mut model = Model::new(dict, Matrix::zeros(1, P), None, TaskLoss::Logistic, coding()).unwrap();
    model.w = warm_start_w(&model, train_set, 1e-4, &WarmStartOptions::default(), &Sequential).unwrap();
    model
}

pub struct Trial {
    pub baseline: f64,
    pub supervised: f64,
    pub rho: f64,
}

pub fn supervised_trial(seed: u64, iterations: usize) -> Trial {
    let data = two_class(2000, 500, seed);
    let pool: Vec<Vector> = data.train.iter().map(|s| s.x.clone()).collect();
    let start = baseline(&data.train, &pool, seed);
    // Learning rate picked on a held-out fifth of the training set.
    let (fit, valid) = data.train.split_at(1600);
    let mut cfg = TrainConfig::new(iterations, 0.0);
    cfg.batch = 50;
    cfg.nu = 1e-4;
    cfg.seed = seed;
    let score = |m: &Model| Ok(error(m, valid));
    let (rho, _) = select_learning_rate(&start, fit, None, &cfg, &[0.01, 0.1, 1.0, 10.0], iterations / 2, score, &Sequential).unwrap();
    cfg.rho = rho;
    let mut stream = SampleStream::new(&data.train, seed ^ 0x55).unwrap();
    let trained = train(start.clone(), &mut stream, None, &cfg, &Sequential).unwrap();
    Trial {
        baseline: error(&start, &data.test),
        supervised: error(&trained.model, &data.test),
        rho,
    }
}
