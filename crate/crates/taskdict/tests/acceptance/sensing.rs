//! Compressed sensing of image patches from `r` linear measurements: fixed
//! random or PCA sensing matrices with DCT or unsupervised dictionaries,
//! against a sensing matrix and dictionaries trained for reconstruction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taskdict::taskdict_core::data::{extract_patches, Image, PatchConfig, Sample, SampleStream};
use taskdict::taskdict_core::tasks::{dct_baseline, make_baseline_z, BaselineZ};
use taskdict::taskdict_core::trainer::{init_unsupervised, train, warm_start_w, InitOptions, Sequential, TrainConfig, WarmStartOptions};
use taskdict::taskdict_core::{Dictionary, ElasticNetParams, Label, Matrix, Model, TaskLoss, Vector};

use crate::{images, median, Outcome};

const SIDE: usize = 8;
const M: usize = SIDE * SIDE;
const P: usize = 100;
const R: usize = 10;
const N_TRAIN: usize = 50_000;
const N_TEST: usize = 10_000;
/// Patches whose centered norm is below this are flat and left out.
const FLAT: f64 = 0.1;
const SL_ITERATIONS: usize = 2000;
const SL_RHO: f64 = 0.1;

fn coding() -> ElasticNetParams {
    ElasticNetParams::new(0.01, 0.001).unwrap()
}

/// Centered, unit-norm patches of the non-flat regions of `images`.
fn patches(images: &[Image]) -> Vec<Vector> {
    let mut out = Vec::new();
    for image in images {
        for p in extract_patches(image, &PatchConfig::raw(SIDE, 1)).unwrap() {
            let mut v = p.values;
            let mean = v.mean();
            v.add_scalar_mut(-mean);
            let n = v.norm();
            if n >= FLAT {
                out.push(v / n);
            }
        }
    }
    out
}

fn draw(mut pool: Vec<Vector>, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    assert!(pool.len() >= n, "only {} usable patches, need {n}", pool.len());
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

/// Mean squared reconstruction error per patch, `||x - W alpha(Zx)||^2`.
fn mse(model: &Model, test: &[Vector]) -> f64 {
    test.iter()
        .map(|x| (x - &model.w * model.encode(x).unwrap().alpha).norm_squared())
        .sum::<f64>()
        / test.len() as f64
}

fn with_w(dict: Dictionary, z: Matrix, train: &[Sample]) -> Model {
    let mut model = Model::new(dict, Matrix::zeros(M, P), Some(z), TaskLoss::Square, coding()).unwrap();
    model.w = warm_start_w(&model, train, 1e-6, &WarmStartOptions::default(), &Sequential).unwrap();
    model
}

fn unsupervised(z: &Matrix, xs: &[Vector], train: &[Sample], seed: u64) -> Model {
    let zx: Vec<Vector> = xs.iter().map(|x| z * x).collect();
    let mut stream = SampleStream::new(&zx, seed).unwrap();
    let dict = init_unsupervised(&mut stream, P, &coding(), &InitOptions { passes: 1, batch: 200 }, &Sequential).unwrap();
    with_w(dict, z.clone(), train)
}

struct Trial {
    dct: f64,
    random_ul: f64,
    pca_ul: f64,
    sl1: f64,
}

fn trial(train_images: &[Image], test_images: &[Image], seed: u64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = draw(patches(train_images), N_TRAIN, &mut rng);
    let test = draw(patches(test_images), N_TEST, &mut rng);
    let train_set: Vec<Sample> = xs.iter().map(|x| Sample::new(Label::Target(x.clone()), x.clone())).collect();
    let z_random = make_baseline_z(BaselineZ::RandomGaussian, None, R, M, &mut rng).unwrap();
    let z_pca = make_baseline_z(BaselineZ::Pca, Some(&xs), R, M, &mut rng).unwrap();

    let dct = with_w(dct_baseline(&z_random, SIDE, P).unwrap(), z_random.clone(), &train_set);
    let random_ul = unsupervised(&z_random, &xs, &train_set, seed);
    let pca_ul = unsupervised(&z_pca, &xs, &train_set, seed);

    // SL1: random sensing matrix, everything then trained for reconstruction.
    let mut cfg = TrainConfig::new(SL_ITERATIONS, SL_RHO);
    cfg.batch = 50;
    cfg.nu = 1e-6;
    cfg.nu_z = 1e-6;
    cfg.seed = seed;
    let mut stream = SampleStream::new(&train_set, seed ^ 0x51).unwrap();
    let sl1 = train(random_ul.clone(), &mut stream, None, &cfg, &Sequential).unwrap().model;

    Trial {
        dct: mse(&dct, &test),
        random_ul: mse(&random_ul, &test),
        pca_ul: mse(&pca_ul, &test),
        sl1: mse(&sl1, &test),
    }
}

pub fn run() -> Outcome {
    let (imgs, source) = images::load(5);
    let (train_images, test_images) = imgs.split_at(4);
    let trials: Vec<Trial> = (0..3).map(|s| trial(train_images, test_images, 300 + s)).collect();
    let med = |f: fn(&Trial) -> f64| median(trials.iter().map(f).collect());
    let (dct, random_ul, pca_ul, sl1) = (med(|t| t.dct), med(|t| t.random_ul), med(|t| t.pca_ul), med(|t| t.sl1));
    Outcome {
        passed: sl1 <= 0.95 * dct && pca_ul <= 0.95 * random_ul,
        detail: format!(
            "{source}, median MSE x100: RANDOM+DCT {:.2}, RANDOM+UL {:.2}, PCA+UL {:.2}, SL1 {:.2} (SL1 {:.0}% below DCT, PCA+UL {:.0}% below RANDOM+UL)",
            100.0 * dct,
            100.0 * random_ul,
            100.0 * pca_ul,
            100.0 * sl1,
            100.0 * (1.0 - sl1 / dct),
            100.0 * (1.0 - pca_ul / random_ul)
        ),
    }
}
