//! Dataset preparation, training, search and evaluation behind the CLI verbs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taskdict_core::data::{extract_patches, floyd_steinberg, normalize, reconstruct_image, shift_augment, Image, Patch, PatchConfig, Sample, SampleStream};
use taskdict_core::metrics::psnr;
use taskdict_core::tasks::{make_baseline_z, Prediction, TaskKind, TaskModel, TaskSpec};
use taskdict_core::trainer::{
    continuation_schedule, init_unsupervised, warm_start_w, Executor, InitOptions, ParamConstraint, Sequential, TrainConfig, WarmStartOptions,
};
use taskdict_core::{ElasticNetParams, Error as CoreError, Label, Matrix, Model, Vector};

use crate::config::{RunConfig, Source};
use crate::error::{CliError, Result};
use crate::formats::{read_labeled, read_signals, LabelKind};
use crate::manifest;
use crate::model_file::ModelFile;
use crate::parallel::derive_seed;
use crate::pgm;

// Seed tags, so that every random stream in a run is independent.
const TAG_SPLIT: u64 = 1;
const TAG_SUBSAMPLE: u64 = 2;
const TAG_Z: u64 = 10;
const TAG_INIT: u64 = 20;
const TAG_LABELED: u64 = 30;
const TAG_UNLABELED: u64 = 40;
const TAG_SEARCH: u64 = 50;

/// Training and validation data with the task dimensions they imply.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub spec: TaskSpec,
    pub train: Vec<Sample>,
    pub valid: Vec<Sample>,
    /// Extra signals for initialization and the unsupervised term.
    pub unlabeled: Option<Vec<Vector>>,
}

impl Prepared {
    /// Signals used to initialize the dictionary: the unlabeled pool when
    /// given, else the training signals.
    pub fn pool(&self) -> Vec<Vector> {
        match &self.unlabeled {
            Some(u) => u.clone(),
            None => self.train.iter().map(|s| s.x.clone()).collect(),
        }
    }
}

/// Seeded shuffle; the first `round(n * fraction)` items (at least one when
/// `fraction > 0`) become the second half.
pub fn split<T>(mut items: Vec<T>, fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    if fraction <= 0.0 || items.len() < 2 {
        return (items, Vec::new());
    }
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_valid = ((items.len() as f64 * fraction).round() as usize).clamp(1, items.len() - 1);
    let train = items.split_off(n_valid);
    (train, items)
}

fn subsample<T>(mut items: Vec<T>, max: Option<usize>, seed: u64) -> Vec<T> {
    match max {
        Some(max) if items.len() > max => {
            items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            items.truncate(max);
            items
        }
        _ => items,
    }
}

fn load_images(path: &Path) -> Result<Vec<(Image, Option<String>)>> {
    manifest::read(path)?
        .into_iter()
        .map(|e| Ok((pgm::read(&e.path)?, e.label)))
        .collect()
}

fn flatten(image: &Image, normalized: bool) -> Vector {
    let x = Vector::from_vec(image.pixels.clone());
    if normalized {
        normalize(&x)
    } else {
        x
    }
}

/// Inverse-halftoning pairs: halftoned patches as inputs, the original
/// patches as targets.
pub fn halftone_pairs(image: &Image, side: usize, stride: usize) -> Result<Vec<Sample>> {
    let cfg = PatchConfig::raw(side, stride);
    let original = extract_patches(image, &cfg)?;
    let toned = extract_patches(&floyd_steinberg(image), &cfg)?;
    Ok(toned
        .into_iter()
        .zip(original)
        .map(|(x, y)| Sample::new(Label::Target(y.values), x.values))
        .collect())
}

/// Loads the configured dataset and splits off the validation set.
pub fn prepare(cfg: &RunConfig, seed: u64) -> Result<Prepared> {
    let d = &cfg.data;
    let kind = cfg.task.kind;
    let label_kind = LabelKind::for_task(kind);
    let split_seed = derive_seed(seed, TAG_SPLIT);
    let sub_seed = derive_seed(seed, TAG_SUBSAMPLE);
    let (train, valid) = match d.source {
        Source::Signals => {
            let all = subsample(read_labeled(&d.train, label_kind)?, d.max_samples, sub_seed);
            split(all, d.validation_fraction, split_seed)
        }
        Source::Images => {
            let images = load_images(&d.train)?
                .into_iter()
                .map(|(img, label)| {
                    let text = label.ok_or_else(|| CliError::Data("image manifests for this source need a label per line".into()))?;
                    let label = label_kind.parse(&text).map_err(CliError::Data)?;
                    Ok((img, label))
                })
                .collect::<Result<Vec<_>>>()?;
            let images = subsample(images, d.max_samples, sub_seed);
            let (train_imgs, valid_imgs) = split(images, d.validation_fraction, split_seed);
            let mut train = Vec::new();
            for (img, label) in &train_imgs {
                if d.augment_shifts {
                    for v in shift_augment(img)? {
                        train.push(Sample::new(label.clone(), flatten(&v, d.normalize)));
                    }
                } else {
                    train.push(Sample::new(label.clone(), flatten(img, d.normalize)));
                }
            }
            let valid = valid_imgs.iter().map(|(img, l)| Sample::new(l.clone(), flatten(img, d.normalize))).collect();
            (train, valid)
        }
        Source::Patches => {
            if label_kind != LabelKind::SelfTarget {
                return Err(CliError::Setting(format!("source = patches needs a compressed_sensing task, not {}", kind.name())));
            }
            let side = d.patch_side.unwrap_or_default();
            let pc = PatchConfig {
                side,
                stride: d.stride,
                zero_mean: d.normalize,
                unit_norm: d.normalize,
            };
            let mut all = Vec::new();
            for (img, _) in load_images(&d.train)? {
                for p in extract_patches(&img, &pc)? {
                    all.push(Sample::new(Label::Target(p.values.clone()), p.values));
                }
            }
            split(subsample(all, d.max_samples, sub_seed), d.validation_fraction, split_seed)
        }
        Source::Halftone => {
            if kind != TaskKind::Regression {
                return Err(CliError::Setting(format!("source = halftone needs a regression task, not {}", kind.name())));
            }
            let side = d.patch_side.unwrap_or_default();
            let mut all = Vec::new();
            for (img, _) in load_images(&d.train)? {
                all.extend(halftone_pairs(&img, side, d.stride)?);
            }
            split(subsample(all, d.max_samples, sub_seed), d.validation_fraction, split_seed)
        }
    };
    if train.is_empty() {
        return Err(CliError::Data("no training samples".into()));
    }
    let m = train[0].x.len();
    let q = infer_q(kind, cfg.task.q, &train, &valid, m)?;
    let spec = TaskSpec::new(kind, m, cfg.task.p, q, cfg.task.r)?;
    let unlabeled = match &d.unlabeled {
        Some(path) => {
            let u = read_signals(path)?;
            if u[0].len() != m {
                return Err(CliError::Data(format!("unlabeled signals have dimension {}, training signals {m}", u[0].len())));
            }
            Some(u)
        }
        None => None,
    };
    Ok(Prepared { spec, train, valid, unlabeled })
}

fn infer_q(kind: TaskKind, given: Option<usize>, train: &[Sample], valid: &[Sample], m: usize) -> Result<usize> {
    let all = || train.iter().chain(valid);
    let inferred = match kind {
        TaskKind::BinaryLinear | TaskKind::BinaryBilinear => 1,
        TaskKind::CompressedSensing => m,
        TaskKind::Regression => match &train[0].label {
            Label::Target(t) => t.len(),
            _ => 1,
        },
        _ => all()
            .map(|s| match s.label {
                Label::Class(c) => c,
                _ => 0,
            })
            .max()
            .unwrap_or(1),
    };
    match given {
        None => Ok(inferred),
        Some(q) if kind.is_classification() && kind != TaskKind::BinaryLinear && kind != TaskKind::BinaryBilinear && q >= inferred => Ok(q),
        Some(q) if q == inferred => Ok(q),
        Some(q) => Err(CliError::Data(format!("[task] q = {q} but the data implies q = {inferred}"))),
    }
}

/// Knobs a search varies; everything else comes from the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub coding: ElasticNetParams,
    pub rho: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl FitParams {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            coding: cfg.coding,
            rho: cfg.train.rho,
            iterations: cfg.train.iterations,
            seed: cfg.train.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRow {
    pub stage: usize,
    pub mu: f64,
    pub head: usize,
    pub iteration: usize,
    pub objective: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub task: TaskModel,
    /// Parameters before the first SGD step.
    pub initial: TaskModel,
    /// Model after each continuation stage; empty when no iterations ran.
    pub stages: Vec<(f64, TaskModel)>,
    pub telemetry: Vec<TelemetryRow>,
}

/// Initialization (unsupervised dictionary, baseline transform, warm-started
/// `W`) followed by the configured continuation schedule, for every head.
pub fn fit<E: Executor>(cfg: &RunConfig, params: &FitParams, data: &Prepared, exec: &E) -> Result<Fitted> {
    let spec = data.spec;
    let t = &cfg.train;
    let pool = data.pool();
    let mu_schedule = &t.mu_schedule;
    let needs_unlabeled = mu_schedule.iter().any(|&mu| mu > 0.0);
    let mut heads = Vec::with_capacity(spec.heads());
    let mut initial = Vec::with_capacity(spec.heads());
    let mut stage_heads: Vec<Vec<Model>> = vec![Vec::new(); mu_schedule.len()];
    let mut telemetry = Vec::new();
    for h in 0..spec.heads() {
        let labeled = spec.training_set(&data.train, h)?;
        let z = match spec.r {
            Some(r) => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, TAG_Z + h as u64));
                Some(make_baseline_z(t.z_init, Some(&pool), r, spec.m, &mut rng)?)
            }
            None => None,
        };
        let inputs: Vec<Vector> = match &z {
            Some(z) => pool.iter().map(|x| z * x).collect(),
            None => pool.clone(),
        };
        let mut init_stream = SampleStream::new(&inputs, derive_seed(params.seed, TAG_INIT + h as u64))?;
        let init = InitOptions {
            passes: t.init_passes,
            batch: t.init_batch,
        };
        let dict = init_unsupervised(&mut init_stream, spec.p, &params.coding, &init, exec)?;
        let mut model = Model::new(dict, Matrix::zeros(spec.w_rows(), spec.p), z, spec.kind.loss(), params.coding)?;
        if t.warm_start {
            model.w = warm_start_w(&model, &labeled, t.nu, &WarmStartOptions::default(), exec)?;
        }
        initial.push(model.clone());
        if params.iterations > 0 {
            let tc = train_config(cfg, params, h);
            let mut stream = SampleStream::new(&labeled, derive_seed(params.seed, TAG_LABELED + h as u64))?;
            let mut unl = if needs_unlabeled {
                Some(SampleStream::new(&pool, derive_seed(params.seed, TAG_UNLABELED + h as u64))?)
            } else {
                None
            };
            let stages = continuation_schedule(model, &mut stream, unl.as_mut(), &tc, mu_schedule, exec)?;
            for (k, stage) in stages.iter().enumerate() {
                telemetry.extend(stage.trained.telemetry.iter().map(|p| TelemetryRow {
                    stage: k,
                    mu: stage.mu,
                    head: h,
                    iteration: p.iteration,
                    objective: p.objective,
                    learning_rate: p.learning_rate,
                }));
                stage_heads[k].push(stage.trained.model.clone());
            }
            model = stages.last().map(|s| s.trained.model.clone()).ok_or(CoreError::Empty("mu schedule"))?;
        }
        heads.push(model);
    }
    let stages = if params.iterations > 0 {
        mu_schedule
            .iter()
            .zip(stage_heads)
            .map(|(&mu, hs)| Ok((mu, TaskModel::new(spec, hs)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(Fitted {
        task: TaskModel::new(spec, heads)?,
        initial: TaskModel::new(spec, initial)?,
        stages,
        telemetry,
    })
}

fn train_config(cfg: &RunConfig, params: &FitParams, head: usize) -> TrainConfig {
    let t = &cfg.train;
    let mut tc = TrainConfig::new(params.iterations, params.rho);
    if let Some(t0) = t.t0 {
        tc.t0 = t0.max(1.0);
    }
    tc.batch = t.batch;
    tc.nu = t.nu;
    tc.nu_z = t.nu_z;
    tc.seed = derive_seed(params.seed, TAG_LABELED + head as u64);
    tc.log_every = t.log_every;
    if let Some(r) = t.w_radius {
        tc.w_constraint = ParamConstraint::FrobeniusBall(r);
    }
    tc
}

/// Model file with the run's data geometry recorded in its metadata.
pub fn model_file(cfg: &RunConfig, params: &FitParams, task: TaskModel) -> ModelFile {
    let mut file = ModelFile::new(task);
    let d = &cfg.data;
    let source = match d.source {
        Source::Signals => "signals",
        Source::Images => "images",
        Source::Patches => "patches",
        Source::Halftone => "halftone",
    };
    file.meta.insert("source".into(), source.into());
    file.meta.insert("seed".into(), params.seed.to_string());
    file.meta.insert("iterations".into(), params.iterations.to_string());
    file.meta.insert("rho".into(), format!("{:?}", params.rho));
    file.meta.insert("normalize".into(), d.normalize.to_string());
    if let Some(side) = d.patch_side {
        file.meta.insert("patch_side".into(), side.to_string());
        file.meta.insert("stride".into(), d.stride.to_string());
    }
    file
}

pub fn format_telemetry(rows: &[TelemetryRow]) -> String {
    let mut out = String::from("stage\tmu\thead\titeration\tobjective\tlearning_rate\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{:?}\t{}\t{}\t{:?}\t{:?}", r.stage, r.mu, r.head, r.iteration, r.objective, r.learning_rate);
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRow {
    pub lambda1: f64,
    pub rho: f64,
    /// Validation error; `+inf` when the run diverged.
    pub score: f64,
}

/// Short runs over the `lambda1 x rho` grid, scored on the validation split
/// and ranked best first. Ties go to the smaller `lambda1`, then the smaller
/// `rho`. Grid points run in parallel on `exec`; each point trains
/// sequentially with the same derived seed, so the ranking does not depend
/// on scheduling.
pub fn search<E: Executor>(cfg: &RunConfig, data: &Prepared, seed: u64, exec: &E) -> Result<Vec<SearchRow>> {
    let s = &cfg.search;
    if s.lambda1.is_empty() || s.rho.is_empty() {
        return Err(CliError::Setting("search grid is empty".into()));
    }
    if data.valid.is_empty() {
        return Err(CliError::Setting("search needs a validation split; set [data] validation_fraction".into()));
    }
    let points: Vec<(f64, f64)> = s.lambda1.iter().flat_map(|&l| s.rho.iter().map(move |&r| (l, r))).collect();
    let point_seed = derive_seed(seed, TAG_SEARCH);
    let results = exec.map(&points, |&(lambda1, rho)| -> Result<SearchRow> {
        let params = FitParams {
            coding: ElasticNetParams { lambda1, ..cfg.coding },
            rho,
            iterations: s.iterations,
            seed: point_seed,
        };
        params
            .coding
            .validate()
            .map_err(|e| CliError::Setting(format!("search point lambda1 = {lambda1}: {e}")))?;
        let score = match fit(cfg, &params, data, &Sequential) {
            Ok(f) => f.task.validation_error(&data.valid)?,
            Err(CliError::Core(CoreError::Diverged { .. })) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        Ok(SearchRow {
            lambda1,
            rho,
            score: if score.is_nan() { f64::INFINITY } else { score },
        })
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rank(&mut rows);
    Ok(rows)
}

pub fn rank(rows: &mut [SearchRow]) {
    rows.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.lambda1.total_cmp(&b.lambda1))
            .then(a.rho.total_cmp(&b.rho))
    });
}

pub fn format_search(rows: &[SearchRow]) -> String {
    let mut out = String::from("rank\tlambda1\trho\tscore\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(out, "{}\t{:?}\t{:?}\t{}", i + 1, r.lambda1, r.rho, fmt_metric(r.score));
    }
    out
}

/// Evaluation summary. Regression-type tasks get MSE per coordinate and the
/// PSNR it implies for intensities in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub samples: usize,
    pub error_rate: Option<f64>,
    pub mse: Option<f64>,
    pub psnr: Option<f64>,
}

pub fn evaluate<E: Executor>(task: &TaskModel, data: &[Sample], exec: &E) -> Result<Metrics> {
    if data.is_empty() {
        return Err(CliError::Core(CoreError::Empty("evaluation set")));
    }
    let err = task.validation_error_with(data, exec)?;
    Ok(if task.spec.kind.is_classification() {
        Metrics {
            samples: data.len(),
            error_rate: Some(err),
            mse: None,
            psnr: None,
        }
    } else {
        Metrics {
            samples: data.len(),
            error_rate: None,
            mse: Some(err),
            psnr: Some(psnr(err * 255.0 * 255.0)),
        }
    })
}

/// Numbers print in shortest round-trip form; an infinite PSNR prints `inf`.
fn fmt_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

pub fn format_metrics(m: &Metrics, model_hash: &str) -> String {
    let mut out = format!("# taskdict metrics model={model_hash}\nsamples\t{}\n", m.samples);
    if let Some(e) = m.error_rate {
        let _ = writeln!(out, "error_rate\t{}", fmt_metric(e));
        let _ = writeln!(out, "error_percent\t{}", fmt_metric(100.0 * e));
    }
    if let Some(mse) = m.mse {
        let _ = writeln!(out, "mse\t{}", fmt_metric(mse));
        let _ = writeln!(out, "mse_x100\t{}", fmt_metric(100.0 * mse));
    }
    if let Some(p) = m.psnr {
        let _ = writeln!(out, "psnr_db\t{}", fmt_metric(p));
    }
    out
}

/// Runs a patch-to-patch model over every overlapping patch of `image` and
/// averages the estimates back into an image.
pub fn predict_image<E: Executor>(file: &ModelFile, image: &Image, exec: &E) -> Result<Image> {
    let task = &file.task;
    let side = file
        .meta_usize("patch_side")
        .ok_or_else(|| CliError::Setting("model was not trained on patches; image prediction needs meta.patch_side".into()))?;
    if file.meta.get("normalize").map(String::as_str) == Some("true") {
        return Err(CliError::Setting("image prediction needs a model trained on unnormalized patches".into()));
    }
    if !matches!(task.spec.kind, TaskKind::Regression | TaskKind::CompressedSensing) || task.spec.m != side * side || task.heads[0].w.nrows() != side * side {
        return Err(CliError::Setting(format!("{} model does not map {side}x{side} patches to patches", task.spec.kind.name())));
    }
    let patches = extract_patches(image, &PatchConfig::raw(side, 1))?;
    let xs: Vec<Vector> = patches.iter().map(|p| p.values.clone()).collect();
    let estimates = task
        .predict_batch(&xs, exec)?
        .into_iter()
        .zip(&patches)
        .map(|(pred, p)| match pred {
            Prediction::Values(v) => Ok(Patch {
                row: p.row,
                col: p.col,
                values: v,
            }),
            _ => Err(CliError::Setting("model does not predict values".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = reconstruct_image(&estimates, side, image.height, image.width)?;
    for v in &mut out.pixels {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}
