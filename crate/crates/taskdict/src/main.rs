use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use taskdict::config::RunConfig;
use taskdict::formats::{format_codes, format_predictions, read_labeled, read_signals, LabelKind};
use taskdict::model_file::{digest_hex, ModelFile};
use taskdict::parallel::{encode_all, Threads};
use taskdict::pipeline::{self, FitParams};
use taskdict::{pgm, CliError, Result};

/// Task-driven dictionary learning.
#[derive(Parser)]
#[command(name = "taskdict", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model as described by a configuration file.
    Train(RunArgs),
    /// Sparse-code signals with a model's dictionary.
    Encode(ModelArgs),
    /// Apply a model to signals, or to a PGM image for patch models.
    Predict(ModelArgs),
    /// Error rate or MSE/PSNR of a model on labeled data.
    Evaluate(ModelArgs),
    /// Rank lambda1 x rho grid points by validation error.
    Search(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides [train] seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Model path for train (overrides [output] model); report path for search.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
    /// Signal file, labeled file (evaluate) or PGM image (predict).
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => pipeline::write_text(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn load_model(path: &Path) -> Result<(ModelFile, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let file = ModelFile::from_bytes(&bytes).map_err(|m| CliError::format(path, m))?;
    Ok((file, digest_hex(&bytes)))
}

fn train(args: &RunArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.model.clone())
        .ok_or_else(|| CliError::Setting("no model path: pass --out or set [output] model".into()))?;
    let exec = Threads::new(args.threads)?;
    let data = pipeline::prepare(&cfg, cfg.train.seed)?;
    info!("{} training and {} validation samples, m = {}", data.train.len(), data.valid.len(), data.spec.m);
    let params = FitParams::from_config(&cfg);
    let fitted = pipeline::fit(&cfg, &params, &data, &exec)?;
    if !data.valid.is_empty() {
        info!("validation error {:?}", fitted.task.validation_error_with(&data.valid, &exec)?);
    }
    pipeline::model_file(&cfg, &params, fitted.task).save(&out)?;
    if let Some(path) = &cfg.output.telemetry {
        pipeline::write_text(path, &pipeline::format_telemetry(&fitted.telemetry))?;
    }
    info!("wrote {}", out.display());
    Ok(())
}

fn search(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.train.seed);
    let exec = Threads::new(args.threads)?;
    let data = pipeline::prepare(&cfg, seed)?;
    let rows = pipeline::search(&cfg, &data, seed, &exec)?;
    emit(args.out.as_deref(), &pipeline::format_search(&rows))
}

fn encode(args: &ModelArgs) -> Result<()> {
    let (file, hash) = load_model(&args.model)?;
    let signals = read_signals(&args.input)?;
    let exec = Threads::new(args.threads)?;
    let mut codes = Vec::with_capacity(signals.len() * file.task.heads.len());
    // One-vs-all models have a dictionary per class; codes are listed head by head.
    for head in &file.task.heads {
        codes.extend(encode_all(head, &signals, &exec)?);
    }
    emit(args.out.as_deref(), &format_codes(&codes, &hash))
}

fn predict(args: &ModelArgs) -> Result<()> {
    let (file, hash) = load_model(&args.model)?;
    let exec = Threads::new(args.threads)?;
    if args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        let image = pgm::read(&args.input)?;
        let estimate = pipeline::predict_image(&file, &image, &exec)?;
        let out = args
            .out
            .as_deref()
            .ok_or_else(|| CliError::Setting("image prediction writes a PGM; pass --out".into()))?;
        return pgm::write(out, &estimate);
    }
    let signals = read_signals(&args.input)?;
    let preds = file.task.predict_batch(&signals, &exec)?;
    emit(args.out.as_deref(), &format_predictions(&preds, file.task.spec.kind, &hash))
}

fn evaluate(args: &ModelArgs) -> Result<()> {
    let (file, hash) = load_model(&args.model)?;
    let exec = Threads::new(args.threads)?;
    let data = read_labeled(&args.input, LabelKind::for_task(file.task.spec.kind))?;
    let metrics = pipeline::evaluate(&file.task, &data, &exec)?;
    emit(args.out.as_deref(), &pipeline::format_metrics(&metrics, &hash))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Search(a) => search(a),
        Command::Encode(a) => encode(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taskdict: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
