//! Run configuration files.
//!
//! The format is `[section]` headers followed by `key = value` lines. `#`
//! starts a comment. Lists are comma-separated. Relative paths resolve
//! against the configuration file's directory.
//!
//! ```text
//! [task]
//! kind = regression        # see TaskKind names
//! p = 50
//! q = 1
//!
//! [data]
//! source = signals         # signals | images | patches | halftone
//! train = train.txt
//! validation_fraction = 0.1
//!
//! [coding]
//! lambda1 = 0.15
//! lambda2 = 0.01
//!
//! [train]
//! iterations = 1000
//! rho = 0.1
//! seed = 7
//!
//! [output]
//! model = model.tdm
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use taskdict_core::tasks::{BaselineZ, TaskKind};
use taskdict_core::ElasticNetParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Text file of labeled signals.
    Signals,
    /// Manifest of PGM images with labels; each image is one signal.
    Images,
    /// Manifest of PGM images cut into patches; each patch is its own target.
    Patches,
    /// Manifest of PGM images; halftoned patches paired with the originals.
    Halftone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSection {
    pub kind: TaskKind,
    pub p: usize,
    /// Output dimension or class count; inferred from data when absent.
    pub q: Option<usize>,
    pub r: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub source: Source,
    pub train: PathBuf,
    pub unlabeled: Option<PathBuf>,
    pub validation_fraction: f64,
    pub patch_side: Option<usize>,
    pub stride: usize,
    pub normalize: bool,
    pub augment_shifts: bool,
    pub max_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub iterations: usize,
    pub rho: f64,
    pub t0: Option<f64>,
    pub batch: usize,
    pub nu: f64,
    pub nu_z: f64,
    /// Descending list of semi-supervised weights; `[0]` is plain training.
    pub mu_schedule: Vec<f64>,
    pub seed: u64,
    pub init_passes: usize,
    pub init_batch: usize,
    pub warm_start: bool,
    pub z_init: BaselineZ,
    pub w_radius: Option<f64>,
    pub log_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub model: Option<PathBuf>,
    pub telemetry: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSection {
    pub lambda1: Vec<f64>,
    pub rho: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub path: PathBuf,
    pub task: TaskSection,
    pub data: DataSection,
    pub coding: ElasticNetParams,
    pub train: TrainSection,
    pub output: OutputSection,
    pub search: SearchSection,
}

/// `0.15 + 0.025 k` for `k = -3..=3`.
pub fn default_lambda1_grid() -> Vec<f64> {
    (-3..=3).map(|k| 0.15 + 0.025 * f64::from(k)).collect()
}

/// `1e-3, 1e-2, ..., 1e1`.
pub fn default_rho_grid() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1e0, 1e1]
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Raw {
    path: PathBuf,
    entries: BTreeMap<(String, String), Entry>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("task", &["kind", "p", "q", "r"]),
    (
        "data",
        &["source", "train", "unlabeled", "validation_fraction", "patch_side", "stride", "normalize", "augment", "max_samples"],
    ),
    ("coding", &["lambda1", "lambda2", "tol", "max_active", "allow_unregularized"]),
    (
        "train",
        &[
            "iterations",
            "rho",
            "t0",
            "batch",
            "nu",
            "nu_z",
            "mu",
            "mu_schedule",
            "seed",
            "init_passes",
            "init_batch",
            "warm_start",
            "z_init",
            "w_radius",
            "log_every",
        ],
    ),
    ("output", &["model", "telemetry"]),
    ("search", &["lambda1", "rho", "iterations"]),
];

impl Raw {
    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut section: Option<String> = None;
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| CliError::Config {
                path: path.to_path_buf(),
                line,
                message,
            };
            let content = raw.split('#').next().unwrap_or_default().trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err(format!("unterminated section header {content:?}")))?.trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected `key = value`, found {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.clone().ok_or_else(|| err("key outside of any [section]".into()))?;
            let allowed = KNOWN.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or_default();
            if !allowed.contains(&key) {
                return Err(err(format!("unknown key {key:?} in [{sec}]")));
            }
            let entry = Entry {
                value: value.to_string(),
                line,
                used: false,
            };
            if entries.insert((sec.clone(), key.to_string()), entry).is_some() {
                return Err(err(format!("duplicate key {key:?} in [{sec}]")));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    fn err(&self, line: usize, message: String) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(&(section.to_string(), key.to_string())).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn get<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(line, format!("invalid value {v:?} for [{section}] {key}"))),
        }
    }

    fn or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?.ok_or_else(|| CliError::Config {
            path: self.path.clone(),
            line: 0,
            message: format!("missing required key [{section}] {key}"),
        })
    }

    fn list(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| self.err(line, format!("invalid number {:?} in [{section}] {key}", t.trim()))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn choice<T>(&mut self, section: &str, key: &str, parse: impl Fn(&str) -> Option<T>, expected: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => parse(&v).map(Some).ok_or_else(|| self.err(line, format!("[{section}] {key} must be one of {expected}, got {v:?}"))),
        }
    }

    fn path(&mut self, section: &str, key: &str, must_exist: bool) -> Result<Option<PathBuf>> {
        let Some((v, line)) = self.raw(section, key) else {
            return Ok(None);
        };
        let p = Path::new(&v);
        let resolved = if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        };
        if must_exist && !resolved.exists() {
            return Err(self.err(line, format!("[{section}] {key}: {} does not exist", resolved.display())));
        }
        Ok(Some(resolved))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.entries.get(&(section.to_string(), key.to_string())).map_or(0, |e| e.line)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut raw = Raw::parse(text, path)?;
        let names = TaskKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ");
        let kind = raw
            .choice("task", "kind", TaskKind::from_name, &names)?
            .ok_or_else(|| raw.err(0, "missing required key [task] kind".into()))?;
        let task = TaskSection {
            kind,
            p: raw.required("task", "p")?,
            q: raw.get("task", "q")?,
            r: raw.get("task", "r")?,
        };

        let source = raw
            .choice(
                "data",
                "source",
                |s| match s {
                    "signals" => Some(Source::Signals),
                    "images" => Some(Source::Images),
                    "patches" => Some(Source::Patches),
                    "halftone" => Some(Source::Halftone),
                    _ => None,
                },
                "signals, images, patches, halftone",
            )?
            .unwrap_or(Source::Signals);
        let train_path = raw
            .path("data", "train", true)?
            .ok_or_else(|| raw.err(0, "missing required key [data] train".into()))?;
        let augment = raw.choice(
            "data",
            "augment",
            |s| match s {
                "none" => Some(false),
                "shift" => Some(true),
                _ => None,
            },
            "none, shift",
        )?;
        let data = DataSection {
            source,
            train: train_path,
            unlabeled: raw.path("data", "unlabeled", true)?,
            validation_fraction: raw.or("data", "validation_fraction", 0.0)?,
            patch_side: raw.get("data", "patch_side")?,
            stride: raw.or("data", "stride", 1)?,
            normalize: raw.or("data", "normalize", false)?,
            augment_shifts: augment.unwrap_or(false),
            max_samples: raw.get("data", "max_samples")?,
        };
        if !(0.0..1.0).contains(&data.validation_fraction) {
            return Err(raw.err(raw.line_of("data", "validation_fraction"), "validation_fraction must be in [0, 1)".into()));
        }
        if matches!(source, Source::Patches | Source::Halftone) && data.patch_side.is_none() {
            return Err(raw.err(raw.line_of("data", "source"), "patch sources need [data] patch_side".into()));
        }

        let defaults = ElasticNetParams::default();
        let coding = ElasticNetParams {
            lambda1: raw.or("coding", "lambda1", defaults.lambda1)?,
            lambda2: raw.or("coding", "lambda2", defaults.lambda2)?,
            tol: raw.or("coding", "tol", defaults.tol)?,
            max_active: raw.get("coding", "max_active")?,
            allow_unregularized: raw.or("coding", "allow_unregularized", false)?,
        };
        coding
            .validate()
            .map_err(|e| raw.err(raw.line_of("coding", "lambda1"), e.to_string()))?;

        let mu_single = raw.list("train", "mu")?;
        let mu_schedule = raw.list("train", "mu_schedule")?;
        let mu_line = raw.line_of("train", "mu").max(raw.line_of("train", "mu_schedule"));
        let mu_schedule = match (mu_single, mu_schedule) {
            (Some(_), Some(_)) => return Err(raw.err(mu_line, "set either [train] mu or mu_schedule, not both".into())),
            (Some(m), None) | (None, Some(m)) => m,
            (None, None) => vec![0.0],
        };
        if mu_schedule.is_empty() || mu_schedule.iter().any(|m| !(0.0..=1.0).contains(m)) || mu_schedule.windows(2).any(|w| w[1] > w[0]) {
            return Err(raw.err(mu_line, "mu values must lie in [0, 1] and be descending".into()));
        }
        let z_init = raw
            .choice(
                "train",
                "z_init",
                |s| match s {
                    "random" => Some(BaselineZ::RandomGaussian),
                    "pca" => Some(BaselineZ::Pca),
                    "identity" => Some(BaselineZ::Identity),
                    _ => None,
                },
                "random, pca, identity",
            )?
            .unwrap_or(BaselineZ::Pca);
        let train = TrainSection {
            iterations: raw.or("train", "iterations", 1000)?,
            rho: raw.or("train", "rho", 0.1)?,
            t0: raw.get("train", "t0")?,
            batch: raw.or("train", "batch", 200)?,
            nu: raw.or("train", "nu", 1e-9)?,
            nu_z: raw.or("train", "nu_z", 1e-9)?,
            mu_schedule,
            seed: raw.or("train", "seed", 0)?,
            init_passes: raw.or("train", "init_passes", 1)?,
            init_batch: raw.or("train", "init_batch", 200)?,
            warm_start: raw.or("train", "warm_start", true)?,
            z_init,
            w_radius: raw.get("train", "w_radius")?,
            log_every: raw.or("train", "log_every", 100)?,
        };
        if train.batch == 0 || train.log_every == 0 || train.init_batch == 0 {
            return Err(raw.err(raw.line_of("train", "batch"), "batch sizes and log_every must be >= 1".into()));
        }
        if !(train.rho.is_finite() && train.rho >= 0.0) {
            return Err(raw.err(raw.line_of("train", "rho"), "rho must be finite and >= 0".into()));
        }

        let output = OutputSection {
            model: raw.path("output", "model", false)?,
            telemetry: raw.path("output", "telemetry", false)?,
        };
        let search = SearchSection {
            lambda1: raw.list("search", "lambda1")?.unwrap_or_else(default_lambda1_grid),
            rho: raw.list("search", "rho")?.unwrap_or_else(default_rho_grid),
            iterations: raw.or("search", "iterations", 500)?,
        };
        if let Some(((sec, key), e)) = raw.entries.iter().find(|(_, e)| !e.used) {
            return Err(raw.err(e.line, format!("unused key {key:?} in [{sec}]")));
        }
        Ok(Self {
            path: path.to_path_buf(),
            task,
            data,
            coding,
            train,
            output,
            search,
        })
    }
}
