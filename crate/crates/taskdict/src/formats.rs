//! Plain-text signal, label, code and prediction files.
//!
//! Signal files hold one signal per line as whitespace-separated numbers.
//! Labeled files prefix each signal with its label and a `|`:
//!
//! ```text
//! 0.5 -1.25 | 0.1 0.2 0.3     regression target
//! -1 | 0.1 0.2 0.3            binary label
//! 3 | 0.1 0.2 0.3             class label (1-based)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use taskdict_core::data::Sample;
use taskdict_core::elastic_net::KktReport;
use taskdict_core::tasks::{Prediction, TaskKind};
use taskdict_core::{Label, SparseCode, Vector};

use crate::error::{CliError, Result};

/// How labels are read for a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Target,
    Binary,
    Class,
    /// No label column; the signal is its own target.
    SelfTarget,
}

impl LabelKind {
    pub fn for_task(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Regression => LabelKind::Target,
            TaskKind::BinaryLinear | TaskKind::BinaryBilinear => LabelKind::Binary,
            TaskKind::MulticlassOneVsAll | TaskKind::MulticlassSoftmax | TaskKind::MulticlassRegression => LabelKind::Class,
            TaskKind::CompressedSensing => LabelKind::SelfTarget,
        }
    }

    pub fn parse(&self, text: &str) -> std::result::Result<Label, String> {
        let text = text.trim();
        match self {
            LabelKind::Target => parse_numbers(text).map(|v| Label::Target(Vector::from_vec(v))),
            LabelKind::Binary => match text {
                "1" | "+1" => Ok(Label::Binary(1)),
                "-1" => Ok(Label::Binary(-1)),
                other => Err(format!("binary label must be -1 or +1, got {other:?}")),
            },
            LabelKind::Class => text
                .parse::<usize>()
                .ok()
                .filter(|&c| c >= 1)
                .map(Label::Class)
                .ok_or_else(|| format!("class label must be an integer >= 1, got {text:?}")),
            LabelKind::SelfTarget => Err("this task takes unlabeled signals".into()),
        }
    }
}

fn parse_numbers(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a finite number: {t:?}"))
        })
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_signals(text: &str, path: &Path) -> Result<Vec<Vector>> {
    let mut out = Vec::new();
    for (line, content) in content_lines(text) {
        let values = parse_numbers(content).map_err(|m| CliError::format(path, format!("line {line}: {m}")))?;
        if let Some(first) = out.first().map(|v: &Vector| v.len()) {
            if values.len() != first {
                return Err(CliError::format(path, format!("line {line}: expected {first} values, found {}", values.len())));
            }
        }
        if values.is_empty() {
            return Err(CliError::format(path, format!("line {line}: empty signal")));
        }
        out.push(Vector::from_vec(values));
    }
    if out.is_empty() {
        return Err(CliError::format(path, "no signals"));
    }
    Ok(out)
}

pub fn parse_labeled(text: &str, kind: LabelKind, path: &Path) -> Result<Vec<Sample>> {
    if kind == LabelKind::SelfTarget {
        return Ok(parse_signals(text, path)?
            .into_iter()
            .map(|x| Sample::new(Label::Target(x.clone()), x))
            .collect());
    }
    let mut out: Vec<Sample> = Vec::new();
    for (line, content) in content_lines(text) {
        let err = |m: String| CliError::format(path, format!("line {line}: {m}"));
        let (label, signal) = content.split_once('|').ok_or_else(|| err("expected `label | signal`".into()))?;
        let label = kind.parse(label).map_err(err)?;
        let x = parse_numbers(signal).map_err(err)?;
        if let Some(first) = out.first() {
            if x.len() != first.x.len() {
                return Err(err(format!("expected {} values, found {}", first.x.len(), x.len())));
            }
        }
        if x.is_empty() {
            return Err(err("empty signal".into()));
        }
        out.push(Sample::new(label, Vector::from_vec(x)));
    }
    if out.is_empty() {
        return Err(CliError::format(path, "no samples"));
    }
    Ok(out)
}

pub fn read_signals(path: &Path) -> Result<Vec<Vector>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_signals(&text, path)
}

pub fn read_labeled(path: &Path, kind: LabelKind) -> Result<Vec<Sample>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_labeled(&text, kind, path)
}

fn push_numbers(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
}

pub fn format_label(label: &Label) -> String {
    match label {
        Label::Target(v) => {
            let mut s = String::new();
            push_numbers(&mut s, v.iter().copied());
            s
        }
        Label::Binary(y) => format!("{y:+}"),
        Label::Class(c) => c.to_string(),
    }
}

pub fn format_labeled(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&format_label(&s.label));
        out.push_str(" | ");
        push_numbers(&mut out, s.x.iter().copied());
        out.push('\n');
    }
    out
}

pub fn format_signals(signals: &[Vector]) -> String {
    let mut out = String::new();
    for x in signals {
        push_numbers(&mut out, x.iter().copied());
        out.push('\n');
    }
    out
}

/// One line per code: KKT max violation, support size, then `index:value`
/// pairs in increasing index order.
pub fn format_codes(codes: &[(SparseCode, KktReport)], model_hash: &str) -> String {
    let mut out = format!("# taskdict codes model={model_hash}\n# kkt\tnnz\tsupport\n");
    for (code, kkt) in codes {
        let mut support: Vec<usize> = code.active.clone();
        support.sort_unstable();
        let _ = write!(out, "{:?}\t{}\t", kkt.max_violation(), support.len());
        for (i, j) in support.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{j}:{:?}", code.alpha[*j]);
        }
        out.push('\n');
    }
    out
}

pub fn format_predictions(predictions: &[Prediction], kind: TaskKind, model_hash: &str) -> String {
    let mut out = format!("# taskdict predictions task={} model={model_hash}\n", kind.name());
    for p in predictions {
        match p {
            Prediction::Values(v) => push_numbers(&mut out, v.iter().copied()),
            Prediction::Binary { label, score } => {
                let _ = write!(out, "{label:+} {score:?}");
            }
            Prediction::Class { label, scores } => {
                let _ = write!(out, "{label} ");
                push_numbers(&mut out, scores.iter().copied());
            }
        }
        out.push('\n');
    }
    out
}
