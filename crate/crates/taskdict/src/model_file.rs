//! Model persistence.
//!
//! Layout: the 8-byte magic `TDDLMOD1`, a little-endian `u32` header length,
//! a UTF-8 header of `key=value` lines, then for each head the matrices `D`,
//! `W` and (if present) `Z` as little-endian `f64` in column-major order.
//! Floats in the header use Rust's shortest round-trip formatting, so a
//! loaded model saves back to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use taskdict_core::tasks::{TaskKind, TaskModel, TaskSpec};
use taskdict_core::{Dictionary, ElasticNetParams, Matrix, Model, TaskLoss};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"TDDLMOD1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub task: TaskModel,
    /// Free-form annotations, e.g. the patch geometry used in training.
    pub meta: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn new(task: TaskModel) -> Self {
        Self { task, meta: BTreeMap::new() }
    }

    pub fn to_bytes(&self) -> std::result::Result<Vec<u8>, String> {
        let heads = &self.task.heads;
        let first = heads.first().ok_or("model has no heads")?;
        if heads.iter().any(|h| h.coding != first.coding || h.loss != first.loss) {
            return Err("all heads must share the loss and coding parameters".into());
        }
        for key in self.meta.keys() {
            if key.is_empty() || key.contains(['=', '\n']) {
                return Err(format!("invalid meta key {key:?}"));
            }
        }
        if self.meta.values().any(|v| v.contains('\n')) {
            return Err("meta values must be single-line".into());
        }
        let spec = &self.task.spec;
        let c = &first.coding;
        let mut header = String::new();
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |n| n.to_string());
        let _ = writeln!(header, "format={FORMAT_VERSION}");
        let _ = writeln!(header, "task={}", spec.kind.name());
        let _ = writeln!(header, "m={}", spec.m);
        let _ = writeln!(header, "p={}", spec.p);
        let _ = writeln!(header, "q={}", spec.q);
        let _ = writeln!(header, "r={}", opt(spec.r));
        let _ = writeln!(header, "heads={}", heads.len());
        let _ = writeln!(header, "loss={}", first.loss.name());
        let _ = writeln!(header, "lambda1={:?}", c.lambda1);
        let _ = writeln!(header, "lambda2={:?}", c.lambda2);
        let _ = writeln!(header, "tol={:?}", c.tol);
        let _ = writeln!(header, "max_active={}", opt(c.max_active));
        let _ = writeln!(header, "allow_unregularized={}", c.allow_unregularized);
        for (k, v) in &self.meta {
            let _ = writeln!(header, "meta.{k}={v}");
        }
        let mut out = Vec::with_capacity(12 + header.len() + 8 * payload_len(spec).unwrap_or(0) * heads.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&u32::try_from(header.len()).map_err(|_| "header too long")?.to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        for h in heads {
            push_matrix(&mut out, h.dictionary.atoms());
            push_matrix(&mut out, &h.w);
            if let Some(z) = &h.z {
                push_matrix(&mut out, z);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err("not a taskdict model file (bad magic)".into());
        }
        let len = u32::from_le_bytes(bytes[8..12].try_into().map_err(|_| "truncated header length")?) as usize;
        let header = bytes.get(12..12 + len).ok_or("truncated header")?;
        let header = std::str::from_utf8(header).map_err(|_| "header is not UTF-8")?;
        let mut fields = BTreeMap::new();
        let mut meta = BTreeMap::new();
        for line in header.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| format!("malformed header line {line:?}"))?;
            if let Some(key) = k.strip_prefix("meta.") {
                meta.insert(key.to_string(), v.to_string());
            } else if fields.insert(k, v).is_some() {
                return Err(format!("duplicate header key {k:?}"));
            }
        }
        let mut take = |k: &str| fields.remove(k).ok_or_else(|| format!("header lacks {k:?}"));
        let num = |s: &str, k: &str| s.parse::<usize>().map_err(|_| format!("bad {k}: {s:?}"));
        let opt = |s: &str, k: &str| if s == "none" { Ok(None) } else { num(s, k).map(Some) };
        let float = |s: &str, k: &str| s.parse::<f64>().map_err(|_| format!("bad {k}: {s:?}"));

        let version = take("format")?;
        if version != FORMAT_VERSION.to_string() {
            return Err(format!("unsupported format version {version}"));
        }
        let kind = take("task")?;
        let kind = TaskKind::from_name(kind).ok_or_else(|| format!("unknown task {kind:?}"))?;
        let m = num(take("m")?, "m")?;
        let p = num(take("p")?, "p")?;
        let q = num(take("q")?, "q")?;
        let r = opt(take("r")?, "r")?;
        let heads = num(take("heads")?, "heads")?;
        let loss = take("loss")?;
        let loss = TaskLoss::from_name(loss).ok_or_else(|| format!("unknown loss {loss:?}"))?;
        let coding = ElasticNetParams {
            lambda1: float(take("lambda1")?, "lambda1")?,
            lambda2: float(take("lambda2")?, "lambda2")?,
            tol: float(take("tol")?, "tol")?,
            max_active: opt(take("max_active")?, "max_active")?,
            allow_unregularized: match take("allow_unregularized")? {
                "true" => true,
                "false" => false,
                other => return Err(format!("bad allow_unregularized: {other:?}")),
            },
        };
        if let Some(k) = fields.keys().next() {
            return Err(format!("unknown header key {k:?}"));
        }
        let spec = TaskSpec::new(kind, m, p, q, r).map_err(|e| e.to_string())?;
        if loss != kind.loss() {
            return Err(format!("loss {} does not match task {}", loss.name(), kind.name()));
        }
        if heads != spec.heads() {
            return Err(format!("{} task needs {} heads, header says {heads}", kind.name(), spec.heads()));
        }
        let expected = payload_len(&spec)
            .and_then(|n| n.checked_mul(8)?.checked_mul(heads)?.checked_add(12 + len))
            .ok_or("header dimensions overflow")?;
        if bytes.len() != expected {
            return Err(format!("payload size mismatch: file has {} bytes, header implies {expected}", bytes.len()));
        }
        let mut pos = 12 + len;
        let mut out = Vec::with_capacity(heads);
        for _ in 0..heads {
            let d = read_matrix(bytes, &mut pos, spec.encoder_dim(), p);
            let w = read_matrix(bytes, &mut pos, spec.w_rows(), p);
            let z = r.map(|r| read_matrix(bytes, &mut pos, r, m));
            let dict = Dictionary::new(d).map_err(|e| e.to_string())?;
            out.push(Model::new(dict, w, z, loss, coding).map_err(|e| e.to_string())?);
        }
        let task = TaskModel::new(spec, out).map_err(|e| e.to_string())?;
        Ok(Self { task, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes().map_err(|m| CliError::format(path, m))?;
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|m| CliError::format(path, m))
    }

    pub fn meta_usize(&self, key: &str) -> Option<usize> {
        self.meta.get(key).and_then(|v| v.parse().ok())
    }
}

fn payload_len(spec: &TaskSpec) -> Option<usize> {
    let d = spec.encoder_dim().checked_mul(spec.p)?;
    let w = spec.w_rows().checked_mul(spec.p)?;
    let z = spec.r.map_or(Some(0), |r| r.checked_mul(spec.m))?;
    d.checked_add(w)?.checked_add(z)
}

fn push_matrix(out: &mut Vec<u8>, m: &Matrix) {
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_matrix(bytes: &[u8], pos: &mut usize, rows: usize, cols: usize) -> Matrix {
    let n = rows * cols;
    let values = bytes[*pos..*pos + 8 * n]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    *pos += 8 * n;
    Matrix::from_iterator(rows, cols, values)
}

/// Hex SHA-256 of a byte string.
pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Hex SHA-256 of a model file on disk.
pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(digest_hex(&bytes))
}
