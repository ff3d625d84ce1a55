use alloc::format;
use alloc::vec::Vec;

use super::Executor;
use crate::data::SampleStream;
use crate::dictionary::Dictionary;
use crate::elastic_net::{Coder, ElasticNetParams, SparseCode};
use crate::error::{Error, Result};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitOptions {
    /// Passes over the data after seeding; 0 keeps the seeded atoms.
    pub passes: usize,
    pub batch: usize,
}

impl Default for InitOptions {
    fn default() -> Self {
        Self { passes: 1, batch: 200 }
    }
}

/// Unsupervised dictionary for `min_D E[l_u(x, D)]`.
///
/// Atoms are seeded with `p` distinct nonzero signals drawn from `stream`,
/// scaled to unit norm. Each pass then codes mini-batches and runs one sweep
/// of projected block-coordinate updates on the atoms, using the accumulated
/// statistics `A = sum alpha alpha^T` and `B = sum x alpha^T`:
/// `d_j <- Pi(d_j + (b_j - D a_j) / A_jj)`.
pub fn init_unsupervised<E: Executor>(
    stream: &mut SampleStream<'_, Vector>,
    p: usize,
    coding: &ElasticNetParams,
    opts: &InitOptions,
    exec: &E,
) -> Result<Dictionary> {
    coding.validate()?;
    if p == 0 || opts.batch == 0 {
        return Err(Error::InvalidParameter("p and batch must be >= 1".into()));
    }
    let m = stream.data()[0].len();
    let mut atoms = Matrix::zeros(m, p);
    let mut chosen = 0;
    for _ in 0..2 * stream.len() {
        if chosen == p {
            break;
        }
        let x = stream.next_sample();
        if x.len() != m {
            return Err(crate::error::shape_err("init signal", m, x.len()));
        }
        let n = x.norm();
        if !(n > 0.0) || !n.is_finite() {
            continue;
        }
        let candidate = x / n;
        if atoms.columns(0, chosen).column_iter().any(|c| c == candidate) {
            continue;
        }
        atoms.set_column(chosen, &candidate);
        chosen += 1;
    }
    if chosen < p {
        return Err(Error::InsufficientData(format!("need {p} distinct nonzero signals to seed the dictionary, found {chosen}")));
    }
    let mut dict = Dictionary::new(atoms)?;
    if opts.passes == 0 {
        return Ok(dict);
    }

    let mut a = Matrix::zeros(p, p);
    let mut b = Matrix::zeros(m, p);
    let steps = opts.passes * stream.len().div_ceil(opts.batch);
    for _ in 0..steps {
        let batch: Vec<&Vector> = (0..opts.batch).map(|_| stream.next_sample()).collect();
        let coder = Coder::new(&dict);
        let codes = exec.map(&batch, |x: &&Vector| coder.encode(x, coding));
        for (x, code) in batch.iter().zip(codes) {
            accumulate(&mut a, &mut b, x, &code?);
        }
        let mut atoms = dict.into_atoms();
        update_atoms(&mut atoms, &a, &b);
        dict = Dictionary::from_projected(atoms)?;
    }
    Ok(dict)
}

fn accumulate(a: &mut Matrix, b: &mut Matrix, x: &Vector, code: &SparseCode) {
    for &i in &code.active {
        for &j in &code.active {
            a[(i, j)] += code.alpha[i] * code.alpha[j];
        }
        b.column_mut(i).axpy(code.alpha[i], x, 1.0);
    }
}

fn update_atoms(d: &mut Matrix, a: &Matrix, b: &Matrix) {
    for j in 0..d.ncols() {
        let ajj = a[(j, j)];
        if ajj <= 1e-12 {
            continue;
        }
        let u = (b.column(j) - &*d * a.column(j)) / ajj + d.column(j);
        let n = u.norm();
        let col = if n > 1.0 { u / n } else { u };
        d.set_column(j, &col);
    }
}
