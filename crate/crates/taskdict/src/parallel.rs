//! Thread-pool executor and batch helpers.

use rayon::prelude::*;
use taskdict_core::elastic_net::{check_kkt, Coder, KktReport};
use taskdict_core::trainer::Executor;
use taskdict_core::{Model, SparseCode, Vector};

use crate::error::{CliError, Result};

/// Runs mapped work on a dedicated rayon pool. Results come back in input
/// order, so reductions over them do not depend on the thread count.
pub struct Threads {
    pool: Option<rayon::ThreadPool>,
}

impl Threads {
    /// `threads <= 1` runs on the calling thread.
    pub fn new(threads: usize) -> Result<Self> {
        if threads <= 1 {
            return Ok(Self { pool: None });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Setting(format!("cannot start {threads} threads: {e}")))?;
        Ok(Self { pool: Some(pool) })
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }
}

impl Executor for Threads {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        match &self.pool {
            Some(pool) if items.len() > 1 => pool.install(|| items.par_iter().map(&f).collect()),
            _ => items.iter().map(f).collect(),
        }
    }
}

/// Codes every signal with the model's encoder and certifies each code.
pub fn encode_all<E: Executor>(model: &Model, signals: &[Vector], exec: &E) -> Result<Vec<(SparseCode, KktReport)>> {
    let coder = Coder::new(&model.dictionary);
    exec.map(signals, |x: &Vector| -> taskdict_core::Result<(SparseCode, KktReport)> {
        let input = model.encoder_input(x)?;
        let code = coder.encode(&input, &model.coding)?;
        let kkt = check_kkt(&input, &model.dictionary, &code.alpha, &model.coding)?;
        Ok((code, kkt))
    })
    .into_iter()
    .map(|r| r.map_err(CliError::from))
    .collect()
}

/// Deterministic child seed (SplitMix64 finalizer over `master + tag`).
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master.wrapping_add(tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
