//! Cyclic coordinate descent for the elastic net.
//!
//! Slow but structurally unrelated to the homotopy path, which makes it the
//! reference the homotopy solver is checked against.

use alloc::vec::Vec;

use crate::dictionary::Dictionary;
use crate::Vector;

#[derive(Debug, Clone, Copy)]
pub struct CdOptions {
    pub max_sweeps: usize,
    /// Stop once a full sweep changes no coordinate by more than this.
    pub step_tol: f64,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200_000,
            step_tol: 1e-14,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Returns the coordinate-descent solution and the number of sweeps used.
pub fn solve_cd(x: &Vector, dict: &Dictionary, lambda1: f64, lambda2: f64, opts: CdOptions) -> (Vector, usize) {
    let atoms = dict.atoms();
    let p = dict.p();
    let norms: Vec<f64> = atoms.column_iter().map(|c| c.norm_squared()).collect();
    let mut alpha = Vector::zeros(p);
    let mut residual = x.clone();
    for sweep in 1..=opts.max_sweeps {
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            let denom = norms[j] + lambda2;
            if denom == 0.0 {
                continue;
            }
            let col = atoms.column(j);
            let rho = col.dot(&residual) + norms[j] * alpha[j];
            let new = soft_threshold(rho, lambda1) / denom;
            let delta = new - alpha[j];
            if delta != 0.0 {
                residual.axpy(-delta, &col, 1.0);
                alpha[j] = new;
                max_step = max_step.max(delta.abs());
            }
        }
        if max_step <= opts.step_tol {
            return (alpha, sweep);
        }
    }
    (alpha, opts.max_sweeps)
}
