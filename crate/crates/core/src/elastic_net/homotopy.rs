use alloc::vec;
use alloc::vec::Vec;

use super::{validate_inputs, CholeskyFactor, ElasticNetParams, SparseCode};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Breakpoints closer than this are treated as simultaneous; the lower atom
/// index is admitted first.
const TIE_EPS: f64 = 1e-12;

/// Elastic-net coder bound to one dictionary. Holds the Gram matrix so that
/// many signals can be coded against the same atoms.
#[derive(Debug, Clone)]
pub struct Coder<'a> {
    dict: &'a Dictionary,
    gram: Matrix,
}

enum Event {
    Join(usize),
    Leave(usize),
    End,
}

impl<'a> Coder<'a> {
    pub fn new(dict: &'a Dictionary) -> Self {
        Self { dict, gram: dict.gram() }
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dict
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Runs the homotopy from `lambda = ||D^T x||_inf` down to `lambda1`.
    pub fn encode(&self, x: &Vector, params: &ElasticNetParams) -> Result<SparseCode> {
        validate_inputs(x, self.dict, params)?;
        let atoms = self.dict.atoms();
        let (m, p) = (self.dict.m(), self.dict.p());
        let cap = params.active_cap(m, p);
        let (l1, l2) = (params.lambda1, params.lambda2);
        let corr = atoms.tr_mul(x);
        let gram = &self.gram;

        let mut lambda = corr.amax();
        if lambda <= l1 || lambda == 0.0 {
            return Ok(SparseCode::zero(p, 0.5 * x.norm_squared()));
        }
        let first = (0..p).find(|&j| corr[j].abs() >= lambda - TIE_EPS).unwrap_or(0);

        let mut active: Vec<usize> = Vec::new();
        let mut signs: Vec<f64> = Vec::new();
        let mut in_active = vec![false; p];
        let mut chol = CholeskyFactor::new();
        self.admit(first, sign(corr[first]), cap, l2, &mut active, &mut signs, &mut in_active, &mut chol)?;

        let max_steps = 8 * (p + m) + 64;
        let mut just_joined = Some(first);
        let mut just_left: Option<usize> = None;
        let mut steps = 0;
        loop {
            steps += 1;
            if steps > max_steps {
                return Err(Error::PathLimit { steps: max_steps });
            }
            let corr_active: Vec<f64> = active.iter().map(|&j| corr[j]).collect();
            let rhs: Vec<f64> = corr_active.iter().zip(&signs).map(|(c, s)| c - lambda * s).collect();
            let coef = chol.solve(&rhs);
            let slope = chol.solve(&signs);

            // Decreasing lambda by `gamma` moves the active coefficients to
            // coef + gamma * slope and the inactive correlations to
            // r_j - gamma * g_j.
            let mut best_gamma = lambda - l1;
            let mut event = Event::End;
            for j in 0..p {
                if in_active[j] || Some(j) == just_left {
                    continue;
                }
                let row = gram.column(j);
                let mut r = corr[j];
                let mut g = 0.0;
                for (k, &a) in active.iter().enumerate() {
                    r -= row[a] * coef[k];
                    g += row[a] * slope[k];
                }
                let mut gamma = f64::INFINITY;
                if 1.0 - g > TIE_EPS {
                    gamma = gamma.min(((lambda - r) / (1.0 - g)).max(0.0));
                }
                if 1.0 + g > TIE_EPS {
                    gamma = gamma.min(((lambda + r) / (1.0 + g)).max(0.0));
                }
                if gamma < best_gamma - TIE_EPS {
                    best_gamma = gamma;
                    event = Event::Join(j);
                }
            }
            for (k, &j) in active.iter().enumerate() {
                if Some(j) == just_joined {
                    continue;
                }
                // Only a coefficient heading toward zero can leave. Testing
                // coef * slope instead lets rounding noise on a freshly
                // admitted atom trigger zero-length leave/join cycles.
                if signs[k] * slope[k] < 0.0 {
                    let gamma = (-coef[k] / slope[k]).max(0.0);
                    if gamma < best_gamma - TIE_EPS {
                        best_gamma = gamma;
                        event = Event::Leave(k);
                    }
                }
            }

            lambda -= best_gamma;
            just_joined = None;
            just_left = None;
            match event {
                Event::End => break,
                Event::Join(j) => {
                    let mut r = corr[j];
                    let row = gram.column(j);
                    for (k, &a) in active.iter().enumerate() {
                        r -= row[a] * (coef[k] + best_gamma * slope[k]);
                    }
                    self.admit(j, sign(r), cap, l2, &mut active, &mut signs, &mut in_active, &mut chol)?;
                    just_joined = Some(j);
                }
                Event::Leave(k) => {
                    let j = active.remove(k);
                    signs.remove(k);
                    in_active[j] = false;
                    chol.remove(k);
                    just_left = Some(j);
                }
            }
            if lambda <= l1 {
                break;
            }
        }

        // Final coefficients from the closed form at lambda1. Atoms whose sign
        // disagrees with the path (numerical ties at the very end) are dropped.
        loop {
            if active.is_empty() {
                return Ok(SparseCode::zero(p, 0.5 * x.norm_squared()));
            }
            let rhs: Vec<f64> = active.iter().zip(&signs).map(|(&j, s)| corr[j] - l1 * s).collect();
            let coef = chol.solve(&rhs);
            match coef.iter().zip(&signs).position(|(c, s)| c * s <= 0.0) {
                Some(k) => {
                    let j = active.remove(k);
                    signs.remove(k);
                    in_active[j] = false;
                    chol.remove(k);
                }
                None => {
                    let mut alpha = Vector::zeros(p);
                    for (&j, &c) in active.iter().zip(&coef) {
                        alpha[j] = c;
                    }
                    let objective = super::objective(x, self.dict, &alpha, l1, l2);
                    return Ok(SparseCode {
                        alpha,
                        active,
                        signs,
                        chol,
                        objective,
                    });
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn admit(
        &self,
        j: usize,
        s: f64,
        cap: usize,
        lambda2: f64,
        active: &mut Vec<usize>,
        signs: &mut Vec<f64>,
        in_active: &mut [bool],
        chol: &mut CholeskyFactor,
    ) -> Result<()> {
        if active.len() >= cap {
            return Err(Error::ActiveSetLimit { cap });
        }
        let cross: Vec<f64> = active.iter().map(|&a| self.gram[(a, j)]).collect();
        chol.push(&cross, self.gram[(j, j)] + lambda2)
            .map_err(|_| Error::SingularGram)?;
        active.push(j);
        signs.push(s);
        in_active[j] = true;
        Ok(())
    }
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}
