use super::ElasticNetParams;
use crate::dictionary::Dictionary;
use crate::error::{shape_err, Result};
use crate::Vector;

/// Optimality certificate for an elastic-net solution.
///
/// With `g_j = d_j^T (x - D alpha) - lambda2 alpha_j`, a solution must satisfy
/// `g_j = lambda1 sign(alpha_j)` where `alpha_j != 0` and `|g_j| <= lambda1`
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Max over nonzero coefficients of `|g_j - lambda1 sign(alpha_j)|`.
    pub equality_violation: f64,
    /// Max over zero coefficients of `max(0, |g_j| - lambda1)`.
    pub inequality_violation: f64,
    pub passed: bool,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.equality_violation.max(self.inequality_violation)
    }
}

pub fn check_kkt(x: &Vector, dict: &Dictionary, alpha: &Vector, params: &ElasticNetParams) -> Result<KktReport> {
    if x.len() != dict.m() {
        return Err(shape_err("check_kkt signal", dict.m(), x.len()));
    }
    if alpha.len() != dict.p() {
        return Err(shape_err("check_kkt code", dict.p(), alpha.len()));
    }
    let residual = x - dict.atoms() * alpha;
    let corr = dict.atoms().tr_mul(&residual);
    let mut equality: f64 = 0.0;
    let mut inequality: f64 = 0.0;
    for (j, &a) in alpha.iter().enumerate() {
        let g = corr[j] - params.lambda2 * a;
        if a != 0.0 {
            equality = equality.max((g - params.lambda1 * a.signum()).abs());
        } else {
            inequality = inequality.max(g.abs() - params.lambda1);
        }
    }
    Ok(KktReport {
        equality_violation: equality,
        inequality_violation: inequality,
        passed: equality <= params.tol && inequality <= params.tol,
    })
}
