//! Reference computations written independently of the library: a cyclic
//! coordinate-descent elastic-net solver, the closed-form code on a known
//! support, a KKT residual, and the supervised losses.

use taskdict::taskdict_core::{Label, Matrix, Vector};

pub fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `1/2||x - Da||^2 + l1 |a|_1 + l2/2 |a|^2`,
/// run until a full sweep moves no coordinate by more than `1e-15`.
pub fn cd(x: &Vector, d: &Matrix, l1: f64, l2: f64) -> Vector {
    let p = d.ncols();
    let norms: Vec<f64> = d.column_iter().map(|c| c.norm_squared()).collect();
    let mut a = Vector::zeros(p);
    let mut r = x.clone();
    for _ in 0..200_000 {
        let mut moved: f64 = 0.0;
        for j in 0..p {
            let denom = norms[j] + l2;
            if denom == 0.0 {
                continue;
            }
            let rho = d.column(j).dot(&r) + norms[j] * a[j];
            let new = soft(rho, l1) / denom;
            let delta = new - a[j];
            if delta != 0.0 {
                r.axpy(-delta, &d.column(j), 1.0);
                a[j] = new;
                moved = moved.max(delta.abs());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    a
}

/// `max_j` of the optimality residual of `a`: `|g_j - l1 sign(a_j)|` on the
/// support and `max(0, |g_j| - l1)` off it, with `g = D^T(x - Da) - l2 a`.
pub fn kkt_residual(x: &Vector, d: &Matrix, a: &Vector, l1: f64, l2: f64) -> f64 {
    let g = d.tr_mul(&(x - d * a)) - a * l2;
    (0..a.len())
        .map(|j| if a[j] != 0.0 { (g[j] - l1 * a[j].signum()).abs() } else { (g[j].abs() - l1).max(0.0) })
        .fold(0.0, f64::max)
}

/// Support and signs of `a`, ignoring entries below `tol`.
pub fn support(a: &Vector, tol: f64) -> Vec<(usize, f64)> {
    a.iter().enumerate().filter(|(_, v)| v.abs() > tol).map(|(j, v)| (j, v.signum())).collect()
}

/// The elastic-net code restricted to a fixed support and signs, by a dense
/// LU solve of `(D_S^T D_S + l2 I) a_S = D_S^T x - l1 s`.
pub fn closed_form(x: &Vector, d: &Matrix, supp: &[(usize, f64)], l1: f64, l2: f64) -> Vector {
    let k = supp.len();
    let mut a = Vector::zeros(d.ncols());
    if k == 0 {
        return a;
    }
    let ds = Matrix::from_fn(d.nrows(), k, |i, c| d[(i, supp[c].0)]);
    let lhs = ds.tr_mul(&ds) + Matrix::identity(k, k) * l2;
    let rhs = ds.tr_mul(x) - Vector::from_fn(k, |c, _| l1 * supp[c].1);
    let sol = lhs.lu().solve(&rhs).expect("nonsingular active system");
    for (c, &(j, _)) in supp.iter().enumerate() {
        a[j] = sol[c];
    }
    a
}

/// True when the closed form on `supp` is the exact solution with margin:
/// signs agree and inactive correlations stay below `l1 - margin`.
pub fn support_is_optimal(x: &Vector, d: &Matrix, supp: &[(usize, f64)], l1: f64, l2: f64, margin: f64) -> Option<Vector> {
    let a = closed_form(x, d, supp, l1, l2);
    if supp.iter().any(|&(j, s)| a[j] * s <= margin) {
        return None;
    }
    let g = d.tr_mul(&(x - d * &a));
    let on: Vec<usize> = supp.iter().map(|&(j, _)| j).collect();
    if (0..a.len()).any(|j| !on.contains(&j) && g[j].abs() >= l1 - margin) {
        return None;
    }
    Some(a)
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Supervised loss value written out from the definitions.
pub fn loss_value(label: &Label, x: &Vector, w: &Matrix, a: &Vector, bilinear: bool) -> f64 {
    match label {
        Label::Target(y) => 0.5 * (y - w * a).norm_squared(),
        Label::Binary(y) => {
            let score = if bilinear { x.dot(&(w * a)) } else { (w * a)[0] };
            log1pexp(-f64::from(*y) * score)
        }
        Label::Class(c) => {
            let s = w * a;
            let max = s.max();
            let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - s[c - 1]
        }
    }
}
