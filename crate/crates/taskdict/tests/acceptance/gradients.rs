//! Analytic gradients against central finite differences of the bilevel
//! objective, evaluated through an independent code oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskdict::taskdict_core::grad::grad_sample;
use taskdict::taskdict_core::{Dictionary, ElasticNetParams, Label, Matrix, Model, TaskLoss, Vector};

use crate::oracle::{cd, loss_value, support, support_is_optimal};
use crate::{gaussian_matrix, gaussian_vector, Outcome};

const H: f64 = 1e-6;
const L1: f64 = 0.15;
const L2: f64 = 0.01;
const DRAWS: usize = 100;

fn unit(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let e = gaussian_matrix(rows, cols, rng);
    let n = e.norm();
    e / n
}

fn rel(fd: f64, an: f64) -> f64 {
    // Directional derivatives that vanish are compared absolutely.
    (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6)
}

struct Draw {
    model: Model,
    label: Label,
    x: Vector,
}

fn draw(loss: TaskLoss, with_z: bool, rng: &mut ChaCha8Rng) -> Draw {
    let (m, r, p, q) = (10, 7, 14, 3);
    let enc = if with_z { r } else { m };
    let mut atoms = gaussian_matrix(enc, p, rng);
    for mut c in atoms.column_iter_mut() {
        let n = c.norm();
        c *= rng.random_range(0.5..0.9) / n;
    }
    let rows = match loss {
        TaskLoss::Square | TaskLoss::Softmax => q,
        TaskLoss::Logistic => 1,
        TaskLoss::BilinearLogistic => m,
    };
    let z = with_z.then(|| gaussian_matrix(r, m, rng) / (m as f64).sqrt());
    let model = Model::new(Dictionary::new(atoms).unwrap(), gaussian_matrix(rows, p, rng), z, loss, ElasticNetParams::new(L1, L2).unwrap()).unwrap();
    let label = match loss {
        TaskLoss::Square => Label::Target(gaussian_vector(q, rng)),
        TaskLoss::Logistic | TaskLoss::BilinearLogistic => Label::Binary(if rng.random::<bool>() { 1 } else { -1 }),
        TaskLoss::Softmax => Label::Class(rng.random_range(1..=q)),
    };
    Draw {
        model,
        label,
        x: gaussian_vector(m, rng) * 0.8,
    }
}

/// `f = l_s(y, W, alpha*(Z x, D))` with `alpha*` from the closed form on
/// `supp`, or `None` if `supp` is not the optimal support with margin.
fn f(d: &Draw, atoms: &Matrix, z: Option<&Matrix>, w: &Matrix, supp: &[(usize, f64)]) -> Option<f64> {
    let input = z.map_or_else(|| d.x.clone(), |z| z * &d.x);
    let a = support_is_optimal(&input, atoms, supp, L1, L2, 1e-9)?;
    Some(loss_value(&d.label, &d.x, w, &a, d.model.loss == TaskLoss::BilinearLogistic))
}

/// Returns `(kept, discarded, worst relative error)`.
fn check(loss: TaskLoss, with_z: bool, rng: &mut ChaCha8Rng) -> (usize, usize, f64) {
    let (mut kept, mut discarded, mut worst): (usize, usize, f64) = (0, 0, 0.0);
    while kept < DRAWS && discarded < 50 * DRAWS {
        let d = draw(loss, with_z, rng);
        let atoms = d.model.dictionary.atoms().clone();
        let z = d.model.z.clone();
        let w = d.model.w.clone();
        let input = z.as_ref().map_or_else(|| d.x.clone(), |z| z * &d.x);
        let supp = support(&cd(&input, &atoms, L1, L2), 1e-10);
        let ed = unit(atoms.nrows(), atoms.ncols(), rng);
        let ez = z.as_ref().map(|z| unit(z.nrows(), z.ncols(), rng));
        let ew = unit(w.nrows(), w.ncols(), rng);
        let values = (|| {
            let fd_d = (f(&d, &(&atoms + &ed * H), z.as_ref(), &w, &supp)? - f(&d, &(&atoms - &ed * H), z.as_ref(), &w, &supp)?) / (2.0 * H);
            let fd_z = match (&z, &ez) {
                (Some(z), Some(ez)) => Some((f(&d, &atoms, Some(&(z + ez * H)), &w, &supp)? - f(&d, &atoms, Some(&(z - ez * H)), &w, &supp)?) / (2.0 * H)),
                _ => None,
            };
            let fd_w = (f(&d, &atoms, z.as_ref(), &(&w + &ew * H), &supp)? - f(&d, &atoms, z.as_ref(), &(&w - &ew * H), &supp)?) / (2.0 * H);
            Some((fd_d, fd_z, fd_w))
        })();
        let Some((fd_d, fd_z, fd_w)) = values.filter(|_| !supp.is_empty()) else {
            discarded += 1;
            continue;
        };
        kept += 1;
        let code = d.model.encode(&d.x).unwrap();
        let g = grad_sample(&d.label, &d.x, &d.model, &code).unwrap();
        worst = worst.max(rel(fd_d, ed.dot(&g.grad_d)));
        worst = worst.max(rel(fd_w, ew.dot(&g.grad_w)));
        if let (Some(fd), Some(ez)) = (fd_z, &ez) {
            worst = worst.max(rel(fd, ez.dot(g.grad_z.as_ref().unwrap())));
        }
    }
    (kept, discarded, worst)
}

pub fn run() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut passed = true;
    let mut parts = Vec::new();
    for loss in [TaskLoss::Square, TaskLoss::Logistic, TaskLoss::BilinearLogistic, TaskLoss::Softmax] {
        let (k1, d1, e1) = check(loss, false, &mut rng);
        let (k2, d2, e2) = check(loss, true, &mut rng);
        let worst = e1.max(e2);
        passed &= k1 == DRAWS && k2 == DRAWS && worst < 1e-4;
        parts.push(format!("{} {}+{} kept ({} unstable) max rel {worst:.1e}", loss.name(), k1, k2, d1 + d2));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}
