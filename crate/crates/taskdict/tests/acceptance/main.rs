//! Acceptance suite. Runs every criterion (or those named on the command
//! line, e.g. `cargo test --test acceptance -- 1 3`) and prints one PASS/FAIL
//! line each. A criterion also fails when it exceeds its time budget.
//!
//! Criteria 4 and 6 use synthetic images unless `TASKDICT_IMAGES` names a
//! manifest of at least four grayscale PGM files.

mod gradients;
mod images;
mod oracle;
mod properties;
mod semisup;
mod sensing;
mod synthetic;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use taskdict::taskdict_core::{Matrix, Vector};

pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "solver matches coordinate descent", budget: Duration::from_secs(5), run: solver::run },
        Criterion { id: 2, name: "gradient fidelity", budget: Duration::from_secs(30), run: gradients::run },
        Criterion { id: 3, name: "supervised beats unsupervised dictionaries", budget: Duration::from_secs(300), run: classification::run },
        Criterion { id: 4, name: "compressed-sensing ordering", budget: Duration::from_secs(600), run: sensing::run },
        Criterion { id: 5, name: "semi-supervised continuation", budget: Duration::from_secs(300), run: semisup::run },
        Criterion { id: 6, name: "inverse halftoning", budget: Duration::from_secs(600), run: halftone::run },
        Criterion { id: 7, name: "property suites", budget: Duration::from_secs(120), run: properties::run },
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let passed = outcome.passed && in_time;
        failed += usize::from(!passed);
        println!(
            "criterion {} ({}): {} [{:.1}s of {}s] {}{}",
            c.id,
            c.name,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            outcome.detail,
            if in_time { "" } else { " (over time budget)" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
