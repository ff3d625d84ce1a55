//! Module invariants checked over many random cases. The same properties
//! also run as unit and property tests next to their modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskdict::model_file::ModelFile;
use taskdict::taskdict_core::data::{floyd_steinberg, Image, Sample, SampleStream};
use taskdict::taskdict_core::dictionary::project_columns;
use taskdict::taskdict_core::elastic_net::{check_kkt, Coder};
use taskdict::taskdict_core::grad::compute_beta;
use taskdict::taskdict_core::tasks::{TaskKind, TaskModel, TaskSpec};
use taskdict::taskdict_core::trainer::{apply_step, batch_gradients, ParamConstraint, Sequential, TrainConfig};
use taskdict::taskdict_core::{Dictionary, ElasticNetParams, Label, Model, TaskLoss};

use crate::oracle::kkt_residual;
use crate::{gaussian_matrix, gaussian_vector, Outcome};

type Check = (&'static str, fn(&mut ChaCha8Rng) -> Result<(), String>);

fn feasibility(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..10 {
        let (m, p) = (8, 12);
        let d = Dictionary::new(project_columns(gaussian_matrix(m, p, rng))).unwrap();
        let mut model = Model::new(d, gaussian_matrix(1, p, rng), None, TaskLoss::Logistic, ElasticNetParams::default()).unwrap();
        let data: Vec<Sample> = (0..50)
            .map(|_| Sample::new(Label::Binary(if rng.random::<bool>() { 1 } else { -1 }), gaussian_vector(m, rng)))
            .collect();
        let unl: Vec<_> = (0..50).map(|_| gaussian_vector(m, rng)).collect();
        let mut cfg = TrainConfig::new(30, 5.0);
        cfg.w_constraint = ParamConstraint::FrobeniusBall(0.5);
        cfg.mu = 0.3;
        let mut stream = SampleStream::new(&data, case).unwrap();
        let mut ustream = SampleStream::new(&unl, case + 1).unwrap();
        for t in 1..=30 {
            let batch: Vec<&Sample> = (0..5).map(|_| stream.next_sample()).collect();
            let ub: Vec<_> = (0..5).map(|_| ustream.next_sample()).collect();
            let g = batch_gradients(&model, &batch, &ub, cfg.mu, &Sequential).map_err(|e| e.to_string())?;
            apply_step(&mut model, &g, taskdict::taskdict_core::trainer::learning_rate(t, cfg.rho, cfg.t0), &cfg).map_err(|e| e.to_string())?;
            let worst = model.dictionary.atoms().column_iter().map(|c| c.norm()).fold(0.0, f64::max);
            if worst > 1.0 + 1e-12 || model.w.norm() > 0.5 + 1e-12 {
                return Err(format!("step {t}: max atom norm {worst}, ||W|| {}", model.w.norm()));
            }
        }
    }
    Ok(())
}

fn projection(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..200 {
        let scale = rng.random_range(0.1..5.0);
        let once = project_columns(gaussian_matrix(6, 9, rng) * scale);
        if project_columns(once.clone()) != once {
            return Err("projection is not idempotent".into());
        }
    }
    Ok(())
}

fn beta_support(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let params = ElasticNetParams::new(0.15, 0.01).unwrap();
    for _ in 0..200 {
        let d = Dictionary::new(project_columns(gaussian_matrix(8, 15, rng) * 3.0)).unwrap();
        let code = Coder::new(&d).encode(&gaussian_vector(8, rng), &params).map_err(|e| e.to_string())?;
        let beta = compute_beta(&code, &gaussian_vector(15, rng)).map_err(|e| e.to_string())?;
        if (0..15).any(|j| beta[j] != 0.0 && !code.active.contains(&j)) {
            return Err("beta* nonzero outside the active set".into());
        }
    }
    Ok(())
}

fn kkt(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..200 {
        let l1 = rng.random_range(0.01..0.5);
        let params = ElasticNetParams::new(l1, 0.01).unwrap();
        let d = Dictionary::new(project_columns(gaussian_matrix(10, 25, rng) * 3.0)).unwrap();
        let x = gaussian_vector(10, rng);
        let code = Coder::new(&d).encode(&x, &params).map_err(|e| e.to_string())?;
        let report = check_kkt(&x, &d, &code.alpha, &params).map_err(|e| e.to_string())?;
        if !report.passed || kkt_residual(&x, d.atoms(), &code.alpha, l1, 0.01) > 1e-6 {
            return Err(format!("KKT certificate failed: {report:?}"));
        }
        if let Some(&j) = code.active.first() {
            let mut bad = code.alpha.clone();
            bad[j] += 0.1 * bad[j].signum();
            if check_kkt(&x, &d, &bad, &params).unwrap().passed {
                return Err("perturbed code certified".into());
            }
        }
    }
    Ok(())
}

fn round_trip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..100 {
        let kind = TaskKind::ALL[case % TaskKind::ALL.len()];
        let (m, p) = (rng.random_range(1..6), rng.random_range(1..6));
        let q = match kind {
            TaskKind::BinaryLinear | TaskKind::BinaryBilinear => 1,
            _ => rng.random_range(1..4),
        };
        let r = (kind == TaskKind::CompressedSensing).then(|| rng.random_range(1..5));
        let spec = TaskSpec::new(kind, m, p, q, r).unwrap();
        let coding = ElasticNetParams::new(rng.random_range(0.0..1.0), rng.random_range(1e-4..1.0)).unwrap();
        let heads = (0..spec.heads())
            .map(|_| {
                let d = Dictionary::new(project_columns(gaussian_matrix(spec.encoder_dim(), p, rng))).unwrap();
                let z = r.map(|r| gaussian_matrix(r, m, rng));
                Model::new(d, gaussian_matrix(spec.w_rows(), p, rng), z, kind.loss(), coding).unwrap()
            })
            .collect();
        let mut file = ModelFile::new(TaskModel::new(spec, heads).unwrap());
        file.meta.insert("case".into(), case.to_string());
        let bytes = file.to_bytes()?;
        let back = ModelFile::from_bytes(&bytes)?;
        if back != file || back.to_bytes()? != bytes {
            return Err(format!("{} model did not round-trip", kind.name()));
        }
    }
    Ok(())
}

fn sampler(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..50 {
        let n = rng.random_range(1..40);
        let data: Vec<usize> = (0..n).collect();
        let mut stream = SampleStream::new(&data, rng.random()).unwrap();
        for epoch in 0..5 {
            let mut seen: Vec<usize> = (0..n).map(|_| *stream.next_sample()).collect();
            seen.sort();
            if seen != data {
                return Err(format!("epoch {epoch} of {n} samples is not a permutation"));
            }
        }
    }
    Ok(())
}

fn halftone_density(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut levels = vec![0.0, 0.5, 1.0];
    levels.extend((0..20).map(|_| rng.random_range(0.0..1.0)));
    for v in levels {
        let out = floyd_steinberg(&Image::filled(64, 64, v));
        if out.pixels.iter().any(|&p| p != 0.0 && p != 1.0) || (out.mean() - v).abs() > 0.02 {
            return Err(format!("level {v}: halftone mean {}", out.mean()));
        }
    }
    Ok(())
}

pub fn run() -> Outcome {
    let checks: [Check; 7] = [
        ("feasibility", feasibility),
        ("projection idempotence", projection),
        ("beta* support", beta_support),
        ("KKT certification", kkt),
        ("save/load round trip", round_trip),
        ("sampler coverage", sampler),
        ("halftone density", halftone_density),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    for (name, check) in checks {
        if let Err(e) = check(&mut rng) {
            failures.push(format!("{name}: {e}"));
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} property checks hold", checks.len())
        } else {
            failures.join("; ")
        },
    }
}
