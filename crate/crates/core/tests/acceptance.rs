//! End-to-end acceptance criteria. Runs with a custom main so that each
//! criterion prints exactly one PASS/FAIL line with its measured values.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use channelpress::autoencoder::{
    perfect_compression_residual, reconstruction_fidelity, recovery_bound, train, TrainConfig,
};
use channelpress::channels::MixedUnitaryChannel;
use channelpress::circuits::AnsatzSpec;
use channelpress::experiments::{run_anomaly, run_dimension_reduction, ExperimentConfig};
use channelpress::noise_assist::run_nqcae;
use channelpress::selfcheck::{run_all, SuiteSizes};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn close(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn config(json: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_json(json).map_err(|e| e.to_string())
}

fn pauli_labels_rank8() -> Vec<&'static str> {
    vec!["II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ"]
}

fn train_and_score(e: &MixedUnitaryChannel, epochs: usize) -> Result<f64, String> {
    let spec = AnsatzSpec::linear(2, 3);
    let cfg = TrainConfig {
        epochs,
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, _) = train(std::slice::from_ref(e), 2, 1, &spec, &spec, &cfg).map_err(|e| e.to_string())?;
    reconstruction_fidelity(e, &model).map_err(|e| e.to_string())
}

fn depolarizing_bound() -> Outcome {
    let e = MixedUnitaryChannel::completely_depolarizing(2).map_err(|e| e.to_string())?;
    let bound = recovery_bound(&e, 1).map_err(|e| e.to_string())?;
    let f = train_and_score(&e, 200)?;
    let ok = close(bound, 0.25, 1e-9) && (0.24..=0.25 + 1e-6).contains(&f);
    Ok((ok, format!("bound={bound:.12} trained_fidelity={f:.9}")))
}

fn rank8_bound() -> Outcome {
    let e = MixedUnitaryChannel::pauli_mixture(&pauli_labels_rank8()).map_err(|e| e.to_string())?;
    let bound = recovery_bound(&e, 1).map_err(|e| e.to_string())?;
    let f = train_and_score(&e, 200)?;
    let ok = close(bound, 0.5, 1e-9) && f <= 0.5 + 1e-6;
    Ok((ok, format!("bound={bound:.12} trained_fidelity={f:.9}")))
}

fn nqcae_improvement() -> Outcome {
    let e = MixedUnitaryChannel::completely_depolarizing(2).map_err(|e| e.to_string())?;
    let spec = AnsatzSpec::linear(2, 3);
    let cfg = TrainConfig {
        epochs: 200,
        seed: 7,
        ..TrainConfig::default()
    };
    let report = run_nqcae(&[e], 2, 1, &spec, &spec, &cfg).map_err(|e| e.to_string())?;
    let row = &report.rows[0];
    let ok = close(row.nqcae_fidelity, 1.0, 1e-6) && row.qcae_fidelity <= 0.25 + 1e-6;
    Ok((
        ok,
        format!("nqcae={:.9} qcae={:.9}", row.nqcae_fidelity, row.qcae_fidelity),
    ))
}

fn pqc_cfg(seed: u64, sigma: f64) -> Result<ExperimentConfig, String> {
    config(&format!(
        r#"{{"seed":{seed},"n_qubits":4,"latent_qubits":3,"n_circuits":10,
            "param_distribution":{{"mu":0.0,"sigma":{sigma}}},
            "train":{{"epochs":100,"optimizer":{{"kind":"lbfgs"}}}}}}"#
    ))
}

fn pqc_compression() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in 1..=5 {
        let start = Instant::now();
        let out = run_dimension_reduction(&pqc_cfg(seed, 0.1)?).map_err(|e| e.to_string())?;
        let row = out.row;
        ok &= row.status == "ok" && row.final_l3 <= 0.05 && row.val_mean <= 0.12;
        ok &= start.elapsed() < Duration::from_secs(15 * 60);
        parts.push(format!("seed{seed}: L3={:.4} val={:.4}", row.final_l3, row.val_mean));
    }
    Ok((ok, parts.join(", ")))
}

fn sigma_trend() -> Outcome {
    let seeds = [1u64, 2, 3];
    let mut means = Vec::new();
    for sigma in [0.1, 0.2, 0.3] {
        let mut total = 0.0;
        for &seed in &seeds {
            let out = run_dimension_reduction(&pqc_cfg(seed, sigma)?).map_err(|e| e.to_string())?;
            total += out.row.val_mean;
        }
        means.push(total / seeds.len() as f64);
    }
    let ok = means[0] < means[1] && means[1] < means[2];
    Ok((
        ok,
        format!(
            "val_mean sigma 0.1/0.2/0.3 = {:.4} / {:.4} / {:.4}",
            means[0], means[1], means[2]
        ),
    ))
}

fn planted() -> Outcome {
    let cfg = config(
        r#"{"seed":3,"n_qubits":4,"latent_qubits":2,"n_circuits":4,"dataset":{"kind":"planted"},
            "param_distribution":{"mu":0.0,"sigma":0.5},
            "encoder_ansatz":{"n_qubits":4,"layers":2,"entanglement":"linear"},
            "train":{"epochs":300,"tolerance":1e-14}}"#,
    )?;
    let out = run_dimension_reduction(&cfg).map_err(|e| e.to_string())?;
    let (model, _) = out.trained.ok_or("training diverged")?;
    let mut min_f: f64 = 1.0;
    let mut max_res: f64 = 0.0;
    for e in &out.dataset.channels {
        min_f = min_f.min(reconstruction_fidelity(e, &model).map_err(|e| e.to_string())?);
        max_res = max_res.max(perfect_compression_residual(e, &model).map_err(|e| e.to_string())?);
    }
    let l3 = out.row.final_l3;
    let ok = l3 <= 1e-4 && min_f >= 0.999 && max_res <= 1e-4;
    Ok((
        ok,
        format!("L3={l3:.3e} min_fidelity={min_f:.6} max_residual={max_res:.3e}"),
    ))
}

fn anomaly() -> Outcome {
    let cases = [
        ("random-circuit abnormals", r#"{"kind":"random_depth","depth":10}"#),
        ("shifted-mean abnormals", r#"{"kind":"normal","mu":5.0,"sigma":0.1}"#),
        ("control", r#"{"kind":"normal","mu":0.0,"sigma":0.1}"#),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, kind) in cases {
        let cfg = config(&format!(
            r#"{{"seed":11,"n_qubits":4,"latent_qubits":3,"n_circuits":10,
                "train":{{"epochs":100}},
                "anomaly":{{"abnormal_kind":{kind},"n_test_normal":40,"n_test_abnormal":40}}}}"#
        ))?;
        let auc = run_anomaly(&cfg).map_err(|e| e.to_string())?.report.auroc;
        ok &= if name == "control" {
            (0.3..=0.7).contains(&auc)
        } else {
            auc >= 0.95
        };
        parts.push(format!("{name} auroc={auc:.3}"));
    }
    Ok((ok, parts.join(", ")))
}

fn property_suites() -> Outcome {
    let outcomes = run_all(2024, SuiteSizes::default()).map_err(|e| e.to_string())?;
    let ok = outcomes.iter().all(|o| o.passed);
    let parts: Vec<String> = outcomes
        .iter()
        .map(|o| {
            let mark = if o.passed { "ok" } else { "FAILED" };
            format!("{} [{}] worst={:.2e}", o.name, mark, o.worst)
        })
        .collect();
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 depolarizing bound", depolarizing_bound, Duration::from_secs(60)),
        ("2 rank-8 bound", rank8_bound, Duration::from_secs(60)),
        ("3 noise-assisted recovery", nqcae_improvement, Duration::from_secs(60)),
        (
            "4 pqc compression n=4 m=3 sigma=0.1",
            pqc_compression,
            Duration::from_secs(5 * 15 * 60),
        ),
        ("5 sigma trend", sigma_trend, Duration::from_secs(9 * 15 * 60)),
        ("6 planted convergence", planted, Duration::from_secs(5 * 60)),
        ("7 anomaly detection", anomaly, Duration::from_secs(20 * 60)),
        ("8 property suites", property_suites, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= limit, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        let mark = if passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {name} ({:.1}s): {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
