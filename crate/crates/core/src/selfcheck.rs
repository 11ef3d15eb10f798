//! Randomized invariant suites shared by the `check` subcommand and the
//! test harness. Each suite draws its instances from a fixed seed and
//! reports the worst deviation it saw.

use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::autoencoder::{
    gradient, reconstruction_fidelity, reconstruction_fidelity_direct, train, AutoencoderModel, GradientMethod,
    LossKind, TrainConfig,
};
use crate::channels::{
    apply_choi, choi_of_mixed, conjugate_choi, identity_choi, reduced_choi, tensor_choi, MixedUnitaryChannel,
};
use crate::circuits::{random_circuit, AnsatzSpec, Circuit};
use crate::error::Result;
use crate::linalg::random::{random_density, random_pure_state, random_unitary};
use crate::linalg::{eigenvalues, fidelity, top_k_sum, ComplexMatrix};
use crate::rng::{derive_seed, stream_rng, Rng};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest deviation from the expected value, in the suite's own metric.
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub detail: String,
}

struct Tracker {
    worst: f64,
    failures: Vec<String>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            worst: 0.0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, what: &str, case: usize, err: f64, tol: f64) {
        let err = if err.is_nan() { f64::INFINITY } else { err };
        self.worst = self.worst.max(err);
        if err > tol && self.failures.len() < 5 {
            self.failures
                .push(format!("case {case}: {what} off by {err:.3e} (tol {tol:.0e})"));
        }
    }

    fn finish(self, name: &str, cases: usize, tol: f64, start: Instant) -> CheckOutcome {
        CheckOutcome {
            name: name.to_string(),
            passed: self.failures.is_empty(),
            cases,
            worst: self.worst,
            tolerance: tol,
            seconds: start.elapsed().as_secs_f64(),
            detail: self.failures.join("; "),
        }
    }
}

fn random_channel(rng: &mut Rng, n: usize, max_members: usize) -> Result<MixedUnitaryChannel> {
    let k = rng.random_range(1..=max_members);
    let members: Vec<Circuit> = (0..k)
        .map(|_| random_circuit(n, rng.random_range(1..=4), rng.random()))
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MixedUnitaryChannel::new(members, raw.iter().map(|p| p / total).collect())
}

fn random_model(rng: &mut Rng, n: usize, m: usize) -> Result<AutoencoderModel> {
    let spec = AnsatzSpec::linear(n, rng.random_range(1..=2));
    let model = AutoencoderModel::from_specs(n, m, &spec, &spec)?;
    let theta = (0..model.n_params()).map(|_| rng.random_range(-3.2..3.2)).collect();
    model.with_theta(theta)
}

/// Fidelity axioms, the pure-state formula and the top-r eigenvalue bound.
pub fn fidelity_suite(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let tol = 1e-8;
    let mut rng = stream_rng(seed, 11);
    let mut t = Tracker::new();
    for case in 0..cases {
        let dim = [2, 4, 8, 16][case % 4];
        let rank = rng.random_range(1..=dim);
        let rho = random_density(&mut rng, dim, rank);
        let r = rng.random_range(1..=dim);
        let sigma = random_density(&mut rng, dim, r);
        let f = fidelity(&rho, &sigma)?;
        t.record("range", case, (f.min(0.0)).abs().max(f - 1.0), tol);
        t.record("self-fidelity", case, (fidelity(&rho, &rho)? - 1.0).abs(), 1e-9);
        t.record("symmetry", case, (fidelity(&sigma, &rho)? - f).abs(), 1e-9);
        let u = random_unitary(&mut rng, dim);
        let conj = |m: &ComplexMatrix| u.matmul(m).matmul(&u.adjoint());
        t.record(
            "unitary invariance",
            case,
            (fidelity(&conj(&rho), &conj(&sigma))? - f).abs(),
            tol,
        );
        let bound = top_k_sum(&rho, r)?;
        t.record("top-r bound", case, (f - bound).max(0.0), tol);
        let psi = random_pure_state(&mut rng, dim);
        let pure = ComplexMatrix::outer(&psi);
        let expected = rho.expectation(&psi).re;
        t.record(
            "pure-state formula",
            case,
            (fidelity(&rho, &pure)? - expected).abs(),
            1e-9,
        );
    }
    Ok(t.finish("fidelity axioms and top-r bound", cases, tol, start))
}

/// Choi action, trace preservation under every transformer, and spectrum
/// preservation under conjugation.
pub fn choi_suite(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let tol = 1e-9;
    let mut rng = stream_rng(seed, 12);
    let mut t = Tracker::new();
    for case in 0..cases {
        let n = 1 + case % 3;
        let e = random_channel(&mut rng, n, 4)?;
        let j = choi_of_mixed(&e)?;
        let d = 1 << n;
        let rank = rng.random_range(1..=d);
        let rho = random_density(&mut rng, d, rank);
        let via_choi = apply_choi(&j, &rho)?;
        t.record("choi action", case, via_choi.max_abs_diff(&e.apply(&rho)?), tol);
        t.record("tp of choi", case, j.tp_residual(), 1e-8);

        let u = random_unitary(&mut rng, d);
        let v = random_unitary(&mut rng, d);
        let conj = conjugate_choi(&j, Some(&u), Some(&v))?;
        t.record("tp after conjugation", case, conj.tp_residual(), 1e-8);
        let a = eigenvalues(j.matrix())?;
        let b = eigenvalues(conj.matrix())?;
        let spectral = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        t.record("spectrum under conjugation", case, spectral, tol);

        if n < 3 {
            let tensored = tensor_choi(&j, &identity_choi(1))?;
            t.record("tp after tensor", case, tensored.tp_residual(), 1e-8);
            let keep: Vec<usize> = (0..n).collect();
            let back = reduced_choi(&tensored, &keep, &keep)?;
            t.record(
                "tensor then reduce",
                case,
                back.matrix().max_abs_diff(j.matrix()),
                1e-10,
            );
        }
        if n > 1 {
            let reduced = reduced_choi(&j, &[0], &[0])?;
            t.record("tp after reduction", case, reduced.tp_residual(), 1e-8);
        }
    }
    Ok(t.finish("choi roundtrip and trace preservation", cases, tol, start))
}

/// Parameter-shift gradients against central finite differences.
pub fn gradient_suite(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let tol = 1e-6;
    let mut rng = stream_rng(seed, 13);
    let mut t = Tracker::new();
    for case in 0..cases {
        let n = 2 + case % 3;
        let m = rng.random_range(1..n);
        let model = random_model(&mut rng, n, m)?;
        let batch: Vec<MixedUnitaryChannel> = (0..rng.random_range(1..=2))
            .map(|_| random_channel(&mut rng, n, 2))
            .collect::<Result<_>>()?;
        let kind = if case % 2 == 0 { LossKind::L3 } else { LossKind::L2 };
        let ps = gradient(&batch, &model, kind, GradientMethod::ParameterShift)?;
        let fd = gradient(&batch, &model, kind, GradientMethod::FiniteDiff { h: 1e-5 })?;
        let err = ps.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        t.record("shift rule vs finite differences", case, err, tol);
    }
    Ok(t.finish("parameter shift vs finite differences", cases, tol, start))
}

/// Encoded-side fidelity identity against the literal reconstruct path.
pub fn fidelity_identity_suite(seed: u64, cases: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let tol = 1e-9;
    let mut rng = stream_rng(seed, 14);
    let mut t = Tracker::new();
    for case in 0..cases {
        let n = 2 + case % 2;
        let m = rng.random_range(1..n);
        let model = random_model(&mut rng, n, m)?;
        let e = random_channel(&mut rng, n, 3)?;
        let fast = reconstruction_fidelity(&e, &model)?;
        let direct = reconstruction_fidelity_direct(&e, &model)?;
        t.record("fidelity identity", case, (fast - direct).abs(), tol);
    }
    Ok(t.finish("reconstruction fidelity identity", cases, tol, start))
}

/// Identical seeds give bit-identical training reports.
pub fn determinism_suite(seed: u64, runs: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = stream_rng(seed, 15);
    let mut t = Tracker::new();
    for case in 0..runs {
        let batch: Vec<MixedUnitaryChannel> = (0..2).map(|_| random_channel(&mut rng, 3, 2)).collect::<Result<_>>()?;
        let spec = AnsatzSpec::linear(3, 1);
        let config = TrainConfig {
            epochs: 5,
            seed: derive_seed(seed, case as u64),
            shots: (case % 2 == 1).then_some(200),
            ..TrainConfig::default()
        };
        let first = serde_json::to_string(&train(&batch, 3, 2, &spec, &spec, &config)?.1)?;
        let second = serde_json::to_string(&train(&batch, 3, 2, &spec, &spec, &config)?.1)?;
        t.record("repeat run differs", case, if first == second { 0.0 } else { 1.0 }, 0.0);
    }
    Ok(t.finish("determinism", runs, 0.0, start))
}

/// Case counts for each suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteSizes {
    pub fidelity: usize,
    pub choi: usize,
    pub gradient: usize,
    pub identity: usize,
    pub determinism: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            fidelity: 200,
            choi: 100,
            gradient: 20,
            identity: 50,
            determinism: 2,
        }
    }
}

pub fn run_all(seed: u64, sizes: SuiteSizes) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        fidelity_suite(seed, sizes.fidelity)?,
        choi_suite(seed, sizes.choi)?,
        gradient_suite(seed, sizes.gradient)?,
        fidelity_identity_suite(seed, sizes.identity)?,
        determinism_suite(seed, sizes.determinism)?,
    ])
}
