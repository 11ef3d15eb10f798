use std::fmt::Write as _;
use std::time::Instant;

use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::optim::{Objective, OptimizerConfig};
use super::{
    accumulate_trash, central_difference, fidelity_from_composites, overlap_terms, parameter_shift, sample_probability,
    AutoencoderModel, GradientMethod, LossKind,
};
use crate::channels::MixedUnitaryChannel;
use crate::circuits::{AnsatzSpec, Circuit};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::rng::{self, Rng, RNG_NAME};

/// Starting point for θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitStrategy {
    Zeros,
    Uniform { low: f64, high: f64 },
    Normal { mu: f64, sigma: f64 },
    Given { theta: Vec<f64> },
}

impl Default for InitStrategy {
    fn default() -> Self {
        InitStrategy::Normal { mu: 0.0, sigma: 0.1 }
    }
}

impl InitStrategy {
    pub fn sample(&self, len: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            InitStrategy::Zeros => Ok(vec![0.0; len]),
            InitStrategy::Uniform { low, high } => {
                let dist = Uniform::new(*low, *high).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                Ok((0..len).map(|_| dist.sample(rng)).collect())
            }
            InitStrategy::Normal { mu, sigma } => {
                let dist = Normal::new(*mu, *sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                Ok((0..len).map(|_| dist.sample(rng)).collect())
            }
            InitStrategy::Given { theta } => {
                if theta.len() != len {
                    return Err(Error::ParamLength {
                        expected: len,
                        got: theta.len(),
                    });
                }
                Ok(theta.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub gradient_method: GradientMethod,
    pub loss: LossKind,
    pub tolerance: f64,
    pub seed: u64,
    pub shots: Option<u64>,
    pub init: InitStrategy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            optimizer: OptimizerConfig::default(),
            gradient_method: GradientMethod::ParameterShift,
            loss: LossKind::L3,
            tolerance: 1e-9,
            seed: 0,
            shots: None,
            init: InitStrategy::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if let GradientMethod::FiniteDiff { h } = self.gradient_method {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "finite-difference step must be positive, got {h}"
                )));
            }
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be >= 0, got {}",
                self.tolerance
            )));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidConfig("shots must be positive".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Loss after each epoch.
    pub loss_trace: Vec<f64>,
    /// Mean of 1 − F(J^E, J^Ẽ) over the batch after each epoch.
    pub val_infidelity_mean: Vec<f64>,
    /// Population standard deviation of the same.
    pub val_infidelity_std: Vec<f64>,
    /// Mean of (1 − F)² over the batch after each epoch.
    pub val_mse: Vec<f64>,
    pub initial_loss: f64,
    pub final_theta: Vec<f64>,
    pub epochs_run: usize,
    pub early_stopped: bool,
    pub seed: u64,
    pub rng: String,
    /// Not serialized so that repeated runs produce identical reports.
    #[serde(skip)]
    pub wall_time: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().copied().unwrap_or(self.initial_loss)
    }

    pub fn final_val_mean(&self) -> f64 {
        self.val_infidelity_mean.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_val_std(&self) -> f64 {
        self.val_infidelity_std.last().copied().unwrap_or(f64::NAN)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,val_mean,val_std\n");
        for (i, loss) in self.loss_trace.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?}",
                i + 1,
                loss,
                self.val_infidelity_mean[i],
                self.val_infidelity_std[i]
            );
        }
        out
    }
}

/// Batch loss as a function of θ, with the channel members expanded once.
pub struct LossEvaluator {
    n: usize,
    m: usize,
    kind: LossKind,
    u: Circuit,
    v: Circuit,
    channels: Vec<Vec<(f64, ComplexMatrix)>>,
    shots: Option<u64>,
}

impl LossEvaluator {
    pub fn new(batch: &[MixedUnitaryChannel], model: &AutoencoderModel, kind: LossKind) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut channels = Vec::with_capacity(batch.len());
        for e in batch {
            model.check_channel(e)?;
            channels.push(e.weighted_unitaries()?);
        }
        Ok(Self {
            n: model.n(),
            m: model.m(),
            kind,
            u: model.u_ansatz().clone(),
            v: model.v_ansatz().clone(),
            channels,
            shots: None,
        })
    }

    pub fn with_shots(mut self, shots: Option<u64>) -> Self {
        self.shots = shots;
        self
    }

    fn encoders(&self, theta: &[f64]) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let expected = self.u.n_params() + self.v.n_params();
        if theta.len() != expected {
            return Err(Error::ParamLength {
                expected,
                got: theta.len(),
            });
        }
        let (tu, tv) = theta.split_at(self.u.n_params());
        Ok((self.u.unitary(tu)?, self.v.unitary(tv)?))
    }

    fn overlap_terms(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let (u, v) = self.encoders(theta)?;
        let t = self.n - self.m;
        let tdim2 = 1usize << (2 * t);
        Ok(self
            .channels
            .iter()
            .map(|members| {
                let mut sigma = ComplexMatrix::zeros(tdim2);
                for (p, w) in members {
                    let mt = v.matmul(&w.matmul(&u));
                    accumulate_trash(&mut sigma, &mt, self.n, self.m, *p);
                }
                overlap_terms(&sigma, t, self.kind)
            })
            .collect())
    }

    fn aggregate(terms: &[Vec<f64>]) -> f64 {
        let total: f64 = terms.iter().map(|ts| ts.iter().sum::<f64>() / ts.len() as f64).sum();
        1.0 - total / terms.len() as f64
    }

    /// Exact loss at θ.
    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        let terms = self.overlap_terms(theta)?;
        Ok(Self::aggregate(&terms).clamp(0.0, 1.0))
    }

    /// Loss with each overlap replaced by a shot-noise estimate when shots are
    /// configured.
    pub fn loss_sampled(&self, theta: &[f64], rng: &mut Rng) -> Result<f64> {
        let Some(shots) = self.shots else {
            return self.loss(theta);
        };
        let mut terms = self.overlap_terms(theta)?;
        for ts in terms.iter_mut() {
            for p in ts.iter_mut() {
                *p = sample_probability(*p, Some(shots), rng)?;
            }
        }
        Ok(Self::aggregate(&terms))
    }

    pub fn gradient(&self, theta: &[f64], method: GradientMethod, rng: Option<&mut Rng>) -> Result<Vec<f64>> {
        match rng {
            Some(rng) if self.shots.is_some() => {
                let f = |x: &[f64]| self.loss_sampled(x, rng);
                match method {
                    GradientMethod::ParameterShift => parameter_shift(f, theta),
                    GradientMethod::FiniteDiff { h } => central_difference(f, theta, h),
                }
            }
            _ => {
                let f = |x: &[f64]| self.loss(x);
                match method {
                    GradientMethod::ParameterShift => parameter_shift(f, theta),
                    GradientMethod::FiniteDiff { h } => central_difference(f, theta, h),
                }
            }
        }
    }

    /// Reconstruction fidelity of each batch channel at θ.
    pub fn fidelities(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let (u, v) = self.encoders(theta)?;
        self.channels
            .iter()
            .map(|members| {
                let composites: Vec<(f64, ComplexMatrix)> =
                    members.iter().map(|(p, w)| (*p, v.matmul(&w.matmul(&u)))).collect();
                fidelity_from_composites(&composites, self.n, self.m)
            })
            .collect()
    }
}

struct TrainingObjective<'a> {
    evaluator: &'a LossEvaluator,
    method: GradientMethod,
    rng: Rng,
}

impl Objective for TrainingObjective<'_> {
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluator.loss_sampled(x, &mut self.rng)
    }

    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let f = self.evaluator.loss_sampled(x, &mut self.rng)?;
        let g = self.evaluator.gradient(x, self.method, Some(&mut self.rng))?;
        Ok((f, g))
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains RealAmplitudes encoders built from `u_spec` and `v_spec`.
pub fn train(
    batch: &[MixedUnitaryChannel],
    n: usize,
    m: usize,
    u_spec: &AnsatzSpec,
    v_spec: &AnsatzSpec,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    let model = AutoencoderModel::from_specs(n, m, u_spec, v_spec)?;
    train_model(batch, &model, config)
}

/// Trains the encoders of `model`; its current θ is ignored unless the
/// init strategy is `Given`.
pub fn train_model(
    batch: &[MixedUnitaryChannel],
    model: &AutoencoderModel,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, TrainReport)> {
    config.validate()?;
    if config.gradient_method == GradientMethod::ParameterShift {
        model.check_parameter_shift()?;
    }
    let start = Instant::now();
    let evaluator = LossEvaluator::new(batch, model, config.loss)?.with_shots(config.shots);
    let mut init_rng = rng::stream_rng(config.seed, 0);
    let mut theta = config.init.sample(model.n_params(), &mut init_rng)?;
    let mut objective = TrainingObjective {
        evaluator: &evaluator,
        method: config.gradient_method,
        rng: rng::stream_rng(config.seed, 1),
    };
    let mut optimizer = config.optimizer.build()?;

    let initial_loss = objective.value(&theta)?;
    if !initial_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            loss: initial_loss,
        });
    }
    let mut report = TrainReport {
        loss_trace: Vec::with_capacity(config.epochs),
        val_infidelity_mean: Vec::with_capacity(config.epochs),
        val_infidelity_std: Vec::with_capacity(config.epochs),
        val_mse: Vec::with_capacity(config.epochs),
        initial_loss,
        final_theta: Vec::new(),
        epochs_run: 0,
        early_stopped: false,
        seed: config.seed,
        rng: RNG_NAME.to_string(),
        wall_time: 0.0,
    };
    let mut previous = initial_loss;
    for epoch in 1..=config.epochs {
        let loss = optimizer.step(&mut theta, &mut objective)?;
        if !loss.is_finite() || theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        let infid: Vec<f64> = evaluator.fidelities(&theta)?.iter().map(|f| 1.0 - f).collect();
        let (mean, std) = mean_std(&infid);
        let mse = infid.iter().map(|x| x * x).sum::<f64>() / infid.len() as f64;
        report.loss_trace.push(loss);
        report.val_infidelity_mean.push(mean);
        report.val_infidelity_std.push(std);
        report.val_mse.push(mse);
        report.epochs_run = epoch;
        log::debug!("epoch {epoch}: loss {loss:.6e}, val_mean {mean:.6e}");
        if (previous - loss).abs() < config.tolerance {
            report.early_stopped = true;
            break;
        }
        previous = loss;
    }
    report.final_theta = theta.clone();
    report.wall_time = start.elapsed().as_secs_f64();
    let trained = model.with_theta(theta)?;
    Ok((trained, report))
}
