//! Experiment drivers: dataset generation, the dimension-reduction study and
//! anomaly detection by reconstruction infidelity.
//!
//! Every run is a pure function of its [`ExperimentConfig`]. The config seed
//! drives the dataset, the test sets and the training run through separate
//! derived streams, so changing one stage never perturbs another.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    self, planted_channel, reconstruction_fidelity, train_model, AutoencoderModel, LossKind, TrainConfig, TrainReport,
};
use crate::channels::MixedUnitaryChannel;
use crate::circuits::{random_circuit, real_amplitudes, sample_params, AnsatzSpec, Circuit};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RNG_NAME};

const DATA_STREAM: u64 = 1;
const TEST_NORMAL_STREAM: u64 = 2;
const TEST_ABNORMAL_STREAM: u64 = 3;
const PLANTED_STREAM: u64 = 4;
const TRAIN_STREAM: u64 = 5;

/// False-positive rate at which the operating threshold is reported.
pub const TARGET_FPR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDistribution {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for ParamDistribution {
    fn default() -> Self {
        Self { mu: 0.0, sigma: 0.1 }
    }
}

impl ParamDistribution {
    pub fn label(&self) -> String {
        format!("norm({},{})", self.mu, self.sigma)
    }
}

/// Where the training channels come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Bound data-ansatz circuits with Normal(mu, sigma) parameters.
    #[default]
    Pqc,
    /// The uniform mixture of all Pauli strings.
    Depolarizing,
    /// Uniform mixture of the given Pauli labels.
    PauliMixture { labels: Vec<String> },
    /// Channels the encoder ansatz compresses perfectly at a hidden θ₀.
    Planted,
    /// A dataset JSON written by an earlier run.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbnormalKind {
    RandomDepth { depth: usize },
    Normal { mu: f64, sigma: f64 },
}

impl AbnormalKind {
    pub fn label(&self) -> String {
        match self {
            AbnormalKind::RandomDepth { depth } => format!("random_depth({depth})"),
            AbnormalKind::Normal { mu, sigma } => format!("norm({mu},{sigma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalySpec {
    pub abnormal_kind: AbnormalKind,
    pub n_test_normal: usize,
    pub n_test_abnormal: usize,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub i: usize,
    pub j: usize,
    pub grid: usize,
    pub range: f64,
    #[serde(default = "default_landscape_loss")]
    pub loss: LossKind,
}

fn default_landscape_loss() -> LossKind {
    LossKind::L3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_qubits: usize,
    pub latent_qubits: usize,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default = "default_circuits")]
    pub n_circuits: usize,
    #[serde(default)]
    pub param_distribution: ParamDistribution,
    /// Data ansatz; defaults to RealAmplitudes(layers=2, linear).
    #[serde(default)]
    pub ansatz: Option<AnsatzSpec>,
    /// Encoder ansatz for both U and V; defaults to RealAmplitudes(layers=3, linear).
    #[serde(default)]
    pub encoder_ansatz: Option<AnsatzSpec>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub anomaly: Option<AnomalySpec>,
    #[serde(default)]
    pub landscape: Option<LandscapeSpec>,
    /// Trained model used by subcommands that do not train.
    #[serde(default)]
    pub model_path: Option<PathBuf>,
}

fn default_circuits() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Invalid(Error::Io(e)))?;
        Self::from_json(&text)
    }

    pub fn data_ansatz(&self) -> AnsatzSpec {
        self.ansatz.unwrap_or(AnsatzSpec::linear(self.n_qubits, 2))
    }

    pub fn encoder_spec(&self) -> AnsatzSpec {
        self.encoder_ansatz.unwrap_or(AnsatzSpec::linear(self.n_qubits, 3))
    }

    /// Training settings with the seed taken from the experiment seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, TRAIN_STREAM),
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_qubits == 0 {
            return bad("n_qubits must be >= 1".into());
        }
        if self.latent_qubits >= self.n_qubits {
            return bad(format!(
                "latent_qubits ({}) must be < n_qubits ({})",
                self.latent_qubits, self.n_qubits
            ));
        }
        if self.n_circuits == 0 {
            return bad("n_circuits must be >= 1".into());
        }
        if self.param_distribution.sigma.is_nan() || self.param_distribution.sigma < 0.0 {
            return bad("param_distribution.sigma must be >= 0".into());
        }
        for (name, spec) in [("ansatz", self.data_ansatz()), ("encoder_ansatz", self.encoder_spec())] {
            if spec.n_qubits != self.n_qubits {
                return bad(format!(
                    "{name} acts on {} qubits, expected {}",
                    spec.n_qubits, self.n_qubits
                ));
            }
            if spec.layers == 0 {
                return bad(format!("{name} needs at least one layer"));
            }
        }
        if let Some(a) = &self.anomaly {
            if a.n_test_normal == 0 || a.n_test_abnormal == 0 || a.histogram_bins == 0 {
                return bad("anomaly test counts and histogram_bins must be >= 1".into());
            }
            if let AbnormalKind::RandomDepth { depth: 0 } = a.abnormal_kind {
                return bad("random_depth needs depth >= 1".into());
            }
            if let AbnormalKind::Normal { sigma, .. } = a.abnormal_kind {
                if sigma.is_nan() || sigma < 0.0 {
                    return bad("abnormal sigma must be >= 0".into());
                }
            }
        }
        if let DatasetSpec::PauliMixture { labels } = &self.dataset {
            if labels.iter().any(|l| l.len() != self.n_qubits) {
                return bad(format!("pauli labels must have length {}", self.n_qubits));
            }
        }
        self.train.validate()
    }
}

/// Either a parse failure (with location) or a semantic validation failure.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {0}", line = .0.line(), column = .0.column())]
    Parse(serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(Error),
}

/// A set of channels plus a description of how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub description: String,
    pub channels: Vec<MixedUnitaryChannel>,
}

fn pqc_channels(
    spec: &AnsatzSpec,
    dist: ParamDistribution,
    count: usize,
    seed: u64,
) -> Result<Vec<MixedUnitaryChannel>> {
    let circuit = real_amplitudes(spec)?;
    sample_params(count, circuit.n_params(), dist.mu, dist.sigma, seed)?
        .iter()
        .map(|p| MixedUnitaryChannel::unitary(circuit.bind(p)?))
        .collect()
}

/// `n_circuits` single-circuit channels from the data ansatz.
pub fn gen_pqc_dataset(cfg: &ExperimentConfig) -> Result<Vec<MixedUnitaryChannel>> {
    pqc_channels(
        &cfg.data_ansatz(),
        cfg.param_distribution,
        cfg.n_circuits,
        derive_seed(cfg.seed, DATA_STREAM),
    )
}

/// Hidden encoder parameters of the planted dataset.
pub fn planted_theta(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let spec = cfg.encoder_spec();
    let len = 2 * spec.n_params();
    let dist = cfg.param_distribution;
    let mut rows = sample_params(1, len, dist.mu, dist.sigma, derive_seed(cfg.seed, PLANTED_STREAM))?;
    Ok(rows.remove(0))
}

fn planted_dataset(cfg: &ExperimentConfig) -> Result<Vec<MixedUnitaryChannel>> {
    let spec = cfg.encoder_spec();
    let model = AutoencoderModel::from_specs(cfg.n_qubits, cfg.latent_qubits, &spec, &spec)?;
    let theta0 = planted_theta(cfg)?;
    let base = derive_seed(cfg.seed, DATA_STREAM);
    (0..cfg.n_circuits)
        .map(|k| {
            let latent: Circuit = if cfg.latent_qubits == 0 {
                Circuit::empty(0)?
            } else {
                random_circuit(cfg.latent_qubits, 2, base.wrapping_add(k as u64))?
            };
            planted_channel(&model, &theta0, &latent)
        })
        .collect()
}

pub fn gen_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let (description, channels) = match &cfg.dataset {
        DatasetSpec::Pqc => {
            let spec = cfg.data_ansatz();
            let desc = format!(
                "pqc: {} RealAmplitudes(n={}, layers={}, {:?}) circuits, params {}, seed {}",
                cfg.n_circuits,
                spec.n_qubits,
                spec.layers,
                spec.entanglement,
                cfg.param_distribution.label(),
                cfg.seed
            );
            (desc, gen_pqc_dataset(cfg)?)
        }
        DatasetSpec::Depolarizing => (
            format!("completely depolarizing channel on {} qubits", cfg.n_qubits),
            vec![MixedUnitaryChannel::completely_depolarizing(cfg.n_qubits)?],
        ),
        DatasetSpec::PauliMixture { labels } => {
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            (
                format!("uniform Pauli mixture {labels:?}"),
                vec![MixedUnitaryChannel::pauli_mixture(&refs)?],
            )
        }
        DatasetSpec::Planted => (
            format!(
                "planted: {} channels compressible at a hidden theta, params {}, seed {}",
                cfg.n_circuits,
                cfg.param_distribution.label(),
                cfg.seed
            ),
            planted_dataset(cfg)?,
        ),
        DatasetSpec::File { path } => {
            let text = fs::read_to_string(path)?;
            let ds: Dataset = serde_json::from_str(&text)?;
            return check_dataset(ds, cfg.n_qubits);
        }
    };
    check_dataset(Dataset { description, channels }, cfg.n_qubits)
}

fn check_dataset(ds: Dataset, n: usize) -> Result<Dataset> {
    if ds.channels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(bad) = ds.channels.iter().find(|c| c.n_qubits() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.n_qubits(),
        });
    }
    Ok(ds)
}

/// Trains the encoders described by `cfg` on `batch`.
pub fn train_on(cfg: &ExperimentConfig, batch: &[MixedUnitaryChannel]) -> Result<(AutoencoderModel, TrainReport)> {
    let spec = cfg.encoder_spec();
    let model = AutoencoderModel::from_specs(cfg.n_qubits, cfg.latent_qubits, &spec, &spec)?;
    train_model(batch, &model, &cfg.train_config())
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRedRow {
    pub m_circuits: usize,
    pub distribution: String,
    pub n: usize,
    pub d: usize,
    pub final_l3: f64,
    pub val_mean: f64,
    pub val_std: f64,
    pub bound_mean: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub val_mse: f64,
    pub data_ansatz: String,
    pub encoder_ansatz: String,
    pub status: String,
}

pub const RESULTS_HEADER: &str = "m_circuits,distribution,n,d,final_L3,val_mean,val_std,bound_mean,wall_time_s,seed,val_mse,data_ansatz,encoder_ansatz,status";

impl DimRedRow {
    pub fn csv_line(&self) -> String {
        let record = [
            self.m_circuits.to_string(),
            self.distribution.clone(),
            self.n.to_string(),
            self.d.to_string(),
            format!("{:?}", self.final_l3),
            format!("{:?}", self.val_mean),
            format!("{:?}", self.val_std),
            format!("{:?}", self.bound_mean),
            format!("{:?}", self.wall_time_s),
            self.seed.to_string(),
            format!("{:?}", self.val_mse),
            self.data_ansatz.clone(),
            self.encoder_ansatz.clone(),
            self.status.clone(),
        ];
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        writer.write_record(&record).expect("writing to a Vec cannot fail");
        let bytes = writer.into_inner().expect("writing to a Vec cannot fail");
        String::from_utf8(bytes)
            .expect("record fields are UTF-8")
            .trim_end()
            .to_string()
    }
}

fn ansatz_label(spec: &AnsatzSpec) -> String {
    format!("RA(layers={};{:?})", spec.layers, spec.entanglement).to_lowercase()
}

pub struct DimRedOutcome {
    pub row: DimRedRow,
    pub dataset: Dataset,
    pub trained: Option<(AutoencoderModel, TrainReport)>,
}

/// Trains on the whole dataset and validates on the same channels.
pub fn run_dimension_reduction(cfg: &ExperimentConfig) -> Result<DimRedOutcome> {
    let start = Instant::now();
    let dataset = gen_dataset(cfg)?;
    let batch = &dataset.channels;
    let mut bound_total = 0.0;
    for e in batch {
        bound_total += autoencoder::recovery_bound(e, cfg.latent_qubits)?;
    }
    let mut row = DimRedRow {
        m_circuits: batch.len(),
        distribution: match cfg.dataset {
            DatasetSpec::Pqc | DatasetSpec::Planted => cfg.param_distribution.label(),
            DatasetSpec::Depolarizing => "depolarizing".into(),
            DatasetSpec::PauliMixture { .. } => "pauli_mixture".into(),
            DatasetSpec::File { .. } => "file".into(),
        },
        n: cfg.n_qubits,
        d: cfg.latent_qubits,
        final_l3: f64::NAN,
        val_mean: f64::NAN,
        val_std: f64::NAN,
        bound_mean: bound_total / batch.len() as f64,
        wall_time_s: 0.0,
        seed: cfg.seed,
        val_mse: f64::NAN,
        data_ansatz: ansatz_label(&cfg.data_ansatz()),
        encoder_ansatz: ansatz_label(&cfg.encoder_spec()),
        status: "ok".into(),
    };
    let trained = match train_on(cfg, batch) {
        Ok((model, report)) => {
            row.final_l3 = autoencoder::loss_l3(batch, &model)?;
            row.val_mean = report.final_val_mean();
            row.val_std = report.final_val_std();
            row.val_mse = report.val_mse.last().copied().unwrap_or(f64::NAN);
            Some((model, report))
        }
        Err(Error::Divergence { epoch, loss }) => {
            row.status = format!("diverged at epoch {epoch} (loss {loss})");
            None
        }
        Err(e) => return Err(e),
    };
    row.wall_time_s = start.elapsed().as_secs_f64();
    Ok(DimRedOutcome { row, dataset, trained })
}

/// Appends `row` to a results CSV, writing the header first for a new file.
pub fn append_result_row(path: &Path, row: &DimRedRow) -> Result<()> {
    let exists = path.exists() && fs::metadata(path)?.len() > 0;
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if !exists {
        writeln!(file, "{RESULTS_HEADER}")?;
    }
    writeln!(file, "{}", row.csv_line())?;
    Ok(())
}

/// Reconstruction infidelity `1 − F(J^E, J^Ẽ)` of each channel; higher means
/// more anomalous. Evaluated through the encoded-side fidelity identity,
/// which equals the direct reconstruct-then-compare value.
pub fn anomaly_scores(model: &AutoencoderModel, circuits: &[MixedUnitaryChannel]) -> Result<Vec<f64>> {
    circuits
        .iter()
        .map(|e| Ok((1.0 - reconstruction_fidelity(e, model)?).clamp(0.0, 1.0)))
        .collect()
}

/// Probability that an abnormal score exceeds a normal one, ties counted ½.
pub fn auroc(scores_normal: &[f64], scores_abnormal: &[f64]) -> Result<f64> {
    if scores_normal.is_empty() || scores_abnormal.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut wins = 0.0;
    for &a in scores_abnormal {
        for &n in scores_normal {
            if a > n {
                wins += 1.0;
            } else if a == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (scores_normal.len() * scores_abnormal.len()) as f64)
}

/// Smallest normal score such that at most `fpr` of the normal scores lie
/// strictly above it.
pub fn threshold_at_fpr(scores_normal: &[f64], fpr: f64) -> Result<f64> {
    if scores_normal.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(0.0..=1.0).contains(&fpr) {
        return Err(Error::InvalidProbability(fpr));
    }
    let mut sorted = scores_normal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let allowed = (fpr * n as f64 + 1e-9).floor() as usize;
    Ok(sorted[n - 1 - allowed.min(n - 1)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub normal_counts: Vec<usize>,
    pub abnormal_counts: Vec<usize>,
}

/// Shared equal-width bins over [0, max score].
pub fn histogram(scores_normal: &[f64], scores_abnormal: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let top = scores_normal
        .iter()
        .chain(scores_abnormal)
        .copied()
        .fold(0.0f64, f64::max);
    let top = if top > 0.0 { top } else { 1.0 };
    let width = top / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 * width).collect();
    let count = |scores: &[f64]| {
        let mut counts = vec![0usize; bins];
        for &s in scores {
            let k = ((s / width).floor() as usize).min(bins - 1);
            counts[k] += 1;
        }
        counts
    };
    Histogram {
        edges,
        normal_counts: count(scores_normal),
        abnormal_counts: count(scores_abnormal),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub scores_normal: Vec<f64>,
    pub scores_abnormal: Vec<f64>,
    pub auroc: f64,
    pub threshold_at_fpr: f64,
    pub target_fpr: f64,
    pub tpr_at_threshold: f64,
    pub abnormal_kind: String,
    pub normal_distribution: String,
    pub histogram: Histogram,
    pub seed: u64,
    pub rng: String,
}

impl AnomalyReport {
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("label,index,score\n");
        for (i, s) in self.scores_normal.iter().enumerate() {
            let _ = writeln!(out, "normal,{i},{s:?}");
        }
        for (i, s) in self.scores_abnormal.iter().enumerate() {
            let _ = writeln!(out, "abnormal,{i},{s:?}");
        }
        out
    }
}

pub struct AnomalyOutcome {
    pub report: AnomalyReport,
    pub model: AutoencoderModel,
    pub train_report: TrainReport,
    pub train_set: Dataset,
}

fn abnormal_set(cfg: &ExperimentConfig, spec: &AnomalySpec) -> Result<Vec<MixedUnitaryChannel>> {
    let seed = derive_seed(cfg.seed, TEST_ABNORMAL_STREAM);
    match spec.abnormal_kind {
        AbnormalKind::RandomDepth { depth } => (0..spec.n_test_abnormal)
            .map(|k| MixedUnitaryChannel::unitary(random_circuit(cfg.n_qubits, depth, seed.wrapping_add(k as u64))?))
            .collect(),
        AbnormalKind::Normal { mu, sigma } => pqc_channels(
            &cfg.data_ansatz(),
            ParamDistribution { mu, sigma },
            spec.n_test_abnormal,
            seed,
        ),
    }
}

/// Trains on normal PQCs and scores fresh normal and abnormal test sets.
pub fn run_anomaly(cfg: &ExperimentConfig) -> Result<AnomalyOutcome> {
    let spec = cfg
        .anomaly
        .ok_or_else(|| Error::InvalidConfig("config has no anomaly section".into()))?;
    let train_set = gen_dataset(cfg)?;
    let (model, train_report) = train_on(cfg, &train_set.channels)?;
    let normals = pqc_channels(
        &cfg.data_ansatz(),
        cfg.param_distribution,
        spec.n_test_normal,
        derive_seed(cfg.seed, TEST_NORMAL_STREAM),
    )?;
    let abnormals = abnormal_set(cfg, &spec)?;
    let scores_normal = anomaly_scores(&model, &normals)?;
    let scores_abnormal = anomaly_scores(&model, &abnormals)?;
    let threshold = threshold_at_fpr(&scores_normal, TARGET_FPR)?;
    let caught = scores_abnormal.iter().filter(|&&s| s > threshold).count();
    let report = AnomalyReport {
        auroc: auroc(&scores_normal, &scores_abnormal)?,
        threshold_at_fpr: threshold,
        target_fpr: TARGET_FPR,
        tpr_at_threshold: caught as f64 / scores_abnormal.len() as f64,
        abnormal_kind: spec.abnormal_kind.label(),
        normal_distribution: cfg.param_distribution.label(),
        histogram: histogram(&scores_normal, &scores_abnormal, spec.histogram_bins),
        scores_normal,
        scores_abnormal,
        seed: cfg.seed,
        rng: RNG_NAME.into(),
    };
    Ok(AnomalyOutcome {
        report,
        model,
        train_report,
        train_set,
    })
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig::from_json(r#"{"seed": 7, "n_qubits": 3, "latent_qubits": 2}"#).unwrap()
    }

    /// Counts pairs directly, one comparison at a time.
    fn auroc_oracle(normal: &[f64], abnormal: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for a in abnormal {
            for n in normal {
                pairs += 1.0;
                total += match a.partial_cmp(n).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
        total / pairs
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.1, 0.2], &[0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap(), 0.5);
        let (n, a) = ([0.1, 0.2], [0.15, 0.3]);
        assert_eq!(auroc_oracle(&n, &a), 0.75);
        assert_eq!(auroc(&n, &a).unwrap(), 0.75);
        assert!(auroc(&[], &[0.1]).is_err());
        assert!(auroc(&[0.1], &[]).is_err());
    }

    #[test]
    fn threshold_examples() {
        let normals: Vec<f64> = (1..=40).map(|k| k as f64 / 100.0).collect();
        let t = threshold_at_fpr(&normals, 0.05).unwrap();
        assert_eq!(t, 0.38);
        assert_eq!(normals.iter().filter(|&&s| s > t).count(), 2);
        assert_eq!(threshold_at_fpr(&[0.5], 0.05).unwrap(), 0.5);
        assert_eq!(threshold_at_fpr(&normals, 0.0).unwrap(), 0.4);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = histogram(&[0.0, 0.1, 0.2], &[0.4, 0.4], 4);
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.normal_counts.iter().sum::<usize>(), 3);
        assert_eq!(h.abnormal_counts, vec![0, 0, 0, 2]);
    }

    #[test]
    fn pqc_dataset_shapes() {
        let mut cfg = base_config();
        cfg.n_qubits = 4;
        cfg.latent_qubits = 3;
        let data = gen_pqc_dataset(&cfg).unwrap();
        assert_eq!(data.len(), 10);
        for c in &data {
            assert_eq!(c.len(), 1);
            assert_eq!(c.members()[0].n_qubits(), 4);
            assert!(c.members()[0].is_bound());
            let rotations = c.members()[0].gates().iter().filter(|g| g.param.is_some()).count();
            assert_eq!(rotations, 12);
        }
    }

    #[test]
    fn zero_sigma_gives_identical_circuits() {
        let mut cfg = base_config();
        cfg.param_distribution.sigma = 0.0;
        let data = gen_pqc_dataset(&cfg).unwrap();
        assert!(data.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn dataset_json_is_reproducible_and_roundtrips() {
        let cfg = base_config();
        let a = serde_json::to_string(&gen_dataset(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&gen_dataset(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: Dataset = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
    }

    #[test]
    fn config_rejects_unknown_keys_with_location() {
        let err = ExperimentConfig::from_json(
            "{\n  \"seed\": 1,\n  \"n_qubits\": 3,\n  \"latent_qubits\": 1,\n  \"bogus\": 2\n}",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(msg.contains("line 5"), "{msg}");
        let err = ExperimentConfig::from_json(r#"{"seed": 1, "n_qubits": 3, "latent_qubits": 3}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn planted_dimension_reduction_converges() {
        let cfg = ExperimentConfig::from_json(
            r#"{"seed": 3, "n_qubits": 3, "latent_qubits": 2, "n_circuits": 4,
                "dataset": {"kind": "planted"},
                "encoder_ansatz": {"n_qubits": 3, "layers": 1, "entanglement": "linear"}}"#,
        )
        .unwrap();
        let out = run_dimension_reduction(&cfg).unwrap();
        assert_eq!(out.row.status, "ok");
        assert!(out.row.final_l3 <= 1e-4, "{:?}", out.row);
        assert!(out.row.val_mean <= 1e-3, "{:?}", out.row);
        assert!(1.0 - out.row.val_mean <= out.row.bound_mean + 1e-6);
        let (model, _) = out.trained.unwrap();
        let scores = anomaly_scores(&model, &out.dataset.channels).unwrap();
        assert!(scores.iter().all(|&s| s <= 1e-3));
    }

    #[test]
    fn results_csv_appends_under_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let cfg = ExperimentConfig::from_json(
            r#"{"seed": 1, "n_qubits": 2, "latent_qubits": 1, "dataset": {"kind": "depolarizing"},
                "train": {"epochs": 2}}"#,
        )
        .unwrap();
        let row = run_dimension_reduction(&cfg).unwrap().row;
        assert!((row.bound_mean - 0.25).abs() < 1e-9);
        append_result_row(&path, &row).unwrap();
        append_result_row(&path, &row).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], RESULTS_HEADER);
        assert!(
            lines[0].starts_with("m_circuits,distribution,n,d,final_L3,val_mean,val_std,bound_mean,wall_time_s,seed")
        );
    }

    #[test]
    fn csv_line_quotes_labels_with_commas() {
        let cfg =
            ExperimentConfig::from_json(r#"{"seed": 2, "n_qubits": 2, "latent_qubits": 1, "train": {"epochs": 1}}"#)
                .unwrap();
        let line = run_dimension_reduction(&cfg).unwrap().row.csv_line();
        assert!(line.starts_with("10,\"norm(0,0.1)\",2,1,"), "{line}");
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(line.as_bytes());
        let record = reader.records().next().unwrap().unwrap();
        assert_eq!(record.len(), RESULTS_HEADER.split(',').count());
        assert_eq!(&record[1], "norm(0,0.1)");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
