use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use channelpress::autoencoder::{
    compress as compress_channel, landscape_slice, reconstruct as reconstruct_choi, AutoencoderModel,
};
use channelpress::channels::{channel_fidelity, choi_of_mixed};
use channelpress::experiments::{
    append_result_row, gen_dataset, run_anomaly, run_dimension_reduction, train_on, write_atomic, write_json,
    ConfigError, Dataset, ExperimentConfig,
};
use channelpress::noise_assist::run_nqcae;
use channelpress::selfcheck::{run_all, SuiteSizes};
use channelpress::{autoencoder, Error};
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    /// Divergence or a violated numerical invariant.
    Numerical(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Other(_) => "other",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Divergence { .. }
            | Error::NotPsd(_)
            | Error::NotTracePreserving(_)
            | Error::NotDensity(_)
            | Error::NotUnitary(_) => CliError::Numerical(msg),
            Error::InvalidConfig(_)
            | Error::Json(_)
            | Error::DimensionMismatch { .. }
            | Error::ParamLength { .. }
            | Error::InvalidChannel(_)
            | Error::InvalidGate(_)
            | Error::ParameterShiftUnsupported(_)
            | Error::QubitOutOfRange { .. }
            | Error::EmptyBatch => CliError::Config(msg),
            _ => CliError::Other(msg),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub struct Context {
    name: &'static str,
    cfg: ExperimentConfig,
    out: PathBuf,
    threads: usize,
    start: Instant,
}

impl Context {
    pub fn load(
        name: &'static str,
        config: &Path,
        out: &Path,
        seed: Option<u64>,
        shots: Option<u64>,
        threads: usize,
    ) -> Result<Self, CliError> {
        let text = fs::read_to_string(config)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", config.display())))?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        if shots.is_some() {
            cfg.train.shots = shots;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        fs::create_dir_all(out)
            .map_err(|e| CliError::Config(format!("cannot create output dir {}: {e}", out.display())))?;
        Ok(Self {
            name,
            cfg,
            out: out.to_path_buf(),
            threads,
            start: Instant::now(),
        })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn json<T: serde::Serialize>(&self, file: &str, value: &T) -> Result<(), CliError> {
        Ok(write_json(&self.path(file), value)?)
    }

    fn text(&self, file: &str, body: &str) -> Result<(), CliError> {
        Ok(write_atomic(&self.path(file), body.as_bytes())?)
    }

    fn dataset(&self) -> Result<Dataset, CliError> {
        Ok(gen_dataset(&self.cfg)?)
    }

    fn model(&self) -> Result<AutoencoderModel, CliError> {
        let path = self
            .cfg
            .model_path
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{}` needs model_path in the config", self.name)))?;
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read model {}: {e}", path.display())))?;
        let model: AutoencoderModel =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("model {}: {e}", path.display())))?;
        if model.n() != self.cfg.n_qubits || model.m() != self.cfg.latent_qubits {
            return Err(CliError::Config(format!(
                "model is ({}, {}) but config asks for n_qubits={} latent_qubits={}",
                model.n(),
                model.m(),
                self.cfg.n_qubits,
                self.cfg.latent_qubits
            )));
        }
        Ok(model)
    }

    pub fn write_timing(&self) -> Result<(), CliError> {
        self.json(
            "timing.json",
            &json!({
                "subcommand": self.name,
                "wall_time_s": self.start.elapsed().as_secs_f64(),
                "threads": self.threads,
            }),
        )
    }

    pub fn write_diagnostic(&self, err: &CliError) {
        let body = json!({
            "subcommand": self.name,
            "kind": err.kind(),
            "exit_code": err.exit_code(),
            "message": err.to_string(),
            "seed": self.cfg.seed,
        });
        if let Err(e) = write_json(&self.path("diagnostic.json"), &body) {
            log::error!("could not write diagnostic.json: {e}");
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Rounds to ten decimals and drops trailing zeros, so 0.25000000000000006
/// prints as 0.25.
fn short(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

pub fn train(ctx: &Context) -> Result<(), CliError> {
    let dataset = ctx.dataset()?;
    let (model, report) = train_on(&ctx.cfg, &dataset.channels)?;
    ctx.json("model.json", &model)?;
    ctx.json("train_report.json", &report)?;
    ctx.text("loss_trace.csv", &report.to_csv())?;
    println!(
        "trained {} epochs: loss {} val_mean {}",
        report.epochs_run,
        short(report.final_loss()),
        short(report.final_val_mean())
    );
    Ok(())
}

pub fn compress(ctx: &Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    let dataset = ctx.dataset()?;
    let compressed = dataset
        .channels
        .iter()
        .map(|e| compress_channel(e, &model))
        .collect::<Result<Vec<_>, _>>()?;
    ctx.json("compressed.json", &compressed)?;
    println!("compressed {} channels to {} qubits", compressed.len(), model.m());
    Ok(())
}

pub fn reconstruct(ctx: &Context) -> Result<(), CliError> {
    let model = ctx.model()?;
    let dataset = ctx.dataset()?;
    let mut recs = Vec::new();
    let mut fids = Vec::new();
    for e in &dataset.channels {
        let rec = reconstruct_choi(&compress_channel(e, &model)?, &model)?;
        fids.push(channel_fidelity(&rec, &choi_of_mixed(e)?)?);
        recs.push(rec);
    }
    ctx.json("reconstructed.json", &recs)?;
    ctx.json("fidelities.json", &json!({ "fidelities": fids, "mean": mean(&fids) }))?;
    println!("mean reconstruction fidelity {}", short(mean(&fids)));
    Ok(())
}

pub fn bound(ctx: &Context) -> Result<(), CliError> {
    let dataset = ctx.dataset()?;
    let m = ctx.cfg.latent_qubits;
    let bounds = dataset
        .channels
        .iter()
        .map(|e| autoencoder::recovery_bound(e, m))
        .collect::<Result<Vec<_>, _>>()?;
    let body = json!({
        "n_qubits": ctx.cfg.n_qubits,
        "latent_qubits": m,
        "dataset": dataset.description,
        "bounds": bounds,
        "mean": mean(&bounds),
    });
    ctx.json("bound.json", &body)?;
    println!("{}", short(mean(&bounds)));
    Ok(())
}

pub fn nqcae(ctx: &Context) -> Result<(), CliError> {
    let dataset = ctx.dataset()?;
    let spec = ctx.cfg.encoder_spec();
    let report = run_nqcae(
        &dataset.channels,
        ctx.cfg.n_qubits,
        ctx.cfg.latent_qubits,
        &spec,
        &spec,
        &ctx.cfg.train_config(),
    )?;
    ctx.json("model.json", &report.model)?;
    ctx.json("train_report.json", &report.train)?;
    ctx.json("nqcae_report.json", &report)?;
    ctx.text("nqcae.csv", &report.rows_csv())?;
    let q: Vec<f64> = report.rows.iter().map(|r| r.qcae_fidelity).collect();
    let nq: Vec<f64> = report.rows.iter().map(|r| r.nqcae_fidelity).collect();
    println!(
        "mean fidelity: plain {} noise-assisted {}",
        short(mean(&q)),
        short(mean(&nq))
    );
    Ok(())
}

pub fn dimred(ctx: &Context) -> Result<(), CliError> {
    let outcome = run_dimension_reduction(&ctx.cfg)?;
    append_result_row(&ctx.path("results.csv"), &outcome.row)?;
    ctx.json("dataset.json", &outcome.dataset)?;
    let row = &outcome.row;
    match &outcome.trained {
        Some((model, report)) => {
            ctx.json("model.json", model)?;
            ctx.json("train_report.json", report)?;
            println!(
                "final_L3 {} val_mean {} val_std {} bound_mean {}",
                short(row.final_l3),
                short(row.val_mean),
                short(row.val_std),
                short(row.bound_mean)
            );
            Ok(())
        }
        None => Err(CliError::Numerical(row.status.clone())),
    }
}

pub fn anomaly(ctx: &Context) -> Result<(), CliError> {
    let outcome = run_anomaly(&ctx.cfg)?;
    ctx.json("anomaly_report.json", &outcome.report)?;
    ctx.text("scores.csv", &outcome.report.scores_csv())?;
    ctx.json("model.json", &outcome.model)?;
    ctx.json("train_report.json", &outcome.train_report)?;
    println!(
        "auroc {} tpr at {} fpr {}",
        short(outcome.report.auroc),
        outcome.report.target_fpr,
        short(outcome.report.tpr_at_threshold)
    );
    Ok(())
}

pub fn landscape(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx
        .cfg
        .landscape
        .ok_or_else(|| CliError::Config("`landscape` needs a landscape section in the config".into()))?;
    let dataset = ctx.dataset()?;
    let model = if ctx.cfg.model_path.is_some() {
        ctx.model()?
    } else {
        train_on(&ctx.cfg, &dataset.channels)?.0
    };
    let grid = landscape_slice(
        &dataset.channels,
        &model,
        spec.i,
        spec.j,
        spec.grid,
        spec.range,
        spec.loss,
    )?;
    let step = if spec.grid > 1 {
        2.0 * spec.range / (spec.grid - 1) as f64
    } else {
        0.0
    };
    let mut csv = String::from("offset_i,offset_j,loss\n");
    for (a, row) in grid.iter().enumerate() {
        for (b, loss) in row.iter().enumerate() {
            let di = if spec.grid > 1 {
                -spec.range + step * a as f64
            } else {
                0.0
            };
            let dj = if spec.grid > 1 {
                -spec.range + step * b as f64
            } else {
                0.0
            };
            let _ = writeln!(csv, "{di:?},{dj:?},{loss:?}");
        }
    }
    ctx.text("landscape.csv", &csv)?;
    ctx.json("model.json", &model)?;
    println!(
        "wrote {}x{} landscape over parameters {} and {}",
        spec.grid, spec.grid, spec.i, spec.j
    );
    Ok(())
}

pub fn gen_data(ctx: &Context) -> Result<(), CliError> {
    let dataset = ctx.dataset()?;
    ctx.json("dataset.json", &dataset)?;
    println!("{}", dataset.description);
    Ok(())
}

pub fn check(config: Option<&Path>, out: &Path, seed: Option<u64>, threads: usize) -> Result<(), CliError> {
    let cfg_seed = match config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            Some(ExperimentConfig::from_json(&text)?.seed)
        }
        None => None,
    };
    let seed = seed.or(cfg_seed).unwrap_or(0);
    fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create output dir {}: {e}", out.display())))?;
    let start = Instant::now();
    let outcomes = run_all(seed, SuiteSizes::default())?;
    for o in &outcomes {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "[{mark}] {} ({} cases, worst {:.2e}, tol {:.0e}, {:.2}s){}",
            o.name,
            o.cases,
            o.worst,
            o.tolerance,
            o.seconds,
            if o.detail.is_empty() {
                String::new()
            } else {
                format!(": {}", o.detail)
            }
        );
    }
    write_json(&out.join("check.json"), &json!({ "seed": seed, "suites": outcomes }))?;
    write_json(
        &out.join("timing.json"),
        &json!({ "subcommand": "check", "wall_time_s": start.elapsed().as_secs_f64(), "threads": threads }),
    )?;
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        return Ok(());
    }
    let err = CliError::Numerical(format!("invariant suites failed: {}", failed.join(", ")));
    let body = json!({
        "subcommand": "check",
        "kind": err.kind(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
        "seed": seed,
    });
    write_json(&out.join("diagnostic.json"), &body)?;
    Err(err)
}
