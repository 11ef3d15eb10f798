//! Noise-assisted reconstruction: instead of padding the compressed channel
//! with the identity on the trash register, pad it with a product noise
//! channel estimated from the trash channel's Choi state.
//!
//! Each trash pair `k` (reference `k`, output `k`) contributes the diagonal
//! Choi matrix `diag(α₀, ½ − α₀, ½ − α₁, α₁)` in the basis
//! `{|00⟩, |01⟩, |10⟩, |11⟩}` of (reference, output), where
//! `α₀ = ⟨00|ρₖ|00⟩` and `α₁ = ⟨11|ρₖ|11⟩` on the pair marginal `ρₖ`. This is
//! the diagonal, trace-preserving completion of the two measured values;
//! off-diagonal coherences of `ρₖ` are dropped because keeping them can
//! break positivity. When a measured `α` exceeds ½ the complementary entry
//! would turn negative, so it is set to 0 and the input row is renormalized
//! to ½, which keeps the result PSD and trace preserving.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{self, compress, train, AutoencoderModel, TrainConfig, TrainReport};
use crate::channels::{
    channel_fidelity, choi_of_mixed, conjugate_choi, identity_choi, reduced_choi, tensor_choi, ChoiMatrix,
    MixedUnitaryChannel,
};
use crate::circuits::AnsatzSpec;
use crate::error::{Error, Result};
use crate::linalg::{partial_trace, permute_qubits, ComplexMatrix};

/// Measured coefficients for one trash pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePairSpec {
    pub alpha0: f64,
    pub alpha1: f64,
    /// Set when either value fell outside [0, ½] and was clamped.
    #[serde(default)]
    pub clamped: bool,
}

impl NoisePairSpec {
    pub fn new(alpha0: f64, alpha1: f64) -> Result<Self> {
        for a in [alpha0, alpha1] {
            if !a.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&a) {
                return Err(Error::InvalidProbability(a));
            }
        }
        if alpha0 + alpha1 > 1.0 + 1e-9 {
            return Err(Error::InvalidChannel(format!(
                "alpha0 + alpha1 = {} exceeds 1",
                alpha0 + alpha1
            )));
        }
        Ok(Self {
            alpha0,
            alpha1,
            clamped: false,
        })
    }

    /// Diagonal of the pair Choi matrix after clamping, basis (reference, output).
    pub fn choi_diagonal(&self) -> ([f64; 4], bool) {
        let clamp = |a: f64| a.clamp(0.0, 0.5);
        let a0 = clamp(self.alpha0);
        let a1 = clamp(self.alpha1);
        let clamped = a0 != self.alpha0 || a1 != self.alpha1;
        ([a0, 0.5 - a0, 0.5 - a1, a1], clamped)
    }

    pub fn choi(&self) -> Result<ChoiMatrix> {
        let (diag, _) = self.choi_diagonal();
        ChoiMatrix::from_matrix(1, 1, ComplexMatrix::from_real_diag(&diag))
    }
}

/// Choi matrix of the trash channel, layout `[trash references, trash outputs]`.
pub fn trash_choi(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<ChoiMatrix> {
    let sigma = autoencoder::trash_state(e, model)?;
    trash_state_to_choi(&sigma, model.trash_qubits())
}

fn trash_state_to_choi(sigma: &ComplexMatrix, t: usize) -> Result<ChoiMatrix> {
    // trash outputs 0..t move behind the references t..2t
    let perm: Vec<usize> = (t..2 * t).chain(0..t).collect();
    let mat = permute_qubits(sigma, 2 * t, &perm)?;
    ChoiMatrix::from_matrix(t, t, mat)
}

/// Trash Choi obtained by reducing the full encoded Choi matrix J^Π. Used to
/// cross-check [`trash_choi`].
pub fn trash_choi_from_encoded(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<ChoiMatrix> {
    let (u, v) = model.encoders()?;
    let j_pi = conjugate_choi(&choi_of_mixed(e)?, Some(&u), Some(&v))?;
    let trash: Vec<usize> = (model.m()..model.n()).collect();
    reduced_choi(&j_pi, &trash, &trash)
}

/// Reads α₀, α₁ from the marginal on (reference `k`, output `k`).
pub fn measure_alphas(j_trash: &ChoiMatrix, k: usize) -> Result<NoisePairSpec> {
    let t = j_trash.n_in();
    if k >= t {
        return Err(Error::QubitOutOfRange { index: k, n_qubits: t });
    }
    let marginal = partial_trace(j_trash.matrix(), 2 * t, &[k, t + k])?;
    let alpha0 = marginal[(0, 0)].re;
    let alpha1 = marginal[(3, 3)].re;
    let mut spec = NoisePairSpec::new(alpha0, alpha1)?;
    spec.clamped = spec.choi_diagonal().1;
    Ok(spec)
}

pub fn measure_all_alphas(j_trash: &ChoiMatrix) -> Result<Vec<NoisePairSpec>> {
    (0..j_trash.n_in()).map(|k| measure_alphas(j_trash, k)).collect()
}

/// Product noise Choi `J¹ ⊗ … ⊗ Jᵗ` on `t` qubits.
pub fn build_noise_choi(specs: &[NoisePairSpec], t: usize) -> Result<ChoiMatrix> {
    if specs.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            got: specs.len(),
        });
    }
    let mut iter = specs.iter();
    let Some(first) = iter.next() else {
        return Err(Error::InvalidChannel("noise channel needs at least one pair".into()));
    };
    let mut acc = first.choi()?;
    for spec in iter {
        acc = tensor_choi(&acc, &spec.choi()?)?;
    }
    Ok(acc)
}

/// `V† ∘ (F ⊗ N) ∘ U†`.
pub fn reconstruct_noisy(jf: &ChoiMatrix, jn: &ChoiMatrix, model: &AutoencoderModel) -> Result<ChoiMatrix> {
    autoencoder::reconstruct_with_padding(jf, jn, model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NqcaeRow {
    pub index: usize,
    pub qcae_fidelity: f64,
    pub nqcae_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NqcaeReport {
    pub model: AutoencoderModel,
    pub train: TrainReport,
    pub pairs: Vec<NoisePairSpec>,
    pub noise_choi: ChoiMatrix,
    pub rows: Vec<NqcaeRow>,
}

impl NqcaeReport {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("index,qcae_fidelity,nqcae_fidelity\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:?},{:?}\n", r.index, r.qcae_fidelity, r.nqcae_fidelity));
        }
        out
    }
}

/// Averaged trash Choi over the batch. The noise channel is estimated once
/// for the trained model rather than per channel.
pub fn batch_trash_choi(batch: &[MixedUnitaryChannel], model: &AutoencoderModel) -> Result<ChoiMatrix> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let t = model.trash_qubits();
    let mut sigma = ComplexMatrix::zeros(1 << (2 * t));
    for e in batch {
        sigma.add_scaled(&autoencoder::trash_state(e, model)?, 1.0 / batch.len() as f64);
    }
    trash_state_to_choi(&sigma, t)
}

/// Noise model and per-channel fidelities for an already trained model.
pub fn evaluate_nqcae(
    batch: &[MixedUnitaryChannel],
    model: &AutoencoderModel,
) -> Result<(Vec<NoisePairSpec>, ChoiMatrix, Vec<NqcaeRow>)> {
    let t = model.trash_qubits();
    let j_trash = batch_trash_choi(batch, model)?;
    let pairs = measure_all_alphas(&j_trash)?;
    let jn = build_noise_choi(&pairs, t)?;
    let id = identity_choi(t);
    let mut rows = Vec::with_capacity(batch.len());
    for (index, e) in batch.iter().enumerate() {
        let j_e = choi_of_mixed(e)?;
        let jf = compress(e, model)?;
        let qcae = channel_fidelity(&autoencoder::reconstruct_with_padding(&jf, &id, model)?, &j_e)?;
        let nqcae = channel_fidelity(&reconstruct_noisy(&jf, &jn, model)?, &j_e)?;
        rows.push(NqcaeRow {
            index,
            qcae_fidelity: qcae,
            nqcae_fidelity: nqcae,
        });
    }
    Ok((pairs, jn, rows))
}

/// Trains the autoencoder, estimates the trash noise and compares plain and
/// noise-assisted reconstruction on every batch channel.
pub fn run_nqcae(
    batch: &[MixedUnitaryChannel],
    n: usize,
    m: usize,
    u_spec: &AnsatzSpec,
    v_spec: &AnsatzSpec,
    config: &TrainConfig,
) -> Result<NqcaeReport> {
    let (model, report) = train(batch, n, m, u_spec, v_spec, config)?;
    let (pairs, noise_choi, rows) = evaluate_nqcae(batch, &model)?;
    Ok(NqcaeReport {
        model,
        train: report,
        pairs,
        noise_choi,
        rows,
    })
}
