//! The circuit autoencoder: encoders `U(θ)`, `V(θ)` around a channel `E`,
//! the trash-state losses used for training, and channel compression and
//! reconstruction.
//!
//! Register layout on `n` qubits: latent qubits `0..m`, trash qubits
//! `m..n` (`t = n − m` of them). The trash state lives on `2t` qubits
//! ordered `[trash outputs 0..t, trash references t..2t]`, and the Bell
//! pairs scored by the losses couple trash output `k` with trash
//! reference `k`.
//!
//! The local loss averages the pair overlaps, `L3 = 1 − (1/t)·Σₖ⟨Bellₖ⟩`,
//! so it stays in `[0, 1]` for any number of trash qubits and has the same
//! minimizers as the unnormalized sum.

mod gradient;
pub mod optim;
mod train;

pub use gradient::{central_difference, gradient, parameter_shift, GradientMethod};
pub use train::{train, train_model, InitStrategy, LossEvaluator, TrainConfig, TrainReport};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channels::{
    self, choi_of_mixed, conjugate_choi, identity_choi, reduced_choi, tensor_choi, ChoiMatrix, MixedUnitaryChannel,
};
use crate::circuits::{real_amplitudes, AnsatzSpec, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    L2,
    L3,
}

/// Encoder pair and its current parameters `θ = [θ_U ‖ θ_V]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct AutoencoderModel {
    n: usize,
    m: usize,
    u_ansatz: Circuit,
    v_ansatz: Circuit,
    theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    n: usize,
    m: usize,
    u_ansatz: Circuit,
    v_ansatz: Circuit,
    theta: Vec<f64>,
}

impl TryFrom<ModelJson> for AutoencoderModel {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        AutoencoderModel::new(raw.n, raw.m, raw.u_ansatz, raw.v_ansatz, raw.theta)
    }
}

impl From<AutoencoderModel> for ModelJson {
    fn from(m: AutoencoderModel) -> Self {
        Self {
            n: m.n,
            m: m.m,
            u_ansatz: m.u_ansatz,
            v_ansatz: m.v_ansatz,
            theta: m.theta,
        }
    }
}

impl AutoencoderModel {
    pub fn new(n: usize, m: usize, u_ansatz: Circuit, v_ansatz: Circuit, theta: Vec<f64>) -> Result<Self> {
        if m >= n {
            return Err(Error::InvalidConfig(format!("latent qubits {m} must be < {n}")));
        }
        if u_ansatz.n_qubits() != n || v_ansatz.n_qubits() != n {
            return Err(Error::InvalidConfig(format!(
                "encoders act on {} and {} qubits, model has {n}",
                u_ansatz.n_qubits(),
                v_ansatz.n_qubits()
            )));
        }
        let expected = u_ansatz.n_params() + v_ansatz.n_params();
        if theta.len() != expected {
            return Err(Error::ParamLength {
                expected,
                got: theta.len(),
            });
        }
        Ok(Self {
            n,
            m,
            u_ansatz,
            v_ansatz,
            theta,
        })
    }

    /// RealAmplitudes encoders with all parameters zero.
    pub fn from_specs(n: usize, m: usize, u_spec: &AnsatzSpec, v_spec: &AnsatzSpec) -> Result<Self> {
        let u = real_amplitudes(u_spec)?;
        let v = real_amplitudes(v_spec)?;
        let theta = vec![0.0; u.n_params() + v.n_params()];
        Self::new(n, m, u, v, theta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn trash_qubits(&self) -> usize {
        self.n - self.m
    }

    pub fn u_ansatz(&self) -> &Circuit {
        &self.u_ansatz
    }

    pub fn v_ansatz(&self) -> &Circuit {
        &self.v_ansatz
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.m, self.u_ansatz.clone(), self.v_ansatz.clone(), theta)
    }

    /// `(U(θ_U), V(θ_V))` for an arbitrary parameter vector.
    pub fn encoders_at(&self, theta: &[f64]) -> Result<(ComplexMatrix, ComplexMatrix)> {
        if theta.len() != self.theta.len() {
            return Err(Error::ParamLength {
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        let (tu, tv) = theta.split_at(self.u_ansatz.n_params());
        Ok((self.u_ansatz.unitary(tu)?, self.v_ansatz.unitary(tv)?))
    }

    pub fn encoders(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        self.encoders_at(&self.theta)
    }

    pub fn check_parameter_shift(&self) -> Result<()> {
        self.u_ansatz.check_parameter_shift()?;
        self.v_ansatz.check_parameter_shift()
    }

    fn check_channel(&self, e: &MixedUnitaryChannel) -> Result<()> {
        if e.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: e.n_qubits(),
            });
        }
        Ok(())
    }
}

/// Builds `E = V(θ₀)† ∘ (W ⊗ id) ∘ U(θ₀)†`, a channel the model compresses
/// perfectly at `θ₀`. `latent` acts on the latent qubits `0..m`.
pub fn planted_channel(model: &AutoencoderModel, theta0: &[f64], latent: &Circuit) -> Result<MixedUnitaryChannel> {
    if latent.n_qubits() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            got: latent.n_qubits(),
        });
    }
    let (tu, tv) = theta0.split_at(model.u_ansatz.n_params());
    let u_inv = model.u_ansatz.bind(tu)?.inverse()?;
    let v_inv = model.v_ansatz.bind(tv)?.inverse()?;
    let w = latent.embed(model.n, 0)?;
    MixedUnitaryChannel::unitary(u_inv.then(&w)?.then(&v_inv)?)
}

/// Trash state of the composite unitary `M = V·W·U`, accumulated into `acc`
/// with weight `p`. Order `[trash outputs, trash references]`.
pub(crate) fn accumulate_trash(acc: &mut ComplexMatrix, m_total: &ComplexMatrix, n: usize, m: usize, p: f64) {
    let t = n - m;
    let tdim = 1usize << t;
    let ldim = 1usize << m;
    let d = 1usize << n;
    let w = p / d as f64;
    let mut v = vec![ZERO; tdim * tdim];
    for a in 0..ldim {
        for b in 0..ldim {
            // v[c2, c1] = M[(b, c2), (a, c1)]
            for c2 in 0..tdim {
                let row = m_total.row(b * tdim + c2);
                for c1 in 0..tdim {
                    v[c2 * tdim + c1] = row[a * tdim + c1];
                }
            }
            for (i, vi) in v.iter().enumerate() {
                if *vi == ZERO {
                    continue;
                }
                let vi = vi * w;
                for (j, vj) in v.iter().enumerate() {
                    acc[(i, j)] += vi * vj.conj();
                }
            }
        }
    }
}

/// `M = V·W·U` for every member, keeping the weights.
fn composite_unitaries(
    members: &[(f64, ComplexMatrix)],
    u: &ComplexMatrix,
    v: &ComplexMatrix,
) -> Vec<(f64, ComplexMatrix)> {
    members.iter().map(|(p, w)| (*p, v.matmul(&w.matmul(u)))).collect()
}

pub(crate) fn trash_from_members(members: &[(f64, ComplexMatrix)], n: usize, m: usize) -> ComplexMatrix {
    let mut sigma = ComplexMatrix::zeros(1 << (2 * (n - m)));
    for (p, mt) in members {
        accumulate_trash(&mut sigma, mt, n, m, *p);
    }
    sigma
}

/// State on `[trash outputs, trash references]` after applying
/// `V∘E∘U` to `ω_latent ⊗ φ⁺_trash` and discarding the latent outputs.
pub fn trash_state(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<ComplexMatrix> {
    model.check_channel(e)?;
    let (u, v) = model.encoders()?;
    let members = composite_unitaries(&e.weighted_unitaries()?, &u, &v);
    Ok(trash_from_members(&members, model.n, model.m))
}

/// ⟨φ⁺|σ|φ⁺⟩ with trash output `k` paired to trash reference `k`.
pub fn global_overlap(sigma: &ComplexMatrix, t: usize) -> f64 {
    let tdim = 1usize << t;
    let mut acc = ZERO;
    for j in 0..tdim {
        for jp in 0..tdim {
            acc += sigma[(j * tdim + j, jp * tdim + jp)];
        }
    }
    acc.re / tdim as f64
}

/// ⟨Bell|ρ_k|Bell⟩ for the pair (trash output `k`, trash reference `k`).
pub fn pair_overlap(sigma: &ComplexMatrix, t: usize, k: usize) -> f64 {
    let n2 = 2 * t;
    let d = 1usize << n2;
    let out_mask = 1usize << (n2 - 1 - k);
    let ref_mask = 1usize << (n2 - 1 - (t + k));
    let both = out_mask | ref_mask;
    let mut acc = ZERO;
    for x in 0..d {
        if x & both != 0 {
            continue;
        }
        let x11 = x | both;
        acc += sigma[(x, x)] + sigma[(x, x11)] + sigma[(x11, x)] + sigma[(x11, x11)];
    }
    0.5 * acc.re
}

/// Overlap probabilities scored by a loss: one global overlap for L2, one per
/// pair for L3.
pub(crate) fn overlap_terms(sigma: &ComplexMatrix, t: usize, kind: LossKind) -> Vec<f64> {
    match kind {
        LossKind::L2 => vec![global_overlap(sigma, t)],
        LossKind::L3 => (0..t).map(|k| pair_overlap(sigma, t, k)).collect(),
    }
}

fn batch_loss(batch: &[MixedUnitaryChannel], model: &AutoencoderModel, kind: LossKind) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let t = model.trash_qubits();
    let mut total = 0.0;
    for e in batch {
        let sigma = trash_state(e, model)?;
        let terms = overlap_terms(&sigma, t, kind);
        total += terms.iter().sum::<f64>() / terms.len() as f64;
    }
    Ok((1.0 - total / batch.len() as f64).clamp(0.0, 1.0))
}

/// Global loss `1 − mean ⟨φ⁺|σ|φ⁺⟩`.
pub fn loss_l2(batch: &[MixedUnitaryChannel], model: &AutoencoderModel) -> Result<f64> {
    batch_loss(batch, model, LossKind::L2)
}

/// Local loss `1 − mean (1/t)·Σₖ ⟨Bellₖ⟩`.
pub fn loss_l3(batch: &[MixedUnitaryChannel], model: &AutoencoderModel) -> Result<f64> {
    batch_loss(batch, model, LossKind::L3)
}

/// Mean squared reconstruction error `mean (1 − F(J^Ẽ, J^E))²`.
pub fn loss_l1(batch: &[MixedUnitaryChannel], model: &AutoencoderModel) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for e in batch {
        total += (1.0 - reconstruction_fidelity(e, model)?).powi(2);
    }
    Ok(total / batch.len() as f64)
}

pub fn loss(batch: &[MixedUnitaryChannel], model: &AutoencoderModel, kind: LossKind) -> Result<f64> {
    batch_loss(batch, model, kind)
}

/// Draws Binomial(shots, p)/shots; `None` returns `p` itself.
pub fn sample_probability(p: f64, shots: Option<u64>, rng: &mut impl Rng) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidProbability(p));
    }
    let p = p.clamp(0.0, 1.0);
    match shots {
        None => Ok(p),
        Some(0) => Err(Error::InvalidConfig("shots must be positive".into())),
        Some(s) => {
            let dist = Binomial::new(s, p).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(dist.sample(rng) as f64 / s as f64)
        }
    }
}

/// Estimates tr(Pσ), either exactly or by simulated projective sampling.
pub fn estimate_overlap(
    sigma: &ComplexMatrix,
    projector: &ComplexMatrix,
    shots: Option<u64>,
    rng: &mut impl Rng,
) -> Result<f64> {
    if sigma.dim() != projector.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            got: projector.dim(),
        });
    }
    let p = projector.matmul(sigma).trace().re;
    sample_probability(p, shots, rng)
}

/// Choi matrix of the compressed channel `F = tr_trash(V∘E∘U)` on `m` qubits.
pub fn compress(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<ChoiMatrix> {
    model.check_channel(e)?;
    let (u, v) = model.encoders()?;
    let j_pi = conjugate_choi(&choi_of_mixed(e)?, Some(&u), Some(&v))?;
    let latent: Vec<usize> = (0..model.m).collect();
    reduced_choi(&j_pi, &latent, &latent)
}

/// Choi matrix of `V† ∘ (F ⊗ id) ∘ U†` on `n` qubits.
pub fn reconstruct(jf: &ChoiMatrix, model: &AutoencoderModel) -> Result<ChoiMatrix> {
    reconstruct_with_padding(jf, &identity_choi(model.trash_qubits()), model)
}

/// Reconstruction with an arbitrary channel on the trash register in place of
/// the identity.
pub(crate) fn reconstruct_with_padding(
    jf: &ChoiMatrix,
    padding: &ChoiMatrix,
    model: &AutoencoderModel,
) -> Result<ChoiMatrix> {
    if jf.n_in() != model.m || jf.n_out() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.m,
            got: jf.n_in(),
        });
    }
    let t = model.trash_qubits();
    if padding.n_in() != t || padding.n_out() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            got: padding.n_in(),
        });
    }
    let (u, v) = model.encoders()?;
    let full = tensor_choi(jf, padding)?;
    conjugate_choi(&full, Some(&u.adjoint()), Some(&v.adjoint()))
}

/// Reduced Choi of a pure Choi vector onto latent references and outputs,
/// accumulated with weight `p`. Layout `[latent refs, latent outs]`.
fn accumulate_latent_choi(acc: &mut ComplexMatrix, m_total: &ComplexMatrix, n: usize, m: usize, p: f64) {
    let t = n - m;
    let tdim = 1usize << t;
    let ldim = 1usize << m;
    let w = p / (1usize << n) as f64;
    let mut v = vec![ZERO; ldim * ldim];
    for c1 in 0..tdim {
        for c2 in 0..tdim {
            for a in 0..ldim {
                for b in 0..ldim {
                    v[a * ldim + b] = m_total[(b * tdim + c2, a * tdim + c1)];
                }
            }
            for (i, vi) in v.iter().enumerate() {
                if *vi == ZERO {
                    continue;
                }
                let vi = vi * w;
                for (j, vj) in v.iter().enumerate() {
                    acc[(i, j)] += vi * vj.conj();
                }
            }
        }
    }
}

/// F(J^Ẽ, J^E) evaluated as F(J^F ⊗ φ⁺, J^Π) on the encoded side. For a
/// single-circuit channel J^Π is pure and the fidelity reduces to an
/// expectation value.
pub(crate) fn fidelity_from_composites(members: &[(f64, ComplexMatrix)], n: usize, m: usize) -> Result<f64> {
    let ldim = 1usize << m;
    let mut jf = ComplexMatrix::zeros(ldim * ldim);
    for (p, mt) in members {
        accumulate_latent_choi(&mut jf, mt, n, m, *p);
    }
    if members.len() == 1 {
        let mt = &members[0].1;
        let t = n - m;
        let tdim = 1usize << t;
        let norm = 1.0 / ((1usize << n) as f64).sqrt();
        // u[(a, b)] = Σ_c ψ[(a, c), (b, c)]
        let mut u = vec![ZERO; ldim * ldim];
        for a in 0..ldim {
            for b in 0..ldim {
                let mut acc = ZERO;
                for c in 0..tdim {
                    acc += mt[(b * tdim + c, a * tdim + c)];
                }
                u[a * ldim + b] = acc * norm;
            }
        }
        let f = jf.expectation(&u).re / tdim as f64;
        return Ok(f.clamp(0.0, 1.0));
    }
    let jf = ChoiMatrix::checked(m, m, jf)?;
    let padded = tensor_choi(&jf, &identity_choi(n - m))?;
    let mut j_pi = ComplexMatrix::zeros(1 << (2 * n));
    for (p, mt) in members {
        j_pi.add_scaled(&ComplexMatrix::outer(&channels::choi_vector(mt)), *p);
    }
    linalg::fidelity(padded.matrix(), &j_pi)
}

/// Reconstruction fidelity F(J^Ẽ, J^E) via the encoded-side identity.
pub fn reconstruction_fidelity(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<f64> {
    model.check_channel(e)?;
    let (u, v) = model.encoders()?;
    let members = composite_unitaries(&e.weighted_unitaries()?, &u, &v);
    fidelity_from_composites(&members, model.n, model.m)
}

/// Reconstruction fidelity computed literally as F(reconstruct(compress(E)), J^E).
pub fn reconstruction_fidelity_direct(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<f64> {
    let j_e = choi_of_mixed(e)?;
    let rec = reconstruct(&compress(e, model)?, model)?;
    channels::channel_fidelity(&rec, &j_e)
}

/// ½‖σ_trash − φ⁺‖₁; zero exactly when the perfect-compression condition holds.
pub fn perfect_compression_residual(e: &MixedUnitaryChannel, model: &AutoencoderModel) -> Result<f64> {
    let sigma = trash_state(e, model)?;
    linalg::trace_distance(&sigma, &linalg::max_entangled(model.trash_qubits()))
}

/// Sum of the largest 4^m eigenvalues of J^E: an upper bound on the
/// reconstruction fidelity of any encoder pair.
pub fn recovery_bound(e: &MixedUnitaryChannel, m: usize) -> Result<f64> {
    let n = e.n_qubits();
    if m >= n {
        return Err(Error::InvalidConfig(format!("latent qubits {m} must be < {n}")));
    }
    channels::top_k_eigenvalue_sum(&choi_of_mixed(e)?, 1 << (2 * m))
}

/// grid×grid loss values over θᵢ, θⱼ offsets in [−range, range], other
/// parameters held at the model's θ. Row index follows θᵢ.
pub fn landscape_slice(
    batch: &[MixedUnitaryChannel],
    model: &AutoencoderModel,
    i: usize,
    j: usize,
    grid: usize,
    range: f64,
    kind: LossKind,
) -> Result<Vec<Vec<f64>>> {
    let p = model.n_params();
    if i >= p || j >= p {
        return Err(Error::InvalidConfig(format!(
            "landscape indices ({i}, {j}) out of range for {p} parameters"
        )));
    }
    if i == j {
        return Err(Error::InvalidConfig("landscape indices must differ".into()));
    }
    if grid == 0 {
        return Err(Error::InvalidConfig("landscape grid must be >= 1".into()));
    }
    let offsets: Vec<f64> = if grid == 1 {
        vec![0.0]
    } else {
        (0..grid)
            .map(|k| -range + 2.0 * range * k as f64 / (grid - 1) as f64)
            .collect()
    };
    let evaluator = LossEvaluator::new(batch, model, kind)?;
    let mut out = Vec::with_capacity(grid);
    for &di in &offsets {
        let mut row = Vec::with_capacity(grid);
        for &dj in &offsets {
            let mut theta = model.theta().to_vec();
            theta[i] += di;
            theta[j] += dj;
            row.push(evaluator.loss(&theta)?);
        }
        out.push(row);
    }
    Ok(out)
}

/// Bell projector on `2t` qubits pairing qubit `k` with qubit `t + k`.
pub fn trash_bell_projector(t: usize) -> ComplexMatrix {
    linalg::max_entangled(t)
}
