//! Channel calculus on trace-normalized Choi matrices.
//!
//! A [`ChoiMatrix`] for a channel with `n_in` input and `n_out` output qubits
//! is a density matrix on `n_in + n_out` qubits laid out as
//! `[reference qubits 0..n_in, output qubits n_in..n_in+n_out]`, with
//! reference qubit `k` paired to input qubit `k` through |φ⁺⟩.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};

/// TP residuals above this are rejected.
pub const TP_ERROR: f64 = 1e-6;
/// TP residuals above this (but below [`TP_ERROR`]) are flagged.
pub const TP_WARN: f64 = 1e-8;

/// Probability-weighted set of unitary circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct MixedUnitaryChannel {
    members: Vec<Circuit>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    members: Vec<Circuit>,
    probs: Vec<f64>,
}

impl TryFrom<ChannelJson> for MixedUnitaryChannel {
    type Error = Error;

    fn try_from(raw: ChannelJson) -> Result<Self> {
        MixedUnitaryChannel::new(raw.members, raw.probs)
    }
}

impl From<MixedUnitaryChannel> for ChannelJson {
    fn from(c: MixedUnitaryChannel) -> Self {
        Self {
            members: c.members,
            probs: c.probs,
        }
    }
}

impl MixedUnitaryChannel {
    pub fn new(members: Vec<Circuit>, probs: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidChannel("no members".into()));
        }
        if members.len() != probs.len() {
            return Err(Error::InvalidChannel(format!(
                "{} members but {} probabilities",
                members.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidChannel(format!("negative probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidChannel(format!("probabilities sum to {total}")));
        }
        let n = members[0].n_qubits();
        for c in &members {
            if c.n_qubits() != n {
                return Err(Error::InvalidChannel(format!(
                    "members act on {} and {} qubits",
                    n,
                    c.n_qubits()
                )));
            }
            if !c.is_bound() {
                return Err(Error::InvalidChannel("members must be fully bound circuits".into()));
            }
        }
        Ok(Self { members, probs })
    }

    /// Single-circuit channel with probability one.
    pub fn unitary(circuit: Circuit) -> Result<Self> {
        Self::new(vec![circuit], vec![1.0])
    }

    pub fn uniform(members: Vec<Circuit>) -> Result<Self> {
        let p = 1.0 / members.len().max(1) as f64;
        let probs = vec![p; members.len()];
        Self::new(members, probs)
    }

    /// Uniform mixture of Pauli strings such as `"XI"`; character `k` acts on qubit `k`.
    pub fn pauli_mixture(labels: &[&str]) -> Result<Self> {
        let members = labels.iter().map(|l| pauli_circuit(l)).collect::<Result<Vec<_>>>()?;
        Self::uniform(members)
    }

    /// Uniform mixture of all 4ⁿ Pauli strings: the completely depolarizing channel.
    pub fn completely_depolarizing(n_qubits: usize) -> Result<Self> {
        let labels = all_pauli_labels(n_qubits);
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        Self::pauli_mixture(&refs)
    }

    pub fn n_qubits(&self) -> usize {
        self.members[0].n_qubits()
    }

    pub fn members(&self) -> &[Circuit] {
        &self.members
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `(pᵢ, Uᵢ)` pairs in member order.
    pub fn weighted_unitaries(&self) -> Result<Vec<(f64, ComplexMatrix)>> {
        self.members
            .iter()
            .zip(&self.probs)
            .map(|(c, &p)| Ok((p, c.unitary(&[])?)))
            .collect()
    }

    /// Σᵢ pᵢ UᵢρUᵢ†, evaluated directly at the operator level.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(rho.dim());
        for (p, u) in self.weighted_unitaries()? {
            if u.dim() != rho.dim() {
                return Err(Error::DimensionMismatch {
                    expected: u.dim(),
                    got: rho.dim(),
                });
            }
            out.add_scaled(&u.matmul(rho).matmul(&u.adjoint()), p);
        }
        Ok(out)
    }
}

pub fn all_pauli_labels(n_qubits: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for _ in 0..n_qubits {
        labels = labels
            .into_iter()
            .flat_map(|l| ['I', 'X', 'Y', 'Z'].map(|c| format!("{l}{c}")))
            .collect();
    }
    labels
}

pub fn pauli_circuit(label: &str) -> Result<Circuit> {
    let mut gates = Vec::new();
    for (q, ch) in label.chars().enumerate() {
        let kind = match ch {
            'I' => continue,
            'X' => GateKind::X,
            'Y' => GateKind::Y,
            'Z' => GateKind::Z,
            other => return Err(Error::InvalidChannel(format!("unknown Pauli '{other}'"))),
        };
        gates.push(Gate::fixed(kind, q));
    }
    Circuit::new(label.chars().count(), gates)
}

/// Trace-one Choi matrix with the canonical refs-then-outputs layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiJson", into = "ChoiJson")]
pub struct ChoiMatrix {
    n_in: usize,
    n_out: usize,
    mat: ComplexMatrix,
    tp_warning: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiJson {
    n_in: usize,
    n_out: usize,
    #[serde(flatten)]
    mat: ComplexMatrix,
}

impl TryFrom<ChoiJson> for ChoiMatrix {
    type Error = Error;

    fn try_from(raw: ChoiJson) -> Result<Self> {
        ChoiMatrix::from_matrix(raw.n_in, raw.n_out, raw.mat)
    }
}

impl From<ChoiMatrix> for ChoiJson {
    fn from(c: ChoiMatrix) -> Self {
        Self {
            n_in: c.n_in,
            n_out: c.n_out,
            mat: c.mat,
        }
    }
}

impl ChoiMatrix {
    /// Validates a matrix from an untrusted source, including a full PSD check.
    pub fn from_matrix(n_in: usize, n_out: usize, mat: ComplexMatrix) -> Result<Self> {
        let choi = Self::checked(n_in, n_out, mat)?;
        let min = choi.mat.min_eigenvalue()?;
        if min < -linalg::PSD_TOLERANCE {
            return Err(Error::NotPsd(min));
        }
        Ok(choi)
    }

    /// Checks dimension, trace, hermiticity and trace preservation. Used for
    /// results of operations that preserve positivity by construction.
    pub(crate) fn checked(n_in: usize, n_out: usize, mat: ComplexMatrix) -> Result<Self> {
        let expected = 1usize << (n_in + n_out);
        if mat.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: mat.dim(),
            });
        }
        mat.check_density_shape(1e-9)?;
        let residual = tp_residual(&mat, n_in, n_out)?;
        if residual > TP_ERROR {
            return Err(Error::NotTracePreserving(residual));
        }
        let tp_warning = residual > TP_WARN;
        if tp_warning {
            warn!("Choi matrix TP residual {residual:.3e} above {TP_WARN:e}");
        }
        Ok(Self {
            n_in,
            n_out,
            mat,
            tp_warning,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_qubits(&self) -> usize {
        self.n_in + self.n_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// Set when the trace-preservation residual lies in (1e-8, 1e-6].
    pub fn tp_warning(&self) -> bool {
        self.tp_warning
    }

    pub fn tp_residual(&self) -> f64 {
        tp_residual(&self.mat, self.n_in, self.n_out).unwrap_or(f64::INFINITY)
    }
}

/// max-entry |tr_out J − I/2^n_in|.
fn tp_residual(mat: &ComplexMatrix, n_in: usize, n_out: usize) -> Result<f64> {
    let keep: Vec<usize> = (0..n_in).collect();
    let marginal = linalg::partial_trace(mat, n_in + n_out, &keep)?;
    Ok(marginal.max_abs_diff(&linalg::maximally_mixed(n_in)))
}

/// Pure Choi vector (I⊗U)|φ⁺⟩: entry `r·D + o` equals `U[o][r]/√D`.
pub fn choi_vector(u: &ComplexMatrix) -> Vec<Complex64> {
    let d = u.dim();
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = vec![ZERO; d * d];
    for r in 0..d {
        for o in 0..d {
            v[r * d + o] = u[(o, r)] * norm;
        }
    }
    v
}

pub fn choi_of_unitary(u: &ComplexMatrix, n_qubits: usize) -> Result<ChoiMatrix> {
    if u.dim() != 1 << n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << n_qubits,
            got: u.dim(),
        });
    }
    let residual = u.unitarity_residual();
    if residual > 1e-8 {
        return Err(Error::NotUnitary(residual));
    }
    ChoiMatrix::checked(n_qubits, n_qubits, ComplexMatrix::outer(&choi_vector(u)))
}

/// Choi matrix of the identity channel on `n` qubits (φ⁺ over `2n` qubits).
pub fn identity_choi(n_qubits: usize) -> ChoiMatrix {
    ChoiMatrix {
        n_in: n_qubits,
        n_out: n_qubits,
        mat: linalg::max_entangled(n_qubits),
        tp_warning: false,
    }
}

/// Σᵢ pᵢ J(Uᵢ), summed in member order.
pub fn choi_of_mixed(e: &MixedUnitaryChannel) -> Result<ChoiMatrix> {
    let n = e.n_qubits();
    let terms: Vec<(f64, ComplexMatrix)> = e
        .members()
        .par_iter()
        .zip(e.probs().par_iter())
        .map(|(c, &p)| Ok((p, ComplexMatrix::outer(&choi_vector(&c.unitary(&[])?)))))
        .collect::<Result<_>>()?;
    let mut mat = ComplexMatrix::zeros(1 << (2 * n));
    for (p, m) in &terms {
        mat.add_scaled(m, *p);
    }
    ChoiMatrix::checked(n, n, mat)
}

/// E(ρ) = d_in · tr_in(J (ρᵀ ⊗ I)).
pub fn apply_choi(j: &ChoiMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let din = 1usize << j.n_in;
    let dout = 1usize << j.n_out;
    if rho.dim() != din {
        return Err(Error::DimensionMismatch {
            expected: din,
            got: rho.dim(),
        });
    }
    let m = &j.mat;
    let mut out = ComplexMatrix::zeros(dout);
    for r in 0..din {
        for rp in 0..din {
            let w = rho[(r, rp)] * din as f64;
            if w == ZERO {
                continue;
            }
            for o in 0..dout {
                for op in 0..dout {
                    out[(o, op)] += m[(r * dout + o, rp * dout + op)] * w;
                }
            }
        }
    }
    Ok(out)
}

/// Choi of `v_post ∘ E ∘ u_pre`: (Uᵀ ⊗ V) J (Uᵀ ⊗ V)†.
pub fn conjugate_choi(
    j: &ChoiMatrix,
    u_pre: Option<&ComplexMatrix>,
    v_post: Option<&ComplexMatrix>,
) -> Result<ChoiMatrix> {
    let din = 1usize << j.n_in;
    let dout = 1usize << j.n_out;
    let pre = match u_pre {
        Some(u) if u.dim() != din => {
            return Err(Error::DimensionMismatch {
                expected: din,
                got: u.dim(),
            })
        }
        Some(u) => u.transpose(),
        None => ComplexMatrix::identity(din),
    };
    let post = match v_post {
        Some(v) if v.dim() != dout => {
            return Err(Error::DimensionMismatch {
                expected: dout,
                got: v.dim(),
            })
        }
        Some(v) => v.clone(),
        None => ComplexMatrix::identity(dout),
    };
    if u_pre.is_none() && v_post.is_none() {
        return Ok(j.clone());
    }
    let k = pre.kron(&post);
    let mat = k.matmul(&j.mat).matmul(&k.adjoint());
    ChoiMatrix::checked(j.n_in, j.n_out, mat.hermitian_part())
}

/// Choi of the product channel, reordered to `[refs1, refs2, outs1, outs2]`.
pub fn tensor_choi(j1: &ChoiMatrix, j2: &ChoiMatrix) -> Result<ChoiMatrix> {
    let (a, b, c, d) = (j1.n_in, j1.n_out, j2.n_in, j2.n_out);
    let total = a + b + c + d;
    // kron layout: [refs1 | outs1 | refs2 | outs2]
    let mut perm = Vec::with_capacity(total);
    perm.extend(0..a);
    perm.extend((0..b).map(|i| a + c + i));
    perm.extend((0..c).map(|i| a + i));
    perm.extend((0..d).map(|i| a + c + b + i));
    let mat = linalg::permute_qubits(&j1.mat.kron(&j2.mat), total, &perm)?;
    ChoiMatrix::checked(a + c, b + d, mat)
}

/// Traces out every reference qubit not in `keep_in` and every output qubit
/// not in `keep_out` (indices relative to the input/output registers).
pub fn reduced_choi(j: &ChoiMatrix, keep_in: &[usize], keep_out: &[usize]) -> Result<ChoiMatrix> {
    for &q in keep_in {
        if q >= j.n_in {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: j.n_in,
            });
        }
    }
    for &q in keep_out {
        if q >= j.n_out {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: j.n_out,
            });
        }
    }
    let mut keep: Vec<usize> = keep_in.to_vec();
    keep.extend(keep_out.iter().map(|q| j.n_in + q));
    keep.sort_unstable();
    keep.dedup();
    let n_in = keep.iter().filter(|&&q| q < j.n_in).count();
    let n_out = keep.len() - n_in;
    let mat = linalg::partial_trace(&j.mat, j.n_qubits(), &keep)?;
    ChoiMatrix::checked(n_in, n_out, mat)
}

pub fn channel_fidelity(j1: &ChoiMatrix, j2: &ChoiMatrix) -> Result<f64> {
    if j1.n_in != j2.n_in || j1.n_out != j2.n_out {
        return Err(Error::DimensionMismatch {
            expected: j1.mat.dim(),
            got: j2.mat.dim(),
        });
    }
    linalg::fidelity(&j1.mat, &j2.mat)
}

pub fn top_k_eigenvalue_sum(j: &ChoiMatrix, k: usize) -> Result<f64> {
    Ok(linalg::top_k_sum(&j.mat, k)?.clamp(0.0, 1.0))
}
