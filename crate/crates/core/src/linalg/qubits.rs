//! Qubit-structured operations on dense matrices: partial traces and
//! qubit permutations. Qubit 0 is the most significant index bit.

use super::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn bit_position(n_qubits: usize, qubit: usize) -> usize {
    n_qubits - 1 - qubit
}

fn check_qubit_dim(m: &ComplexMatrix, n_qubits: usize) -> Result<()> {
    if m.dim() != 1 << n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << n_qubits,
            got: m.dim(),
        });
    }
    Ok(())
}

/// Scatters the bits of `value` (big-endian over `qubits.len()` bits) onto
/// the positions of `qubits` inside an `n_qubits`-bit index.
fn scatter(value: usize, qubits: &[usize], n_qubits: usize) -> usize {
    let k = qubits.len();
    let mut out = 0;
    for (pos, &q) in qubits.iter().enumerate() {
        if (value >> (k - 1 - pos)) & 1 == 1 {
            out |= 1 << bit_position(n_qubits, q);
        }
    }
    out
}

/// Traces out every qubit not in `keep`. Rows and columns of the result are
/// ordered by ascending kept-qubit index.
pub fn partial_trace(m: &ComplexMatrix, n_qubits: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    check_qubit_dim(m, n_qubits)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&q| q >= n_qubits) {
        return Err(Error::QubitOutOfRange { index: bad, n_qubits });
    }
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !kept.contains(q)).collect();
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let keep_pat: Vec<usize> = (0..dk).map(|v| scatter(v, &kept, n_qubits)).collect();
    let trace_pat: Vec<usize> = (0..dt).map(|v| scatter(v, &traced, n_qubits)).collect();

    let mut out = ComplexMatrix::zeros(dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for &t in &trace_pat {
                acc += m[(keep_pat[i] | t, keep_pat[j] | t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Conjugates `m` by the qubit permutation that moves qubit `i` to position
/// `perm[i]`.
pub fn permute_qubits(m: &ComplexMatrix, n_qubits: usize, perm: &[usize]) -> Result<ComplexMatrix> {
    check_qubit_dim(m, n_qubits)?;
    if perm.len() != n_qubits {
        return Err(Error::NotBijective(n_qubits));
    }
    let mut seen = vec![false; n_qubits];
    for &p in perm {
        if p >= n_qubits || seen[p] {
            return Err(Error::NotBijective(n_qubits));
        }
        seen[p] = true;
    }
    let map = index_map(n_qubits, perm);
    let d = m.dim();
    let mut out = ComplexMatrix::zeros(d);
    for x in 0..d {
        for y in 0..d {
            out[(map[x], map[y])] = m[(x, y)];
        }
    }
    Ok(out)
}

/// Image of every basis index under the qubit permutation.
pub(crate) fn index_map(n_qubits: usize, perm: &[usize]) -> Vec<usize> {
    (0..1usize << n_qubits)
        .map(|x| {
            let mut y = 0;
            for (q, &p) in perm.iter().enumerate() {
                if (x >> bit_position(n_qubits, q)) & 1 == 1 {
                    y |= 1 << bit_position(n_qubits, p);
                }
            }
            y
        })
        .collect()
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}
