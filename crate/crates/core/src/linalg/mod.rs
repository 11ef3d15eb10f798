//! Dense complex linear algebra for qubit systems.

mod matrix;
mod qubits;
pub mod random;
mod spectral;

pub use matrix::{ComplexMatrix, ONE, ZERO};
pub use qubits::{invert_permutation, partial_trace, permute_qubits};
pub use spectral::{
    eigenvalues, fidelity, fidelity_with_pure, hermitian_eig, psd_sqrt, top_k_sum, trace_distance, HermitianEigen,
    PSD_HARD_LIMIT, PSD_TOLERANCE, SUPPORT_TOLERANCE,
};

use num_complex::Complex64;

/// |φ⁺⟩ on `2k` qubits pairing qubit `i` with qubit `k + i`.
pub fn max_entangled_vector(k: usize) -> Vec<Complex64> {
    let d = 1usize << k;
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = vec![ZERO; d * d];
    for j in 0..d {
        v[j * d + j] = amp;
    }
    v
}

/// φ⁺ as a density matrix on `2k` qubits.
pub fn max_entangled(k: usize) -> ComplexMatrix {
    ComplexMatrix::outer(&max_entangled_vector(k))
}

/// ω = I/2ⁿ.
pub fn maximally_mixed(n_qubits: usize) -> ComplexMatrix {
    let d = 1usize << n_qubits;
    ComplexMatrix::identity(d).scale(1.0 / d as f64)
}
