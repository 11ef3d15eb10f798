//! Hermitian eigendecomposition and the spectral functions built on it:
//! PSD square roots, Uhlmann fidelity and trace distance.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as numerical noise around zero.
pub const PSD_TOLERANCE: f64 = 1e-9;
/// Eigenvalues below this indicate an invalid state upstream.
pub const PSD_HARD_LIMIT: f64 = -1e-6;

/// Eigenpairs of a Hermitian matrix, values in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Σ f(λᵢ) vᵢvᵢ†.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.vectors.dim();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(d);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = self.vectors[(i, k)] * w;
                if vi == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        (0..self.vectors.dim()).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Eigendecomposition of the Hermitian part (M+M†)/2 of `m`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let d = m.dim();
    if d == 0 {
        return Err(Error::NotSquare { rows: 0, cols: 0 });
    }
    let h = m.hermitian_part();
    let na = DMatrix::from_fn(d, d, |i, j| h[(i, j)]);
    let eig = na.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(m)?.values)
}

/// Square root of a PSD matrix; eigenvalues in [−1e-6, 0) are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    if let Some(&min) = eig.values.last() {
        if min < PSD_HARD_LIMIT {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Eigenvalues at or below this are treated as outside a state's support.
pub const SUPPORT_TOLERANCE: f64 = 1e-14;

/// Uhlmann fidelity F(ρ,σ) = (tr√(√ρ σ √ρ))², clamped to [0, 1].
///
/// The square root is taken on the support of whichever argument has lower
/// numerical rank, which keeps rank-deficient (e.g. pure) inputs accurate to
/// round-off instead of to its square root.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let eig_rho = hermitian_eig(rho)?;
    let eig_sigma = hermitian_eig(sigma)?;
    for eig in [&eig_rho, &eig_sigma] {
        if let Some(&min) = eig.values.last() {
            if min < PSD_HARD_LIMIT {
                return Err(Error::NotPsd(min));
            }
        }
    }
    let rank = |e: &HermitianEigen| e.values.iter().filter(|&&l| l > SUPPORT_TOLERANCE).count();
    let (outer, other, k) = if rank(&eig_rho) <= rank(&eig_sigma) {
        (&eig_rho, sigma, rank(&eig_rho))
    } else {
        (&eig_sigma, rho, rank(&eig_sigma))
    };
    if k == 0 {
        return Ok(0.0);
    }
    // S = V_k·diag(√λ), M = S† B S shares its nonzero spectrum with √A B √A.
    let d = rho.dim();
    let s_cols: Vec<Vec<Complex64>> = (0..k)
        .map(|c| {
            let scale = outer.values[c].sqrt();
            outer.column(c).into_iter().map(|z| z * scale).collect()
        })
        .collect();
    let b_s: Vec<Vec<Complex64>> = s_cols.iter().map(|col| other.matvec(col)).collect();
    let inner = ComplexMatrix::from_fn(k, |i, j| (0..d).map(|r| s_cols[i][r].conj() * b_s[j][r]).sum());
    let root_sum: f64 = if k == 1 {
        inner[(0, 0)].re.max(0.0).sqrt()
    } else {
        eigenvalues(&inner)?.iter().map(|&l| l.max(0.0).sqrt()).sum()
    };
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// F(ρ, |ψ⟩⟨ψ|) = ⟨ψ|ρ|ψ⟩ for a normalized `psi`.
pub fn fidelity_with_pure(rho: &ComplexMatrix, psi: &[Complex64]) -> Result<f64> {
    if rho.dim() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: psi.len(),
        });
    }
    Ok(rho.expectation(psi).re.clamp(0.0, 1.0))
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let diff = rho - sigma;
    let norm1: f64 = eigenvalues(&diff)?.iter().map(|l| l.abs()).sum();
    Ok((0.5 * norm1).clamp(0.0, 1.0))
}

/// Sum of the `k` largest eigenvalues.
pub fn top_k_sum(m: &ComplexMatrix, k: usize) -> Result<f64> {
    if k == 0 || k > m.dim() {
        return Err(Error::InvalidConfig(format!("k = {k} outside 1..={}", m.dim())));
    }
    Ok(eigenvalues(m)?.iter().take(k).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_hermitian, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn diagonal_eigenvalues_descend() {
        let e = hermitian_eig(&ComplexMatrix::from_real_diag(&[0.1, 0.9])).unwrap();
        assert!((e.values[0] - 0.9).abs() < 1e-15);
        assert!((e.values[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_spectrum() {
        let e = hermitian_eig(&ComplexMatrix::identity(4).scale(0.25)).unwrap();
        for v in e.values {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn trace_moments_and_reconstruction() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let h = random_hermitian(&mut rng, 8);
        let e = hermitian_eig(&h).unwrap();
        let tr = h.trace().re;
        let tr2 = h.matmul(&h).trace().re;
        let s1: f64 = e.values.iter().sum();
        let s2: f64 = e.values.iter().map(|l| l * l).sum();
        assert!((s1 - tr).abs() < 1e-9);
        assert!((s2 - tr2).abs() < 1e-9);
        assert!(e.reconstruct_with(|l| l).max_abs_diff(&h) < 1e-9);
        let v = &e.vectors;
        assert!(v.adjoint().matmul(v).max_abs_diff(&ComplexMatrix::identity(8)) < 1e-9);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sqrt_cases() {
        let i4 = ComplexMatrix::identity(4);
        assert!(psd_sqrt(&i4).unwrap().max_abs_diff(&i4) < 1e-14);

        let m = ComplexMatrix::from_real_diag(&[4.0 / 13.0, 9.0 / 13.0]);
        let r = 13f64.sqrt();
        let expected = ComplexMatrix::from_real_diag(&[2.0 / r, 3.0 / r]);
        assert!(psd_sqrt(&m).unwrap().max_abs_diff(&expected) < 1e-14);

        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let rho = random_density(&mut rng, 8, 5);
        let s = psd_sqrt(&rho).unwrap();
        assert!(s.matmul(&s).max_abs_diff(&rho) < 1e-8);
        assert!(eigenvalues(&s).unwrap().last().unwrap() > &-1e-9);
    }

    #[test]
    fn sqrt_rejects_negative() {
        let m = ComplexMatrix::from_real_diag(&[1.0, -0.01]);
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn fidelity_basic_values() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let rho = random_density(&mut rng, 4, 4);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let zero = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let one = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [Complex64::new(s, 0.0), ZERO, ZERO, Complex64::new(s, 0.0)];
        let phi = ComplexMatrix::outer(&bell);
        let omega = ComplexMatrix::identity(4).scale(0.25);
        // analytic: F(ρ, |ψ⟩⟨ψ|) = ⟨ψ|ρ|ψ⟩ = 1/4
        let oracle = omega.expectation(&bell).re;
        assert!((oracle - 0.25).abs() < 1e-15);
        assert!((fidelity(&phi, &omega).unwrap() - 0.25).abs() < 1e-9);
        assert!((fidelity(&omega, &phi).unwrap() - 0.25).abs() < 1e-9);
        assert!((fidelity_with_pure(&omega, &bell).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = ComplexMatrix::identity(2).scale(0.5);
        let b = ComplexMatrix::identity(4).scale(0.25);
        assert!(matches!(fidelity(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fidelity_unitary_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let rho = random_density(&mut rng, 8, 3);
        let sigma = random_density(&mut rng, 8, 8);
        let u = random_unitary(&mut rng, 8);
        let conj = |m: &ComplexMatrix| u.matmul(m).matmul(&u.adjoint());
        let f0 = fidelity(&rho, &sigma).unwrap();
        let f1 = fidelity(&conj(&rho), &conj(&sigma)).unwrap();
        assert!((f0 - f1).abs() < 1e-8);
    }

    #[test]
    fn trace_distance_of_bell_vs_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexMatrix::outer(&[Complex64::new(s, 0.0), ZERO, ZERO, Complex64::new(s, 0.0)]);
        let omega = ComplexMatrix::identity(4).scale(0.25);
        // eigenvalues of ω−φ⁺: 1/4−1 once, 1/4 three times
        assert!((trace_distance(&omega, &phi).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn top_k_bounds() {
        let omega = ComplexMatrix::identity(16).scale(1.0 / 16.0);
        assert!((top_k_sum(&omega, 4).unwrap() - 0.25).abs() < 1e-12);
        assert!(top_k_sum(&omega, 0).is_err());
        assert!(top_k_sum(&omega, 17).is_err());
    }
}
