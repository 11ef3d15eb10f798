//! Random matrices for property tests and the self-check suite.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, ZERO};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix with i.i.d. complex Gaussian entries.
pub fn random_matrix(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| gaussian(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    random_matrix(rng, dim).hermitian_part()
}

/// Haar-distributed unitary via Gram–Schmidt on the columns of a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = random_matrix(rng, dim);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<Complex64> = (0..dim).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(dim, |i, j| cols[j][i])
}

/// Random density matrix of the given rank: G G† / tr for a dim×rank Ginibre G.
pub fn random_density(rng: &mut impl Rng, dim: usize, rank: usize) -> ComplexMatrix {
    let rank = rank.clamp(1, dim);
    let g: Vec<Vec<Complex64>> = (0..dim).map(|_| (0..rank).map(|_| gaussian(rng)).collect()).collect();
    let mut m = ComplexMatrix::from_fn(dim, |i, j| g[i].iter().zip(&g[j]).map(|(a, b)| a * b.conj()).sum());
    let tr = m.trace().re;
    m = m.scale(1.0 / tr);
    m
}

pub fn random_pure_state(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    if v.is_empty() {
        v.push(ZERO);
    }
    v
}
