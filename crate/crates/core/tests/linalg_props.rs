use channelpress::channels::{apply_choi, choi_of_mixed, conjugate_choi, MixedUnitaryChannel};
use channelpress::circuits::random_circuit;
use channelpress::linalg::random::{random_density, random_unitary};
use channelpress::linalg::{eigenvalues, fidelity, partial_trace, top_k_sum, ComplexMatrix};
use channelpress::rng::stream_rng;
use proptest::prelude::*;

fn channel(seed: u64, n: usize, k: usize) -> MixedUnitaryChannel {
    let members = (0..k)
        .map(|i| random_circuit(n, 3, seed.wrapping_add(i as u64)).unwrap())
        .collect();
    MixedUnitaryChannel::uniform(members).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>(), q in 1usize..=4, r1 in 1usize..=16, r2 in 1usize..=16) {
        let dim = 1 << q;
        let mut rng = stream_rng(seed, 0);
        let rho = random_density(&mut rng, dim, r1.min(dim));
        let sigma = random_density(&mut rng, dim, r2.min(dim));
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-9);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fidelity_bounded_by_top_eigenvalues(seed in any::<u64>(), q in 1usize..=4, r in 1usize..=16) {
        let dim = 1 << q;
        let r = r.min(dim);
        let mut rng = stream_rng(seed, 1);
        let rho = random_density(&mut rng, dim, dim);
        let sigma = random_density(&mut rng, dim, r);
        prop_assert!(fidelity(&rho, &sigma).unwrap() <= top_k_sum(&rho, r).unwrap() + 1e-8);
    }

    #[test]
    fn fidelity_is_unitarily_invariant(seed in any::<u64>(), q in 1usize..=3) {
        let dim = 1 << q;
        let mut rng = stream_rng(seed, 2);
        let rho = random_density(&mut rng, dim, dim);
        let sigma = random_density(&mut rng, dim, 1);
        let u = random_unitary(&mut rng, dim);
        let conj = |m: &ComplexMatrix| u.matmul(m).matmul(&u.adjoint());
        let a = fidelity(&rho, &sigma).unwrap();
        let b = fidelity(&conj(&rho), &conj(&sigma)).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), qa in 1usize..=2, qb in 1usize..=2) {
        let mut rng = stream_rng(seed, 3);
        let a = random_density(&mut rng, 1 << qa, 1 << qa);
        let b = random_density(&mut rng, 1 << qb, 1);
        let ab = a.kron(&b);
        let keep_a: Vec<usize> = (0..qa).collect();
        let keep_b: Vec<usize> = (qa..qa + qb).collect();
        prop_assert!(partial_trace(&ab, qa + qb, &keep_a).unwrap().max_abs_diff(&a) < 1e-12);
        prop_assert!(partial_trace(&ab, qa + qb, &keep_b).unwrap().max_abs_diff(&b) < 1e-12);
        let none = partial_trace(&ab, qa + qb, &[]).unwrap();
        prop_assert!((none.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn choi_reproduces_channel_action(seed in any::<u64>(), n in 1usize..=3, k in 1usize..=4) {
        let e = channel(seed, n, k);
        let j = choi_of_mixed(&e).unwrap();
        let mut rng = stream_rng(seed, 4);
        let rho = random_density(&mut rng, 1 << n, 1 << n);
        prop_assert!(apply_choi(&j, &rho).unwrap().max_abs_diff(&e.apply(&rho).unwrap()) < 1e-10);
        prop_assert!(j.tp_residual() < 1e-10);
        prop_assert!((j.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_preserves_spectrum(seed in any::<u64>(), n in 1usize..=3, k in 1usize..=3) {
        let j = choi_of_mixed(&channel(seed, n, k)).unwrap();
        let mut rng = stream_rng(seed, 5);
        let u = random_unitary(&mut rng, 1 << n);
        let v = random_unitary(&mut rng, 1 << n);
        let conj = conjugate_choi(&j, Some(&u), Some(&v)).unwrap();
        let a = eigenvalues(j.matrix()).unwrap();
        let b = eigenvalues(conj.matrix()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!(conj.tp_residual() < 1e-10);
    }
}
