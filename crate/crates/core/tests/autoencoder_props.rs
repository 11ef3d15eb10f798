use channelpress::autoencoder::{
    loss_l1, loss_l2, loss_l3, perfect_compression_residual, planted_channel, reconstruction_fidelity, recovery_bound,
    AutoencoderModel,
};
use channelpress::channels::MixedUnitaryChannel;
use channelpress::circuits::{random_circuit, AnsatzSpec, Circuit};
use channelpress::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn model(n: usize, m: usize, theta: impl Iterator<Item = f64>) -> AutoencoderModel {
    let spec = AnsatzSpec::linear(n, 1);
    let base = AutoencoderModel::from_specs(n, m, &spec, &spec).unwrap();
    let theta: Vec<f64> = theta.take(base.n_params()).collect();
    base.with_theta(theta).unwrap()
}

fn random_model(seed: u64, n: usize, m: usize) -> AutoencoderModel {
    let mut rng = stream_rng(seed, 0);
    model(n, m, std::iter::repeat_with(move || rng.random_range(-3.2..3.2)))
}

fn channel(seed: u64, n: usize, k: usize) -> MixedUnitaryChannel {
    let members: Vec<Circuit> = (0..k)
        .map(|i| random_circuit(n, 3, seed.wrapping_add(i as u64)).unwrap())
        .collect();
    MixedUnitaryChannel::uniform(members).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn losses_lie_in_unit_interval(seed in any::<u64>(), n in 2usize..=3, m in 1usize..=2, k in 1usize..=3) {
        let m = m.min(n - 1);
        let model = random_model(seed, n, m);
        let batch = vec![channel(seed, n, k), channel(seed ^ 1, n, 1)];
        for loss in [loss_l1(&batch, &model), loss_l2(&batch, &model), loss_l3(&batch, &model)] {
            let l = loss.unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l), "loss {l}");
        }
    }

    #[test]
    fn fidelity_never_exceeds_recovery_bound(seed in any::<u64>(), n in 2usize..=3, m in 1usize..=2, k in 1usize..=4) {
        let m = m.min(n - 1);
        let e = channel(seed, n, k);
        let f = reconstruction_fidelity(&e, &random_model(seed, n, m)).unwrap();
        prop_assert!(f <= recovery_bound(&e, m).unwrap() + 1e-9);
    }

    #[test]
    fn planted_channels_compress_perfectly(seed in any::<u64>(), n in 2usize..=4, m in 1usize..=3, k in 1usize..=3) {
        let m = m.min(n - 1);
        let model = random_model(seed, n, m);
        let theta0 = model.theta().to_vec();
        let members: Vec<Circuit> = (0..k)
            .map(|i| {
                let latent = random_circuit(m, 2, seed.wrapping_add(i as u64)).unwrap();
                planted_channel(&model, &theta0, &latent).unwrap().members()[0].clone()
            })
            .collect();
        let e = MixedUnitaryChannel::uniform(members).unwrap();
        prop_assert!(perfect_compression_residual(&e, &model).unwrap() < 1e-8);
        prop_assert!(reconstruction_fidelity(&e, &model).unwrap() > 1.0 - 1e-9);
        prop_assert!(loss_l3(std::slice::from_ref(&e), &model).unwrap() < 1e-10);
    }

    #[test]
    fn imperfect_trash_means_imperfect_recovery(seed in any::<u64>(), n in 2usize..=3, k in 1usize..=3) {
        let model = random_model(seed, n, n - 1);
        let e = channel(seed, n, k);
        let residual = perfect_compression_residual(&e, &model).unwrap();
        let f = reconstruction_fidelity(&e, &model).unwrap();
        if residual > 1e-3 {
            prop_assert!(f < 1.0 - 1e-7, "residual {residual} but fidelity {f}");
        }
        if f > 1.0 - 1e-10 {
            prop_assert!(residual < 1e-4);
        }
    }

    #[test]
    fn fidelity_is_lipschitz_in_parameters(seed in any::<u64>(), n in 2usize..=3, eps in 1e-6f64..1e-2) {
        let model = random_model(seed, n, n - 1);
        let e = channel(seed, n, 2);
        let mut rng = stream_rng(seed, 9);
        let shifted: Vec<f64> = model.theta().iter().map(|t| t + rng.random_range(-eps..eps)).collect();
        let total: f64 = shifted.iter().zip(model.theta()).map(|(a, b)| (a - b).abs()).sum();
        let moved = model.with_theta(shifted).unwrap();
        let a = reconstruction_fidelity(&e, &model).unwrap();
        let b = reconstruction_fidelity(&e, &moved).unwrap();
        prop_assert!((a - b).abs() <= 2.0 * total + 1e-12);
    }
}
