//! Fixtures shared by the criterion benches in `benches/`.

use channelpress::autoencoder::AutoencoderModel;
use channelpress::channels::MixedUnitaryChannel;
use channelpress::circuits::{random_circuit, real_amplitudes, sample_params, AnsatzSpec};

/// `count` bound RealAmplitudes(layers=2) channels with Normal(0, 0.1) parameters.
pub fn pqc_batch(n: usize, count: usize, seed: u64) -> Vec<MixedUnitaryChannel> {
    let circuit = real_amplitudes(&AnsatzSpec::linear(n, 2)).unwrap();
    sample_params(count, circuit.n_params(), 0.0, 0.1, seed)
        .unwrap()
        .iter()
        .map(|p| MixedUnitaryChannel::unitary(circuit.bind(p).unwrap()).unwrap())
        .collect()
}

/// Uniform mixture of `members` random circuits of depth 4.
pub fn mixed_channel(n: usize, members: usize, seed: u64) -> MixedUnitaryChannel {
    let circuits = (0..members)
        .map(|k| random_circuit(n, 4, seed + k as u64).unwrap())
        .collect();
    MixedUnitaryChannel::uniform(circuits).unwrap()
}

/// RealAmplitudes(layers=3) encoder pair at Normal(0, 1) parameters.
pub fn model(n: usize, m: usize, seed: u64) -> AutoencoderModel {
    let spec = AnsatzSpec::linear(n, 3);
    let base = AutoencoderModel::from_specs(n, m, &spec, &spec).unwrap();
    let theta = sample_params(1, base.n_params(), 0.0, 1.0, seed).unwrap().remove(0);
    base.with_theta(theta).unwrap()
}
