//! Compression of quantum channels with a variational circuit autoencoder.
//!
//! A mixed-unitary channel `E` on `n` qubits is conjugated by trainable
//! encoders `U(θ)`, `V(θ)` so that its action concentrates on `m` latent
//! qubits; the remaining trash qubits are discarded. The crate provides the
//! dense linear algebra, circuit simulator and Choi-matrix toolkit the
//! autoencoder needs, plus a noise-assisted reconstruction variant and the
//! dimension-reduction and anomaly-detection experiments built on top.
//!
//! ```
//! use channelpress::autoencoder::{reconstruction_fidelity, recovery_bound, train, TrainConfig};
//! use channelpress::channels::MixedUnitaryChannel;
//! use channelpress::circuits::AnsatzSpec;
//!
//! let e = MixedUnitaryChannel::pauli_mixture(&["II", "XX", "YY", "ZZ"])?;
//! let spec = AnsatzSpec::linear(2, 3);
//! let (model, _report) = train(&[e.clone()], 2, 1, &spec, &spec, &TrainConfig::default())?;
//! let bound = recovery_bound(&e, 1)?;
//! assert!(reconstruction_fidelity(&e, &model)? <= bound + 1e-9);
//! # Ok::<(), channelpress::Error>(())
//! ```

pub mod autoencoder;
pub mod channels;
pub mod circuits;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod noise_assist;
pub mod rng;
pub mod selfcheck;

pub use autoencoder::{AutoencoderModel, LossKind, TrainConfig, TrainReport};
pub use channels::{ChoiMatrix, MixedUnitaryChannel};
pub use circuits::{AnsatzSpec, Circuit, Entanglement, Gate, GateKind, Param};
pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
