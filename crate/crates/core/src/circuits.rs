//! Gate-level circuits, the RealAmplitudes-style ansatz, random circuit
//! generation and compilation to unitaries.
//!
//! Rotation gates follow `R_P(θ) = exp(−iθP/2)`. Gates act in list order:
//! the first gate in `Circuit::gates` is applied to the input first.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ONE, ZERO};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    X,
    Y,
    Z,
    Cx,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn arity(self) -> usize {
        if self == GateKind::Cx {
            2
        } else {
            1
        }
    }
}

/// Rotation angle: either fixed or an index into the circuit's parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Bound(f64),
    Sym(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<Param>,
}

impl Gate {
    pub fn fixed(kind: GateKind, qubit: usize) -> Self {
        Self {
            kind,
            targets: vec![qubit],
            param: None,
        }
    }

    pub fn rotation(kind: GateKind, qubit: usize, param: Param) -> Self {
        Self {
            kind,
            targets: vec![qubit],
            param: Some(param),
        }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cx,
            targets: vec![control, target],
            param: None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.targets.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{:?} needs {} target(s), got {}",
                self.kind,
                self.kind.arity(),
                self.targets.len()
            )));
        }
        if self.kind == GateKind::Cx && self.targets[0] == self.targets[1] {
            return Err(Error::InvalidGate("CX targets must be distinct".into()));
        }
        if let Some(&q) = self.targets.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        match (self.kind.is_rotation(), self.param) {
            (true, None) => Err(Error::InvalidGate(format!("{:?} requires an angle", self.kind))),
            (false, Some(_)) => Err(Error::InvalidGate(format!("{:?} does not take an angle", self.kind))),
            _ => Ok(()),
        }
    }

    /// 2×2 matrix of a single-qubit gate at angle `theta` (ignored for fixed gates).
    fn single_qubit_matrix(&self, theta: f64) -> [[Complex64; 2]; 2] {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let i = Complex64::i();
        let r = |x: f64| Complex64::new(x, 0.0);
        match self.kind {
            GateKind::Rx => [[r(c), -i * s], [-i * s, r(c)]],
            GateKind::Ry => [[r(c), r(-s)], [r(s), r(c)]],
            GateKind::Rz => [
                [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
            ],
            GateKind::H => [
                [r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)],
                [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)],
            ],
            GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::Y => [[ZERO, -i], [i, ZERO]],
            GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
            GateKind::Cx => unreachable!("CX is not a single-qubit gate"),
        }
    }
}

/// Ordered gate list over `n_qubits`, possibly with symbolic parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitJson", into = "CircuitJson")]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitJson {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl TryFrom<CircuitJson> for Circuit {
    type Error = Error;

    fn try_from(raw: CircuitJson) -> Result<Self> {
        let c = Circuit::with_params(raw.n_qubits, raw.gates, raw.n_params)?;
        Ok(c)
    }
}

impl From<Circuit> for CircuitJson {
    fn from(c: Circuit) -> Self {
        Self {
            n_qubits: c.n_qubits,
            gates: c.gates,
            n_params: c.n_params,
        }
    }
}

impl Circuit {
    /// Builds a circuit, inferring `n_params` as one past the largest symbolic index.
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let n_params = gates
            .iter()
            .filter_map(|g| match g.param {
                Some(Param::Sym(i)) => Some(i + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        Self::with_params(n_qubits, gates, n_params)
    }

    pub fn with_params(n_qubits: usize, gates: Vec<Gate>, n_params: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidGate("circuit needs at least one qubit".into()));
        }
        for g in &gates {
            g.validate(n_qubits)?;
            if let Some(Param::Sym(i)) = g.param {
                if i >= n_params {
                    return Err(Error::InvalidGate(format!("symbolic index {i} >= n_params {n_params}")));
                }
            }
        }
        Ok(Self {
            n_qubits,
            gates,
            n_params,
        })
    }

    pub fn empty(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn is_bound(&self) -> bool {
        self.n_params == 0
    }

    fn angle(&self, param: Option<Param>, params: &[f64]) -> f64 {
        match param {
            Some(Param::Bound(x)) => x,
            Some(Param::Sym(i)) => params[i],
            None => 0.0,
        }
    }

    /// Substitutes `params` into every symbolic slot, returning a fully bound circuit.
    pub fn bind(&self, params: &[f64]) -> Result<Circuit> {
        self.check_params(params)?;
        let gates = self
            .gates
            .iter()
            .map(|g| Gate {
                kind: g.kind,
                targets: g.targets.clone(),
                param: g.param.map(|p| Param::Bound(self.angle(Some(p), params))),
            })
            .collect();
        Circuit::with_params(self.n_qubits, gates, 0)
    }

    /// Inverse circuit: reversed order, negated angles. Only for bound circuits.
    pub fn inverse(&self) -> Result<Circuit> {
        if !self.is_bound() {
            return Err(Error::InvalidGate("cannot invert a symbolic circuit".into()));
        }
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| Gate {
                kind: g.kind,
                targets: g.targets.clone(),
                param: match g.param {
                    Some(Param::Bound(x)) => Some(Param::Bound(-x)),
                    other => other,
                },
            })
            .collect();
        Circuit::with_params(self.n_qubits, gates, 0)
    }

    /// Gates of `self` followed by gates of `next`; both must be bound.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        if self.n_qubits != next.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: next.n_qubits,
            });
        }
        if !self.is_bound() || !next.is_bound() {
            return Err(Error::InvalidGate("can only concatenate bound circuits".into()));
        }
        let mut gates = self.gates.clone();
        gates.extend(next.gates.iter().cloned());
        Circuit::with_params(self.n_qubits, gates, 0)
    }

    /// Re-targets this circuit onto qubits `offset..offset+n` of a wider register.
    pub fn embed(&self, total_qubits: usize, offset: usize) -> Result<Circuit> {
        if offset + self.n_qubits > total_qubits {
            return Err(Error::QubitOutOfRange {
                index: offset + self.n_qubits - 1,
                n_qubits: total_qubits,
            });
        }
        let gates = self
            .gates
            .iter()
            .map(|g| Gate {
                kind: g.kind,
                targets: g.targets.iter().map(|q| q + offset).collect(),
                param: g.param,
            })
            .collect();
        Circuit::with_params(total_qubits, gates, self.n_params)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::ParamLength {
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Fails unless every symbolic parameter feeds exactly one rotation gate,
    /// the condition under which the two-term parameter-shift rule is exact.
    pub fn check_parameter_shift(&self) -> Result<()> {
        let mut uses = vec![0usize; self.n_params];
        for g in &self.gates {
            if let Some(Param::Sym(i)) = g.param {
                if !g.kind.is_rotation() {
                    return Err(Error::ParameterShiftUnsupported(format!(
                        "{:?} carries symbolic parameter {i}",
                        g.kind
                    )));
                }
                uses[i] += 1;
            }
        }
        if let Some(i) = uses.iter().position(|&u| u != 1) {
            return Err(Error::ParameterShiftUnsupported(format!(
                "parameter {i} is used by {} gates",
                uses[i]
            )));
        }
        Ok(())
    }

    /// Compiles the circuit to its 2ⁿ×2ⁿ unitary.
    pub fn unitary(&self, params: &[f64]) -> Result<ComplexMatrix> {
        self.check_params(params)?;
        let n = self.n_qubits;
        let mut u = ComplexMatrix::identity(1 << n);
        for g in &self.gates {
            apply_gate_left(&mut u, n, g, self.angle(g.param, params));
        }
        Ok(u)
    }
}

/// `u ← G·u` for gate `g` on an `n`-qubit register.
fn apply_gate_left(u: &mut ComplexMatrix, n: usize, g: &Gate, theta: f64) {
    let d = u.dim();
    match g.kind {
        GateKind::Cx => {
            let cmask = 1usize << (n - 1 - g.targets[0]);
            let tmask = 1usize << (n - 1 - g.targets[1]);
            for r in 0..d {
                if r & cmask != 0 && r & tmask == 0 {
                    let r1 = r | tmask;
                    for c in 0..d {
                        let tmp = u[(r, c)];
                        u[(r, c)] = u[(r1, c)];
                        u[(r1, c)] = tmp;
                    }
                }
            }
        }
        _ => {
            let m = g.single_qubit_matrix(theta);
            let mask = 1usize << (n - 1 - g.targets[0]);
            for r0 in 0..d {
                if r0 & mask != 0 {
                    continue;
                }
                let r1 = r0 | mask;
                for c in 0..d {
                    let a = u[(r0, c)];
                    let b = u[(r1, c)];
                    u[(r0, c)] = m[0][0] * a + m[0][1] * b;
                    u[(r1, c)] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
    }
}

/// Compiles a circuit to its unitary. Free-function form of [`Circuit::unitary`].
pub fn unitary_of(c: &Circuit, params: &[f64]) -> Result<ComplexMatrix> {
    c.unitary(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    Linear,
    Full,
}

/// Shape of a RealAmplitudes-style ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub layers: usize,
    pub entanglement: Entanglement,
}

impl AnsatzSpec {
    pub fn linear(n_qubits: usize, layers: usize) -> Self {
        Self {
            n_qubits,
            layers,
            entanglement: Entanglement::Linear,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits * (self.layers + 1)
    }
}

/// RY layer, then `layers` × (CX block, RY layer). Parameters are indexed in
/// generation order.
pub fn real_amplitudes(spec: &AnsatzSpec) -> Result<Circuit> {
    let n = spec.n_qubits;
    if n == 0 {
        return Err(Error::InvalidConfig("ansatz needs at least one qubit".into()));
    }
    if spec.layers == 0 {
        return Err(Error::InvalidConfig("ansatz needs at least one layer".into()));
    }
    let mut gates = Vec::new();
    let mut next = 0usize;
    let mut ry_layer = |gates: &mut Vec<Gate>| {
        for q in 0..n {
            gates.push(Gate::rotation(GateKind::Ry, q, Param::Sym(next)));
            next += 1;
        }
    };
    ry_layer(&mut gates);
    for _ in 0..spec.layers {
        match spec.entanglement {
            Entanglement::Linear => {
                for q in 0..n.saturating_sub(1) {
                    gates.push(Gate::cx(q, q + 1));
                }
            }
            Entanglement::Full => {
                for i in 0..n {
                    for j in i + 1..n {
                        gates.push(Gate::cx(i, j));
                    }
                }
            }
        }
        ry_layer(&mut gates);
    }
    Circuit::with_params(n, gates, spec.n_params())
}

/// Random bound circuit: per layer, each qubit gets one of {H, RX, RY, RZ}
/// (angles uniform on [0, 2π)), then a random maximal pairing of the qubits
/// receives a CX on each pair with probability ½.
pub fn random_circuit(n_qubits: usize, depth: usize, seed: u64) -> Result<Circuit> {
    if depth == 0 {
        return Err(Error::InvalidConfig("random circuit depth must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let choices = [GateKind::H, GateKind::Rx, GateKind::Ry, GateKind::Rz];
    let mut gates = Vec::new();
    let mut order: Vec<usize> = (0..n_qubits).collect();
    for _ in 0..depth {
        for q in 0..n_qubits {
            let kind = choices[rng.random_range(0..choices.len())];
            if kind.is_rotation() {
                let angle = rng.random_range(0.0..TAU);
                gates.push(Gate::rotation(kind, q, Param::Bound(angle)));
            } else {
                gates.push(Gate::fixed(kind, q));
            }
        }
        order.shuffle(&mut rng);
        for pair in order.chunks_exact(2) {
            if rng.random_bool(0.5) {
                gates.push(Gate::cx(pair[0], pair[1]));
            }
        }
    }
    Circuit::with_params(n_qubits, gates, 0)
}

/// `count` vectors of `len` i.i.d. Normal(mu, sigma) draws.
pub fn sample_params(count: usize, len: usize, mu: f64, sigma: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "normal({mu}, {sigma}): sigma must be >= 0"
        )));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidConfig(format!("normal({mu}, {sigma}): {e}")))?;
    let mut rng = seeded_rng(seed);
    Ok((0..count)
        .map(|_| (0..len).map(|_| normal.sample(&mut rng)).collect())
        .collect())
}
