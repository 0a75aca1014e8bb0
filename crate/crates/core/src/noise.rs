//! Gate-dependent noise models g ↦ Λ(g), with the implemented map φ(g) = ω(g)∘Λ(g).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{DistanceEstimate, PauliChannel, TransferChannel};
use crate::clifford::{CliffordElement, GateEnsemble};
use crate::error::{check_dims, Error, Result};
use crate::pauli::{Pauli, PauliLabel};
use crate::pulses::{compile, word_unitary, PulseSet};

/// Single-qubit rule mapping a single-qubit gate to its noise channel.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalRule {
    Identity,
    /// Same channel after every gate.
    Fixed(TransferChannel),
    /// Undo the gate, then flip with X when the measured Z picks up a sign:
    /// Λ(g) = ω(g)†ω(X) if ω(g)†(Z) = −σ, else ω(g)†.
    BasisUndo,
    /// Compile into faulty pulses (X over-rotates, Y under-rotates by δ).
    Pulses { set: PulseSet, delta: f64 },
    Table(BTreeMap<CliffordElement, TransferChannel>),
}

impl LocalRule {
    pub fn channel(&self, g: &CliffordElement) -> Result<TransferChannel> {
        check_dims(1, g.n())?;
        match self {
            LocalRule::Identity => Ok(TransferChannel::identity(1)),
            LocalRule::Fixed(ch) => {
                check_dims(1, ch.n())?;
                Ok(ch.clone())
            }
            LocalRule::BasisUndo => {
                let z = PauliLabel::single(1, 0, Pauli::Z);
                let (_, neg) = g.inverse().act(&z)?;
                let undo = g.inverse();
                let step = if neg {
                    undo.compose(&CliffordElement::pauli(&PauliLabel::single(1, 0, Pauli::X)))?
                } else {
                    undo
                };
                let u = clifford_unitary_1q(&step)?;
                TransferChannel::from_unitary(1, &u)
            }
            LocalRule::Pulses { set, delta } => {
                let word = compile(g, *set)?;
                let ideal = word_unitary(word, None);
                let faulty = word_unitary(word, Some(*delta));
                TransferChannel::from_unitary(1, &(ideal.adjoint() * faulty))
            }
            LocalRule::Table(t) => {
                t.get(g).cloned().ok_or(Error::Unsupported("gate missing from the noise table"))
            }
        }
    }

    pub fn is_pauli(&self) -> bool {
        match self {
            LocalRule::Identity => true,
            LocalRule::Fixed(ch) => ch.is_pauli_diagonal(1e-13),
            LocalRule::Pulses { delta, .. } => *delta == 0.0,
            LocalRule::BasisUndo => false,
            LocalRule::Table(t) => t.values().all(|c| c.is_pauli_diagonal(1e-13)),
        }
    }
}

/// Dense unitary of a single-qubit Clifford via its shortest X/Y pulse word.
pub fn clifford_unitary_1q(g: &CliffordElement) -> Result<DMatrix<Complex64>> {
    Ok(word_unitary(compile(g, PulseSet::XyHalfPi)?, None))
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    Noiseless,
    /// Λ(g) = Λ for every gate.
    Right(TransferChannel),
    /// Gate-independent noise before the gate: Λ(g) = ω(g)†Λω(g).
    Left(TransferChannel),
    /// Λ(g) = ⊗_q rule_q(g_q) for product gates.
    Local(Vec<LocalRule>),
    /// Explicit gate → channel lookup.
    Table(BTreeMap<CliffordElement, TransferChannel>),
}

/// Noise model Λ_ε(g) = (1 − ε)·id + ε·Λ(g).
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    n: usize,
    kind: NoiseKind,
    mixing: f64,
}

impl NoiseModel {
    pub fn noiseless(n: usize) -> Self {
        NoiseModel { n, kind: NoiseKind::Noiseless, mixing: 1.0 }
    }

    pub fn right(ch: TransferChannel) -> Self {
        NoiseModel { n: ch.n(), kind: NoiseKind::Right(ch), mixing: 1.0 }
    }

    pub fn left(ch: TransferChannel) -> Self {
        NoiseModel { n: ch.n(), kind: NoiseKind::Left(ch), mixing: 1.0 }
    }

    pub fn local(rules: Vec<LocalRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Malformed("no local rules"));
        }
        Ok(NoiseModel { n: rules.len(), kind: NoiseKind::Local(rules), mixing: 1.0 })
    }

    pub fn uniform_local(n: usize, rule: LocalRule) -> Self {
        NoiseModel { n, kind: NoiseKind::Local(vec![rule; n]), mixing: 1.0 }
    }

    pub fn table(n: usize, table: BTreeMap<CliffordElement, TransferChannel>) -> Result<Self> {
        for (g, ch) in &table {
            check_dims(n, g.n())?;
            check_dims(n, ch.n())?;
        }
        Ok(NoiseModel { n, kind: NoiseKind::Table(table), mixing: 1.0 })
    }

    /// Per-qubit bit flip with probability ε after every gate.
    pub fn bit_flip_right(n: usize, eps: f64) -> Result<Self> {
        let ch = PauliChannel::bit_flip(eps)?.to_channel();
        Ok(NoiseModel::uniform_local(n, LocalRule::Fixed(ch)))
    }

    pub fn depolarizing(n: usize, q: f64) -> Result<Self> {
        Ok(NoiseModel::right(PauliChannel::depolarizing(n, q)?.to_channel()))
    }

    /// Over/under-rotation of the compiled single-qubit pulses.
    pub fn overrotation(n: usize, set: PulseSet, delta: f64) -> Self {
        NoiseModel::uniform_local(n, LocalRule::Pulses { set, delta })
    }

    pub fn basis_undo(n: usize) -> Self {
        NoiseModel::uniform_local(n, LocalRule::BasisUndo)
    }

    /// Independent random channels for each gate of an enumerated ensemble.
    pub fn random_table<R: Rng + ?Sized>(ensemble: &GateEnsemble, rank: usize, rng: &mut R) -> Result<Self> {
        if !ensemble.is_enumerated() {
            return Err(Error::Unsupported("random tables need an enumerated ensemble"));
        }
        let n = ensemble.n();
        let mut t = BTreeMap::new();
        for g in ensemble.gates() {
            t.insert(g.clone(), crate::channel::random_cptp(n, rank, rng)?);
        }
        NoiseModel::table(n, t)
    }

    /// Independent random Pauli channels with total error probability below `max_error`.
    pub fn random_pauli_table<R: Rng + ?Sized>(ensemble: &GateEnsemble, max_error: f64, rng: &mut R) -> Result<Self> {
        if !ensemble.is_enumerated() {
            return Err(Error::Unsupported("random tables need an enumerated ensemble"));
        }
        let n = ensemble.n();
        let dd = 1usize << (2 * n);
        let mut t = BTreeMap::new();
        for g in ensemble.gates() {
            let err = max_error * rng.random::<f64>();
            let mut w: Vec<f64> = (0..dd).map(|i| if i == 0 { 0.0 } else { rng.random::<f64>() }).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x *= err / s);
            w[0] = 1.0 - err;
            t.insert(g.clone(), PauliChannel::from_probs(n, w)?.to_channel());
        }
        NoiseModel::table(n, t)
    }

    pub fn with_mixing(mut self, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter { name: "mixing", value: eps });
        }
        self.mixing = eps;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn mixing(&self) -> f64 {
        self.mixing
    }

    pub fn is_noiseless(&self) -> bool {
        matches!(self.kind, NoiseKind::Noiseless) || self.mixing == 0.0
    }

    /// True when Λ(g) factorises over qubits for product gates.
    pub fn is_local(&self) -> bool {
        matches!(self.kind, NoiseKind::Noiseless | NoiseKind::Local(_))
    }

    /// True when every Λ(g) is a Pauli channel.
    pub fn is_pauli(&self) -> bool {
        match &self.kind {
            NoiseKind::Noiseless => true,
            NoiseKind::Right(c) | NoiseKind::Left(c) => c.is_pauli_diagonal(1e-13),
            NoiseKind::Local(rules) => rules.iter().all(|r| r.is_pauli()),
            NoiseKind::Table(t) => t.values().all(|c| c.is_pauli_diagonal(1e-13)),
        }
    }

    /// Λ(g) before mixing with the identity.
    pub fn inner_channel(&self, g: &CliffordElement) -> Result<TransferChannel> {
        check_dims(self.n, g.n())?;
        match &self.kind {
            NoiseKind::Noiseless => Ok(TransferChannel::identity(self.n)),
            NoiseKind::Right(c) => Ok(c.clone()),
            NoiseKind::Left(c) => c.conjugate_by(g),
            NoiseKind::Local(rules) => {
                let factors = g.local_factors().ok_or(Error::Unsupported("local noise needs a product gate"))?;
                let chans: Result<Vec<TransferChannel>> =
                    rules.iter().zip(&factors).map(|(r, f)| r.channel(f)).collect();
                TransferChannel::tensor_all(&chans?)
            }
            NoiseKind::Table(t) => {
                t.get(g).cloned().ok_or(Error::Unsupported("gate missing from the noise table"))
            }
        }
    }

    /// Λ_ε(g).
    pub fn channel(&self, g: &CliffordElement) -> Result<TransferChannel> {
        Ok(self.inner_channel(g)?.mix_with_identity(self.mixing))
    }

    /// Per-qubit Λ_q(g_q) before mixing, for local models.
    pub fn local_channel(&self, qubit: usize, g: &CliffordElement) -> Result<TransferChannel> {
        match &self.kind {
            NoiseKind::Noiseless => Ok(TransferChannel::identity(1)),
            NoiseKind::Local(rules) => rules.get(qubit).ok_or(Error::DimensionMismatch { expected: self.n, found: qubit })?.channel(g),
            _ => Err(Error::Unsupported("model does not factorise over qubits")),
        }
    }

    /// ‖id − Λ_ε(g)‖⋄ = ε‖id − Λ(g)‖⋄.
    pub fn gate_distance(&self, g: &CliffordElement) -> Result<DistanceEstimate> {
        if self.is_noiseless() {
            return Ok(DistanceEstimate::exact(0.0));
        }
        Ok(self.inner_channel(g)?.distance_to_identity().scale(self.mixing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{enumerate_group, pauli_basis_gates};
    use crate::pulses::{rotation, Pulse};

    #[test]
    fn overrotation_on_three_gate_ensemble() {
        let delta = 0.21;
        let model = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
        let gates = pauli_basis_gates();
        let id = model.channel(&gates[0]).unwrap();
        assert!((id.ptm() - TransferChannel::identity(1).ptm()).camax() < 1e-14);
        let x = model.channel(&gates[1]).unwrap();
        let want = TransferChannel::from_unitary(1, &rotation(Pauli::X, delta)).unwrap();
        assert!((x.ptm() - want.ptm()).camax() < 1e-14);
        let y = model.channel(&gates[2]).unwrap();
        let want = TransferChannel::from_unitary(1, &rotation(Pauli::Y, -delta)).unwrap();
        assert!((y.ptm() - want.ptm()).camax() < 1e-14);
    }

    #[test]
    fn noisy_rows_for_the_rotation_gates() {
        // (Z|ω(g₁)Λ(g₁) = −cos δ (Y| − sin δ (Z|, (Z|ω(g₂)Λ(g₂) = cos δ (X| + sin δ (Z|
        let delta = 0.37;
        let model = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
        let z = PauliLabel::single(1, 0, Pauli::Z).index();
        let (x, y) = (PauliLabel::single(1, 0, Pauli::X).index(), PauliLabel::single(1, 0, Pauli::Y).index());
        let gates = pauli_basis_gates();
        let phi1 = TransferChannel::from_clifford(&gates[1]).unwrap().compose(&model.channel(&gates[1]).unwrap()).unwrap();
        let r1 = phi1.row(z);
        assert!((r1[y] + delta.cos()).abs() < 1e-14 && (r1[z] + delta.sin()).abs() < 1e-14);
        let phi2 = TransferChannel::from_clifford(&gates[2]).unwrap().compose(&model.channel(&gates[2]).unwrap()).unwrap();
        let r2 = phi2.row(z);
        assert!((r2[x] - delta.cos()).abs() < 1e-14 && (r2[z] - delta.sin()).abs() < 1e-14);
    }

    #[test]
    fn faulty_implementation_matches_pulse_product() {
        let delta = 0.1;
        let rule = LocalRule::Pulses { set: PulseSet::XyHalfPi, delta };
        for g in enumerate_group(1).unwrap() {
            let lam = rule.channel(g).unwrap();
            let phi = TransferChannel::from_clifford(g).unwrap().compose(&lam).unwrap();
            let word = compile(g, PulseSet::XyHalfPi).unwrap();
            let direct = TransferChannel::from_unitary(1, &word_unitary(word, Some(delta))).unwrap();
            assert!((phi.ptm() - direct.ptm()).camax() < 1e-13);
        }
        let _ = Pulse::XPlus;
    }

    #[test]
    fn basis_undo_measures_z_deterministically() {
        // φ(g) = ω(g)Λ(g) is id or ω(X); both keep the Z row up to the sign set by ω(g)†(Z).
        let z = PauliLabel::single(1, 0, Pauli::Z);
        for g in enumerate_group(1).unwrap() {
            let lam = LocalRule::BasisUndo.channel(g).unwrap();
            let phi = TransferChannel::from_clifford(g).unwrap().compose(&lam).unwrap();
            let (_, neg) = g.inverse().act(&z).unwrap();
            let want = if neg { -1.0 } else { 1.0 };
            assert!((phi.entry(&z, &z) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn left_noise_is_conjugated() {
        let lam = PauliChannel::from_probs(1, vec![0.9, 0.1, 0.0, 0.0]).unwrap().to_channel();
        let model = NoiseModel::left(lam);
        let h = CliffordElement::hadamard(1, 0);
        let c = model.channel(&h).unwrap();
        // H†·X-flip·H is a Z-flip
        let want = PauliChannel::from_probs(1, vec![0.9, 0.0, 0.1, 0.0]).unwrap().to_channel();
        assert!((c.ptm() - want.ptm()).camax() < 1e-14);
    }

    #[test]
    fn mixing_scales_distance() {
        let model = NoiseModel::basis_undo(1).with_mixing(0.25).unwrap();
        let x = Pulse::XPlus.clifford();
        let d = model.gate_distance(&x).unwrap();
        let inner = model.inner_channel(&x).unwrap().distance_to_identity();
        assert!((d.value - 0.25 * inner.value).abs() < 1e-15);
        assert!(NoiseModel::noiseless(1).with_mixing(1.5).is_err());
    }
}
