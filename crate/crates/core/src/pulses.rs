//! Single-qubit rotation pulses and shortest compilations of Cl₁.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use once_cell::race::OnceBox;

use crate::clifford::{enumerate_group, CliffordElement};
use crate::error::{check_dims, Error, Result};
use crate::pauli::Pauli;

/// A ±π/2 rotation e^{±iπσ/4} about a Bloch axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pulse {
    XPlus,
    YPlus,
    XMinus,
    YMinus,
    ZPlus,
}

impl Pulse {
    pub fn axis(self) -> Pauli {
        match self {
            Pulse::XPlus | Pulse::XMinus => Pauli::X,
            Pulse::YPlus | Pulse::YMinus => Pauli::Y,
            Pulse::ZPlus => Pauli::Z,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Pulse::XMinus | Pulse::YMinus => -1.0,
            _ => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pulse::XPlus => "X+90",
            Pulse::YPlus => "Y+90",
            Pulse::XMinus => "X-90",
            Pulse::YMinus => "Y-90",
            Pulse::ZPlus => "Z+90",
        }
    }

    /// e^{iθσ/2} for the pulse axis σ.
    pub fn rotation(self, theta: f64) -> DMatrix<Complex64> {
        rotation(self.axis(), theta)
    }

    pub fn unitary(self) -> DMatrix<Complex64> {
        self.rotation(self.sign() * FRAC_PI_2)
    }

    /// Faulty pulse: X axes over-rotate by δ, Y axes under-rotate by δ, Z is exact.
    pub fn faulty_unitary(self, delta: f64) -> DMatrix<Complex64> {
        let err = match self.axis() {
            Pauli::X => delta,
            Pauli::Y => -delta,
            _ => 0.0,
        };
        self.rotation(self.sign() * (FRAC_PI_2 + err))
    }

    pub fn clifford(self) -> CliffordElement {
        CliffordElement::from_unitary(1, &self.unitary()).expect("π/2 rotations are Clifford")
    }
}

/// e^{iθσ/2} = cos(θ/2)𝟙 + i sin(θ/2)σ.
pub fn rotation(axis: Pauli, theta: f64) -> DMatrix<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Pauli::I.matrix() * Complex64::new(c, 0.0) + axis.matrix() * Complex64::new(0.0, s)
}

/// Available pulse vocabularies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PulseSet {
    /// {X₊₉₀, Y₊₉₀, X₋₉₀, Y₋₉₀}.
    XyHalfPi,
    /// {e^{iπZ/4}, e^{iπX/4}, e^{iπY/4}}.
    BlochRotations,
}

impl PulseSet {
    pub fn pulses(self) -> &'static [Pulse] {
        match self {
            PulseSet::XyHalfPi => &[Pulse::XPlus, Pulse::YPlus, Pulse::XMinus, Pulse::YMinus],
            PulseSet::BlochRotations => &[Pulse::ZPlus, Pulse::XPlus, Pulse::YPlus],
        }
    }
}

/// Shortest pulse word (first pulse applied first) for every element of Cl₁.
pub type CompilationTable = BTreeMap<CliffordElement, Vec<Pulse>>;

/// Breadth-first search over pulse words; ties go to the earlier pulse in the set.
pub fn search_compilations(set: PulseSet) -> CompilationTable {
    let mut table = BTreeMap::new();
    let id = CliffordElement::identity(1);
    table.insert(id.clone(), Vec::new());
    let mut queue = VecDeque::from([id]);
    let gens: Vec<(Pulse, CliffordElement)> = set.pulses().iter().map(|p| (*p, p.clifford())).collect();
    while let Some(g) = queue.pop_front() {
        let word = table[&g].clone();
        for (p, c) in &gens {
            let next = c.compose(&g).expect("single qubit");
            if !table.contains_key(&next) {
                let mut w = word.clone();
                w.push(*p);
                table.insert(next.clone(), w);
                queue.push_back(next);
            }
        }
    }
    table
}

use Pulse::{XMinus as Xm, XPlus as Xp, YMinus as Ym, YPlus as Yp};

/// Shortest {X±90, Y±90} words for the 24 single-qubit Cliffords.
/// Z-axis π needs four pulses; every other element needs at most three.
pub const XY_WORDS: [&[Pulse]; 24] = [
    &[],
    &[Xp],
    &[Yp],
    &[Xm],
    &[Ym],
    &[Xp, Xp],
    &[Xp, Yp],
    &[Xp, Ym],
    &[Yp, Xp],
    &[Yp, Yp],
    &[Yp, Xm],
    &[Xm, Yp],
    &[Xm, Ym],
    &[Ym, Xp],
    &[Ym, Xm],
    &[Xp, Xp, Yp],
    &[Xp, Xp, Ym],
    &[Xp, Yp, Xp],
    &[Xp, Yp, Yp],
    &[Xp, Yp, Xm],
    &[Xp, Ym, Xp],
    &[Xp, Ym, Xm],
    &[Yp, Yp, Xp],
    &[Xp, Xp, Yp, Yp],
];

fn word_clifford(word: &[Pulse]) -> CliffordElement {
    word.iter().fold(CliffordElement::identity(1), |g, p| p.clifford().compose(&g).expect("single qubit"))
}

static XY_TABLE: OnceBox<CompilationTable> = OnceBox::new();
static BLOCH_TABLE: OnceBox<CompilationTable> = OnceBox::new();

/// Compilation table for a pulse set; the X/Y table comes from [`XY_WORDS`].
pub fn compilation_table(set: PulseSet) -> &'static CompilationTable {
    match set {
        PulseSet::XyHalfPi => XY_TABLE.get_or_init(|| {
            Box::new(XY_WORDS.iter().map(|w| (word_clifford(w), w.to_vec())).collect())
        }),
        PulseSet::BlochRotations => BLOCH_TABLE.get_or_init(|| Box::new(search_compilations(PulseSet::BlochRotations))),
    }
}

/// Checks that [`XY_WORDS`] names 24 distinct elements with minimal word lengths.
pub fn self_check() -> Result<()> {
    let table = compilation_table(PulseSet::XyHalfPi);
    if table.len() != 24 {
        return Err(Error::NotClifford("pulse table does not cover Cl₁"));
    }
    let searched = search_compilations(PulseSet::XyHalfPi);
    for (g, w) in table {
        if searched.get(g).map(|s| s.len()) != Some(w.len()) {
            return Err(Error::NotClifford("pulse table word is not minimal"));
        }
    }
    Ok(())
}

/// Pulse word implementing a single-qubit Clifford.
pub fn compile(g: &CliffordElement, set: PulseSet) -> Result<&'static [Pulse]> {
    check_dims(1, g.n())?;
    compilation_table(set)
        .get(g)
        .map(|w| w.as_slice())
        .ok_or(Error::NotClifford("element missing from the compilation table"))
}

/// Dense unitary of a word, first pulse applied first.
pub fn word_unitary(word: &[Pulse], faulty: Option<f64>) -> DMatrix<Complex64> {
    let mut u = DMatrix::<Complex64>::identity(2, 2);
    for p in word {
        let step = match faulty {
            Some(delta) => p.faulty_unitary(delta),
            None => p.unitary(),
        };
        u = step * u;
    }
    u
}

/// Mean word length over Cl₁.
pub fn mean_length(set: PulseSet) -> f64 {
    let t = compilation_table(set);
    let group = enumerate_group(1).expect("n = 1");
    group.iter().map(|g| t[g].len() as f64).sum::<f64>() / group.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{PauliLabel, PauliObservable};

    #[test]
    fn xy_table_is_minimal_and_complete() {
        self_check().unwrap();
        let t = compilation_table(PulseSet::XyHalfPi);
        assert_eq!(t.values().filter(|w| w.len() > 3).count(), 1);
        let z = CliffordElement::pauli(&PauliLabel::single(1, 0, Pauli::Z));
        assert_eq!(t[&z].len(), 4);
        assert!((mean_length(PulseSet::XyHalfPi) - 52.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn words_reproduce_their_elements() {
        for set in [PulseSet::XyHalfPi, PulseSet::BlochRotations] {
            for (g, w) in compilation_table(set) {
                let u = word_unitary(w, None);
                assert_eq!(&CliffordElement::from_unitary(1, &u).unwrap(), g);
            }
            assert_eq!(compilation_table(set).len(), 24);
        }
    }

    #[test]
    fn hadamard_needs_three_xy_pulses() {
        let w = compile(&CliffordElement::hadamard(1, 0), PulseSet::XyHalfPi).unwrap();
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn x_plus_maps_z_to_minus_y() {
        let g = Pulse::XPlus.clifford();
        let z = PauliLabel::single(1, 0, Pauli::Z);
        // (Z|ω(g) = −(Y| means ω(g)†(Z) = −Y
        let (img, neg) = g.act_adjoint(&z).unwrap();
        assert_eq!(img, PauliLabel::single(1, 0, Pauli::Y));
        assert!(neg);
        let y90 = Pulse::YPlus.clifford();
        assert_eq!(y90.act_adjoint(&z).unwrap(), (PauliLabel::single(1, 0, Pauli::X), false));
    }

    #[test]
    fn faulty_pulse_is_ideal_times_residual_rotation() {
        let d = 0.13;
        let over = Pulse::XPlus.unitary() * rotation(Pauli::X, d);
        assert!((Pulse::XPlus.faulty_unitary(d) - over).camax() < 1e-14);
        let under = Pulse::YPlus.unitary() * rotation(Pauli::Y, -d);
        assert!((Pulse::YPlus.faulty_unitary(d) - under).camax() < 1e-14);
        let o = PauliObservable::from_dense(1, &(rotation(Pauli::X, 0.3) * Pauli::Z.matrix() * rotation(Pauli::X, -0.3)))
            .unwrap();
        assert!((o.coeff(&PauliLabel::single(1, 0, Pauli::Z)) - 0.3f64.cos()).abs() < 1e-14);
    }
}
