//! Pauli labels, Pauli-basis observables and density states.
//!
//! A label is a vector in F₂^{2n} stored as two bitmasks, one bit per qubit.
//! Per qubit the (z, x) pair selects 00 → I, 01 → X, 11 → Y, 10 → Z.
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! computational-basis index.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_dims, Error, Result};

/// Largest qubit count a label can carry.
pub const MAX_QUBITS: usize = 32;
/// Largest qubit count for which dense 2ⁿ×2ⁿ matrices are built.
pub const DENSE_LIMIT: usize = 10;

/// Single-qubit Pauli letter, numbered by `x + 2z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::Y];

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn x(self) -> bool {
        (self as u8) & 1 == 1
    }

    pub fn z(self) -> bool {
        (self as u8) & 2 == 2
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2×2 matrix of the letter.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }
}

/// Exponent k in σ_p σ_q = i^k σ_{p⊕q}, indexed by the `x + 2z` numbering.
const LOCAL_PHASE: [[u8; 4]; 4] = [
    [0, 0, 0, 0], // I·
    [0, 0, 3, 1], // X·I, X·X, X·Z = -iY, X·Y = iZ
    [0, 1, 0, 3], // Z·X = iY, Z·Y = -iX
    [0, 3, 1, 0], // Y·X = -iZ, Y·Z = iX
];

/// Checks the per-qubit phase table against explicit 2×2 products.
pub fn validate_sign_tables() -> Result<()> {
    let phases = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    for p in Pauli::ALL {
        for q in Pauli::ALL {
            let prod = p.matrix() * q.matrix();
            let r = Pauli::from_bits(p.x() ^ q.x(), p.z() ^ q.z());
            let k = LOCAL_PHASE[p as usize][q as usize] as usize;
            let expect = r.matrix() * phases[k];
            if (prod - expect).norm() > 1e-14 {
                return Err(Error::Unsupported("per-qubit Pauli phase table is inconsistent"));
            }
        }
    }
    Ok(())
}

/// An n-qubit Pauli label a ∈ F₂^{2n}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliLabel {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliLabel {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "label length {n} exceeds {MAX_QUBITS}");
        PauliLabel { n: n as u8, x: 0, z: 0 }
    }

    /// Builds a label from x and z masks (bit q is qubit q).
    pub fn from_masks(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        let mask = full_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::Malformed("mask has bits beyond the qubit count"));
        }
        Ok(PauliLabel { n: n as u8, x, z })
    }

    pub(crate) fn from_masks_unchecked(n: usize, x: u64, z: u64) -> Self {
        PauliLabel { n: n as u8, x, z }
    }

    /// Label with a single letter on `qubit`.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        assert!(qubit < n);
        let b = 1u64 << qubit;
        PauliLabel {
            n: n as u8,
            x: if p.x() { b } else { 0 },
            z: if p.z() { b } else { 0 },
        }
    }

    /// Diagonal label Z^z for a mask of qubits.
    pub fn diagonal(n: usize, zmask: u64) -> Self {
        PauliLabel { n: n as u8, x: 0, z: zmask }
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut l = PauliLabel::identity(letters.len());
        for (q, p) in letters.iter().enumerate() {
            l = l.with(q, *p);
        }
        l
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn with(mut self, qubit: usize, p: Pauli) -> Self {
        let b = 1u64 << qubit;
        self.x = (self.x & !b) | if p.x() { b } else { 0 };
        self.z = (self.z & !b) | if p.z() { b } else { 0 };
        self
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn count_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Index in the length-4ⁿ Pauli basis ordering (qubit 0 most significant).
    pub fn index(&self) -> usize {
        let n = self.n();
        let mut idx = 0usize;
        for q in 0..n {
            idx = idx * 4 + self.letter(q) as usize;
        }
        idx
    }

    pub fn from_index(n: usize, mut idx: usize) -> Self {
        let mut l = PauliLabel::identity(n);
        for q in (0..n).rev() {
            let d = idx % 4;
            idx /= 4;
            l = l.with(q, Pauli::ALL[d]);
        }
        l
    }

    /// All 4ⁿ labels in index order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliLabel> {
        (0..1usize << (2 * n)).map(move |i| PauliLabel::from_index(n, i))
    }

    /// The 2ⁿ diagonal labels ordered by z mask.
    pub fn all_diagonal(n: usize) -> impl Iterator<Item = PauliLabel> {
        (0..1u64 << n).map(move |z| PauliLabel::diagonal(n, z))
    }

    /// Symplectic form [a, b] ∈ F₂; `true` means the operators anticommute.
    pub fn symplectic(&self, other: &Self) -> Result<bool> {
        check_dims(self.n(), other.n())?;
        Ok(self.symplectic_unchecked(other))
    }

    pub(crate) fn symplectic_unchecked(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        Ok(!self.symplectic(other)?)
    }

    /// Label sum a ⊕ b.
    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.n(), other.n())?;
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &Self) -> Self {
        PauliLabel { n: self.n, x: self.x ^ other.x, z: self.z ^ other.z }
    }

    /// Product σ_a σ_b = i^k σ_{a⊕b}; returns (k mod 4, a⊕b).
    pub fn mul_phase(&self, other: &Self) -> (u8, Self) {
        let mut k = 0u8;
        let mut s = self.support() & other.support();
        while s != 0 {
            let q = s.trailing_zeros() as usize;
            s &= s - 1;
            k += LOCAL_PHASE[self.letter(q) as usize][other.letter(q) as usize];
        }
        (k % 4, self.add_unchecked(other))
    }

    /// Sign bit β with σ_a σ_b = (−1)^β σ_{a⊕b} for commuting labels.
    pub fn product_sign(&self, other: &Self) -> Result<bool> {
        check_dims(self.n(), other.n())?;
        let (k, _) = self.mul_phase(other);
        match k {
            0 => Ok(false),
            2 => Ok(true),
            _ => Err(Error::Anticommuting),
        }
    }

    /// Tensor product, `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n() + other.n();
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        let s = self.n();
        Ok(PauliLabel { n: n as u8, x: self.x | (other.x << s), z: self.z | (other.z << s) })
    }

    /// Restriction to the qubits in `qubits`, renumbered in order.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut l = PauliLabel::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            l = l.with(i, self.letter(q));
        }
        l
    }

    /// Dense 2ⁿ×2ⁿ matrix of σ_a.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooManyQubits { n, max: DENSE_LIMIT });
        }
        let d = 1usize << n;
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            let (row, ph) = self.apply_basis(j);
            m[(row, j)] = ph;
        }
        Ok(m)
    }

    /// σ_a|j⟩ = phase·|row⟩ for a computational basis index j.
    pub fn apply_basis(&self, j: usize) -> (usize, Complex64) {
        let n = self.n();
        let xflip = mask_to_basis(n, self.x);
        let zsel = mask_to_basis(n, self.z);
        let mut k = self.count_y() % 4;
        if (zsel & j).count_ones() % 2 == 1 {
            k = (k + 2) % 4;
        }
        (j ^ xflip, phase_of(k as u8))
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n() {
            write!(f, "{}", self.letter(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for c in s.chars() {
            let p = match c {
                'I' | 'i' | '1' | '𝟙' => Pauli::I,
                'X' | 'x' => Pauli::X,
                'Y' | 'y' => Pauli::Y,
                'Z' | 'z' => Pauli::Z,
                _ => return Err(Error::InvalidLabel(c)),
            };
            letters.push(p);
        }
        if letters.len() > MAX_QUBITS {
            return Err(Error::TooManyQubits { n: letters.len(), max: MAX_QUBITS });
        }
        Ok(PauliLabel::from_letters(&letters))
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Hilbert-space dimension 2ⁿ as a float.
pub fn dimension(n: usize) -> f64 {
    (1u64 << n) as f64
}


/// Converts a per-qubit mask into the matching computational-basis bit pattern.
pub fn mask_to_basis(n: usize, mask: u64) -> usize {
    let mut out = 0usize;
    for q in 0..n {
        if (mask >> q) & 1 == 1 {
            out |= 1 << (n - 1 - q);
        }
    }
    out
}

/// Inverse of [`mask_to_basis`].
pub fn basis_to_mask(n: usize, idx: usize) -> u64 {
    let mut out = 0u64;
    for q in 0..n {
        if (idx >> (n - 1 - q)) & 1 == 1 {
            out |= 1 << q;
        }
    }
    out
}

pub(crate) fn phase_of(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Kronecker product of complex matrices, left factor on the leading qubits.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Hermitian observable O = Σ c_a σ_a stored sparsely.
///
/// Normalised-basis components are (σ̂_a|O) = √d·c_a, so the stabilizer norm
/// (1/d)Σ|(σ_a|O)| reduces to Σ|c_a|.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliObservable {
    n: usize,
    coeffs: BTreeMap<PauliLabel, f64>,
}

impl PauliObservable {
    pub fn zero(n: usize) -> Self {
        PauliObservable { n, coeffs: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        PauliObservable::pauli(PauliLabel::identity(n), 1.0)
    }

    pub fn pauli(label: PauliLabel, coeff: f64) -> Self {
        let mut o = PauliObservable::zero(label.n());
        o.add_term(label, coeff).expect("label matches");
        o
    }

    pub fn from_terms<I: IntoIterator<Item = (PauliLabel, f64)>>(n: usize, terms: I) -> Result<Self> {
        let mut o = PauliObservable::zero(n);
        for (l, c) in terms {
            if !c.is_finite() {
                return Err(Error::InvalidParameter { name: "coefficient", value: c });
            }
            o.add_term(l, c)?;
        }
        Ok(o)
    }

    pub fn add_term(&mut self, label: PauliLabel, coeff: f64) -> Result<()> {
        check_dims(self.n, label.n())?;
        let e = self.coeffs.entry(label).or_insert(0.0);
        *e += coeff;
        if *e == 0.0 {
            self.coeffs.remove(&label);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> f64 {
        dimension(self.n)
    }

    /// Coefficient c_a of σ_a.
    pub fn coeff(&self, label: &PauliLabel) -> f64 {
        self.coeffs.get(label).copied().unwrap_or(0.0)
    }

    /// Component (σ̂_a|O) in the normalised Pauli basis.
    pub fn component(&self, label: &PauliLabel) -> f64 {
        self.coeff(label) * self.dim().sqrt()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliLabel, &f64)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn trace(&self) -> f64 {
        self.coeff(&PauliLabel::identity(self.n)) * self.dim()
    }

    /// Stabilizer norm 𝒟(O).
    pub fn stabilizer_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Hilbert–Schmidt norm √Tr(O²).
    pub fn hs_norm(&self) -> f64 {
        let s: f64 = self.coeffs.values().map(|c| c * c).sum();
        (self.dim() * s).sqrt()
    }

    /// Operator norm through a dense Hermitian eigensolve.
    pub fn spectral_norm(&self) -> Result<f64> {
        let m = self.to_dense()?;
        let ev = m.symmetric_eigenvalues();
        Ok(ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
    }

    /// O₀ = O − Tr(O)/d · 𝟙.
    pub fn traceless(&self) -> Self {
        let mut o = self.clone();
        o.coeffs.remove(&PauliLabel::identity(self.n));
        o
    }

    /// Union of the supports of all terms.
    pub fn support(&self) -> u64 {
        self.coeffs.keys().fold(0, |acc, l| acc | l.support())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut o = PauliObservable::zero(self.n);
        for (l, c) in &self.coeffs {
            o.add_term(*l, c * s).expect("same n");
        }
        o
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.n, other.n)?;
        let mut o = self.clone();
        for (l, c) in &other.coeffs {
            o.add_term(*l, *c)?;
        }
        Ok(o)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        let mut o = PauliObservable::zero(n);
        for (la, ca) in &self.coeffs {
            for (lb, cb) in &other.coeffs {
                o.add_term(la.tensor(lb)?, ca * cb)?;
            }
        }
        Ok(o)
    }

    /// Restriction to `qubits`; fails unless every term is the identity elsewhere.
    pub fn restrict(&self, qubits: &[usize]) -> Result<Self> {
        let keep = qubits.iter().fold(0u64, |m, q| m | (1 << q));
        let mut o = PauliObservable::zero(qubits.len());
        for (l, c) in &self.coeffs {
            if l.support() & !keep != 0 {
                return Err(Error::Unsupported("observable acts outside the requested qubits"));
            }
            o.add_term(l.restrict(qubits), *c)?;
        }
        Ok(o)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::TooManyQubits { n: self.n, max: DENSE_LIMIT });
        }
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for (l, c) in &self.coeffs {
            for j in 0..d {
                let (row, ph) = l.apply_basis(j);
                m[(row, j)] += ph * *c;
            }
        }
        Ok(m)
    }

    /// Pauli decomposition of a dense Hermitian matrix; drops |c_a| below `1e-15`.
    pub fn from_dense(n: usize, m: &DMatrix<Complex64>) -> Result<Self> {
        if n > DENSE_LIMIT {
            return Err(Error::TooManyQubits { n, max: DENSE_LIMIT });
        }
        let d = 1usize << n;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
        }
        let herm = (m - m.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::NotHermitian(herm));
        }
        let mut o = PauliObservable::zero(n);
        for l in PauliLabel::all(n) {
            let t = trace_with_pauli(&l, m) / d as f64;
            if t.re.abs() > 1e-15 {
                o.add_term(l, t.re)?;
            }
        }
        Ok(o)
    }

    /// Dense vector of normalised components, indexed by label index.
    pub fn pauli_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1usize << (2 * self.n)];
        let s = self.dim().sqrt();
        for (l, c) in &self.coeffs {
            v[l.index()] = c * s;
        }
        v
    }

    /// Tr(Oρ).
    pub fn expectation(&self, state: &DensityState) -> Result<f64> {
        check_dims(self.n, state.n())?;
        let s = self.dim().sqrt();
        let mut acc = 0.0;
        for (l, c) in &self.coeffs {
            acc += c * s * state.component(l)?;
        }
        Ok(acc)
    }
}

/// Tr(σ_a M) using the one-entry-per-column structure of σ_a.
pub fn trace_with_pauli(label: &PauliLabel, m: &DMatrix<Complex64>) -> Complex64 {
    let d = m.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..d {
        // (σ_a M)_{jj} = Σ_k (σ_a)_{jk} M_{kj}; column k of σ_a has its entry at row j.
        let (row, ph) = label.apply_basis(j);
        acc += ph * m[(j, row)];
    }
    acc
}

/// Density operator, stored densely (n ≤ 10) and/or as single-qubit factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    n: usize,
    dense: Option<DMatrix<Complex64>>,
    factors: Option<Vec<DMatrix<Complex64>>>,
}

const STATE_TOL: f64 = 1e-10;

fn validate_density(m: &DMatrix<Complex64>) -> Result<()> {
    let herm = (m - m.adjoint()).camax();
    if herm > STATE_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::InvalidState(alloc::format!("trace {tr}")));
    }
    let min = m.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if min < -STATE_TOL {
        return Err(Error::InvalidState(alloc::format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

impl DensityState {
    pub fn from_matrix(n: usize, m: DMatrix<Complex64>) -> Result<Self> {
        if n > DENSE_LIMIT {
            return Err(Error::TooManyQubits { n, max: DENSE_LIMIT });
        }
        let d = 1usize << n;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
        }
        validate_density(&m)?;
        Ok(DensityState { n, dense: Some(m), factors: None })
    }

    /// Product state from single-qubit density matrices.
    pub fn product(factors: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let n = factors.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        for f in &factors {
            if f.nrows() != 2 || f.ncols() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: f.nrows() });
            }
            validate_density(f)?;
        }
        let dense = if n <= DENSE_LIMIT {
            let mut m = factors[0].clone();
            for f in &factors[1..] {
                m = kron(&m, f);
            }
            Some(m)
        } else {
            None
        };
        Ok(DensityState { n, dense, factors: Some(factors) })
    }

    pub fn pure(n: usize, ket: &[Complex64]) -> Result<Self> {
        let d = 1usize << n;
        if ket.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: ket.len() });
        }
        let norm: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(alloc::format!("ket norm² {norm}")));
        }
        let v = nalgebra::DVector::from_column_slice(ket);
        DensityState::from_matrix(n, &v * v.adjoint())
    }

    /// |0…0⟩⟨0…0|.
    pub fn zero(n: usize) -> Result<Self> {
        let mut f = DMatrix::zeros(2, 2);
        f[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityState::product(vec![f; n])
    }

    /// Single-qubit state ½(𝟙 + r·σ) from a Bloch vector (x, y, z).
    pub fn bloch(r: [f64; 3]) -> Result<Self> {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if norm > 1.0 + STATE_TOL {
            return Err(Error::InvalidState(alloc::format!("Bloch vector length {norm}")));
        }
        let m = (Pauli::I.matrix()
            + Pauli::X.matrix() * Complex64::new(r[0], 0.0)
            + Pauli::Y.matrix() * Complex64::new(r[1], 0.0)
            + Pauli::Z.matrix() * Complex64::new(r[2], 0.0))
            * Complex64::new(0.5, 0.0);
        DensityState::product(vec![m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dense(&self) -> Result<&DMatrix<Complex64>> {
        self.dense.as_ref().ok_or(Error::TooManyQubits { n: self.n, max: DENSE_LIMIT })
    }

    pub fn factors(&self) -> Option<&[DMatrix<Complex64>]> {
        self.factors.as_deref()
    }

    /// Component (σ̂_a|ρ) = Tr(σ_a ρ)/√d.
    pub fn component(&self, label: &PauliLabel) -> Result<f64> {
        check_dims(self.n, label.n())?;
        if let Some(fs) = &self.factors {
            let mut acc = 1.0;
            for (q, f) in fs.iter().enumerate() {
                let l = PauliLabel::identity(1).with(0, label.letter(q));
                acc *= trace_with_pauli(&l, f).re / core::f64::consts::SQRT_2;
            }
            return Ok(acc);
        }
        let m = self.dense()?;
        Ok(trace_with_pauli(label, m).re / dimension(self.n).sqrt())
    }

    /// Per-qubit normalised Pauli vectors of a product state.
    pub fn factor_vectors(&self) -> Option<Vec<[f64; 4]>> {
        let fs = self.factors.as_ref()?;
        Some(
            fs.iter()
                .map(|f| {
                    let mut v = [0.0; 4];
                    for p in Pauli::ALL {
                        let l = PauliLabel::identity(1).with(0, p);
                        v[p as usize] = trace_with_pauli(&l, f).re / core::f64::consts::SQRT_2;
                    }
                    v
                })
                .collect(),
        )
    }

    /// Dense normalised Pauli vector of length 4ⁿ.
    pub fn pauli_vector(&self) -> Result<Vec<f64>> {
        if self.n > 8 {
            return Err(Error::TooManyQubits { n: self.n, max: 8 });
        }
        if let Some(fv) = self.factor_vectors() {
            let mut v = vec![1.0];
            for f in fv {
                let mut next = Vec::with_capacity(v.len() * 4);
                for a in &v {
                    for b in f {
                        next.push(a * b);
                    }
                }
                v = next;
            }
            return Ok(v);
        }
        PauliLabel::all(self.n).map(|l| self.component(&l)).collect()
    }

    /// (1 − p)ρ + p·𝟙/d.
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter { name: "p", value: p });
        }
        let m = self.dense()?;
        let d = m.nrows();
        let mixed = m * Complex64::new(1.0 - p, 0.0)
            + DMatrix::<Complex64>::identity(d, d) * Complex64::new(p / d as f64, 0.0);
        DensityState::from_matrix(self.n, mixed)
    }

    pub fn as_observable(&self) -> Result<PauliObservable> {
        PauliObservable::from_dense(self.n, self.dense()?)
    }
}

/// Named single-qubit states used by the scenarios.
pub mod states {
    use super::*;

    /// Normalised Pauli components of ρ_c on (𝟙, X, Y, Z): (1, √(1−2c²), c, c)/√2.
    pub fn rho_c_components(c: f64) -> Result<[f64; 4]> {
        if !(0.0..=1.0 / 3f64.sqrt() + 1e-12).contains(&c) {
            return Err(Error::InvalidParameter { name: "c", value: c });
        }
        let s = (1.0 - 2.0 * c * c).max(0.0).sqrt();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        Ok([r, r * s, r * c, r * c])
    }

    /// The pure state ρ_c with Bloch vector (√(1−2c²), c, c).
    pub fn rho_c(c: f64) -> Result<DensityState> {
        let comps = rho_c_components(c)?;
        let s = core::f64::consts::SQRT_2;
        DensityState::bloch([comps[1] * s, comps[2] * s, comps[3] * s])
    }

    /// |H⟩⟨H| with Bloch vector (1/√2, 1/√2, 0).
    pub fn magic_h() -> DensityState {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        DensityState::bloch([r, r, 0.0]).expect("unit Bloch vector")
    }

    pub fn magic_h_observable() -> PauliObservable {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        PauliObservable::from_terms(
            1,
            [
                (PauliLabel::identity(1), 0.5),
                (PauliLabel::single(1, 0, Pauli::X), 0.5 * r),
                (PauliLabel::single(1, 0, Pauli::Y), 0.5 * r),
            ],
        )
        .expect("valid terms")
    }

    pub fn plus() -> DensityState {
        DensityState::bloch([1.0, 0.0, 0.0]).expect("unit Bloch vector")
    }

    /// |+⟩⟨+| = (𝟙 + X)/2.
    pub fn plus_observable() -> PauliObservable {
        PauliObservable::from_terms(
            1,
            [(PauliLabel::identity(1), 0.5), (PauliLabel::single(1, 0, Pauli::X), 0.5)],
        )
        .expect("valid terms")
    }

    /// n-fold tensor power of a single-qubit observable.
    pub fn tensor_power(o: &PauliObservable, n: usize) -> Result<PauliObservable> {
        let mut acc = o.clone();
        for _ in 1..n {
            acc = acc.tensor(o)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::states::*;
    use super::*;
    use proptest::prelude::*;

    fn label(s: &str) -> PauliLabel {
        s.parse().unwrap()
    }

    #[test]
    fn sign_table_matches_matrices() {
        validate_sign_tables().unwrap();
    }

    #[test]
    fn xx_times_yy_is_minus_zz() {
        let (k, c) = label("XX").mul_phase(&label("YY"));
        assert_eq!(c, label("ZZ"));
        assert_eq!(k, 2);
        assert!(label("XX").product_sign(&label("YY")).unwrap());
        assert_eq!(label("X").product_sign(&label("Y")), Err(Error::Anticommuting));
    }

    #[test]
    fn diagonal_labels_have_no_x_bits() {
        assert!(label("ZIZ").is_diagonal());
        assert!(!label("ZY").is_diagonal());
        assert_eq!(PauliLabel::all_diagonal(2).count(), 4);
    }

    #[test]
    fn index_round_trip_and_order() {
        for i in 0..256 {
            assert_eq!(PauliLabel::from_index(4, i).index(), i);
        }
        assert_eq!(label("XI").index(), 4);
        assert_eq!(label("IZ").index(), 2);
    }

    #[test]
    fn dense_product_oracle_exhaustive_two_qubits() {
        for a in PauliLabel::all(2) {
            for b in PauliLabel::all(2) {
                let prod = a.to_dense().unwrap() * b.to_dense().unwrap();
                let (k, c) = a.mul_phase(&b);
                let expect = c.to_dense().unwrap() * phase_of(k);
                assert!((prod.clone() - expect).camax() < 1e-14);
                let comm = &prod - b.to_dense().unwrap() * a.to_dense().unwrap();
                assert_eq!(comm.camax() < 1e-14, a.commutes(&b).unwrap());
            }
        }
    }

    #[test]
    fn dense_pauli_matches_kronecker_of_letters() {
        let l = label("YXZ");
        let m = kron(&kron(&Pauli::Y.matrix(), &Pauli::X.matrix()), &Pauli::Z.matrix());
        assert!((l.to_dense().unwrap() - m).camax() < 1e-15);
    }

    #[test]
    fn stabilizer_norm_of_magic_state() {
        let h = magic_h_observable();
        assert!((h.stabilizer_norm() - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-15);
        let dense = magic_h().as_observable().unwrap();
        assert!((dense.stabilizer_norm() - h.stabilizer_norm()).abs() < 1e-14);
    }

    #[test]
    fn stabilizer_norm_of_rho_c() {
        for &c in &[0.0, 0.2, 0.4, 1.0 / 3f64.sqrt()] {
            let o = rho_c(c).unwrap().as_observable().unwrap();
            let expect = (1.0 + 2.0 * c + (1.0 - 2.0 * c * c).sqrt()) / 2.0;
            assert!((o.stabilizer_norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_of_pauli_and_tensor() {
        let z = PauliObservable::pauli(label("Z"), 1.0);
        assert_eq!(z.stabilizer_norm(), 1.0);
        assert!((z.hs_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert!((z.spectral_norm().unwrap() - 1.0).abs() < 1e-12);
        let h2 = tensor_power(&magic_h_observable(), 2).unwrap();
        assert!((h2.spectral_norm().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_bad_states() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(PauliObservable::from_dense(1, &m), Err(Error::NotHermitian(_))));
        let mut bad = DMatrix::<Complex64>::identity(2, 2);
        bad[(1, 1)] = Complex64::new(-0.5, 0.0);
        bad[(0, 0)] = Complex64::new(1.5, 0.0);
        assert!(DensityState::from_matrix(1, bad).is_err());
        assert!(label("XX").symplectic(&label("X")).is_err());
    }

    #[test]
    fn product_state_components_match_dense() {
        let s = DensityState::product(vec![
            magic_h().dense().unwrap().clone(),
            rho_c(0.3).unwrap().dense().unwrap().clone(),
        ])
        .unwrap();
        let dense = DensityState::from_matrix(2, s.dense().unwrap().clone()).unwrap();
        for l in PauliLabel::all(2) {
            assert!((s.component(&l).unwrap() - dense.component(&l).unwrap()).abs() < 1e-14);
        }
    }

    fn arb_label(n: usize) -> impl Strategy<Value = PauliLabel> {
        (0..1usize << (2 * n)).prop_map(move |i| PauliLabel::from_index(n, i))
    }

    fn arb_obs(n: usize) -> impl Strategy<Value = PauliObservable> {
        proptest::collection::vec((arb_label(n), -1.0f64..1.0), 1..6)
            .prop_map(move |t| PauliObservable::from_terms(n, t).unwrap())
    }

    proptest! {
        #[test]
        fn symplectic_form_is_symmetric(a in arb_label(3), b in arb_label(3)) {
            prop_assert_eq!(a.symplectic(&b).unwrap(), b.symplectic(&a).unwrap());
            prop_assert!(!a.symplectic(&a).unwrap());
        }

        #[test]
        fn stabilizer_norm_between_hs_bounds(o in arb_obs(2)) {
            let d = 4.0f64;
            let hs = o.hs_norm();
            prop_assert!(o.stabilizer_norm() <= d.sqrt() * hs + 1e-12);
            prop_assert!(hs / d.sqrt() <= o.stabilizer_norm() + 1e-12);
        }

        #[test]
        fn stabilizer_norm_is_multiplicative(a in arb_obs(1), b in arb_obs(2)) {
            let t = a.tensor(&b).unwrap();
            prop_assert!((t.stabilizer_norm() - a.stabilizer_norm() * b.stabilizer_norm()).abs() < 1e-12);
        }

        #[test]
        fn dense_round_trip(o in arb_obs(2)) {
            let back = PauliObservable::from_dense(2, &o.to_dense().unwrap()).unwrap();
            for l in PauliLabel::all(2) {
                prop_assert!((back.coeff(&l) - o.coeff(&l)).abs() < 1e-13);
            }
        }
    }
}
