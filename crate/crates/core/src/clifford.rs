//! Clifford tableaux, group enumeration, uniform sampling and gate ensembles.
//!
//! An element is stored by the images of the generators X₀, Z₀, X₁, Z₁, …
//! under conjugation σ ↦ gσg†, each a signed Pauli label.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use once_cell::race::OnceBox;
use rand::Rng;

use crate::error::{check_dims, Error, Result};
use crate::pauli::{basis_to_mask, full_mask, trace_with_pauli, PauliLabel, DENSE_LIMIT, MAX_QUBITS};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CliffordElement {
    n: u8,
    images: Vec<PauliLabel>,
    signs: u64,
}

fn interleave(l: &PauliLabel) -> u64 {
    let mut v = 0u64;
    for q in 0..l.n() {
        v |= ((l.x_mask() >> q) & 1) << (2 * q);
        v |= ((l.z_mask() >> q) & 1) << (2 * q + 1);
    }
    v
}

fn deinterleave(n: usize, v: u64) -> PauliLabel {
    let (mut x, mut z) = (0u64, 0u64);
    for q in 0..n {
        x |= ((v >> (2 * q)) & 1) << q;
        z |= ((v >> (2 * q + 1)) & 1) << q;
    }
    PauliLabel::from_masks_unchecked(n, x, z)
}

fn generator(n: usize, j: usize) -> PauliLabel {
    let q = j / 2;
    if j.is_multiple_of(2) {
        PauliLabel::from_masks_unchecked(n, 1 << q, 0)
    } else {
        PauliLabel::from_masks_unchecked(n, 0, 1 << q)
    }
}

impl CliffordElement {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS / 2, "tableau supports at most {} qubits", MAX_QUBITS / 2);
        CliffordElement { n: n as u8, images: (0..2 * n).map(|j| generator(n, j)).collect(), signs: 0 }
    }

    /// Builds an element from generator images; checks the symplectic relations.
    pub fn from_images(n: usize, images: Vec<PauliLabel>, signs: u64) -> Result<Self> {
        if n > MAX_QUBITS / 2 {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS / 2 });
        }
        check_dims(2 * n, images.len())?;
        for l in &images {
            check_dims(n, l.n())?;
        }
        if signs & !full_mask(2 * n) != 0 {
            return Err(Error::Malformed("sign bits beyond the generator count"));
        }
        for i in 0..2 * n {
            for j in 0..2 * n {
                let want = i / 2 == j / 2 && i != j;
                if images[i].symplectic_unchecked(&images[j]) != want {
                    return Err(Error::NotClifford("generator images break the commutation relations"));
                }
            }
        }
        Ok(CliffordElement { n: n as u8, images, signs })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// Image of generator j (X_q for j = 2q, Z_q for j = 2q+1) with its sign bit.
    pub fn generator_image(&self, j: usize) -> (PauliLabel, bool) {
        (self.images[j], (self.signs >> j) & 1 == 1)
    }

    pub fn hadamard(n: usize, q: usize) -> Self {
        let mut g = CliffordElement::identity(n);
        g.images.swap(2 * q, 2 * q + 1);
        g
    }

    /// Phase gate S: X ↦ Y, Z ↦ Z.
    pub fn phase(n: usize, q: usize) -> Self {
        let mut g = CliffordElement::identity(n);
        g.images[2 * q] = PauliLabel::from_masks_unchecked(n, 1 << q, 1 << q);
        g
    }

    pub fn cnot(n: usize, control: usize, target: usize) -> Self {
        assert!(control != target && control < n && target < n);
        let mut g = CliffordElement::identity(n);
        g.images[2 * control] = PauliLabel::from_masks_unchecked(n, (1 << control) | (1 << target), 0);
        g.images[2 * target + 1] = PauliLabel::from_masks_unchecked(n, 0, (1 << control) | (1 << target));
        g
    }

    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut g = CliffordElement::identity(n);
        g.images.swap(2 * a, 2 * b);
        g.images.swap(2 * a + 1, 2 * b + 1);
        g
    }

    /// Conjugation by the Pauli operator σ_p.
    pub fn pauli(p: &PauliLabel) -> Self {
        let n = p.n();
        let mut g = CliffordElement::identity(n);
        for j in 0..2 * n {
            if p.symplectic_unchecked(&generator(n, j)) {
                g.signs |= 1 << j;
            }
        }
        g
    }

    /// ω(g)(σ_a) = (−1)^φ σ_{Ξ(a)}; returns (Ξ(a), φ).
    pub fn act(&self, a: &PauliLabel) -> Result<(PauliLabel, bool)> {
        check_dims(self.n(), a.n())?;
        Ok(self.act_unchecked(a))
    }

    pub(crate) fn act_unchecked(&self, a: &PauliLabel) -> (PauliLabel, bool) {
        let n = self.n();
        let mut k: u32 = a.count_y() % 4;
        let mut acc = PauliLabel::identity(n);
        let mut s = a.support();
        while s != 0 {
            let q = s.trailing_zeros() as usize;
            s &= s - 1;
            for (bit, j) in [((a.x_mask() >> q) & 1, 2 * q), ((a.z_mask() >> q) & 1, 2 * q + 1)] {
                if bit == 1 {
                    let (kk, next) = acc.mul_phase(&self.images[j]);
                    acc = next;
                    k += kk as u32 + 2 * ((self.signs >> j) & 1) as u32;
                }
            }
        }
        debug_assert!(k.is_multiple_of(2), "Clifford image must be Hermitian");
        (acc, k % 4 == 2)
    }

    /// The product g∘h (h applied first).
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        check_dims(self.n(), inner.n())?;
        let mut images = Vec::with_capacity(2 * self.n());
        let mut signs = 0u64;
        for j in 0..2 * self.n() {
            let (l, s) = self.act_unchecked(&inner.images[j]);
            images.push(l);
            if s ^ ((inner.signs >> j) & 1 == 1) {
                signs |= 1 << j;
            }
        }
        Ok(CliffordElement { n: self.n, images, signs })
    }

    pub fn inverse(&self) -> Self {
        let n = self.n();
        let rows: Vec<u64> = self.images.iter().map(interleave).collect();
        let partner = |j: usize| j ^ 1;
        let mut images = Vec::with_capacity(2 * n);
        let mut signs = 0u64;
        for k in 0..2 * n {
            let mut u = 0u64;
            for j in 0..2 * n {
                if (rows[partner(j)] >> partner(k)) & 1 == 1 {
                    u |= 1 << j;
                }
            }
            let c = deinterleave(n, u);
            let (img, neg) = self.act_unchecked(&c);
            debug_assert_eq!(img, generator(n, k));
            images.push(c);
            if neg {
                signs |= 1 << k;
            }
        }
        CliffordElement { n: self.n, images, signs }
    }

    /// ω(g)†(σ_a) = ω(g⁻¹)(σ_a).
    pub fn act_adjoint(&self, a: &PauliLabel) -> Result<(PauliLabel, bool)> {
        self.inverse().act(a)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n() + other.n();
        if n > MAX_QUBITS / 2 {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS / 2 });
        }
        let pad = |l: &PauliLabel, shift: usize| {
            PauliLabel::from_masks_unchecked(n, l.x_mask() << shift, l.z_mask() << shift)
        };
        let mut images: Vec<PauliLabel> = self.images.iter().map(|l| pad(l, 0)).collect();
        images.extend(other.images.iter().map(|l| pad(l, self.n())));
        Ok(CliffordElement { n: n as u8, images, signs: self.signs | (other.signs << (2 * self.n())) })
    }

    pub fn tensor_all(factors: &[CliffordElement]) -> Result<Self> {
        let mut acc = factors.first().ok_or(Error::Malformed("empty factor list"))?.clone();
        for f in &factors[1..] {
            acc = acc.tensor(f)?;
        }
        Ok(acc)
    }

    /// Splits a product of single-qubit Cliffords into its factors.
    pub fn local_factors(&self) -> Option<Vec<CliffordElement>> {
        let n = self.n();
        let mut out = Vec::with_capacity(n);
        for q in 0..n {
            let mut imgs = Vec::with_capacity(2);
            for j in [2 * q, 2 * q + 1] {
                let l = self.images[j];
                if l.support() & !(1 << q) != 0 {
                    return None;
                }
                imgs.push(PauliLabel::from_masks_unchecked(1, (l.x_mask() >> q) & 1, (l.z_mask() >> q) & 1));
            }
            out.push(CliffordElement { n: 1, images: imgs, signs: (self.signs >> (2 * q)) & 3 });
        }
        Some(out)
    }

    /// Signed permutation of Pauli-basis indices: column a ↦ (Ξ(a), φ).
    pub fn signed_permutation(&self) -> Result<Vec<(usize, bool)>> {
        let n = self.n();
        if n > 8 {
            return Err(Error::TooManyQubits { n, max: 8 });
        }
        Ok(PauliLabel::all(n)
            .map(|a| {
                let (l, s) = self.act_unchecked(&a);
                (l.index(), s)
            })
            .collect())
    }

    /// Pauli transfer matrix of ω(g) in the normalised basis.
    pub fn ptm(&self) -> Result<DMatrix<f64>> {
        let perm = self.signed_permutation()?;
        let dd = perm.len();
        let mut m = DMatrix::zeros(dd, dd);
        for (col, (row, neg)) in perm.into_iter().enumerate() {
            m[(row, col)] = if neg { -1.0 } else { 1.0 };
        }
        Ok(m)
    }

    /// Reads off the tableau of a dense Clifford unitary.
    pub fn from_unitary(n: usize, u: &DMatrix<Complex64>) -> Result<Self> {
        if n > DENSE_LIMIT.min(6) {
            return Err(Error::TooManyQubits { n, max: 6 });
        }
        let d = 1usize << n;
        check_dims(d, u.nrows())?;
        let dev = (u * u.adjoint() - DMatrix::<Complex64>::identity(d, d)).camax();
        if dev > 1e-9 {
            return Err(Error::NotUnitary(dev));
        }
        let mut images = Vec::with_capacity(2 * n);
        let mut signs = 0u64;
        for j in 0..2 * n {
            let p = generator(n, j).to_dense()?;
            let m = u * p * u.adjoint();
            let col = (0..d).max_by(|&a, &b| m[(a, 0)].norm().total_cmp(&m[(b, 0)].norm())).unwrap_or(0);
            let x = basis_to_mask(n, col);
            let mut found = None;
            for z in 0..1u64 << n {
                let c = PauliLabel::from_masks_unchecked(n, x, z);
                let t = trace_with_pauli(&c, &m) / d as f64;
                if (t.norm() - 1.0).abs() < 1e-9 {
                    if t.im.abs() > 1e-9 {
                        return Err(Error::NotClifford("image has an imaginary phase"));
                    }
                    found = Some((c, t.re < 0.0));
                    break;
                }
            }
            let (c, neg) = found.ok_or(Error::NotClifford("generator image is not a Pauli operator"))?;
            images.push(c);
            if neg {
                signs |= 1 << j;
            }
        }
        CliffordElement::from_images(n, images, signs)
    }

    /// Fixed-width encoding: per generator, x mask and z mask as little-endian
    /// ⌈n/8⌉-byte words followed by one sign byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.n();
        let w = n.div_ceil(8).max(1);
        let mut out = Vec::with_capacity(2 * n * (2 * w + 1));
        for (j, l) in self.images.iter().enumerate() {
            out.extend_from_slice(&l.x_mask().to_le_bytes()[..w]);
            out.extend_from_slice(&l.z_mask().to_le_bytes()[..w]);
            out.push(((self.signs >> j) & 1) as u8);
        }
        out
    }

    pub fn from_bytes(n: usize, bytes: &[u8]) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS / 2 {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS / 2 });
        }
        let w = n.div_ceil(8).max(1);
        if bytes.len() != 2 * n * (2 * w + 1) {
            return Err(Error::Malformed("tableau byte length does not match the qubit count"));
        }
        let mut images = Vec::with_capacity(2 * n);
        let mut signs = 0u64;
        for (j, chunk) in bytes.chunks(2 * w + 1).enumerate() {
            let mut xb = [0u8; 8];
            let mut zb = [0u8; 8];
            xb[..w].copy_from_slice(&chunk[..w]);
            zb[..w].copy_from_slice(&chunk[w..2 * w]);
            images.push(PauliLabel::from_masks(n, u64::from_le_bytes(xb), u64::from_le_bytes(zb))?);
            match chunk[2 * w] {
                0 => {}
                1 => signs |= 1 << j,
                _ => return Err(Error::Malformed("sign byte must be 0 or 1")),
            }
        }
        CliffordElement::from_images(n, images, signs)
    }
}

/// |Cl_n| modulo global phase: 2^{n²+2n} ∏_{i=1}^n (4^i − 1).
pub fn clifford_group_order(n: usize) -> u128 {
    let mut acc: u128 = 1u128 << (n * n + 2 * n);
    for i in 1..=n {
        acc *= (1u128 << (2 * i)) - 1;
    }
    acc
}

fn closure(n: usize) -> Vec<CliffordElement> {
    let mut gens = Vec::new();
    for q in 0..n {
        gens.push(CliffordElement::hadamard(n, q));
        gens.push(CliffordElement::phase(n, q));
        for t in 0..n {
            if t != q {
                gens.push(CliffordElement::cnot(n, q, t));
            }
        }
    }
    let id = CliffordElement::identity(n);
    let mut seen = BTreeSet::new();
    seen.insert(id.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(g) = queue.pop_front() {
        for h in &gens {
            let next = h.compose(&g).expect("same n");
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen.into_iter().collect()
}

static CL1: OnceBox<Vec<CliffordElement>> = OnceBox::new();
static CL2: OnceBox<Vec<CliffordElement>> = OnceBox::new();

/// All Clifford elements modulo phase for n ∈ {1, 2}, sorted; cached after the first call.
pub fn enumerate_group(n: usize) -> Result<&'static [CliffordElement]> {
    match n {
        1 => Ok(CL1.get_or_init(|| alloc::boxed::Box::new(closure(1)))),
        2 => Ok(CL2.get_or_init(|| alloc::boxed::Box::new(closure(2)))),
        _ => Err(Error::TooManyQubits { n, max: 2 }),
    }
}

fn symplectic_inner(v: u64, w: u64) -> bool {
    let even = 0x5555_5555_5555_5555u64;
    let a = (v & even) & ((w >> 1) & even);
    let b = ((v >> 1) & even) & (w & even);
    (a.count_ones() + b.count_ones()) % 2 == 1
}

fn transvection(h: u64, v: u64) -> u64 {
    if symplectic_inner(h, v) {
        v ^ h
    } else {
        v
    }
}

/// Returns (h1, h2) with y = Z_{h2} Z_{h1} x.
fn find_transvection(n: usize, x: u64, y: u64) -> (u64, u64) {
    if x == y {
        return (0, 0);
    }
    if symplectic_inner(x, y) {
        return (x ^ y, 0);
    }
    let pair = |v: u64, i: usize| (v >> (2 * i)) & 3;
    let mut z = 0u64;
    for i in 0..n {
        let (xi, yi) = (pair(x, i), pair(y, i));
        if xi != 0 && yi != 0 {
            let mut zi = xi ^ yi;
            if zi == 0 {
                zi = 2;
                if (xi & 1) != (xi >> 1) {
                    zi |= 1;
                }
            }
            z |= zi << (2 * i);
            return (x ^ z, y ^ z);
        }
    }
    for i in 0..n {
        let (xi, yi) = (pair(x, i), pair(y, i));
        if xi != 0 && yi == 0 {
            let zi = if (xi & 1) == (xi >> 1) { 2 } else { ((xi & 1) << 1) | (xi >> 1) };
            z |= zi << (2 * i);
            break;
        }
    }
    for i in 0..n {
        let (xi, yi) = (pair(x, i), pair(y, i));
        if xi == 0 && yi != 0 {
            let zi = if (yi & 1) == (yi >> 1) { 2 } else { ((yi & 1) << 1) | (yi >> 1) };
            z |= zi << (2 * i);
            break;
        }
    }
    (x ^ z, y ^ z)
}

/// Uniformly random symplectic matrix over F₂^{2n} as rows (interleaved x/z bits).
fn random_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u64> {
    let nn = 2 * n;
    let f1 = loop {
        let v = rng.random::<u64>() & full_mask(nn);
        if v != 0 {
            break v;
        }
    };
    let e1 = 1u64;
    let (t0, t1) = find_transvection(n, e1, f1);
    let bits = rng.random::<u64>() & full_mask(nn - 1);
    let mut eprime = e1;
    for j in 2..nn {
        eprime |= ((bits >> (j - 1)) & 1) << j;
    }
    let h0 = transvection(t1, transvection(t0, eprime));
    let f1 = if bits & 1 == 1 { 0 } else { f1 };
    let mut g = vec![0u64; nn];
    g[0] = 1;
    g[1] = 2;
    if n > 1 {
        let sub = random_symplectic(n - 1, rng);
        for (j, row) in sub.into_iter().enumerate() {
            g[j + 2] = row << 2;
        }
    }
    for row in g.iter_mut() {
        *row = transvection(f1, transvection(h0, transvection(t1, transvection(t0, *row))));
    }
    g
}

/// Uniform draw from Cl_n modulo phase (random symplectic part plus random signs).
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordElement> {
    if n == 0 || n > MAX_QUBITS / 2 {
        return Err(Error::TooManyQubits { n, max: MAX_QUBITS / 2 });
    }
    let rows = random_symplectic(n, rng);
    let images = rows.iter().map(|&r| deinterleave(n, r)).collect();
    let signs = rng.random::<u64>() & full_mask(2 * n);
    Ok(CliffordElement { n: n as u8, images, signs })
}

/// Chain elements whose adjoint action carries Z on qubit 0 to every nonzero diagonal label.
///
/// Each element is V₁V₂⋯V_i with V_j ∈ {SWAP, CNOT} acting on qubits (j, j−1),
/// the CNOT controlled by qubit j.
pub fn chain_set(n: usize) -> Result<Vec<CliffordElement>> {
    if n == 0 || n > 12 {
        return Err(Error::TooManyQubits { n, max: 12 });
    }
    let mut out = vec![CliffordElement::identity(n)];
    for len in 1..n {
        for choice in 0..1u32 << len {
            let mut g = CliffordElement::identity(n);
            for j in 1..=len {
                let v = if (choice >> (j - 1)) & 1 == 0 {
                    CliffordElement::swap(n, j, j - 1)
                } else {
                    CliffordElement::cnot(n, j, j - 1)
                };
                g = g.compose(&v)?;
            }
            out.push(g);
        }
    }
    Ok(out)
}

/// Groups the elements of Cl_n (n ≤ 2) by the label Ξ with ω(g)†(Z₀) = ±σ_Ξ.
///
/// Returns indices into [`enumerate_group`].
pub fn stabilizer_coset_partition(n: usize) -> Result<BTreeMap<PauliLabel, Vec<usize>>> {
    let group = enumerate_group(n)?;
    let z0 = PauliLabel::diagonal(n, 1);
    let mut out: BTreeMap<PauliLabel, Vec<usize>> = BTreeMap::new();
    for (i, g) in group.iter().enumerate() {
        let (a, _) = g.inverse().act_unchecked(&z0);
        out.entry(a).or_default().push(i);
    }
    Ok(out)
}

/// Which family an ensemble belongs to; controls analytic shortcuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Uniform over Cl_n, enumerated (n ≤ 2).
    Global,
    /// Uniform over Cl_n drawn on demand (no gate list).
    SampledGlobal,
    /// Uniform over Cl₁^{⊗n}.
    LocalClifford,
    /// Products of {𝟙, e^{iπX/4}, e^{iπY/4}} (random Pauli-basis measurement).
    PauliBasis,
    /// Arbitrary weighted gate list.
    Custom,
}

/// A probability distribution over Clifford gates.
#[derive(Clone, Debug, PartialEq)]
pub struct GateEnsemble {
    n: usize,
    kind: EnsembleKind,
    gates: Vec<CliffordElement>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GateEnsemble {
    fn build(n: usize, kind: EnsembleKind, gates: Vec<CliffordElement>, probs: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        GateEnsemble { n, kind, gates, probs, cumulative }
    }

    pub fn uniform_global(n: usize) -> Result<Self> {
        let gates = enumerate_group(n)?.to_vec();
        let p = 1.0 / gates.len() as f64;
        let probs = vec![p; gates.len()];
        Ok(GateEnsemble::build(n, EnsembleKind::Global, gates, probs))
    }

    pub fn sampled_global(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS / 2 {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS / 2 });
        }
        Ok(GateEnsemble::build(n, EnsembleKind::SampledGlobal, Vec::new(), Vec::new()))
    }

    /// Uniform over local Cliffords; enumerated as 24ⁿ products for n ≤ 3,
    /// sampled qubit by qubit beyond that.
    pub fn local_clifford(n: usize) -> Result<Self> {
        GateEnsemble::local_product(n, EnsembleKind::LocalClifford, enumerate_group(1)?, 3)
    }

    /// Uniform over products of {𝟙, e^{iπX/4}, e^{iπY/4}}; enumerated for n ≤ 6.
    pub fn pauli_basis(n: usize) -> Result<Self> {
        GateEnsemble::local_product(n, EnsembleKind::PauliBasis, &pauli_basis_gates(), 6)
    }

    fn local_product(n: usize, kind: EnsembleKind, base: &[CliffordElement], max_enumerated: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        if n > max_enumerated {
            return Ok(GateEnsemble::build(n, kind, Vec::new(), Vec::new()));
        }
        let gates = product_gates(base, n)?;
        let p = 1.0 / gates.len() as f64;
        let probs = vec![p; gates.len()];
        Ok(GateEnsemble::build(n, kind, gates, probs))
    }

    pub fn custom(n: usize, gates: Vec<CliffordElement>, probs: Vec<f64>) -> Result<Self> {
        check_dims(gates.len(), probs.len())?;
        if gates.is_empty() {
            return Err(Error::InvalidDistribution("empty gate list".into()));
        }
        for g in &gates {
            check_dims(n, g.n())?;
        }
        if let Some(&p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter { name: "probability", value: p });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(alloc::format!("probabilities sum to {total}")));
        }
        Ok(GateEnsemble::build(n, EnsembleKind::Custom, gates, probs))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn is_enumerated(&self) -> bool {
        !self.gates.is_empty()
    }

    /// Single-qubit gate set of a uniform product family.
    pub fn local_base(&self) -> Option<Vec<CliffordElement>> {
        match self.kind {
            EnsembleKind::LocalClifford => enumerate_group(1).ok().map(|g| g.to_vec()),
            EnsembleKind::PauliBasis => Some(pauli_basis_gates()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[CliffordElement] {
        &self.gates
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Draws a gate index from an enumerated ensemble.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative.partition_point(|&c| c <= u).min(self.gates.len() - 1)
    }

    /// Draws a gate; sampled ensembles produce a fresh uniform element.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CliffordElement> {
        if self.is_enumerated() {
            return Ok(self.gates[self.sample_index(rng)].clone());
        }
        match self.local_base() {
            Some(base) => {
                let factors: Vec<CliffordElement> =
                    (0..self.n).map(|_| base[rng.random_range(0..base.len())].clone()).collect();
                CliffordElement::tensor_all(&factors)
            }
            None => sample_uniform(self.n, rng),
        }
    }

    /// Analytic frame eigenvalue s_a when the family has one.
    pub fn analytic_s(&self, a: &PauliLabel) -> Option<f64> {
        if a.is_identity() {
            return Some(1.0);
        }
        match self.kind {
            EnsembleKind::Global | EnsembleKind::SampledGlobal => Some(1.0 / (crate::pauli::dimension(self.n) + 1.0)),
            EnsembleKind::LocalClifford | EnsembleKind::PauliBasis => Some(3f64.powi(-(a.weight() as i32))),
            EnsembleKind::Custom => None,
        }
    }
}

/// The single-qubit gates 𝟙, e^{iπX/4}, e^{iπY/4}.
pub fn pauli_basis_gates() -> Vec<CliffordElement> {
    let x90 = crate::pulses::Pulse::XPlus.clifford();
    let y90 = crate::pulses::Pulse::YPlus.clifford();
    vec![CliffordElement::identity(1), x90, y90]
}

fn product_gates(base: &[CliffordElement], n: usize) -> Result<Vec<CliffordElement>> {
    let mut acc: Vec<CliffordElement> = base.to_vec();
    for _ in 1..n {
        let mut next = Vec::with_capacity(acc.len() * base.len());
        for g in &acc {
            for h in base {
                next.push(g.tensor(h)?);
            }
        }
        acc = next;
    }
    Ok(acc)
}
