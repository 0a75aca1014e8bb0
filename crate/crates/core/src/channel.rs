//! Transfer matrices, Pauli channels and diamond distances.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dims, Error, Result};
use crate::pauli::{trace_with_pauli, PauliLabel};

/// Largest qubit count for channels built from Kraus operators.
pub const KRAUS_LIMIT: usize = 4;

/// A linear map on n-qubit operators as a real 4ⁿ×4ⁿ Pauli transfer matrix
/// (σ̂_a|Φ|σ̂_b), optionally remembering a unitary it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferChannel {
    n: usize,
    ptm: DMatrix<f64>,
    unitary: Option<DMatrix<Complex64>>,
}

impl TransferChannel {
    pub fn identity(n: usize) -> Self {
        let dd = 1usize << (2 * n);
        TransferChannel {
            n,
            ptm: DMatrix::identity(dd, dd),
            unitary: Some(DMatrix::identity(1 << n, 1 << n)),
        }
    }

    pub fn from_ptm(n: usize, ptm: DMatrix<f64>) -> Result<Self> {
        let dd = 1usize << (2 * n);
        check_dims(dd, ptm.nrows())?;
        check_dims(dd, ptm.ncols())?;
        Ok(TransferChannel { n, ptm, unitary: None })
    }

    /// Channel ρ ↦ Σ_k K ρ K†; fails if Σ K†K ≠ 𝟙.
    pub fn from_kraus(n: usize, ops: &[DMatrix<Complex64>]) -> Result<Self> {
        if n > KRAUS_LIMIT {
            return Err(Error::TooManyQubits { n, max: KRAUS_LIMIT });
        }
        let d = 1usize << n;
        let mut tp = DMatrix::<Complex64>::zeros(d, d);
        for k in ops {
            check_dims(d, k.nrows())?;
            check_dims(d, k.ncols())?;
            tp += k.adjoint() * k;
        }
        let dev = (tp - DMatrix::<Complex64>::identity(d, d)).camax();
        if dev > 1e-9 {
            return Err(Error::NotTracePreserving(dev));
        }
        let dd = d * d;
        let mut ptm = DMatrix::zeros(dd, dd);
        let labels: Vec<PauliLabel> = PauliLabel::all(n).collect();
        for (b, lb) in labels.iter().enumerate() {
            let sb = lb.to_dense()?;
            let mut out = DMatrix::<Complex64>::zeros(d, d);
            for k in ops {
                out += k * &sb * k.adjoint();
            }
            for (a, la) in labels.iter().enumerate() {
                ptm[(a, b)] = trace_with_pauli(la, &out).re / d as f64;
            }
        }
        Ok(TransferChannel { n, ptm, unitary: None })
    }

    pub fn from_unitary(n: usize, u: &DMatrix<Complex64>) -> Result<Self> {
        let d = 1usize << n;
        check_dims(d, u.nrows())?;
        let dev = (u * u.adjoint() - DMatrix::<Complex64>::identity(d, d)).camax();
        if dev > 1e-9 {
            return Err(Error::NotUnitary(dev));
        }
        let mut ch = TransferChannel::from_kraus(n, core::slice::from_ref(u))?;
        ch.unitary = Some(u.clone());
        Ok(ch)
    }

    pub fn from_clifford(g: &crate::clifford::CliffordElement) -> Result<Self> {
        TransferChannel::from_ptm(g.n(), g.ptm()?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ptm(&self) -> &DMatrix<f64> {
        &self.ptm
    }

    pub fn unitary(&self) -> Option<&DMatrix<Complex64>> {
        self.unitary.as_ref()
    }

    pub fn entry(&self, a: &PauliLabel, b: &PauliLabel) -> f64 {
        self.ptm[(a.index(), b.index())]
    }

    /// Row (σ̂_a|Φ as a vector.
    pub fn row(&self, a: usize) -> Vec<f64> {
        self.ptm.row(a).iter().copied().collect()
    }

    /// (σ̂_a|Φ|v).
    pub fn row_dot(&self, a: usize, v: &[f64]) -> f64 {
        self.ptm.row(a).iter().zip(v).map(|(x, y)| x * y).sum()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.ptm.ncols(), v.len())?;
        Ok((0..self.ptm.nrows()).map(|a| self.row_dot(a, v)).collect())
    }

    /// self ∘ first (first applied first).
    pub fn compose(&self, first: &Self) -> Result<Self> {
        check_dims(self.n, first.n)?;
        let unitary = match (&self.unitary, &first.unitary) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        Ok(TransferChannel { n: self.n, ptm: &self.ptm * &first.ptm, unitary })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let unitary = match (&self.unitary, &other.unitary) {
            (Some(a), Some(b)) => Some(a.kronecker(b)),
            _ => None,
        };
        TransferChannel { n: self.n + other.n, ptm: self.ptm.kronecker(&other.ptm), unitary }
    }

    pub fn tensor_all(factors: &[TransferChannel]) -> Result<Self> {
        let mut acc = factors.first().ok_or(Error::Malformed("empty factor list"))?.clone();
        for f in &factors[1..] {
            acc = acc.tensor(f);
        }
        Ok(acc)
    }

    /// Affine combination Σ w_i Φ_i.
    pub fn combine(items: &[(f64, &TransferChannel)]) -> Result<Self> {
        let first = items.first().ok_or(Error::Malformed("empty combination"))?.1;
        let mut ptm = DMatrix::zeros(first.ptm.nrows(), first.ptm.ncols());
        for (w, ch) in items {
            check_dims(first.n, ch.n)?;
            ptm += &ch.ptm * *w;
        }
        Ok(TransferChannel { n: first.n, ptm, unitary: None })
    }

    /// (1 − ε)·id + ε·self.
    pub fn mix_with_identity(&self, eps: f64) -> Self {
        if eps == 1.0 {
            return self.clone();
        }
        let id = DMatrix::<f64>::identity(self.ptm.nrows(), self.ptm.ncols());
        TransferChannel { n: self.n, ptm: id * (1.0 - eps) + &self.ptm * eps, unitary: None }
    }

    /// ω(g)† Φ ω(g).
    pub fn conjugate_by(&self, g: &crate::clifford::CliffordElement) -> Result<Self> {
        check_dims(self.n, g.n())?;
        let r = g.ptm()?;
        Ok(TransferChannel { n: self.n, ptm: r.transpose() * &self.ptm * r, unitary: None })
    }

    pub fn trace_preservation_error(&self) -> f64 {
        let mut e = (self.ptm[(0, 0)] - 1.0).abs();
        for b in 1..self.ptm.ncols() {
            e = e.max(self.ptm[(0, b)].abs());
        }
        e
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_error() <= tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        (1..self.ptm.nrows()).all(|a| self.ptm[(a, 0)].abs() <= tol)
    }

    /// Diagonal transfer matrix.
    pub fn is_pauli_diagonal(&self, tol: f64) -> bool {
        let m = &self.ptm;
        (0..m.nrows()).all(|a| (0..m.ncols()).all(|b| a == b || m[(a, b)].abs() <= tol))
    }

    pub fn distance_to_identity(&self) -> DistanceEstimate {
        diamond_distance_to_identity(self)
    }
}

/// Pauli channel ρ ↦ Σ_b p_b σ_b ρ σ_b with eigenvalues λ_a = Σ_b (−1)^{[a,b]} p_b.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannel {
    n: usize,
    probs: Vec<f64>,
    eigenvalues: Vec<f64>,
}

const PROB_TOL: f64 = 1e-10;

/// In-place transform v_a ↦ Σ_b (−1)^{[a,b]} v_b, one qubit axis at a time.
fn symplectic_transform(n: usize, v: &mut [f64]) {
    const W: [[f64; 4]; 4] = [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ];
    let total = v.len();
    let mut stride = 1;
    for _ in 0..n {
        let block = stride * 4;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                let idx = |k: usize| start + off + k * stride;
                let x = [v[idx(0)], v[idx(1)], v[idx(2)], v[idx(3)]];
                for (k, row) in W.iter().enumerate() {
                    v[idx(k)] = row.iter().zip(&x).map(|(w, y)| w * y).sum();
                }
            }
        }
        stride = block;
    }
}

impl PauliChannel {
    pub fn from_probs(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_dims(1usize << (2 * n), probs.len())?;
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -PROB_TOL) {
            return Err(Error::InvalidDistribution(alloc::format!("entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(alloc::format!("sum {total}")));
        }
        let mut eigenvalues = probs.clone();
        symplectic_transform(n, &mut eigenvalues);
        Ok(PauliChannel { n, probs, eigenvalues })
    }

    /// Inverse transform; fails when the eigenvalues do not give a distribution.
    pub fn from_eigenvalues(n: usize, eigenvalues: Vec<f64>) -> Result<Self> {
        check_dims(1usize << (2 * n), eigenvalues.len())?;
        if (eigenvalues[0] - 1.0).abs() > 1e-12 {
            return Err(Error::NotTracePreserving((eigenvalues[0] - 1.0).abs()));
        }
        let mut probs = eigenvalues.clone();
        symplectic_transform(n, &mut probs);
        let norm = (1usize << (2 * n)) as f64;
        probs.iter_mut().for_each(|p| *p /= norm);
        if let Some(p) = probs.iter().find(|p| **p < -PROB_TOL) {
            return Err(Error::InvalidDistribution(alloc::format!("eigenvalues give probability {p}")));
        }
        Ok(PauliChannel { n, probs, eigenvalues })
    }

    /// Diagonal of a transfer matrix as a Pauli channel (the Pauli twirl).
    pub fn twirl(ch: &TransferChannel) -> Result<Self> {
        let diag: Vec<f64> = ch.ptm().diagonal().iter().copied().collect();
        PauliChannel::from_eigenvalues(ch.n(), diag)
    }

    /// Single-qubit bit flip: X with probability ε.
    pub fn bit_flip(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter { name: "epsilon", value: eps });
        }
        PauliChannel::from_probs(1, vec![1.0 - eps, eps, 0.0, 0.0])
    }

    /// n-qubit depolarizing channel with λ_{a≠0} = 1 − q.
    pub fn depolarizing(n: usize, q: f64) -> Result<Self> {
        let dd = 1usize << (2 * n);
        let mut lam = vec![1.0 - q; dd];
        lam[0] = 1.0;
        PauliChannel::from_eigenvalues(n, lam)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn to_channel(&self) -> TransferChannel {
        TransferChannel {
            n: self.n,
            ptm: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues)),
            unitary: None,
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        let mut eigenvalues = Vec::with_capacity(probs.capacity());
        for (p, l) in self.probs.iter().zip(&self.eigenvalues) {
            for (q, m) in other.probs.iter().zip(&other.eigenvalues) {
                probs.push(p * q);
                eigenvalues.push(l * m);
            }
        }
        PauliChannel { n: self.n + other.n, probs, eigenvalues }
    }

    /// ‖Φ − Φ′‖⋄ = Σ_b |p_b − p′_b|.
    pub fn diamond_distance(&self, other: &Self) -> Result<f64> {
        check_dims(self.n, other.n)?;
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum())
    }
}

/// A diamond-norm distance, exact or a rigorous upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub exact: bool,
}

impl DistanceEstimate {
    pub fn exact(value: f64) -> Self {
        DistanceEstimate { value, exact: true }
    }

    pub fn bound(value: f64) -> Self {
        DistanceEstimate { value: value.min(2.0), exact: false }
    }

    pub fn scale(self, s: f64) -> Self {
        DistanceEstimate { value: self.value * s, exact: self.exact }
    }

    pub fn max(self, other: Self) -> Self {
        let exact = self.exact && other.exact;
        DistanceEstimate { value: self.value.max(other.value), exact }
    }
}

/// Length of the shortest arc of the unit circle holding every eigenvalue phase of `w`.
pub fn eigenphase_arc(w: &DMatrix<Complex64>) -> f64 {
    let d = w.nrows();
    let mut phases: Vec<f64> = if d == 2 {
        // closed form for 2×2: roots of λ² − tr·λ + det
        let tr = w[(0, 0)] + w[(1, 1)];
        let det = w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)];
        let disc = (tr * tr - det * 4.0).sqrt();
        vec![((tr + disc) / 2.0).arg(), ((tr - disc) / 2.0).arg()]
    } else {
        let ev = Schur::new(w.clone()).eigenvalues().unwrap_or_else(|| nalgebra::DVector::zeros(d));
        ev.iter().map(|z| z.arg()).collect()
    };
    phases.sort_by(|a, b| a.total_cmp(b));
    let tau = 2.0 * core::f64::consts::PI;
    let mut largest_gap = phases[0] + tau - phases[phases.len() - 1];
    for w in phases.windows(2) {
        largest_gap = largest_gap.max(w[1] - w[0]);
    }
    (tau - largest_gap).max(0.0)
}

/// 2·sin(θ/2) for a phase arc θ, saturating at 2 once θ ≥ π.
pub fn arc_to_distance(arc: f64) -> f64 {
    if arc >= core::f64::consts::PI {
        2.0
    } else {
        2.0 * (arc / 2.0).sin()
    }
}

/// ‖U·U† − V·V†‖⋄ for unitary channels.
pub fn unitary_diamond_distance(u: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> f64 {
    arc_to_distance(eigenphase_arc(&(u.adjoint() * v)))
}

/// ‖id − Φ‖⋄: exact for Pauli-diagonal and unitary channels, otherwise the
/// entrywise ℓ₁ norm of the transfer-matrix difference (capped at 2), which
/// upper-bounds the diamond norm because each |σ̂_a)(σ̂_b| has diamond norm 1.
pub fn diamond_distance_to_identity(ch: &TransferChannel) -> DistanceEstimate {
    if let Some(u) = ch.unitary() {
        let id = DMatrix::<Complex64>::identity(u.nrows(), u.ncols());
        return DistanceEstimate::exact(unitary_diamond_distance(&id, u));
    }
    if ch.is_pauli_diagonal(1e-13) {
        if let Ok(p) = PauliChannel::twirl(ch) {
            return DistanceEstimate::exact(2.0 * (1.0 - p.probs()[0]));
        }
    }
    let m = ch.ptm();
    let mut s = 0.0;
    for a in 0..m.nrows() {
        for b in 0..m.ncols() {
            let id = if a == b { 1.0 } else { 0.0 };
            s += (m[(a, b)] - id).abs();
        }
    }
    DistanceEstimate::bound(s)
}

/// Haar-style random channel: Kraus blocks of a Gaussian matrix orthonormalised by QR.
pub fn random_cptp<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<TransferChannel> {
    let d = 1usize << n;
    let rows = d * rank.max(1);
    let g = DMatrix::<Complex64>::from_fn(rows, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let q = g.qr().q();
    let ops: Vec<DMatrix<Complex64>> = (0..rank.max(1)).map(|k| q.rows(k * d, d).into_owned()).collect();
    TransferChannel::from_kraus(n, &ops)
}

/// Haar-random unitary channel.
pub fn random_unitary_channel<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<TransferChannel> {
    let d = 1usize << n;
    let g = DMatrix::<Complex64>::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    TransferChannel::from_unitary(n, &g.qr().q())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use crate::pulses::{rotation, Pulse};
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn x_plus_90_maps_z_row_to_minus_y() {
        let ch = TransferChannel::from_unitary(1, &Pulse::XPlus.unitary()).unwrap();
        let z = PauliLabel::single(1, 0, Pauli::Z).index();
        let y = PauliLabel::single(1, 0, Pauli::Y).index();
        let row = ch.row(z);
        assert!((row[y] + 1.0).abs() < 1e-14);
        assert!(row.iter().enumerate().all(|(i, v)| i == y || v.abs() < 1e-14));
    }

    #[test]
    fn bit_flip_eigenvalues() {
        let eps = 0.1;
        let p = PauliChannel::bit_flip(eps).unwrap();
        // (I, X, Z, Y) index order
        let want = [1.0, 1.0, 1.0 - 2.0 * eps, 1.0 - 2.0 * eps];
        for (a, b) in p.eigenvalues().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn depolarizing_probabilities() {
        let q = 0.2;
        let p = PauliChannel::depolarizing(1, q).unwrap();
        assert!((p.probs()[0] - (1.0 - 3.0 * q / 4.0)).abs() < 1e-15);
        for b in 1..4 {
            assert!((p.probs()[b] - q / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eigenvalue_transform_matches_definition() {
        let mut rng = stream_rng(5, 0);
        let mut probs: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let ch = PauliChannel::from_probs(2, probs.clone()).unwrap();
        for a in PauliLabel::all(2) {
            let direct: f64 = PauliLabel::all(2)
                .map(|b| if a.symplectic(&b).unwrap() { -probs[b.index()] } else { probs[b.index()] })
                .sum();
            assert!((direct - ch.eigenvalues()[a.index()]).abs() < 1e-14);
        }
        let back = PauliChannel::from_eigenvalues(2, ch.eigenvalues().to_vec()).unwrap();
        for (x, y) in back.probs().iter().zip(&probs) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_channel_matches_kraus_form() {
        let p = PauliChannel::from_probs(1, vec![0.7, 0.1, 0.15, 0.05]).unwrap();
        let ops: Vec<DMatrix<Complex64>> = [Pauli::I, Pauli::X, Pauli::Z, Pauli::Y]
            .iter()
            .zip(p.probs())
            .map(|(l, w)| l.matrix() * Complex64::new(w.sqrt(), 0.0))
            .collect();
        let k = TransferChannel::from_kraus(1, &ops).unwrap();
        assert!((k.ptm() - p.to_channel().ptm()).camax() < 1e-14);
    }

    #[test]
    fn rejects_non_distributions() {
        assert!(PauliChannel::from_probs(1, vec![1.2, -0.2, 0.0, 0.0]).is_err());
        assert!(PauliChannel::from_eigenvalues(1, vec![1.0, 1.5, 0.0, 0.0]).is_err());
        let bad = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(2.0, 0.0);
        assert!(matches!(TransferChannel::from_kraus(1, &[bad]), Err(Error::NotTracePreserving(_))));
    }

    #[test]
    fn unitary_distance_of_rotation() {
        for &d in &[0.0, 0.1, 0.7, 2.5] {
            let u = rotation(Pauli::X, d);
            let ch = TransferChannel::from_unitary(1, &u).unwrap();
            let est = ch.distance_to_identity();
            assert!(est.exact);
            assert!((est.value - 2.0 * (d / 2.0).sin()).abs() < 1e-12);
        }
        let x = Pauli::X.matrix();
        assert!((unitary_diamond_distance(&DMatrix::identity(2, 2), &x) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_distance_on_two_qubits_adds_arcs() {
        let u = rotation(Pauli::X, 0.3).kronecker(&rotation(Pauli::Y, 0.5));
        let dist = unitary_diamond_distance(&DMatrix::identity(4, 4), &u);
        assert!((dist - 2.0 * 0.4f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn random_channels_are_cptp() {
        let mut rng = stream_rng(9, 0);
        for n in 1..=2 {
            let ch = random_cptp(n, 2, &mut rng).unwrap();
            assert!(ch.is_trace_preserving(1e-12));
            let u = random_unitary_channel(n, &mut rng).unwrap();
            assert!(u.is_unital(1e-12));
        }
    }

    #[test]
    fn surrogate_bounds_exact_value() {
        // a mixture of rotations is neither unitary nor Pauli
        let a = TransferChannel::from_unitary(1, &rotation(Pauli::X, 0.4)).unwrap();
        let b = TransferChannel::from_unitary(1, &rotation(Pauli::Y, 0.4)).unwrap();
        let mix = TransferChannel::combine(&[(0.5, &a), (0.5, &b)]).unwrap();
        let est = mix.distance_to_identity();
        assert!(!est.exact);
        assert!(est.value >= 2.0 * 0.2f64.sin() - 1e-12);
    }

    proptest! {
        #[test]
        fn eigenvalue_gap_bounded_by_diamond_distance(seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 3);
            let mut draw = || {
                let mut p: Vec<f64> = (0..16).map(|_| rng.random::<f64>()).collect();
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= s);
                PauliChannel::from_probs(2, p).unwrap()
            };
            let (a, b) = (draw(), draw());
            let gap = a.eigenvalues().iter().zip(b.eigenvalues()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            prop_assert!(gap <= a.diamond_distance(&b).unwrap() + 1e-12);
        }
    }
}
