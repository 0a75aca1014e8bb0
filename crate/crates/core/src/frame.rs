//! Ideal and noisy frame operators, averaged noise channels and second moments.
//!
//! With M = Σ_x |E_x)(E_x| the noisy frame operator is
//! S̃ = Σ_g p(g) ω(g)†Mω(g)Λ(g) = Σ_a s_a |σ̂_a)(σ̂_a| Λ̄_a, so the expected
//! estimate is E[ô] = Σ_a (O|σ̂_a)(σ̂_a|Λ̄_a|ρ).

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channel::{arc_to_distance, eigenphase_arc, DistanceEstimate, TransferChannel};
use crate::clifford::{CliffordElement, EnsembleKind, GateEnsemble};
use crate::error::{check_dims, Error, Result};
use crate::noise::{NoiseKind, NoiseModel};
use crate::pauli::{dimension, DensityState, Pauli, PauliLabel, PauliObservable};

/// Largest qubit count for which dense per-label channels are built.
pub const DENSE_FRAME_LIMIT: usize = 3;

const SINGULAR_TOL: f64 = 1e-14;

/// Normalised Pauli components (σ̂_a|ρ) of a state, dense and/or per qubit.
#[derive(Clone, Debug)]
pub struct StateData {
    n: usize,
    dense: Option<Vec<f64>>,
    product: Option<Vec<[f64; 4]>>,
}

impl StateData {
    pub fn new(rho: &DensityState) -> Result<Self> {
        let product = rho.factor_vectors();
        let dense = if rho.n() <= 6 || product.is_none() { Some(rho.pauli_vector()?) } else { None };
        Ok(StateData { n: rho.n(), dense, product })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn product(&self) -> Option<&[[f64; 4]]> {
        self.product.as_deref()
    }

    pub fn dense(&self) -> Result<&[f64]> {
        self.dense.as_deref().ok_or(Error::TooManyQubits { n: self.n, max: 6 })
    }

    pub fn component(&self, a: &PauliLabel) -> f64 {
        if let Some(p) = &self.product {
            return (0..self.n).map(|q| p[q][a.letter(q) as usize]).product();
        }
        self.dense.as_ref().map(|v| v[a.index()]).unwrap_or(0.0)
    }
}

/// Eigenvalues s_a of the ideal frame operator.
#[derive(Clone, Debug, PartialEq)]
pub enum FrameEigenvalues {
    /// One entry per label index.
    Table(Vec<f64>),
    /// s_{a≠0} = 1/(d+1).
    Global { n: usize },
    /// Product of single-qubit tables, indexed by local letter.
    Local(Vec<[f64; 4]>),
}

impl FrameEigenvalues {
    pub fn n(&self) -> usize {
        match self {
            FrameEigenvalues::Table(v) => (v.len().trailing_zeros() / 2) as usize,
            FrameEigenvalues::Global { n } => *n,
            FrameEigenvalues::Local(f) => f.len(),
        }
    }

    pub fn get(&self, a: &PauliLabel) -> f64 {
        match self {
            FrameEigenvalues::Table(v) => v[a.index()],
            FrameEigenvalues::Global { n } => {
                if a.is_identity() {
                    1.0
                } else {
                    1.0 / (dimension(*n) + 1.0)
                }
            }
            FrameEigenvalues::Local(f) => (0..f.len()).map(|q| f[q][a.letter(q) as usize]).product(),
        }
    }

    /// Labels with vanishing eigenvalue (only checked for tables and local factors).
    pub fn null_labels(&self) -> Vec<PauliLabel> {
        match self {
            FrameEigenvalues::Table(v) => {
                let n = self.n();
                (0..v.len()).filter(|&i| v[i].abs() < SINGULAR_TOL).map(|i| PauliLabel::from_index(n, i)).collect()
            }
            FrameEigenvalues::Global { .. } => Vec::new(),
            FrameEigenvalues::Local(f) => {
                let n = f.len();
                for (q, t) in f.iter().enumerate() {
                    if let Some(p) = Pauli::ALL.iter().find(|p| t[**p as usize].abs() < SINGULAR_TOL) {
                        return vec![PauliLabel::single(n, q, *p)];
                    }
                }
                Vec::new()
            }
        }
    }

    fn check(self) -> Result<Self> {
        let null = self.null_labels();
        if null.is_empty() {
            Ok(self)
        } else {
            Err(Error::SingularFrame(null.iter().map(|l| l.to_string()).collect()))
        }
    }
}

/// Accumulates s_a = Σ_{g : ω(g)†(Z_z) = ±σ_a} p(g) over an enumerated ensemble.
fn enumerated_s(gates: &[CliffordElement], probs: &[f64], n: usize) -> Vec<f64> {
    let mut s = vec![KahanSum::default(); 1usize << (2 * n)];
    for (g, p) in gates.iter().zip(probs) {
        let gi = g.inverse();
        for z in PauliLabel::all_diagonal(n) {
            let (a, _) = gi.act_unchecked(&z);
            s[a.index()].add(*p);
        }
    }
    s.iter().map(|k| k.value()).collect()
}

fn local_s(base: &[CliffordElement]) -> [f64; 4] {
    let p = vec![1.0 / base.len() as f64; base.len()];
    let v = enumerated_s(base, &p, 1);
    [v[0], v[1], v[2], v[3]]
}

/// Eigenvalues of S = E_g[ω(g)†Mω(g)]; fails with the null labels when S is singular.
pub fn ideal_frame(ensemble: &GateEnsemble) -> Result<FrameEigenvalues> {
    let n = ensemble.n();
    let fe = match (ensemble.kind(), ensemble.local_base()) {
        (EnsembleKind::SampledGlobal, _) | (EnsembleKind::Global, _) if !ensemble.is_enumerated() => {
            FrameEigenvalues::Global { n }
        }
        (_, Some(base)) => FrameEigenvalues::Local(vec![local_s(&base); n]),
        _ => FrameEigenvalues::Table(enumerated_s(ensemble.gates(), ensemble.probs(), n)),
    };
    fe.check()
}

/// Averaged noise channels Λ̄_a.
#[derive(Clone, Debug, PartialEq)]
pub enum AveragedNoise {
    /// One channel per label index.
    Dense(Vec<TransferChannel>),
    /// Λ̄_a = Λ for every a.
    Uniform(TransferChannel),
    /// Λ̄_a = (1 − ε)·id + ε·⊗_q C_q[a_q] with single-qubit C_q.
    Factorized { mixing: f64, factors: Vec<[TransferChannel; 4]> },
}

/// Monte-Carlo metadata of a sampled frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledInfo {
    pub draws: usize,
    /// Standard error of every entry of S̃.
    pub standard_error: DMatrix<f64>,
}

/// Frame eigenvalues plus averaged noise for an (ensemble, noise) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    n: usize,
    s: FrameEigenvalues,
    noise: AveragedNoise,
    pauli: bool,
    /// Σ p(g)‖id − Λ(g)‖⋄ / s_a per label (dense path only).
    convex_distance: Option<Vec<DistanceEstimate>>,
    /// Per-qubit, per-letter convexity bounds of the factorized path.
    local_convex: Option<Vec<[DistanceEstimate; 4]>>,
    sampled: Option<SampledInfo>,
}

/// True for models whose Λ(g) does not depend on g.
pub(crate) fn gate_independent(noise: &NoiseModel) -> bool {
    match noise.kind() {
        NoiseKind::Noiseless | NoiseKind::Right(_) => true,
        NoiseKind::Local(rules) => rules.iter().all(|r| {
            matches!(r, crate::noise::LocalRule::Identity | crate::noise::LocalRule::Fixed(_))
        }),
        _ => noise.is_noiseless(),
    }
}

/// Noisy frame by the cheapest exact route available.
pub fn noisy_frame(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<FrameReport> {
    check_dims(ensemble.n(), noise.n())?;
    if gate_independent(noise) {
        return uniform_frame(ensemble, noise);
    }
    if ensemble.local_base().is_some() && noise.is_local() {
        return local_factorized_frame(ensemble, noise);
    }
    if ensemble.is_enumerated() {
        return dense_frame(ensemble, noise);
    }
    Err(Error::Unsupported("gate-dependent noise on a sampled ensemble needs sampled_frame"))
}

fn uniform_frame(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<FrameReport> {
    let n = ensemble.n();
    let s = ideal_frame(ensemble)?;
    let avg = match noise.kind() {
        NoiseKind::Right(ch) if !noise.is_noiseless() => AveragedNoise::Uniform(ch.mix_with_identity(noise.mixing())),
        NoiseKind::Local(_) if !noise.is_noiseless() => {
            let id = CliffordElement::identity(1);
            let factors = (0..n)
                .map(|q| {
                    let c = noise.local_channel(q, &id)?;
                    Ok([c.clone(), c.clone(), c.clone(), c])
                })
                .collect::<Result<Vec<_>>>()?;
            AveragedNoise::Factorized { mixing: noise.mixing(), factors }
        }
        _ => AveragedNoise::Factorized { mixing: 0.0, factors: identity_factors(n) },
    };
    Ok(FrameReport { n, s, noise: avg, pauli: noise.is_pauli(), convex_distance: None, local_convex: None, sampled: None })
}

fn identity_factors(n: usize) -> Vec<[TransferChannel; 4]> {
    let id = TransferChannel::identity(1);
    vec![[id.clone(), id.clone(), id.clone(), id]; n]
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Weighted average of channels that also tracks Σ w‖id − Λ‖⋄ and keeps a
/// lone contributor intact so unitary structure survives.
struct ChannelAverage {
    weight: KahanSum,
    acc: DMatrix<f64>,
    conv: DistanceEstimate,
    single: Option<TransferChannel>,
    count: usize,
}

impl ChannelAverage {
    fn new(dd: usize) -> Self {
        ChannelAverage {
            weight: KahanSum::default(),
            acc: DMatrix::zeros(dd, dd),
            conv: DistanceEstimate::exact(0.0),
            single: None,
            count: 0,
        }
    }

    fn push(&mut self, p: f64, ch: &TransferChannel, dist: DistanceEstimate) {
        self.weight.add(p);
        self.acc += ch.ptm() * p;
        self.conv = DistanceEstimate { value: self.conv.value + p * dist.value, exact: self.conv.exact && dist.exact };
        self.count += 1;
        if self.count == 1 {
            self.single = Some(ch.clone());
        } else {
            self.single = None;
        }
    }

    fn finish(self, n: usize) -> Result<(TransferChannel, DistanceEstimate)> {
        let w = self.weight.value();
        let conv = self.conv.scale(1.0 / w);
        match self.single {
            Some(ch) => Ok((ch, conv)),
            None => Ok((TransferChannel::from_ptm(n, self.acc / w)?, conv)),
        }
    }
}

/// Exact average over an enumerated ensemble with one dense channel per label.
pub fn dense_frame(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<FrameReport> {
    let n = ensemble.n();
    check_dims(n, noise.n())?;
    if !ensemble.is_enumerated() {
        return Err(Error::Unsupported("dense frames need an enumerated ensemble"));
    }
    if n > DENSE_FRAME_LIMIT {
        return Err(Error::TooManyQubits { n, max: DENSE_FRAME_LIMIT });
    }
    let dd = 1usize << (2 * n);
    let mut avg: Vec<ChannelAverage> = (0..dd).map(|_| ChannelAverage::new(dd)).collect();
    let eps = noise.mixing();
    for (g, &p) in ensemble.gates().iter().zip(ensemble.probs()) {
        if p == 0.0 {
            continue;
        }
        let (lam, dist) = if noise.is_noiseless() {
            (TransferChannel::identity(n), DistanceEstimate::exact(0.0))
        } else {
            let inner = noise.inner_channel(g)?;
            let dist = inner.distance_to_identity().scale(eps);
            (inner.mix_with_identity(eps), dist)
        };
        let gi = g.inverse();
        for z in PauliLabel::all_diagonal(n) {
            avg[gi.act_unchecked(&z).0.index()].push(p, &lam, dist);
        }
    }
    let s: Vec<f64> = avg.iter().map(|a| a.weight.value()).collect();
    let fe = FrameEigenvalues::Table(s).check()?;
    let mut channels = Vec::with_capacity(dd);
    let mut conv = Vec::with_capacity(dd);
    for a in avg {
        let (ch, c) = a.finish(n)?;
        channels.push(ch);
        conv.push(c);
    }
    Ok(FrameReport {
        n,
        s: fe,
        noise: AveragedNoise::Dense(channels),
        pauli: noise.is_pauli(),
        convex_distance: Some(conv),
        local_convex: None,
        sampled: None,
    })
}

/// Per-qubit averages for product ensembles under product noise.
pub fn local_factorized_frame(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<FrameReport> {
    let n = ensemble.n();
    check_dims(n, noise.n())?;
    let base = ensemble.local_base().ok_or(Error::Unsupported("ensemble is not a uniform product family"))?;
    if !noise.is_local() {
        return Err(Error::Unsupported("noise does not factorise over qubits"));
    }
    let p = 1.0 / base.len() as f64;
    let mut factors = Vec::with_capacity(n);
    let mut convex = Vec::with_capacity(n);
    let mut sq = [0.0; 4];
    for q in 0..n {
        let mut avg = [(); 4].map(|_| ChannelAverage::new(4));
        for h in &base {
            let lam = noise.local_channel(q, h)?;
            let dist = lam.distance_to_identity();
            let hi = h.inverse();
            for z in PauliLabel::all_diagonal(1) {
                avg[hi.act_unchecked(&z).0.index()].push(p, &lam, dist);
            }
        }
        for (a, v) in avg.iter().enumerate() {
            sq[a] = v.weight.value();
        }
        if let Some(a) = sq.iter().position(|w| *w < SINGULAR_TOL) {
            return Err(Error::SingularFrame(vec![PauliLabel::single(n, q, Pauli::from_bits(a & 1 == 1, a & 2 == 2)).to_string()]));
        }
        let done: Vec<(TransferChannel, DistanceEstimate)> = avg.into_iter().map(|a| a.finish(1)).collect::<Result<_>>()?;
        factors.push([done[0].0.clone(), done[1].0.clone(), done[2].0.clone(), done[3].0.clone()]);
        convex.push([done[0].1, done[1].1, done[2].1, done[3].1]);
    }
    let mixing = if noise.is_noiseless() { 0.0 } else { noise.mixing() };
    Ok(FrameReport {
        n,
        s: FrameEigenvalues::Local(vec![sq; n]).check()?,
        noise: AveragedNoise::Factorized { mixing, factors },
        pauli: noise.is_pauli(),
        convex_distance: None,
        local_convex: Some(convex),
        sampled: None,
    })
}

/// Monte-Carlo estimate of S̃ from `draws` random gates (n ≤ 3).
pub fn sampled_frame<R: Rng + ?Sized>(
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
    draws: usize,
    rng: &mut R,
) -> Result<FrameReport> {
    let n = ensemble.n();
    check_dims(n, noise.n())?;
    if n > DENSE_FRAME_LIMIT {
        return Err(Error::TooManyQubits { n, max: DENSE_FRAME_LIMIT });
    }
    if draws < 2 {
        return Err(Error::InvalidParameter { name: "draws", value: draws as f64 });
    }
    let dd = 1usize << (2 * n);
    let mut hits = vec![0usize; dd];
    let mut acc = vec![DMatrix::<f64>::zeros(dd, dd); dd];
    let mut sum = DMatrix::<f64>::zeros(dd, dd);
    let mut sum_sq = DMatrix::<f64>::zeros(dd, dd);
    for _ in 0..draws {
        let g = ensemble.sample(rng)?;
        let lam = noise.channel(&g)?;
        let gi = g.inverse();
        for z in PauliLabel::all_diagonal(n) {
            let a = gi.act_unchecked(&z).0.index();
            hits[a] += 1;
            acc[a] += lam.ptm();
            for b in 0..dd {
                let v = lam.ptm()[(a, b)];
                sum[(a, b)] += v;
                sum_sq[(a, b)] += v * v;
            }
        }
    }
    let nd = draws as f64;
    let se = DMatrix::from_fn(dd, dd, |i, j| {
        let m = sum[(i, j)] / nd;
        ((sum_sq[(i, j)] / nd - m * m).max(0.0) / (nd - 1.0)).sqrt()
    });
    let s: Vec<f64> = hits.iter().map(|&h| h as f64 / nd).collect();
    let fe = FrameEigenvalues::Table(s).check()?;
    let channels = acc
        .into_iter()
        .zip(&hits)
        .map(|(m, &h)| TransferChannel::from_ptm(n, m / h as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameReport {
        n,
        s: fe,
        noise: AveragedNoise::Dense(channels),
        pauli: noise.is_pauli(),
        convex_distance: None,
        local_convex: None,
        sampled: Some(SampledInfo { draws, standard_error: se }),
    })
}

/// ‖id − ⊗_q C_q‖⋄: exact for Pauli and unitary factors, otherwise the bound
/// Σ_q ‖id − C_q‖⋄ using the smaller of each factor's direct and convexity bounds.
pub fn tensor_distance(parts: &[(&TransferChannel, Option<DistanceEstimate>)]) -> DistanceEstimate {
    if parts.iter().all(|(c, _)| c.is_pauli_diagonal(1e-13)) {
        let p0: f64 = parts.iter().map(|(c, _)| c.ptm().diagonal().sum() / c.ptm().nrows() as f64).product();
        return DistanceEstimate::exact(2.0 * (1.0 - p0).max(0.0));
    }
    if parts.iter().all(|(c, _)| c.unitary().is_some()) {
        let arc: f64 = parts.iter().map(|(c, _)| eigenphase_arc(c.unitary().expect("checked"))).sum();
        return DistanceEstimate::exact(arc_to_distance(arc));
    }
    let total = parts
        .iter()
        .map(|(c, conv)| {
            let direct = c.distance_to_identity().value;
            conv.map_or(direct, |v| direct.min(v.value))
        })
        .sum();
    DistanceEstimate::bound(total)
}

impl FrameReport {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &FrameEigenvalues {
        &self.s
    }

    pub fn s(&self, a: &PauliLabel) -> f64 {
        self.s.get(a)
    }

    pub fn averaged_noise(&self) -> &AveragedNoise {
        &self.noise
    }

    /// Whether every underlying Λ(g) is a Pauli channel.
    pub fn is_pauli(&self) -> bool {
        self.pauli
    }

    pub fn is_exact(&self) -> bool {
        self.sampled.is_none()
    }

    pub fn sampled(&self) -> Option<&SampledInfo> {
        self.sampled.as_ref()
    }

    /// Λ̄_a as a dense channel (n ≤ 5 for factorized reports).
    pub fn avg_channel(&self, a: &PauliLabel) -> Result<TransferChannel> {
        check_dims(self.n, a.n())?;
        match &self.noise {
            AveragedNoise::Dense(v) => Ok(v[a.index()].clone()),
            AveragedNoise::Uniform(c) => Ok(c.clone()),
            AveragedNoise::Factorized { mixing, factors } => {
                if self.n > 5 {
                    return Err(Error::TooManyQubits { n: self.n, max: 5 });
                }
                let parts: Vec<TransferChannel> =
                    (0..self.n).map(|q| factors[q][a.letter(q) as usize].clone()).collect();
                Ok(TransferChannel::tensor_all(&parts)?.mix_with_identity(*mixing))
            }
        }
    }

    /// (σ̂_a|Λ̄_a|σ̂_b).
    pub fn avg_entry(&self, a: &PauliLabel, b: &PauliLabel) -> f64 {
        match &self.noise {
            AveragedNoise::Dense(v) => v[a.index()].ptm()[(a.index(), b.index())],
            AveragedNoise::Uniform(c) => c.ptm()[(a.index(), b.index())],
            AveragedNoise::Factorized { mixing, factors } => {
                let prod: f64 = (0..self.n)
                    .map(|q| {
                        let (la, lb) = (a.letter(q) as usize, b.letter(q) as usize);
                        factors[q][la].ptm()[(la, lb)]
                    })
                    .product();
                let id = if a == b { 1.0 } else { 0.0 };
                (1.0 - mixing) * id + mixing * prod
            }
        }
    }

    /// λ̄_a = (σ̂_a|Λ̄_a|σ̂_a).
    pub fn avg_eigenvalue(&self, a: &PauliLabel) -> f64 {
        self.avg_entry(a, a)
    }

    /// Row a of S⁻¹S̃ applied to ρ: (σ̂_a|Λ̄_a|ρ).
    pub fn row_value(&self, a: &PauliLabel, rho: &StateData) -> Result<f64> {
        check_dims(self.n, rho.n())?;
        match &self.noise {
            AveragedNoise::Dense(v) => Ok(v[a.index()].row_dot(a.index(), rho.dense()?)),
            AveragedNoise::Uniform(c) => match rho.product() {
                Some(_) if c.n() > 6 => Err(Error::TooManyQubits { n: c.n(), max: 6 }),
                _ => Ok(c.row_dot(a.index(), rho.dense()?)),
            },
            AveragedNoise::Factorized { mixing, factors } => {
                if let Some(r) = rho.product() {
                    let mut ideal = 1.0;
                    let mut noisy = 1.0;
                    for q in 0..self.n {
                        let la = a.letter(q) as usize;
                        ideal *= r[q][la];
                        noisy *= factors[q][la].row_dot(la, &r[q]);
                    }
                    Ok((1.0 - mixing) * ideal + mixing * noisy)
                } else {
                    Ok(self.avg_channel(a)?.row_dot(a.index(), rho.dense()?))
                }
            }
        }
    }

    /// E[ô] = (O|S⁻¹S̃|ρ).
    pub fn expectation(&self, o: &PauliObservable, rho: &StateData) -> Result<f64> {
        check_dims(self.n, o.n())?;
        let sd = o.dim().sqrt();
        let mut e = 0.0;
        for (a, c) in o.terms() {
            e += sd * c * self.row_value(a, rho)?;
        }
        Ok(e)
    }

    /// |(O|S⁻¹S̃ − id|ρ)|.
    pub fn exact_bias(&self, o: &PauliObservable, rho: &StateData) -> Result<f64> {
        Ok((self.expectation(o, rho)? - ideal_expectation(o, rho)?).abs())
    }

    /// Expectation of the robust estimator with mitigation parameter f_m:
    /// (O|(|𝟙̂)(𝟙̂| + ((d+1)/f_m) Σ_{a≠0} |σ̂_a)(σ̂_a|) S̃|ρ).
    pub fn robust_expectation(&self, o: &PauliObservable, rho: &StateData, f_m: f64) -> Result<f64> {
        check_dims(self.n, o.n())?;
        if !(f_m.abs() >= ROBUST_TOL) {
            return Err(Error::InvalidParameter { name: "f_m", value: f_m });
        }
        let d = o.dim();
        let sd = d.sqrt();
        let mut e = 0.0;
        for (a, c) in o.terms() {
            let w = if a.is_identity() { 1.0 } else { (d + 1.0) * self.s(a) / f_m };
            e += sd * c * w * self.row_value(a, rho)?;
        }
        Ok(e)
    }

    /// (E₀|S̃|E₀) = Σ_{z} s_z (σ̂_z|Λ̄_z|E₀)/√d over diagonal labels.
    pub fn zero_state_return(&self) -> Result<f64> {
        let zero = StateData::new(&DensityState::zero(self.n)?)?;
        let sd = dimension(self.n).sqrt();
        let mut acc = 0.0;
        for z in PauliLabel::all_diagonal(self.n) {
            acc += self.s(&z) * self.row_value(&z, &zero)? / sd;
        }
        Ok(acc)
    }

    /// E[f̂] for f̂(g,x) = (d(E_x|ω(g)|E₀) − 1)/(d − 1).
    pub fn expected_calibration(&self) -> Result<f64> {
        let d = dimension(self.n);
        Ok((d * self.zero_state_return()? - 1.0) / (d - 1.0))
    }

    /// (d+1)·E[f̂], the noiseless-limit-one mitigation parameter.
    pub fn expected_mitigation(&self) -> Result<f64> {
        let d = dimension(self.n);
        Ok((d + 1.0) * self.expected_calibration()?)
    }

    /// ‖id − Λ̄_a‖⋄ (exact or a flagged upper bound).
    pub fn channel_distance(&self, a: &PauliLabel) -> Result<DistanceEstimate> {
        match &self.noise {
            AveragedNoise::Dense(v) => {
                let direct = v[a.index()].distance_to_identity();
                if direct.exact {
                    return Ok(direct);
                }
                let conv = self.convex_distance.as_ref().map(|c| c[a.index()]);
                Ok(match conv {
                    Some(c) if c.value < direct.value => DistanceEstimate::bound(c.value),
                    _ => direct,
                })
            }
            AveragedNoise::Uniform(c) => Ok(c.distance_to_identity()),
            AveragedNoise::Factorized { mixing, factors } => {
                if *mixing == 0.0 {
                    return Ok(DistanceEstimate::exact(0.0));
                }
                let parts: Vec<(&TransferChannel, Option<DistanceEstimate>)> = (0..self.n)
                    .map(|q| {
                        let l = a.letter(q) as usize;
                        (&factors[q][l], self.local_convex.as_ref().map(|c| c[q][l]))
                    })
                    .collect();
                Ok(tensor_distance(&parts).scale(*mixing))
            }
        }
    }

    /// max_{a≠0} ‖id − Λ̄_a‖⋄; the label set is restricted to `labels` when given.
    pub fn max_channel_distance(&self, labels: Option<&[PauliLabel]>) -> Result<DistanceEstimate> {
        let mut best = DistanceEstimate::exact(0.0);
        let mut visit = |a: &PauliLabel| -> Result<()> {
            if !a.is_identity() {
                best = best.max(self.channel_distance(a)?);
            }
            Ok(())
        };
        match labels {
            Some(ls) => ls.iter().try_for_each(&mut visit)?,
            None => PauliLabel::all(self.n).try_for_each(|a| visit(&a))?,
        }
        Ok(best)
    }

    /// max_{a≠0} |1 − λ̄_a|, optionally over a label subset.
    pub fn max_eigenvalue_gap(&self, labels: Option<&[PauliLabel]>) -> f64 {
        let gap = |a: &PauliLabel| if a.is_identity() { 0.0 } else { (1.0 - self.avg_eigenvalue(a)).abs() };
        match labels {
            Some(ls) => ls.iter().map(gap).fold(0.0, f64::max),
            None => PauliLabel::all(self.n).map(|a| gap(&a)).fold(0.0, f64::max),
        }
    }

    /// S̃ = Σ_a s_a |σ̂_a)(σ̂_a|Λ̄_a as a dense matrix (n ≤ 4).
    pub fn reconstruct(&self) -> Result<DMatrix<f64>> {
        if self.n > 4 {
            return Err(Error::TooManyQubits { n: self.n, max: 4 });
        }
        let dd = 1usize << (2 * self.n);
        let mut m = DMatrix::zeros(dd, dd);
        for a in PauliLabel::all(self.n) {
            let s = self.s(&a);
            for b in PauliLabel::all(self.n) {
                m[(a.index(), b.index())] = s * self.avg_entry(&a, &b);
            }
        }
        Ok(m)
    }
}

/// Smallest |f_m| accepted by the robust estimator.
pub const ROBUST_TOL: f64 = 1e-6;

/// (O|ρ) = Σ_a (O|σ̂_a)(σ̂_a|ρ).
pub fn ideal_expectation(o: &PauliObservable, rho: &StateData) -> Result<f64> {
    check_dims(o.n(), rho.n())?;
    let sd = o.dim().sqrt();
    Ok(o.terms().map(|(a, c)| sd * c * rho.component(a)).sum())
}

/// Second-moment data r_{a,a′} = Σ_{g : ω(g)σ_a, ω(g)σ_a′ diagonal} p(g) and the
/// rows (σ̂_{a+a′}|Λ̄_{a,a′} for an enumerated ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondMomentReport {
    n: usize,
    weights: DMatrix<f64>,
    /// Row a·d² + a′ holds Σ p(g)·(σ̂_{a+a′}|Λ(g).
    rows: DMatrix<f64>,
}

impl SecondMomentReport {
    pub fn n(&self) -> usize {
        self.n
    }

    /// s_{a,a′} = (−1)^{β(a,a′)} r_{a,a′}; zero for anticommuting pairs.
    pub fn coefficient(&self, a: &PauliLabel, b: &PauliLabel) -> f64 {
        let r = self.weights[(a.index(), b.index())];
        if r == 0.0 {
            return 0.0;
        }
        match a.product_sign(b) {
            Ok(true) => -r,
            Ok(false) => r,
            Err(_) => 0.0,
        }
    }

    pub fn s(&self, a: &PauliLabel) -> f64 {
        self.weights[(a.index(), a.index())]
    }

    /// s_{a,a′}/(s_a s_{a′}).
    pub fn ratio(&self, a: &PauliLabel, b: &PauliLabel) -> f64 {
        self.coefficient(a, b) / (self.s(a) * self.s(b))
    }

    /// Largest |s_{a,a′}|/(s_a s_{a′}) over all pairs.
    pub fn max_ratio(&self) -> f64 {
        let mut best: f64 = 0.0;
        for a in PauliLabel::all(self.n) {
            for b in PauliLabel::all(self.n) {
                best = best.max(self.ratio(&a, &b).abs());
            }
        }
        best
    }

    /// (σ̂_{a+a′}|Λ̄_{a,a′}|ρ).
    pub fn pair_value(&self, a: &PauliLabel, b: &PauliLabel, rho: &[f64]) -> f64 {
        let r = self.weights[(a.index(), b.index())];
        if r == 0.0 {
            return 0.0;
        }
        let dd = 1usize << (2 * self.n);
        let row = self.rows.row(a.index() * dd + b.index());
        row.iter().zip(rho).map(|(x, y)| x * y).sum::<f64>() / r
    }

    /// E[ô] recovered from the a′ = 0 pairs.
    pub fn first_moment(&self, o: &PauliObservable, rho: &StateData) -> Result<f64> {
        check_dims(self.n, o.n())?;
        let v = rho.dense()?;
        let sd = o.dim().sqrt();
        let id = PauliLabel::identity(self.n);
        Ok(o.terms().map(|(a, c)| sd * c * self.pair_value(a, &id, v)).sum())
    }

    /// E[ô²] = d^{−1/2} Σ_{[a,a′]=0} (s_{a,a′}/(s_a s_{a′}))(O|σ̂_a)(O|σ̂_{a′})(σ̂_{a+a′}|Λ̄_{a,a′}|ρ).
    pub fn second_moment(&self, o: &PauliObservable, rho: &StateData) -> Result<f64> {
        check_dims(self.n, o.n())?;
        let v = rho.dense()?;
        let d = o.dim();
        let sd = d.sqrt();
        let mut acc = 0.0;
        for (a, ca) in o.terms() {
            for (b, cb) in o.terms() {
                let ratio = self.ratio(a, b);
                if ratio != 0.0 {
                    acc += ratio * (sd * ca) * (sd * cb) * self.pair_value(a, b, v);
                }
            }
        }
        Ok(acc / sd)
    }

    pub fn variance(&self, o: &PauliObservable, rho: &StateData) -> Result<f64> {
        let m1 = self.first_moment(o, rho)?;
        Ok(self.second_moment(o, rho)? - m1 * m1)
    }
}

/// Second-moment report over an enumerated ensemble (n ≤ 3).
pub fn second_moment(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<SecondMomentReport> {
    let n = ensemble.n();
    check_dims(n, noise.n())?;
    if !ensemble.is_enumerated() {
        return Err(Error::Unsupported("exact second moments need an enumerated ensemble"));
    }
    if n > DENSE_FRAME_LIMIT {
        return Err(Error::TooManyQubits { n, max: DENSE_FRAME_LIMIT });
    }
    let dd = 1usize << (2 * n);
    let mut weights = DMatrix::<f64>::zeros(dd, dd);
    let mut rows = DMatrix::<f64>::zeros(dd * dd, dd);
    let diag: Vec<PauliLabel> = PauliLabel::all_diagonal(n).collect();
    for (g, &p) in ensemble.gates().iter().zip(ensemble.probs()) {
        if p == 0.0 {
            continue;
        }
        let lam = noise.channel(g)?;
        let gi = g.inverse();
        let pre: Vec<PauliLabel> = diag.iter().map(|z| gi.act_unchecked(z).0).collect();
        for a in &pre {
            for b in &pre {
                weights[(a.index(), b.index())] += p;
                let sum = a.add_unchecked(b).index();
                let r = a.index() * dd + b.index();
                for c in 0..dd {
                    rows[(r, c)] += p * lam.ptm()[(sum, c)];
                }
            }
        }
    }
    Ok(SecondMomentReport { n, weights, rows })
}

/// First and second moments of ô for product O = ⊗_q O_q and product ρ under a
/// uniform product ensemble with local noise, computed qubit by qubit.
pub fn product_moments(
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
    o_factors: &[PauliObservable],
    rho: &DensityState,
) -> Result<(f64, f64)> {
    let n = ensemble.n();
    check_dims(n, noise.n())?;
    check_dims(n, o_factors.len())?;
    check_dims(n, rho.n())?;
    let base = ensemble.local_base().ok_or(Error::Unsupported("ensemble is not a uniform product family"))?;
    let rho_f = rho.factor_vectors().ok_or(Error::Unsupported("state is not a product"))?;
    let local = GateEnsemble::custom(1, base.clone(), vec![1.0 / base.len() as f64; base.len()])?;
    let ideal = second_moment(&local, &NoiseModel::noiseless(1))?;
    let (mut m1_id, mut m2_id, mut m1_n, mut m2_n) = (1.0, 1.0, 1.0, 1.0);
    for q in 0..n {
        check_dims(1, o_factors[q].n())?;
        let sq = StateData { n: 1, dense: Some(rho_f[q].to_vec()), product: Some(vec![rho_f[q]]) };
        m1_id *= ideal.first_moment(&o_factors[q], &sq)?;
        m2_id *= ideal.second_moment(&o_factors[q], &sq)?;
        if !noise.is_noiseless() {
            let rule = match noise.kind() {
                NoiseKind::Local(rules) => rules[q].clone(),
                _ => return Err(Error::Unsupported("noise does not factorise over qubits")),
            };
            let rep = second_moment(&local, &NoiseModel::local(vec![rule])?)?;
            m1_n *= rep.first_moment(&o_factors[q], &sq)?;
            m2_n *= rep.second_moment(&o_factors[q], &sq)?;
        }
    }
    if noise.is_noiseless() {
        return Ok((m1_id, m2_id));
    }
    let eps = noise.mixing();
    Ok(((1.0 - eps) * m1_id + eps * m1_n, (1.0 - eps) * m2_id + eps * m2_n))
}

/// Closed-form variance bounds for uniform sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceBounds {
    /// 2(d+1)/(d+2)·𝒟(O₀)² + (d+1)/d·‖O₀‖₂².
    pub global: f64,
    /// 4^k‖O_loc‖∞² with k the support size (k ≤ 10).
    pub local_kbody: Option<f64>,
    /// c²·3^{|supp(a)|} when O = c·σ_a.
    pub local_pauli: Option<f64>,
}

pub fn variance_bounds(o: &PauliObservable) -> Result<VarianceBounds> {
    let d = o.dim();
    let o0 = o.traceless();
    let st = o0.stabilizer_norm();
    let hs = o0.hs_norm();
    let global = 2.0 * (d + 1.0) / (d + 2.0) * st * st + (d + 1.0) / d * hs * hs;
    let support = o.support();
    let k = support.count_ones() as usize;
    let local_kbody = if k == 0 {
        Some(0.0)
    } else if k <= crate::pauli::DENSE_LIMIT {
        let qubits: Vec<usize> = (0..o.n()).filter(|q| (support >> q) & 1 == 1).collect();
        let loc = o.restrict(&qubits)?;
        let norm = loc.spectral_norm()?;
        Some(4f64.powi(k as i32) * norm * norm)
    } else {
        None
    };
    let local_pauli = if o0.num_terms() == 1 && o.num_terms() == 1 {
        let (a, c) = o.terms().next().expect("one term");
        Some(c * c * 3f64.powi(a.weight() as i32))
    } else if o0.num_terms() == 0 {
        Some(0.0)
    } else {
        None
    };
    Ok(VarianceBounds { global, local_kbody, local_pauli })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_cptp, PauliChannel};
    use crate::clifford::{enumerate_group, pauli_basis_gates};
    use crate::noise::LocalRule;
    use crate::pauli::states;
    use crate::pulses::PulseSet;
    use crate::rng::stream_rng;

    /// Brute-force S̃ = Σ_g p(g) R(g)ᵀ M R(g) Λ(g) from dense transfer matrices.
    fn brute_frame(ens: &GateEnsemble, noise: &NoiseModel) -> DMatrix<f64> {
        let n = ens.n();
        let dd = 1usize << (2 * n);
        let mut m = DMatrix::zeros(dd, dd);
        for z in PauliLabel::all_diagonal(n) {
            m[(z.index(), z.index())] = 1.0;
        }
        let mut out = DMatrix::zeros(dd, dd);
        for (g, p) in ens.gates().iter().zip(ens.probs()) {
            let r = g.ptm().unwrap();
            out += r.transpose() * &m * r * noise.channel(g).unwrap().ptm() * *p;
        }
        out
    }

    #[test]
    fn ideal_frames() {
        let one = ideal_frame(&GateEnsemble::uniform_global(1).unwrap()).unwrap();
        for a in PauliLabel::all(1) {
            let want = if a.is_identity() { 1.0 } else { 1.0 / 3.0 };
            assert!((one.get(&a) - want).abs() < 1e-14);
        }
        let pb = ideal_frame(&GateEnsemble::pauli_basis(1).unwrap()).unwrap();
        assert!((pb.get(&PauliLabel::single(1, 0, Pauli::Y)) - 1.0 / 3.0).abs() < 1e-14);
        let local = GateEnsemble::local_clifford(2).unwrap();
        let t = FrameEigenvalues::Table(enumerated_s(local.gates(), local.probs(), 2));
        for a in PauliLabel::all(2) {
            assert!((t.get(&a) - 3f64.powi(-(a.weight() as i32))).abs() < 1e-12);
        }
        let bad = GateEnsemble::custom(1, vec![CliffordElement::identity(1)], vec![1.0]).unwrap();
        assert!(matches!(ideal_frame(&bad), Err(Error::SingularFrame(_))));
    }

    #[test]
    fn dense_frame_matches_brute_force_n1() {
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let mut rng = stream_rng(11, 0);
        for _ in 0..5 {
            let noise = NoiseModel::random_table(&ens, 2, &mut rng).unwrap();
            let rep = dense_frame(&ens, &noise).unwrap();
            assert!((rep.reconstruct().unwrap() - brute_frame(&ens, &noise)).camax() < 1e-13);
        }
    }

    #[test]
    fn overrotation_y_row() {
        let delta = 0.3;
        let ens = GateEnsemble::pauli_basis(1).unwrap();
        let noise = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
        let rep = noisy_frame(&ens, &noise).unwrap();
        let s = rep.reconstruct().unwrap();
        let (y, z) = (PauliLabel::single(1, 0, Pauli::Y), PauliLabel::single(1, 0, Pauli::Z));
        assert!((s[(y.index(), y.index())] - delta.cos() / 3.0).abs() < 1e-14);
        assert!((s[(y.index(), z.index())] - delta.sin() / 3.0).abs() < 1e-14);
        assert!((s - brute_frame(&ens, &noise)).camax() < 1e-14);
    }

    #[test]
    fn spoofed_fidelity_closed_form() {
        let c = 1.0 / 3f64.sqrt();
        let rho = states::rho_c(c).unwrap();
        let o = rho.as_observable().unwrap();
        let st = StateData::new(&rho).unwrap();
        let ens = GateEnsemble::pauli_basis(1).unwrap();
        for k in 0..9 {
            let delta = 0.1 * k as f64;
            let rep = noisy_frame(&ens, &NoiseModel::overrotation(1, PulseSet::BlochRotations, delta)).unwrap();
            let want = (2.0 + 2f64.sqrt() * (delta + core::f64::consts::FRAC_PI_4).sin()) / 3.0;
            assert!((rep.expectation(&o, &st).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn factorized_agrees_with_dense() {
        let ens = GateEnsemble::local_clifford(2).unwrap();
        let noise = NoiseModel::local(vec![
            LocalRule::Pulses { set: PulseSet::XyHalfPi, delta: 0.2 },
            LocalRule::BasisUndo,
        ])
        .unwrap()
        .with_mixing(0.3)
        .unwrap();
        let f = local_factorized_frame(&ens, &noise).unwrap();
        let d = dense_frame(&ens, &noise).unwrap();
        assert!((f.reconstruct().unwrap() - d.reconstruct().unwrap()).camax() < 1e-13);
        for a in PauliLabel::all(2) {
            assert!((f.avg_channel(&a).unwrap().ptm() - d.avg_channel(&a).unwrap().ptm()).camax() < 1e-13);
        }
    }

    #[test]
    fn gate_independent_left_noise_on_global_group() {
        // S̃ = |𝟙̂)(𝟙̂| + f Σ_{a≠0} |σ̂_a)(σ̂_a| with f = (Tr[ΛM] − 1)/(d² − 1)
        let mut rng = stream_rng(3, 1);
        let lam = random_cptp(1, 2, &mut rng).unwrap();
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let rep = dense_frame(&ens, &NoiseModel::left(lam.clone())).unwrap();
        let s = rep.reconstruct().unwrap();
        let tr_m = lam.ptm()[(0, 0)] + lam.ptm()[(2, 2)];
        let f = (tr_m - 1.0) / 3.0;
        let mut want = DMatrix::from_diagonal_element(4, 4, f);
        want[(0, 0)] = 1.0;
        assert!((s - want).camax() < 1e-13);
    }

    #[test]
    fn pauli_noise_averages_are_diagonal() {
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let mut rng = stream_rng(4, 0);
        let noise = NoiseModel::random_pauli_table(&ens, 0.2, &mut rng).unwrap();
        let rep = dense_frame(&ens, &noise).unwrap();
        for a in PauliLabel::all(1) {
            let ch = rep.avg_channel(&a).unwrap();
            assert!(ch.is_pauli_diagonal(1e-14));
            assert!(rep.avg_eigenvalue(&a).abs() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn prop1_bias_closed_form() {
        let eps = 0.1;
        for n in 1..=3 {
            let ens = GateEnsemble::local_clifford(n).unwrap();
            let noise = NoiseModel::basis_undo(n).with_mixing(eps).unwrap();
            let rep = noisy_frame(&ens, &noise).unwrap();
            let o = states::tensor_power(&states::magic_h_observable(), n).unwrap();
            let st = StateData::new(&DensityState::zero(n).unwrap()).unwrap();
            let want = eps * (((1.0 + 2f64.sqrt()) / 2.0).powi(n as i32) - 1.0 / dimension(n)).abs();
            assert!((rep.exact_bias(&o, &st).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_closed_form_bit_flip() {
        let eps = 0.1;
        for n in 1..=2 {
            let ens = GateEnsemble::uniform_global(n).unwrap();
            let rep = noisy_frame(&ens, &NoiseModel::bit_flip_right(n, eps).unwrap()).unwrap();
            let d = dimension(n);
            let want = (d * (1.0 - eps).powi(n as i32) - 1.0) / ((d + 1.0) * (d - 1.0));
            assert!((rep.expected_calibration().unwrap() - want).abs() < 1e-14, "{} {want}", rep.expected_calibration().unwrap());
        }
    }

    /// Σ_g p(g) Σ_x Pr(x|g) ô(g,x)² from dense vectors.
    fn brute_moments(ens: &GateEnsemble, noise: &NoiseModel, o: &PauliObservable, rho: &DensityState) -> (f64, f64) {
        let n = ens.n();
        let d = dimension(n);
        let s = ideal_frame(ens).unwrap();
        let ov: Vec<f64> = PauliLabel::all(n).map(|a| o.component(&a) / s.get(&a)).collect();
        let rv = rho.pauli_vector().unwrap();
        let ex: Vec<Vec<f64>> = (0..1usize << n)
            .map(|x| {
                let mut k = vec![num_complex::Complex64::new(0.0, 0.0); 1 << n];
                k[x] = num_complex::Complex64::new(1.0, 0.0);
                DensityState::pure(n, &k).unwrap().pauli_vector().unwrap()
            })
            .collect();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (g, p) in ens.gates().iter().zip(ens.probs()) {
            let r = g.ptm().unwrap();
            let out = &r * noise.channel(g).unwrap().ptm() * nalgebra::DVector::from_column_slice(&rv);
            for e in &ex {
                let ev = nalgebra::DVector::from_column_slice(e);
                let pr = ev.dot(&out);
                let back = r.transpose() * &ev;
                let est: f64 = ov.iter().zip(back.iter()).map(|(a, b)| a * b).sum();
                m1 += p * pr * est;
                m2 += p * pr * est * est;
            }
        }
        let _ = d;
        (m1, m2)
    }

    #[test]
    fn second_moment_matches_brute_force() {
        let mut rng = stream_rng(8, 2);
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let noise = NoiseModel::random_table(&ens, 2, &mut rng).unwrap();
        let rho = DensityState::bloch([0.3, -0.2, 0.5]).unwrap();
        let o = PauliObservable::from_terms(
            1,
            [(PauliLabel::identity(1), 0.4), (PauliLabel::single(1, 0, Pauli::X), 0.7), (PauliLabel::single(1, 0, Pauli::Z), -0.2)],
        )
        .unwrap();
        let rep = second_moment(&ens, &noise).unwrap();
        let st = StateData::new(&rho).unwrap();
        let (m1, m2) = brute_moments(&ens, &noise, &o, &rho);
        assert!((rep.first_moment(&o, &st).unwrap() - m1).abs() < 1e-12);
        assert!((rep.second_moment(&o, &st).unwrap() - m2).abs() < 1e-12);
        let fr = dense_frame(&ens, &noise).unwrap();
        assert!((fr.expectation(&o, &st).unwrap() - m1).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_coefficient_cases() {
        let rep = second_moment(&GateEnsemble::uniform_global(1).unwrap(), &NoiseModel::noiseless(1)).unwrap();
        for a in PauliLabel::all(1) {
            assert!((rep.s(&a) - if a.is_identity() { 1.0 } else { 1.0 / 3.0 }).abs() < 1e-14);
            for b in PauliLabel::all(1) {
                let want = if a.is_identity() || b.is_identity() {
                    1.0
                } else if a == b {
                    3.0
                } else {
                    0.0
                };
                assert!((rep.ratio(&a, &b) - want).abs() < 1e-12);
            }
        }
        assert!((rep.max_ratio() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn product_moments_match_enumeration() {
        let ens = GateEnsemble::local_clifford(2).unwrap();
        let noise = NoiseModel::local(vec![LocalRule::BasisUndo, LocalRule::Pulses { set: PulseSet::XyHalfPi, delta: 0.4 }])
            .unwrap()
            .with_mixing(0.6)
            .unwrap();
        let ox = PauliObservable::from_terms(1, [(PauliLabel::identity(1), 0.5), (PauliLabel::single(1, 0, Pauli::X), 0.5)]).unwrap();
        let oz = PauliObservable::pauli(PauliLabel::single(1, 0, Pauli::Z), 1.0);
        let rho = DensityState::product(vec![
            DensityState::bloch([0.6, 0.0, 0.8]).unwrap().dense().unwrap().clone(),
            DensityState::bloch([0.0, 0.3, -0.4]).unwrap().dense().unwrap().clone(),
        ])
        .unwrap();
        let (m1, m2) = product_moments(&ens, &noise, &[ox.clone(), oz.clone()], &rho).unwrap();
        let o = ox.tensor(&oz).unwrap();
        let (b1, b2) = brute_moments(&ens, &noise, &o, &rho);
        assert!((m1 - b1).abs() < 1e-12 && (m2 - b2).abs() < 1e-12);
    }

    #[test]
    fn variance_bounds_examples() {
        let z = PauliObservable::pauli(PauliLabel::single(3, 0, Pauli::Z), 1.0);
        let vb = variance_bounds(&z).unwrap();
        assert_eq!(vb.local_pauli, Some(3.0));
        assert!((vb.local_kbody.unwrap() - 4.0).abs() < 1e-12);
        let zz = PauliObservable::pauli(PauliLabel::from_letters(&[Pauli::Z, Pauli::Z]), 1.0);
        assert!((variance_bounds(&zz).unwrap().local_kbody.unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(variance_bounds(&PauliObservable::identity(2).scale(0.25)).unwrap().global, 0.0);
    }

    #[test]
    fn unitary_distances_for_rotation_models() {
        let rep = noisy_frame(&GateEnsemble::pauli_basis(1).unwrap(), &NoiseModel::overrotation(1, PulseSet::BlochRotations, 0.2))
            .unwrap();
        let d = rep.max_channel_distance(None).unwrap();
        assert!(d.value <= 2.0 * 0.1f64.sin() + 1e-12, "{d:?}");
        let bf = noisy_frame(&GateEnsemble::uniform_global(1).unwrap(), &NoiseModel::bit_flip_right(1, 0.05).unwrap()).unwrap();
        let dd = bf.max_channel_distance(None).unwrap();
        assert!(dd.exact && (dd.value - 0.1).abs() < 1e-14);
        let _ = (PauliChannel::bit_flip(0.1), pauli_basis_gates(), enumerate_group(1));
    }
}
