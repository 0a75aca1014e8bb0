//! The sampled protocol: draw g, apply ω(g)Λ(g) to ρ, measure x, evaluate ô(g, x).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::clifford::{CliffordElement, GateEnsemble};
use crate::error::{check_dims, Error, Result};
use crate::frame::{gate_independent, FrameEigenvalues, StateData, ROBUST_TOL};
use crate::noise::{NoiseKind, NoiseModel};
use crate::pauli::{dimension, DensityState, Pauli, PauliLabel, PauliObservable};
use crate::rng::stream_rng;
use crate::stats::{median, median_of_means, Moments};

/// Largest qubit count for dense shot simulation.
pub const DENSE_SHOT_LIMIT: usize = 6;

const PROB_TOL: f64 = 1e-10;

/// Identifies the gate drawn for a shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateRef {
    /// Index into an enumerated ensemble.
    Index(usize),
    /// Per-qubit indices into the single-qubit base set of a product family.
    Local(Vec<u8>),
    /// A freshly sampled element.
    Element(CliffordElement),
}

impl GateRef {
    /// Compact text id: the index, dot-separated local indices, or the tableau hex.
    pub fn id(&self) -> String {
        match self {
            GateRef::Index(i) => format!("{i}"),
            GateRef::Local(v) => v.iter().map(|i| format!("{i}")).collect::<Vec<_>>().join("."),
            GateRef::Element(g) => g.to_bytes().iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

/// One round of the protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowSample {
    pub shot: u64,
    pub gate: GateRef,
    /// Outcome bits, bit q for qubit q.
    pub outcome: u64,
}

/// Sign and image letter of ω(h)(σ) for the four single-qubit Paulis.
type LocalImage = [(Pauli, bool); 4];

fn local_images(h: &CliffordElement) -> LocalImage {
    let mut out = [(Pauli::I, false); 4];
    for p in Pauli::ALL {
        let (img, neg) = h.act_unchecked(&PauliLabel::single(1, 0, p));
        out[p as usize] = (img.letter(0), neg);
    }
    out
}

fn parity(x: u64) -> f64 {
    if x.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Linear estimator ô(g, x) = Σ_a w_a (σ_a|ω(g)†|E_x)·√d with w_a = c_a/s_a
/// (standard) or c_a(d+1)/f_m for a ≠ 0 (robust).
#[derive(Clone, Debug, PartialEq)]
pub struct Estimator {
    n: usize,
    terms: Vec<(PauliLabel, f64)>,
    robust: Option<f64>,
}

impl Estimator {
    /// ô = (O|S⁻¹ω(g)†|E_x).
    pub fn standard(o: &PauliObservable, frame: &FrameEigenvalues) -> Result<Self> {
        check_dims(frame.n(), o.n())?;
        let mut terms = Vec::with_capacity(o.num_terms());
        for (a, c) in o.terms() {
            let s = frame.get(a);
            if s.abs() < 1e-14 {
                return Err(Error::SingularFrame(vec![a.to_string()]));
            }
            terms.push((*a, c / s));
        }
        Ok(Estimator { n: o.n(), terms, robust: None })
    }

    /// ô_RS = (O|(|𝟙̂)(𝟙̂| + ((d+1)/f_m) Σ_{a≠0}|σ̂_a)(σ̂_a|)ω(g)†|E_x).
    pub fn robust(o: &PauliObservable, f_m: f64) -> Result<Self> {
        if !(f_m.abs() >= ROBUST_TOL) {
            return Err(Error::InvalidParameter { name: "f_m", value: f_m });
        }
        let scale = (o.dim() + 1.0) / f_m;
        let terms = o.terms().map(|(a, c)| (*a, if a.is_identity() { *c } else { c * scale })).collect();
        Ok(Estimator { n: o.n(), terms, robust: Some(f_m) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_robust(&self) -> bool {
        self.robust.is_some()
    }

    /// Evaluates the estimator for a full tableau.
    pub fn evaluate(&self, g: &CliffordElement, x: u64) -> f64 {
        let mut acc = 0.0;
        for (a, w) in &self.terms {
            let (b, neg) = g.act_unchecked(a);
            if b.is_diagonal() {
                let v = w * parity(b.z_mask() & x);
                acc += if neg { -v } else { v };
            }
        }
        acc
    }

    fn evaluate_local(&self, images: &[LocalImage], gates: &[u8], x: u64) -> f64 {
        let mut acc = 0.0;
        'terms: for (a, w) in &self.terms {
            let mut v = *w;
            let mut s = a.support();
            while s != 0 {
                let q = s.trailing_zeros() as usize;
                s &= s - 1;
                let (img, neg) = images[gates[q] as usize][a.letter(q) as usize];
                match img {
                    Pauli::Z => {
                        if (x >> q) & 1 == 1 {
                            v = -v;
                        }
                    }
                    Pauli::I => {}
                    _ => continue 'terms,
                }
                if neg {
                    v = -v;
                }
            }
            acc += v;
        }
        acc
    }
}

/// Outcome distribution Pr(x) = (E_x|ω(g)|y) for y = Λ(g)ρ, via
/// (Ẑ_z|ω(g)|y) = ±y_a where ω(g)†(Z_z) = ±σ_a.
fn outcome_probs(n: usize, g_inv: &CliffordElement, y: impl Fn(&PauliLabel) -> f64) -> Result<Vec<f64>> {
    let d = 1usize << n;
    let t: Vec<(u64, f64)> = PauliLabel::all_diagonal(n)
        .map(|z| {
            let (a, neg) = g_inv.act_unchecked(&z);
            let v = y(&a);
            (z.z_mask(), if neg { -v } else { v })
        })
        .collect();
    let norm = 1.0 / dimension(n).sqrt();
    let probs: Vec<f64> =
        (0..d as u64).map(|x| norm * t.iter().map(|(z, v)| parity(z & x) * v).sum::<f64>()).collect();
    check_distribution(&probs)?;
    Ok(probs)
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("outcome probabilities sum to {total}")));
    }
    if let Some(p) = probs.iter().find(|p| **p < -PROB_TOL) {
        return Err(Error::InvalidDistribution(format!("negative outcome probability {p:e}")));
    }
    Ok(())
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p.max(0.0);
            acc
        })
        .collect()
}

fn draw(cum: &[f64], rng: &mut (impl Rng + ?Sized)) -> u64 {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u64
}

/// Λ(g)ρ as a dense normalised Pauli vector.
fn noisy_state_vector(noise: &NoiseModel, g: &CliffordElement, rho: &StateData) -> Result<Vec<f64>> {
    let dense = rho.dense()?;
    if noise.is_noiseless() {
        return Ok(dense.to_vec());
    }
    if let (NoiseKind::Local(_), Some(r)) = (noise.kind(), rho.product()) {
        let factors = match g.local_factors() {
            Some(f) => f,
            None if gate_independent(noise) => vec![CliffordElement::identity(1); g.n()],
            None => return Err(Error::Unsupported("gate-dependent local noise needs a product gate")),
        };
        let mut v = vec![1.0];
        for (q, h) in factors.iter().enumerate() {
            let f = noise.local_channel(q, h)?.apply(&r[q])?;
            let mut next = Vec::with_capacity(v.len() * 4);
            for a in &v {
                for b in &f {
                    next.push(a * b);
                }
            }
            v = next;
        }
        let eps = noise.mixing();
        return Ok(v.iter().zip(dense).map(|(n, i)| (1.0 - eps) * i + eps * n).collect());
    }
    noise.channel(g)?.apply(dense)
}

enum Mode {
    /// Per-gate cumulative outcome distributions of an enumerated ensemble.
    Table { cumulative: Vec<Vec<f64>> },
    /// Gates sampled on demand; `fixed` caches Λρ for gate-independent noise.
    OnTheFly { rho: StateData, fixed: Option<Vec<f64>> },
    /// Qubit-by-qubit simulation of product ensembles, noise and states.
    Product {
        images: Vec<LocalImage>,
        /// Pr(x_q = 1) for the ideal and noisy branch, indexed [q][gate].
        p_ideal: Vec<Vec<f64>>,
        p_noisy: Vec<Vec<f64>>,
        mixing: f64,
    },
}

/// Prepared shot sampler for a fixed (ensemble, noise, ρ).
pub struct ShadowSimulator<'a> {
    ensemble: &'a GateEnsemble,
    noise: &'a NoiseModel,
    mode: Mode,
}

impl<'a> ShadowSimulator<'a> {
    /// Picks the qubit-by-qubit path when everything factorises, else a dense one.
    pub fn new(ensemble: &'a GateEnsemble, noise: &'a NoiseModel, rho: &DensityState) -> Result<Self> {
        if ensemble.local_base().is_some() && noise.is_local() && rho.factors().is_some() {
            return ShadowSimulator::product(ensemble, noise, rho);
        }
        ShadowSimulator::dense(ensemble, noise, rho)
    }

    /// Dense simulation (n ≤ 6).
    pub fn dense(ensemble: &'a GateEnsemble, noise: &'a NoiseModel, rho: &DensityState) -> Result<Self> {
        let n = ensemble.n();
        check_dims(n, noise.n())?;
        check_dims(n, rho.n())?;
        if n > DENSE_SHOT_LIMIT {
            return Err(Error::TooManyQubits { n, max: DENSE_SHOT_LIMIT });
        }
        let st = StateData::new(rho)?;
        let mode = if ensemble.is_enumerated() {
            let mut cum = Vec::with_capacity(ensemble.len());
            for g in ensemble.gates() {
                let y = noisy_state_vector(noise, g, &st)?;
                let probs = outcome_probs(n, &g.inverse(), |a| y[a.index()])?;
                cum.push(cumulative(&probs));
            }
            Mode::Table { cumulative: cum }
        } else {
            let fixed = if gate_independent(noise) {
                Some(noisy_state_vector(noise, &CliffordElement::identity(n), &st)?)
            } else {
                None
            };
            Mode::OnTheFly { rho: st, fixed }
        };
        Ok(ShadowSimulator { ensemble, noise, mode })
    }

    /// Qubit-by-qubit simulation for product ensembles, local noise and product ρ.
    pub fn product(ensemble: &'a GateEnsemble, noise: &'a NoiseModel, rho: &DensityState) -> Result<Self> {
        let n = ensemble.n();
        check_dims(n, noise.n())?;
        check_dims(n, rho.n())?;
        let base = ensemble.local_base().ok_or(Error::Unsupported("ensemble is not a uniform product family"))?;
        let r = rho.factor_vectors().ok_or(Error::Unsupported("state is not a product"))?;
        if !noise.is_local() {
            return Err(Error::Unsupported("noise does not factorise over qubits"));
        }
        let images: Vec<LocalImage> = base.iter().map(local_images).collect();
        let mut p_ideal = Vec::with_capacity(n);
        let mut p_noisy = Vec::with_capacity(n);
        for (q, rq) in r.iter().enumerate() {
            let mut pi = Vec::with_capacity(base.len());
            let mut pn = Vec::with_capacity(base.len());
            for h in &base {
                let hi = h.inverse();
                let one = |y: &[f64]| -> Result<f64> {
                    let probs = outcome_probs(1, &hi, |a| y[a.index()])?;
                    Ok(probs[1].clamp(0.0, 1.0))
                };
                pi.push(one(rq)?);
                let y = noise.local_channel(q, h)?.apply(rq)?;
                pn.push(one(&y)?);
            }
            p_ideal.push(pi);
            p_noisy.push(pn);
        }
        let mixing = if noise.is_noiseless() { 0.0 } else { noise.mixing() };
        Ok(ShadowSimulator { ensemble, noise, mode: Mode::Product { images, p_ideal, p_noisy, mixing } })
    }

    pub fn n(&self) -> usize {
        self.ensemble.n()
    }

    pub fn is_product(&self) -> bool {
        matches!(self.mode, Mode::Product { .. })
    }

    /// Draws (g, x) for one shot.
    pub fn simulate_shot<R: Rng + ?Sized>(&self, shot: u64, rng: &mut R) -> Result<ShadowSample> {
        let n = self.n();
        match &self.mode {
            Mode::Table { cumulative } => {
                let i = self.ensemble.sample_index(rng);
                let x = draw(&cumulative[i], rng);
                Ok(ShadowSample { shot, gate: GateRef::Index(i), outcome: x })
            }
            Mode::OnTheFly { rho, fixed } => {
                let g = self.ensemble.sample(rng)?;
                let y = match fixed {
                    Some(v) => v.clone(),
                    None => noisy_state_vector(self.noise, &g, rho)?,
                };
                let probs = outcome_probs(n, &g.inverse(), |a| y[a.index()])?;
                let x = draw(&cumulative(&probs), rng);
                Ok(ShadowSample { shot, gate: GateRef::Element(g), outcome: x })
            }
            Mode::Product { images, p_ideal, p_noisy, mixing } => {
                let k = images.len();
                let gates: Vec<u8> = (0..n).map(|_| rng.random_range(0..k) as u8).collect();
                let noisy = *mixing > 0.0 && (*mixing >= 1.0 || rng.random::<f64>() < *mixing);
                let table = if noisy { p_noisy } else { p_ideal };
                let mut x = 0u64;
                for q in 0..n {
                    if rng.random::<f64>() < table[q][gates[q] as usize] {
                        x |= 1 << q;
                    }
                }
                Ok(ShadowSample { shot, gate: GateRef::Local(gates), outcome: x })
            }
        }
    }

    /// ô(g, x) for a sample drawn by this simulator.
    pub fn evaluate(&self, est: &Estimator, sample: &ShadowSample) -> Result<f64> {
        check_dims(self.n(), est.n())?;
        match (&sample.gate, &self.mode) {
            (GateRef::Local(gs), Mode::Product { images, .. }) => Ok(est.evaluate_local(images, gs, sample.outcome)),
            (GateRef::Index(i), _) => {
                let g = self.ensemble.gates().get(*i).ok_or(Error::Malformed("gate index out of range"))?;
                Ok(est.evaluate(g, sample.outcome))
            }
            (GateRef::Element(g), _) => Ok(est.evaluate(g, sample.outcome)),
            _ => Err(Error::Malformed("sample does not belong to this simulator")),
        }
    }

    /// f̂(g, x) = (d(E_x|ω(g)|E₀) − 1)/(d − 1).
    pub fn calibration_value(&self, sample: &ShadowSample) -> Result<f64> {
        let n = self.n();
        let d = dimension(n);
        let ret = match (&sample.gate, &self.mode) {
            (GateRef::Local(gs), Mode::Product { images, .. }) => {
                // |⟨x_q|h_q|0⟩|² = (1 ± [ω(h)†Z diagonal])/2 per qubit
                let mut prod = 1.0;
                for q in 0..n {
                    let img = &images[gs[q] as usize];
                    let mut zpre = None;
                    for p in Pauli::ALL {
                        if img[p as usize].0 == Pauli::Z {
                            zpre = Some((p, img[p as usize].1));
                        }
                    }
                    let (pre, neg) = zpre.ok_or(Error::NotClifford("no preimage of Z"))?;
                    let v = match pre {
                        Pauli::Z | Pauli::I => {
                            let s = if neg { -1.0 } else { 1.0 };
                            let bit = if (sample.outcome >> q) & 1 == 1 { -1.0 } else { 1.0 };
                            0.5 * (1.0 + s * bit)
                        }
                        _ => 0.5,
                    };
                    prod *= v;
                }
                prod
            }
            (GateRef::Index(i), _) => zero_return(&self.ensemble.gates()[*i], sample.outcome),
            (GateRef::Element(g), _) => zero_return(g, sample.outcome),
            _ => return Err(Error::Malformed("sample does not belong to this simulator")),
        };
        Ok((d * ret - 1.0) / (d - 1.0))
    }
}

/// (E_x|ω(g)|E₀) = d⁻¹ Σ_z (−1)^{z·x} ±[ω(g)†(Z_z) diagonal].
fn zero_return(g: &CliffordElement, x: u64) -> f64 {
    let n = g.n();
    let gi = g.inverse();
    let mut acc = 0.0;
    for z in PauliLabel::all_diagonal(n) {
        let (a, neg) = gi.act_unchecked(&z);
        if a.is_diagonal() {
            let v = parity(z.z_mask() & x);
            acc += if neg { -v } else { v };
        }
    }
    acc / dimension(n)
}

/// ô(g, x) for a single sample with the analytic or enumerated ideal frame.
pub fn evaluate_estimator(o: &PauliObservable, sample: &ShadowSample, ensemble: &GateEnsemble) -> Result<f64> {
    let frame = crate::frame::ideal_frame(ensemble)?;
    let est = Estimator::standard(o, &frame)?;
    match &sample.gate {
        GateRef::Index(i) => Ok(est.evaluate(ensemble.gates().get(*i).ok_or(Error::Malformed("gate index"))?, sample.outcome)),
        GateRef::Element(g) => Ok(est.evaluate(g, sample.outcome)),
        GateRef::Local(gs) => {
            let base = ensemble.local_base().ok_or(Error::Malformed("local sample for a non-product ensemble"))?;
            let images: Vec<LocalImage> = base.iter().map(local_images).collect();
            Ok(est.evaluate_local(&images, gs, sample.outcome))
        }
    }
}

/// Summary of a sampled estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub mean: f64,
    pub median_of_means: f64,
    /// Sample standard deviation over √shots.
    pub standard_error: f64,
    pub variance: f64,
    pub shots: u64,
    pub batches: usize,
    pub robust: bool,
}

impl EstimateResult {
    /// Combines per-batch moments; batch order does not affect the result.
    pub fn from_batches(batches: &[Moments], robust: bool) -> Self {
        let mut total = Moments::default();
        for b in batches {
            total.merge(b);
        }
        let means: Vec<f64> = batches.iter().filter(|b| b.count > 0).map(|b| b.mean()).collect();
        EstimateResult {
            mean: total.mean(),
            median_of_means: median(&means),
            standard_error: total.standard_error(),
            variance: total.variance(),
            shots: total.count,
            batches: batches.len(),
            robust,
        }
    }
}

/// Shot count of batch `b` when `shots` are split over `batches`.
pub fn batch_shots(shots: u64, batches: usize, b: usize) -> u64 {
    let k = batches as u64;
    shots / k + u64::from((b as u64) < shots % k)
}

/// First shot index of batch `b`.
pub fn batch_offset(shots: u64, batches: usize, b: usize) -> u64 {
    (0..b).map(|i| batch_shots(shots, batches, i)).sum()
}

/// Runs one batch with its own stream `stream_rng(seed, b)`; optionally records samples.
pub fn run_batch(
    sim: &ShadowSimulator<'_>,
    est: &Estimator,
    seed: u64,
    b: usize,
    shots: u64,
    offset: u64,
    mut record: Option<&mut Vec<(ShadowSample, f64)>>,
) -> Result<Moments> {
    let mut rng = stream_rng(seed, b as u64);
    let mut m = Moments::default();
    for i in 0..shots {
        let s = sim.simulate_shot(offset + i, &mut rng)?;
        let v = sim.evaluate(est, &s)?;
        m.push(v);
        if let Some(r) = record.as_deref_mut() {
            r.push((s, v));
        }
    }
    Ok(m)
}

fn check_budget(shots: u64, batches: usize) -> Result<()> {
    if batches == 0 || shots < batches as u64 {
        return Err(Error::InvalidParameter { name: "batches", value: batches as f64 });
    }
    Ok(())
}

/// Standard (or robust, via `est`) shadow estimate over `batches` independent streams.
pub fn run_shadow(
    sim: &ShadowSimulator<'_>,
    est: &Estimator,
    shots: u64,
    batches: usize,
    seed: u64,
) -> Result<EstimateResult> {
    check_budget(shots, batches)?;
    let mut ms = Vec::with_capacity(batches);
    for b in 0..batches {
        let k = batch_shots(shots, batches, b);
        ms.push(run_batch(sim, est, seed, b, k, batch_offset(shots, batches, b), None)?);
    }
    Ok(EstimateResult::from_batches(&ms, est.is_robust()))
}

/// Calibration values f̂ for one batch, run on |0…0⟩.
pub fn calibration_batch(sim: &ShadowSimulator<'_>, seed: u64, b: usize, shots: u64, offset: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, b as u64);
    let mut out = Vec::with_capacity(shots as usize);
    for i in 0..shots {
        let s = sim.simulate_shot(offset + i, &mut rng)?;
        out.push(sim.calibration_value(&s)?);
    }
    Ok(out)
}

/// Result of the robust-shadow calibration run.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    /// Plain mean of f̂.
    pub mean: f64,
    pub standard_error: f64,
    /// f̂_m = (d + 1)·median-of-means(f̂).
    pub f_m: f64,
    pub shots: u64,
    pub mom_batches: usize,
}

impl CalibrationResult {
    pub fn from_values(n: usize, values: &[f64], mom_batches: usize) -> Self {
        let mut m = Moments::default();
        values.iter().for_each(|v| m.push(*v));
        let d = dimension(n);
        CalibrationResult {
            mean: m.mean(),
            standard_error: m.standard_error(),
            f_m: (d + 1.0) * median_of_means(values, mom_batches),
            shots: m.count,
            mom_batches,
        }
    }
}

/// Default median-of-means batch count max(1, ⌊√shots⌋).
pub fn default_mom_batches(shots: u64) -> usize {
    ((shots as f64).sqrt().floor() as usize).max(1)
}

/// Calibrates f̂_m by running the protocol on the noiselessly prepared |0…0⟩.
pub fn calibrate_rse(
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
    shots: u64,
    batches: usize,
    mom_batches: Option<usize>,
    seed: u64,
) -> Result<CalibrationResult> {
    check_budget(shots, batches)?;
    let zero = DensityState::zero(ensemble.n())?;
    let sim = ShadowSimulator::new(ensemble, noise, &zero)?;
    let mut values = Vec::with_capacity(shots as usize);
    for b in 0..batches {
        let k = batch_shots(shots, batches, b);
        values.extend(calibration_batch(&sim, seed, b, k, batch_offset(shots, batches, b))?);
    }
    Ok(CalibrationResult::from_values(ensemble.n(), &values, mom_batches.unwrap_or(default_mom_batches(shots))))
}

/// Robust shadow estimate with a calibrated f̂_m.
pub fn run_robust_shadow(
    o: &PauliObservable,
    sim: &ShadowSimulator<'_>,
    f_m: f64,
    shots: u64,
    batches: usize,
    seed: u64,
) -> Result<EstimateResult> {
    let est = Estimator::robust(o, f_m)?;
    run_shadow(sim, &est, shots, batches, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{ideal_frame, noisy_frame, StateData};
    use crate::noise::LocalRule;
    use crate::pauli::states;
    use crate::pulses::{Pulse, PulseSet};
    use num_complex::Complex64;

    #[test]
    fn zero_state_identity_gate_is_deterministic() {
        let ens = GateEnsemble::custom(1, vec![CliffordElement::identity(1)], vec![1.0]).unwrap();
        let noise = NoiseModel::noiseless(1);
        let sim = ShadowSimulator::dense(&ens, &noise, &DensityState::zero(1).unwrap()).unwrap();
        let mut rng = stream_rng(1, 0);
        for i in 0..100 {
            assert_eq!(sim.simulate_shot(i, &mut rng).unwrap().outcome, 0);
        }
    }

    #[test]
    fn x90_gives_fair_coin() {
        let g = Pulse::XPlus.clifford();
        let y = DensityState::zero(1).unwrap().pauli_vector().unwrap();
        let probs = outcome_probs(1, &g.inverse(), |a| y[a.index()]).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-15 && (probs[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotated_bloch_vector_probabilities() {
        // φ(g₁) = ω(X₊₉₀)Λ: Pr(1) = (1 − (Z|φ|ρ)√2... )/2 from the PTM row
        let delta = 0.3;
        let noise = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
        let g = Pulse::XPlus.clifford();
        let rho = DensityState::bloch([0.2, 0.5, -0.4]).unwrap();
        let st = StateData::new(&rho).unwrap();
        let y = noisy_state_vector(&noise, &g, &st).unwrap();
        let probs = outcome_probs(1, &g.inverse(), |a| y[a.index()]).unwrap();
        let phi = crate::channel::TransferChannel::from_clifford(&g).unwrap().compose(&noise.channel(&g).unwrap()).unwrap();
        let zrow = phi.row_dot(2, st.dense().unwrap());
        let want1 = 0.5 - zrow / 2f64.sqrt();
        assert!((probs[1] - want1).abs() < 1e-14);
    }

    #[test]
    fn local_estimator_values() {
        // O = Z on one qubit: ô = ±3 when ω(g)(Z) is ±Z, else 0
        let ens = GateEnsemble::local_clifford(1).unwrap();
        let o = PauliObservable::pauli(PauliLabel::single(1, 0, Pauli::Z), 1.0);
        let frame = ideal_frame(&ens).unwrap();
        let est = Estimator::standard(&o, &frame).unwrap();
        let mut counts = [0usize; 3];
        for g in ens.gates() {
            for x in 0..2 {
                let v = est.evaluate(g, x);
                let k = if (v - 3.0).abs() < 1e-12 {
                    0
                } else if (v + 3.0).abs() < 1e-12 {
                    1
                } else {
                    assert!(v.abs() < 1e-12);
                    2
                };
                counts[k] += 1;
            }
        }
        assert_eq!(counts, [8, 8, 32]);
        let id = PauliObservable::identity(2).scale(0.25);
        let e2 = Estimator::standard(&id, &FrameEigenvalues::Global { n: 2 }).unwrap();
        assert!((e2.evaluate(&CliffordElement::cnot(2, 0, 1), 3) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_and_dense_paths_agree_exactly_in_distribution() {
        let ens = GateEnsemble::local_clifford(2).unwrap();
        let noise = NoiseModel::local(vec![LocalRule::BasisUndo, LocalRule::Pulses { set: PulseSet::XyHalfPi, delta: 0.3 }])
            .unwrap()
            .with_mixing(0.4)
            .unwrap();
        let rho = DensityState::product(vec![
            DensityState::bloch([0.6, 0.0, 0.8]).unwrap().dense().unwrap().clone(),
            DensityState::bloch([0.0, 0.3, -0.4]).unwrap().dense().unwrap().clone(),
        ])
        .unwrap();
        let dense = ShadowSimulator::dense(&ens, &noise, &rho).unwrap();
        let prod = ShadowSimulator::product(&ens, &noise, &rho).unwrap();
        let Mode::Product { p_ideal, p_noisy, mixing, .. } = &prod.mode else { panic!() };
        let Mode::Table { cumulative } = &dense.mode else { panic!() };
        // gate index i of the enumeration is (i / 24, i % 24) on (qubit 0, qubit 1)
        for (i, cum) in cumulative.iter().enumerate() {
            let (h0, h1) = (i / 24, i % 24);
            let pr = |t: &Vec<Vec<f64>>, x: u64| {
                let b0 = if x & 1 == 1 { t[0][h0] } else { 1.0 - t[0][h0] };
                let b1 = if x & 2 == 2 { t[1][h1] } else { 1.0 - t[1][h1] };
                b0 * b1
            };
            for x in 0..4u64 {
                let want = (1.0 - mixing) * pr(p_ideal, x) + mixing * pr(p_noisy, x);
                let got = cum[x as usize] - if x == 0 { 0.0 } else { cum[x as usize - 1] };
                assert!((got - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn noiseless_estimates_are_unbiased() {
        let rho = states::plus();
        let o = states::plus_observable();
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let noise = NoiseModel::noiseless(1);
        let sim = ShadowSimulator::new(&ens, &noise, &rho).unwrap();
        let est = Estimator::standard(&o, &ideal_frame(&ens).unwrap()).unwrap();
        let r = run_shadow(&sim, &est, 20_000, 4, 7).unwrap();
        assert!((r.mean - 1.0).abs() < 4.0 * r.standard_error);
        let again = run_shadow(&sim, &est, 20_000, 4, 7).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn sampled_mean_tracks_exact_prediction() {
        let c = 0.3;
        let rho = states::rho_c(c).unwrap();
        let o = rho.as_observable().unwrap();
        let ens = GateEnsemble::pauli_basis(1).unwrap();
        let noise = NoiseModel::overrotation(1, PulseSet::BlochRotations, 0.4);
        let exact = noisy_frame(&ens, &noise).unwrap().expectation(&o, &StateData::new(&rho).unwrap()).unwrap();
        for sim in [ShadowSimulator::dense(&ens, &noise, &rho).unwrap(), ShadowSimulator::product(&ens, &noise, &rho).unwrap()] {
            let est = Estimator::standard(&o, &ideal_frame(&ens).unwrap()).unwrap();
            let r = run_shadow(&sim, &est, 40_000, 8, 3).unwrap();
            assert!((r.mean - exact).abs() < 4.0 * r.standard_error, "{} vs {exact}", r.mean);
        }
    }

    #[test]
    fn calibration_matches_expected_value() {
        let ens = GateEnsemble::uniform_global(2).unwrap();
        let noise = NoiseModel::bit_flip_right(2, 0.1).unwrap();
        let cal = calibrate_rse(&ens, &noise, 40_000, 4, None, 9).unwrap();
        let want = noisy_frame(&ens, &noise).unwrap().expected_calibration().unwrap();
        assert!((cal.mean - want).abs() < 4.0 * cal.standard_error);
        let noiseless = calibrate_rse(&ens, &NoiseModel::noiseless(2), 10_000, 2, None, 1).unwrap();
        assert!((noiseless.mean - 0.2).abs() < 4.0 * noiseless.standard_error);
    }

    #[test]
    fn product_calibration_values_match_tableau() {
        let ens = GateEnsemble::local_clifford(2).unwrap();
        let noise = NoiseModel::noiseless(2);
        let zero = DensityState::zero(2).unwrap();
        let sim = ShadowSimulator::product(&ens, &noise, &zero).unwrap();
        let base = ens.local_base().unwrap();
        let mut rng = stream_rng(2, 2);
        for i in 0..200 {
            let s = sim.simulate_shot(i, &mut rng).unwrap();
            let GateRef::Local(gs) = &s.gate else { panic!() };
            let g = base[gs[0] as usize].tensor(&base[gs[1] as usize]).unwrap();
            let direct = (4.0 * zero_return(&g, s.outcome) - 1.0) / 3.0;
            assert!((sim.calibration_value(&s).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn robust_refuses_tiny_parameter() {
        let o = states::plus_observable();
        assert!(Estimator::robust(&o, 1e-9).is_err());
        let ok = Estimator::robust(&o, 1.0).unwrap();
        let std_est = Estimator::standard(&o, &FrameEigenvalues::Global { n: 1 }).unwrap();
        let g = Pulse::YPlus.clifford();
        assert!((ok.evaluate(&g, 1) - std_est.evaluate(&g, 1)).abs() < 1e-14);
    }

    #[test]
    fn non_cp_models_abort() {
        let bad = crate::channel::TransferChannel::from_ptm(1, nalgebra::DMatrix::from_diagonal_element(4, 4, 1.5)).unwrap();
        let noise = NoiseModel::right(bad);
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let rho = DensityState::pure(1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert!(ShadowSimulator::dense(&ens, &noise, &rho).is_err());
    }

    #[test]
    fn batch_split_covers_all_shots() {
        assert_eq!((0..7).map(|b| batch_shots(100, 7, b)).sum::<u64>(), 100);
        assert_eq!(batch_offset(100, 7, 2), 30);
    }
}
