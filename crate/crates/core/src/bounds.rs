//! Closed-form bias bounds, the mitigation-region classifier and concentration checks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{DistanceEstimate, PauliChannel};
use crate::clifford::{CliffordElement, GateEnsemble};
use crate::error::{check_dims, Error, Result};
use crate::frame::{
    gate_independent, ideal_expectation, ideal_frame, noisy_frame, product_moments, second_moment, variance_bounds,
    FrameReport, StateData, VarianceBounds,
};
use crate::noise::{NoiseKind, NoiseModel};
use crate::pauli::{dimension, DensityState, Pauli, PauliLabel, PauliObservable, DENSE_LIMIT};
use crate::rng::stream_rng;
use crate::shadow::{run_batch, Estimator, ShadowSimulator};
use crate::stats::Moments;

/// max_g ‖id − Λ(g)‖⋄ over the ensemble.
///
/// Lazily represented product ensembles use Σ_q max_h ‖id − Λ_q(h)‖⋄ (a bound unless
/// only one qubit is noisy).
pub fn max_gate_distance(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<DistanceEstimate> {
    let n = ensemble.n();
    check_dims(n, noise.n())?;
    if noise.is_noiseless() {
        return Ok(DistanceEstimate::exact(0.0));
    }
    if ensemble.is_enumerated() {
        let mut best = DistanceEstimate::exact(0.0);
        for g in ensemble.gates() {
            best = best.max(noise.gate_distance(g)?);
        }
        return Ok(best);
    }
    if gate_independent(noise) || matches!(noise.kind(), NoiseKind::Left(_)) {
        // conjugating Λ by ω(g) leaves the distance unchanged
        return noise.gate_distance(&CliffordElement::identity(n));
    }
    if let (Some(base), NoiseKind::Local(_)) = (ensemble.local_base(), noise.kind()) {
        let mut total = 0.0;
        let mut noisy_qubits = 0;
        let mut exact = true;
        for q in 0..n {
            let mut best = DistanceEstimate::exact(0.0);
            for h in &base {
                best = best.max(noise.local_channel(q, h)?.distance_to_identity());
            }
            if best.value > 0.0 {
                noisy_qubits += 1;
                exact &= best.exact;
            }
            total += best.value;
        }
        let d = if noisy_qubits <= 1 && exact {
            DistanceEstimate::exact(total)
        } else {
            DistanceEstimate::bound(total)
        };
        return Ok(d.scale(noise.mixing()));
    }
    Err(Error::Unsupported("per-gate distances need an enumerated ensemble or structured noise"))
}

/// (d+1)·max_g ‖id − Λ(g)‖⋄, the naive bias bound for observables with ‖O₀‖∞ ≤ 1.
pub fn naive_bound(ensemble: &GateEnsemble, noise: &NoiseModel) -> Result<DistanceEstimate> {
    let d = dimension(ensemble.n());
    Ok(max_gate_distance(ensemble, noise)?.scale(d + 1.0))
}

/// Bias bounds for one observable, plus the exact bias when a state is given.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasBudget {
    /// (d+1)·‖O₀‖∞·max_g ‖id − Λ(g)‖⋄.
    pub naive_bound: Option<f64>,
    pub naive_exact: bool,
    /// 𝒟(O)·max_{a≠0} ‖id − Λ̄_a‖⋄.
    pub thm1_general_bound: f64,
    /// False when the channel distances are upper bounds (surrogates), not exact values.
    pub general_exact: bool,
    /// ‖O‖₂·max_{a≠0} |1 − λ̄_a| (Pauli models only).
    pub thm1_pauli_hs_bound: Option<f64>,
    /// 𝒟(O)·max_{a≠0} |1 − λ̄_a| (Pauli models only).
    pub thm1_pauli_st_bound: Option<f64>,
    pub exact_bias: Option<f64>,
    pub max_channel_distance: f64,
    pub max_eigenvalue_gap: Option<f64>,
    pub max_gate_distance: Option<f64>,
    pub stabilizer_norm: f64,
    pub hs_norm: f64,
    pub traceless_op_norm: Option<f64>,
}

impl BiasBudget {
    /// True when 𝒟(O) ≤ (d+1)‖O₀‖∞, so the general bound sits below the naive one.
    pub fn chain_implied(&self, n: usize) -> bool {
        match self.traceless_op_norm {
            Some(norm) => self.stabilizer_norm <= (dimension(n) + 1.0) * norm + 1e-12,
            None => false,
        }
    }

    /// Names of violated orderings at tolerance `tol`.
    pub fn violations(&self, n: usize, tol: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if let Some(e) = self.exact_bias {
            if e > self.thm1_general_bound + tol {
                out.push("exact > general");
            }
            if let Some(b) = self.thm1_pauli_hs_bound {
                if e > b + tol {
                    out.push("exact > pauli_hs");
                }
            }
            if let Some(b) = self.thm1_pauli_st_bound {
                if e > b + tol {
                    out.push("exact > pauli_st");
                }
            }
            if let Some(b) = self.naive_bound {
                if e > b + tol {
                    out.push("exact > naive");
                }
            }
        }
        if let (Some(gap), true) = (self.max_eigenvalue_gap, self.general_exact) {
            if gap > self.max_channel_distance + tol {
                out.push("eigenvalue gap > channel distance");
            }
        }
        if self.chain_implied(n) {
            if let Some(b) = self.naive_bound {
                if self.thm1_general_bound > b + tol {
                    out.push("general > naive");
                }
            }
        }
        out
    }
}

fn traceless_op_norm(o: &PauliObservable) -> Option<f64> {
    if o.n() > DENSE_LIMIT {
        return None;
    }
    o.traceless().spectral_norm().ok()
}

/// Fills the frame-dependent bounds; naive and exact fields stay empty.
pub fn thm1_bounds(o: &PauliObservable, report: &FrameReport) -> Result<BiasBudget> {
    check_dims(report.n(), o.n())?;
    let dist = report.max_channel_distance(None)?;
    let st = o.stabilizer_norm();
    let hs = o.hs_norm();
    let gap = report.is_pauli().then(|| report.max_eigenvalue_gap(None));
    Ok(BiasBudget {
        naive_bound: None,
        naive_exact: false,
        thm1_general_bound: st * dist.value,
        general_exact: dist.exact,
        thm1_pauli_hs_bound: gap.map(|g| hs * g),
        thm1_pauli_st_bound: gap.map(|g| st * g),
        exact_bias: None,
        max_channel_distance: dist.value,
        max_eigenvalue_gap: gap,
        max_gate_distance: None,
        stabilizer_norm: st,
        hs_norm: hs,
        traceless_op_norm: traceless_op_norm(o),
    })
}

/// Full budget: noisy frame, bounds, naive bound and (with ρ) the exact bias.
pub fn bias_budget(
    o: &PauliObservable,
    rho: Option<&DensityState>,
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
) -> Result<BiasBudget> {
    let report = noisy_frame(ensemble, noise)?;
    let mut b = thm1_bounds(o, &report)?;
    if let Ok(g) = max_gate_distance(ensemble, noise) {
        b.max_gate_distance = Some(g.value);
        b.naive_exact = g.exact;
        b.naive_bound = b.traceless_op_norm.map(|norm| (o.dim() + 1.0) * norm * g.value);
    }
    if let Some(r) = rho {
        b.exact_bias = Some(report.exact_bias(o, &StateData::new(r)?)?);
    }
    Ok(b)
}

/// Outcome of comparing the robust and standard biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// bias_RS ≤ bias_std.
    Helps,
    Hurts,
    /// f_m = f_eff: the robust bias vanishes.
    Perfect,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Helps => "helps",
            Verdict::Hurts => "hurts",
            Verdict::Perfect => "perfect",
        }
    }
}

/// Region of the (f_eff, f_m) plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MitigationRegion {
    OppositeSign,
    /// f_eff < 0, f_m ≤ f_eff/(2 − f_eff).
    NegativeInside,
    NegativeOutside,
    /// 0 ≤ f_eff < 2, f_m ≥ f_eff/(2 − f_eff).
    PositiveInside,
    PositiveOutside,
    /// f_eff ≥ 2.
    Overshoot,
}

impl MitigationRegion {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MitigationRegion::OppositeSign => "opposite-sign",
            MitigationRegion::NegativeInside => "negative-inside",
            MitigationRegion::NegativeOutside => "negative-outside",
            MitigationRegion::PositiveInside => "positive-inside",
            MitigationRegion::PositiveOutside => "positive-outside",
            MitigationRegion::Overshoot => "overshoot",
        }
    }
}

const TIE_TOL: f64 = 1e-9;

/// f_m = f_eff/(2 − f_eff).
pub fn mitigation_boundary(f_eff: f64) -> f64 {
    f_eff / (2.0 - f_eff)
}

pub fn region(f_eff: f64, f_m: f64) -> MitigationRegion {
    let t = mitigation_boundary(f_eff);
    if f_eff >= 2.0 {
        MitigationRegion::Overshoot
    } else if f_eff != 0.0 && f_eff.signum() != f_m.signum() {
        MitigationRegion::OppositeSign
    } else if f_eff < 0.0 {
        if f_m <= t + TIE_TOL {
            MitigationRegion::NegativeInside
        } else {
            MitigationRegion::NegativeOutside
        }
    } else if f_m >= t - TIE_TOL {
        MitigationRegion::PositiveInside
    } else {
        MitigationRegion::PositiveOutside
    }
}

/// Threshold rule for |f_m| ≤ 1: f_m on the mitigating side of f_eff/(2 − f_eff).
///
/// Ties count as helping. Two edges differ from the plain threshold: f_m = 1 and
/// f_eff = 0 make both biases equal, and for f_eff ≥ 2 the threshold is negative yet
/// no f_m in [−1, 1) helps.
pub fn classify(f_eff: f64, f_m: f64) -> Result<Verdict> {
    if f_m == 0.0 || f_m.abs() > 1.0 + TIE_TOL {
        return Err(Error::InvalidParameter { name: "f_m", value: f_m });
    }
    if (f_m - f_eff).abs() <= TIE_TOL {
        return Ok(Verdict::Perfect);
    }
    if (f_m - 1.0).abs() <= TIE_TOL || f_eff.abs() <= TIE_TOL {
        return Ok(Verdict::Helps);
    }
    let helps = matches!(region(f_eff, f_m), MitigationRegion::NegativeInside | MitigationRegion::PositiveInside);
    Ok(if helps { Verdict::Helps } else { Verdict::Hurts })
}

/// Verdict from two bias values.
pub fn direct_verdict(bias_std: f64, bias_rs: f64, scale: f64) -> Verdict {
    let tol = TIE_TOL * scale.abs().max(1.0);
    if bias_rs <= tol {
        Verdict::Perfect
    } else if bias_rs <= bias_std + tol {
        Verdict::Helps
    } else {
        Verdict::Hurts
    }
}

/// Decomposition of the Pauli-noise bias into λ̄, Δ and the signal vector γ.
#[derive(Clone, Debug, PartialEq)]
pub struct MitigationAnalysis {
    pub lambda_bar: f64,
    /// λ̄_a − λ̄ over a ≠ 0 in label order.
    pub delta: Vec<f64>,
    /// γ_a = (O|σ̂_a)(σ̂_a|ρ) over a ≠ 0.
    pub gamma: Vec<f64>,
    pub traceless_expectation: f64,
    pub f_eff: f64,
    pub f_m: f64,
    /// |⟨O₀⟩|·|1 − f_eff|.
    pub bias_std: f64,
    /// |⟨O₀⟩|·|1 − f_eff/f_m|.
    pub bias_rs: f64,
    /// Biases from the frame's exact expectations.
    pub direct_bias_std: f64,
    pub direct_bias_rs: f64,
    pub verdict: Verdict,
    pub region: MitigationRegion,
}

/// Largest qubit count for the dense Δ and γ vectors.
pub const MITIGATION_LIMIT: usize = 6;

pub fn mitigation_analysis(
    o: &PauliObservable,
    rho: &DensityState,
    report: &FrameReport,
    f_m: f64,
) -> Result<MitigationAnalysis> {
    let n = o.n();
    check_dims(report.n(), n)?;
    check_dims(rho.n(), n)?;
    if !report.is_pauli() {
        return Err(Error::Unsupported("mitigation analysis needs a Pauli noise model"));
    }
    if n > MITIGATION_LIMIT {
        return Err(Error::TooManyQubits { n, max: MITIGATION_LIMIT });
    }
    if f_m.abs() < crate::frame::ROBUST_TOL {
        return Err(Error::InvalidParameter { name: "f_m", value: f_m });
    }
    let st = StateData::new(rho)?;
    let sd = o.dim().sqrt();
    let labels: Vec<PauliLabel> = PauliLabel::all(n).filter(|a| !a.is_identity()).collect();
    let lam: Vec<f64> = labels.iter().map(|a| report.avg_eigenvalue(a)).collect();
    if let Some(l) = lam.iter().find(|l| l.abs() > 1.0 + 1e-12) {
        return Err(Error::InvalidParameter { name: "lambda", value: *l });
    }
    let lambda_bar = lam.iter().sum::<f64>() / lam.len() as f64;
    let delta: Vec<f64> = lam.iter().map(|l| l - lambda_bar).collect();
    let gamma: Vec<f64> = labels.iter().map(|a| sd * o.coeff(a) * st.component(a)).collect();
    let o0: f64 = gamma.iter().sum();
    let id = PauliLabel::identity(n);
    let via_trace = ideal_expectation(o, &st)? - sd * o.coeff(&id) * st.component(&id);
    if (o0 - via_trace).abs() > 1e-12 {
        return Err(Error::InvalidParameter { name: "traceless_expectation", value: o0 - via_trace });
    }
    if o0.abs() < 1e-12 {
        return Err(Error::Unsupported("⟨O₀⟩ = 0: the relative bias is undefined"));
    }
    let align: f64 = gamma.iter().zip(&delta).map(|(g, d)| g * d).sum();
    let f_eff = lambda_bar + align / o0;
    let ideal = ideal_expectation(o, &st)?;
    let direct_bias_std = report.exact_bias(o, &st)?;
    let direct_bias_rs = (report.robust_expectation(o, &st, f_m)? - ideal).abs();
    Ok(MitigationAnalysis {
        lambda_bar,
        delta,
        gamma,
        traceless_expectation: o0,
        f_eff,
        f_m,
        bias_std: o0.abs() * (1.0 - f_eff).abs(),
        bias_rs: o0.abs() * (1.0 - f_eff / f_m).abs(),
        direct_bias_std,
        direct_bias_rs,
        verdict: direct_verdict(direct_bias_std, direct_bias_rs, o0),
        region: region(f_eff, f_m),
    })
}

/// One cell of the (f_eff, f_m) map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapPoint {
    pub f_eff: f64,
    pub f_m: f64,
    pub region: MitigationRegion,
    /// Threshold rule.
    pub verdict: Verdict,
    /// Exact biases of a realising single-qubit model.
    pub direct: Verdict,
    /// f_eff recomputed from the realising model.
    pub realised_f_eff: f64,
}

/// Single-qubit witness for a target f_eff.
///
/// Pauli-basis ensemble {𝟙, X₊₉₀, Y₊₉₀}: each label a ≠ 0 is reached by exactly one
/// gate, so giving that gate a Pauli channel with eigenvalue v on a sets λ̄_a = v.
/// With ρ = (𝟙 + 0.8X − 0.4Z)/2 and O = (𝟙 + X + Z)/2 the signal is γ = (0.4, −0.2, 0)
/// on (X, Z, Y), so f_eff = 2λ̄_X − λ̄_Z.
pub struct MitigationWitness {
    ensemble: GateEnsemble,
    o: PauliObservable,
    rho: DensityState,
}

impl MitigationWitness {
    pub fn new() -> Result<Self> {
        let ensemble = GateEnsemble::pauli_basis(1)?;
        let o = PauliObservable::from_terms(
            1,
            [
                (PauliLabel::identity(1), 0.5),
                (PauliLabel::single(1, 0, Pauli::X), 0.5),
                (PauliLabel::single(1, 0, Pauli::Z), 0.5),
            ],
        )?;
        let rho = DensityState::bloch([0.8, 0.0, -0.4])?;
        Ok(MitigationWitness { ensemble, o, rho })
    }

    /// Averaged eigenvalues (λ̄_X, λ̄_Z) realising `f_eff` inside [−1, 1]².
    pub fn eigenvalues(f_eff: f64) -> Result<(f64, f64)> {
        let lz = (0.5 - f_eff / 2.0).clamp(-1.0, 1.0);
        let lx = (f_eff + lz) / 2.0;
        if lx.abs() > 1.0 {
            return Err(Error::InvalidParameter { name: "f_eff", value: f_eff });
        }
        Ok((lx, lz))
    }

    pub fn model(&self, f_eff: f64) -> Result<NoiseModel> {
        let (lx, lz) = Self::eigenvalues(f_eff)?;
        let mut table = alloc::collections::BTreeMap::new();
        for g in self.ensemble.gates() {
            let (a, _) = g.inverse().act(&PauliLabel::single(1, 0, Pauli::Z))?;
            let v = match a.letter(0) {
                Pauli::X => lx,
                Pauli::Z => lz,
                _ => 1.0,
            };
            // eigenvalue v on a and on one other letter, 1 on the third: a single Pauli flip
            let mut eig = vec![1.0; 4];
            let other = if a.letter(0) == Pauli::Y { Pauli::X } else { Pauli::Y };
            eig[a.letter(0) as usize] = v;
            eig[other as usize] = v;
            table.insert(g.clone(), PauliChannel::from_eigenvalues(1, eig)?.to_channel());
        }
        NoiseModel::table(1, table)
    }

    pub fn analyse(&self, f_eff: f64, f_m: f64) -> Result<MitigationAnalysis> {
        let noise = self.model(f_eff)?;
        let report = noisy_frame(&self.ensemble, &noise)?;
        mitigation_analysis(&self.o, &self.rho, &report, f_m)
    }
}

/// Evenly spaced grid of `points` values in [lo, hi].
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Verdicts over f_eff × f_m; f_m values equal to 0 are skipped.
pub fn mitigation_map(f_eff_grid: &[f64], f_m_grid: &[f64]) -> Result<Vec<MapPoint>> {
    let w = MitigationWitness::new()?;
    let mut out = Vec::with_capacity(f_eff_grid.len() * f_m_grid.len());
    for &fe in f_eff_grid {
        let noise = w.model(fe)?;
        let report = noisy_frame(&w.ensemble, &noise)?;
        for &fm in f_m_grid {
            if fm.abs() < crate::frame::ROBUST_TOL {
                continue;
            }
            let m = mitigation_analysis(&w.o, &w.rho, &report, fm)?;
            out.push(MapPoint {
                f_eff: fe,
                f_m: fm,
                region: region(fe, fm),
                verdict: classify(fe, fm)?,
                direct: m.verdict,
                realised_f_eff: m.f_eff,
            });
        }
    }
    Ok(out)
}

/// Grid-recovered boundary: for each f_eff, the f_m where the direct verdict flips
/// between helping and hurting, with the analytic threshold.
pub fn recovered_boundary(points: &[MapPoint]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let fe = points[i].f_eff;
        let row: Vec<&MapPoint> = points[i..].iter().take_while(|p| p.f_eff == fe).collect();
        i += row.len();
        let t = mitigation_boundary(fe);
        if !(-1.0..=1.0).contains(&t) || fe.abs() < TIE_TOL {
            continue;
        }
        let good = |p: &&&MapPoint| p.direct != Verdict::Hurts && (p.f_m - 1.0).abs() > TIE_TOL;
        let edge = if fe > 0.0 {
            row.iter().filter(good).map(|p| p.f_m).fold(f64::INFINITY, f64::min)
        } else {
            row.iter().filter(good).map(|p| p.f_m).fold(f64::NEG_INFINITY, f64::max)
        };
        if edge.is_finite() {
            out.push((fe, edge, t));
        }
    }
    out
}

/// Sampling distribution of the random vector in the concentration study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailDistribution {
    Sphere,
    Gaussian { sigma: f64 },
}

/// Exceedance frequency of |⟨γ̂, ĝ⟩| ≥ t/√(k−1) against e^{−t²/2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRow {
    pub t: f64,
    pub bound: f64,
    pub frequency: f64,
    /// 3σ binomial slack √(bound(1 − bound)/trials)·3.
    pub slack: f64,
    pub pass: bool,
}

/// Coverage of the Gaussian alignment bound at failure level δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianCheck {
    pub sigma: f64,
    pub delta: f64,
    /// σ‖γ‖₂ g √(k/(k−1))(1 + g/√k + g²/k) with g = √log(2/δ).
    pub bound: f64,
    pub coverage: f64,
    pub pass: bool,
    /// Same expression with σ² in place of σ.
    pub literal_bound: f64,
    pub literal_coverage: f64,
}

/// E f̂_m = λ̄ + mean_{z ∈ Z\0} Δ_z over trials, for k = d² − 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MitigationMeanCheck {
    pub lambda_bar: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub k: usize,
    pub trials: u64,
    pub rows: Vec<TailRow>,
    pub gaussian: Option<GaussianCheck>,
    pub mitigation_mean: Option<MitigationMeanCheck>,
}

/// Raw counts from one chunk of trials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConcentrationCounts {
    pub trials: u64,
    pub exceed: [u64; 3],
    pub gaussian_hits: u64,
    pub literal_hits: u64,
    pub fm: Moments,
}

impl ConcentrationCounts {
    pub fn merge(&mut self, other: &Self) {
        self.trials += other.trials;
        for i in 0..3 {
            self.exceed[i] += other.exceed[i];
        }
        self.gaussian_hits += other.gaussian_hits;
        self.literal_hits += other.literal_hits;
        self.fm.merge(&other.fm);
    }
}

pub const TAIL_POINTS: [f64; 3] = [1.0, 2.0, 3.0];
/// Trials per independent random stream.
pub const CONCENTRATION_CHUNK: u64 = 8192;
/// λ̄ used for the f̂_m mean check.
pub const CHECK_LAMBDA: f64 = 0.9;

/// Setup shared by all chunks of a concentration run.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationSetup {
    pub k: usize,
    pub distribution: TailDistribution,
    /// Unit-norm reference vector.
    pub gamma: Vec<f64>,
    pub gamma_norm: f64,
    pub delta: f64,
    /// Positions of the diagonal labels a ∈ Z\0 among the k = d² − 1 entries.
    pub diagonal: Option<Vec<usize>>,
}

impl ConcentrationSetup {
    pub fn new(k: usize, distribution: TailDistribution, gamma: Option<&[f64]>, delta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter { name: "k", value: k as f64 });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter { name: "delta", value: delta });
        }
        if let TailDistribution::Gaussian { sigma } = distribution {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter { name: "sigma", value: sigma });
            }
        }
        let raw = match gamma {
            Some(g) => {
                check_dims(k, g.len())?;
                g.to_vec()
            }
            None => {
                let mut e = vec![0.0; k];
                e[0] = 1.0;
                e
            }
        };
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter { name: "gamma", value: norm });
        }
        let unit = raw.iter().map(|x| x / norm).collect();
        // k = 4ⁿ − 1 identifies the a ≠ 0 labels of n qubits
        let diagonal = (1..=16usize).find(|n| (1usize << (2 * n)) - 1 == k).map(|n| {
            PauliLabel::all(n).filter(|a| !a.is_identity()).enumerate().filter(|(_, a)| a.is_diagonal()).map(|(i, _)| i).collect()
        });
        Ok(ConcentrationSetup { k, distribution, gamma: unit, gamma_norm: norm, delta, diagonal })
    }

    fn g_delta(&self) -> f64 {
        (2.0 / self.delta).ln().sqrt()
    }

    /// Gaussian bound with scale factor `s` (σ or σ²) and ‖γ‖₂ = 1 for the unit vector.
    fn gaussian_bound(&self, s: f64) -> f64 {
        let k = self.k as f64;
        let g = self.g_delta();
        s * g * (k / (k - 1.0)).sqrt() * (1.0 + g / k.sqrt() + g * g / k)
    }

    /// One chunk of trials on stream `chunk`.
    pub fn run_chunk(&self, seed: u64, chunk: u64, trials: u64) -> ConcentrationCounts {
        let mut rng = stream_rng(seed, chunk);
        let mut c = ConcentrationCounts { trials, ..Default::default() };
        let k = self.k as f64;
        let (sigma, bound, literal) = match self.distribution {
            TailDistribution::Gaussian { sigma } => (sigma, self.gaussian_bound(sigma), self.gaussian_bound(sigma * sigma)),
            TailDistribution::Sphere => (1.0, 0.0, 0.0),
        };
        let mut v = vec![0.0; self.k];
        for _ in 0..trials {
            for x in v.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = sigma * z;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = v.iter().zip(&self.gamma).map(|(a, b)| a * b).sum();
            let cos = (dot / norm).abs();
            for (i, t) in TAIL_POINTS.iter().enumerate() {
                if cos >= t / (k - 1.0).sqrt() {
                    c.exceed[i] += 1;
                }
            }
            if matches!(self.distribution, TailDistribution::Gaussian { .. }) {
                c.gaussian_hits += u64::from(dot.abs() <= bound);
                c.literal_hits += u64::from(dot.abs() <= literal);
            }
            if let Some(diag) = &self.diagonal {
                // Δ with the sphere direction; the f̂_m mean only involves its diagonal part
                let scale = 0.05 / norm;
                let m = diag.iter().map(|i| v[*i] * scale).sum::<f64>() / diag.len() as f64;
                c.fm.push(CHECK_LAMBDA + m);
            }
        }
        c
    }

    pub fn report(&self, counts: &ConcentrationCounts) -> ConcentrationReport {
        let n = counts.trials as f64;
        let rows = TAIL_POINTS
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let bound = (-t * t / 2.0).exp();
                let slack = 3.0 * (bound * (1.0 - bound) / n).sqrt();
                let frequency = counts.exceed[i] as f64 / n;
                TailRow { t: *t, bound, frequency, slack, pass: frequency <= bound + slack }
            })
            .collect();
        let gaussian = match self.distribution {
            TailDistribution::Gaussian { sigma } => {
                let coverage = counts.gaussian_hits as f64 / n;
                Some(GaussianCheck {
                    sigma,
                    delta: self.delta,
                    bound: self.gaussian_bound(sigma) * self.gamma_norm,
                    coverage,
                    pass: coverage >= 1.0 - self.delta,
                    literal_bound: self.gaussian_bound(sigma * sigma) * self.gamma_norm,
                    literal_coverage: counts.literal_hits as f64 / n,
                })
            }
            TailDistribution::Sphere => None,
        };
        let mitigation_mean = self.diagonal.as_ref().map(|_| {
            let mean = counts.fm.mean();
            let se = counts.fm.standard_error();
            MitigationMeanCheck { lambda_bar: CHECK_LAMBDA, mean, standard_error: se, pass: (mean - CHECK_LAMBDA).abs() <= 4.0 * se }
        });
        ConcentrationReport { k: self.k, trials: counts.trials, rows, gaussian, mitigation_mean }
    }
}

/// Number of chunks and the size of chunk `c` for a trial budget.
pub fn concentration_chunks(trials: u64) -> Vec<u64> {
    let full = trials / CONCENTRATION_CHUNK;
    let mut v = vec![CONCENTRATION_CHUNK; full as usize];
    if !trials.is_multiple_of(CONCENTRATION_CHUNK) {
        v.push(trials % CONCENTRATION_CHUNK);
    }
    v
}

/// Tail-frequency study for sphere-uniform (or Gaussian) vectors in ℝᵏ.
pub fn concentration_experiment(
    k: usize,
    distribution: TailDistribution,
    gamma: Option<&[f64]>,
    trials: u64,
    delta: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    if trials < 1000 {
        return Err(Error::InvalidParameter { name: "trials", value: trials as f64 });
    }
    let setup = ConcentrationSetup::new(k, distribution, gamma, delta)?;
    let mut total = ConcentrationCounts::default();
    for (c, size) in concentration_chunks(trials).into_iter().enumerate() {
        total.merge(&setup.run_chunk(seed, c as u64, size));
    }
    Ok(setup.report(&total))
}

/// Exact variance against the closed-form bounds and an empirical run.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceReport {
    pub exact_mean: f64,
    pub exact_second_moment: f64,
    pub exact_variance: f64,
    pub bounds: VarianceBounds,
    /// Largest |s_{a,a′}|/(s_a s_{a′}) (enumerated ensembles only).
    pub observed_c: Option<f64>,
    pub empirical_mean: f64,
    pub empirical_second_moment: f64,
    pub empirical_variance: f64,
    pub second_moment_se: f64,
    pub shots: u64,
}

impl VarianceReport {
    /// Bound relevant to the ensemble family.
    pub fn applicable_bound(&self, ensemble: &GateEnsemble) -> Option<f64> {
        use crate::clifford::EnsembleKind::*;
        match ensemble.kind() {
            Global | SampledGlobal => Some(self.bounds.global),
            LocalClifford => match (self.bounds.local_pauli, self.bounds.local_kbody) {
                (Some(p), Some(k)) => Some(p.min(k)),
                (p, k) => p.or(k),
            },
            _ => None,
        }
    }

    pub fn consistent(&self) -> bool {
        (self.empirical_second_moment - self.exact_second_moment).abs() <= 4.0 * self.second_moment_se
    }
}

/// Exact moments (enumeration, or qubit-by-qubit for product O and ρ) vs sampling.
pub fn variance_consistency(
    o: &PauliObservable,
    o_factors: Option<&[PauliObservable]>,
    rho: &DensityState,
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<VarianceReport> {
    let (m1, m2, c) = if ensemble.is_enumerated() && ensemble.n() <= 3 {
        let rep = second_moment(ensemble, noise)?;
        let st = StateData::new(rho)?;
        (rep.first_moment(o, &st)?, rep.second_moment(o, &st)?, Some(rep.max_ratio()))
    } else {
        let f = o_factors.ok_or(Error::Unsupported("exact moments beyond enumeration need product factors of O"))?;
        let (m1, m2) = product_moments(ensemble, noise, f, rho)?;
        (m1, m2, None)
    };
    let sim = ShadowSimulator::new(ensemble, noise, rho)?;
    let est = Estimator::standard(o, &ideal_frame(ensemble)?)?;
    let m = run_batch(&sim, &est, seed, 0, shots, 0, None)?;
    let emp2 = m.sum_sq / m.count as f64;
    Ok(VarianceReport {
        exact_mean: m1,
        exact_second_moment: m2,
        exact_variance: m2 - m1 * m1,
        bounds: variance_bounds(o)?,
        observed_c: c,
        empirical_mean: m.mean(),
        empirical_second_moment: emp2,
        empirical_variance: m.variance(),
        second_moment_se: m.second_moment_se(),
        shots,
    })
}

/// Short description of a distance estimate for reports.
pub fn distance_kind(d: &DistanceEstimate) -> String {
    String::from(if d.exact { "exact" } else { "surrogate" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::random_cptp;
    use crate::pauli::states;

    #[test]
    fn naive_bound_examples() {
        let one = GateEnsemble::uniform_global(1).unwrap();
        assert_eq!(naive_bound(&one, &NoiseModel::noiseless(1)).unwrap().value, 0.0);
        let eps = 0.07;
        let b = naive_bound(&one, &NoiseModel::bit_flip_right(1, eps).unwrap()).unwrap();
        assert!(b.exact && (b.value - 3.0 * 2.0 * eps).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_pauli_bound() {
        let q = 0.12;
        let ens = GateEnsemble::uniform_global(2).unwrap();
        let noise = NoiseModel::depolarizing(2, q).unwrap();
        let o = states::tensor_power(&states::magic_h_observable(), 2).unwrap();
        let rep = noisy_frame(&ens, &noise).unwrap();
        let b = thm1_bounds(&o, &rep).unwrap();
        let want = o.hs_norm().min(o.stabilizer_norm()) * q;
        let got = b.thm1_pauli_hs_bound.unwrap().min(b.thm1_pauli_st_bound.unwrap());
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn pauli_observable_general_bound_is_distance() {
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let noise = NoiseModel::overrotation(1, crate::pulses::PulseSet::XyHalfPi, 0.2);
        let o = PauliObservable::pauli(PauliLabel::single(1, 0, Pauli::Y), 1.0);
        let rep = noisy_frame(&ens, &noise).unwrap();
        let b = thm1_bounds(&o, &rep).unwrap();
        assert!((b.thm1_general_bound - b.max_channel_distance).abs() < 1e-15);
    }

    #[test]
    fn prop1_model_saturates_general_bound() {
        // worst-case model: bias = 𝒟(O)ε − ε/d against general bound 𝒟(O)ε
        let eps = 0.1;
        let ens = GateEnsemble::local_clifford(1).unwrap();
        let noise = NoiseModel::basis_undo(1).with_mixing(eps).unwrap();
        let o = states::magic_h_observable();
        let b = bias_budget(&o, Some(&DensityState::zero(1).unwrap()), &ens, &noise).unwrap();
        let want = eps * ((1.0 + 2f64.sqrt()) / 2.0 - 0.5);
        assert!((b.exact_bias.unwrap() - want).abs() < 1e-12);
        assert!(b.exact_bias.unwrap() <= b.thm1_general_bound + 1e-12);
        assert!(b.violations(1, 1e-12).is_empty());
        assert!(b.naive_bound.unwrap() >= b.exact_bias.unwrap());
    }

    #[test]
    fn random_models_respect_bounds() {
        let mut rng = stream_rng(11, 0);
        let ens = GateEnsemble::uniform_global(1).unwrap();
        for _ in 0..5 {
            let noise = NoiseModel::random_table(&ens, 2, &mut rng).unwrap().with_mixing(0.2).unwrap();
            let o = states::magic_h_observable();
            let b = bias_budget(&o, Some(&states::rho_c(0.4).unwrap()), &ens, &noise).unwrap();
            assert!(b.violations(1, 1e-12).is_empty(), "{b:?}");
            let ch = random_cptp(1, 1, &mut rng).unwrap();
            let b2 = bias_budget(&o, Some(&states::plus()), &ens, &NoiseModel::left(ch)).unwrap();
            assert!(b2.violations(1, 1e-12).is_empty(), "{b2:?}");
        }
    }

    #[test]
    fn witness_realises_target_f_eff() {
        let w = MitigationWitness::new().unwrap();
        for fe in [-1.5, -0.3, 0.4, 0.9, 1.7, 2.5] {
            let m = w.analyse(fe, 0.5).unwrap();
            assert!((m.f_eff - fe).abs() < 1e-12, "{fe} {}", m.f_eff);
            assert!((m.bias_std - m.direct_bias_std).abs() < 1e-12);
            assert!((m.bias_rs - m.direct_bias_rs).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_and_opposite_sign() {
        let w = MitigationWitness::new().unwrap();
        let m = w.analyse(0.6, 0.6).unwrap();
        assert_eq!(m.verdict, Verdict::Perfect);
        assert!(m.direct_bias_rs < 1e-12);
        let h = w.analyse(0.6, -0.5).unwrap();
        assert_eq!(h.verdict, Verdict::Hurts);
        assert_eq!(classify(0.6, -0.5).unwrap(), Verdict::Hurts);
        let z = w.analyse(1.0, 1.0).unwrap();
        assert!(z.direct_bias_std < 1e-12 && z.direct_bias_rs < 1e-12);
    }

    #[test]
    fn classifier_matches_direct_on_coarse_grid() {
        let pts = mitigation_map(&linspace(-1.5, 2.5, 21), &linspace(-1.0, 1.0, 21)).unwrap();
        for p in &pts {
            assert_eq!(p.verdict, p.direct, "{p:?}");
        }
    }

    #[test]
    fn naive_threshold_rule_fails_beyond_two() {
        // the plain threshold says f_m ≥ −5 helps at f_eff = 2.5; exact biases disagree
        let w = MitigationWitness::new().unwrap();
        let m = w.analyse(2.5, 0.5).unwrap();
        assert!(0.5 >= mitigation_boundary(2.5));
        assert_eq!(m.verdict, Verdict::Hurts);
        assert_eq!(classify(2.5, 0.5).unwrap(), Verdict::Hurts);
    }

    #[test]
    fn sphere_tails_within_bound() {
        let r = concentration_experiment(15, TailDistribution::Sphere, None, 20_000, 0.05, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.pass), "{r:?}");
        assert!(r.mitigation_mean.unwrap().pass);
        let g = concentration_experiment(255, TailDistribution::Gaussian { sigma: 0.01 }, None, 5_000, 0.05, 2).unwrap();
        assert!(g.gaussian.unwrap().pass, "{g:?}");
        assert!(g.gaussian.unwrap().literal_coverage < 0.5);
    }

    #[test]
    fn variance_report_small_cases() {
        let ens = GateEnsemble::local_clifford(1).unwrap();
        let o = PauliObservable::pauli(PauliLabel::single(1, 0, Pauli::Z), 1.0);
        let r = variance_consistency(&o, None, &states::plus(), &ens, &NoiseModel::noiseless(1), 20_000, 5).unwrap();
        assert!(r.exact_variance <= 3.0 + 1e-12);
        assert_eq!(r.observed_c, Some(3.0));
        assert!(r.consistent(), "{r:?}");
        let id = PauliObservable::identity(1).scale(0.5);
        let v = variance_consistency(&id, None, &states::plus(), &ens, &NoiseModel::noiseless(1), 2_000, 5).unwrap();
        assert!(v.exact_variance.abs() < 1e-12 && v.empirical_variance.abs() < 1e-20);
    }
}
