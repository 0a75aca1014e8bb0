//! Figure and table generators: Pauli-basis spoofing, local-Clifford robust vs
//! standard, the worst-case scaling table, the RSE bit-flip table and the RB axis.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::TransferChannel;
use crate::clifford::GateEnsemble;
use crate::error::{Error, Result};
use crate::frame::{ideal_expectation, ideal_frame, noisy_frame, FrameReport, StateData};
use crate::noise::NoiseModel;
use crate::pauli::{dimension, states, DensityState, PauliObservable};
use crate::pulses::PulseSet;
use crate::rng::derive_seed;
use crate::shadow::{
    batch_offset, batch_shots, calibration_batch, default_mom_batches, run_shadow, CalibrationResult, Estimator,
    EstimateResult, ShadowSimulator,
};
use crate::stats::{mean, variance};

/// Which estimator a curve shows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Standard,
    Robust,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Standard => "standard",
            EstimatorKind::Robust => "robust",
        }
    }
}

/// One point of a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub exact: f64,
    /// Closed-form value where one exists.
    pub analytic: Option<f64>,
    pub sampled: Option<f64>,
    pub se: Option<f64>,
    /// Spread of repeated estimates (repeat mode only).
    pub variance: Option<f64>,
    pub kind: EstimatorKind,
    pub stabilizer_norm: f64,
}

impl CurvePoint {
    /// |sampled − exact| ≤ 4·SE; `None` without a sampled value.
    pub fn consistent(&self) -> Option<bool> {
        match (self.sampled, self.se) {
            (Some(s), Some(se)) => Some((s - self.exact).abs() <= 4.0 * se),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub label: String,
    /// State-family parameter c.
    pub c: f64,
    pub kind: EstimatorKind,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    /// Fraction of sampled points within 4 SE of the exact value.
    pub fn consistency_rate(&self) -> Option<f64> {
        let checks: Vec<bool> = self.points.iter().filter_map(|p| p.consistent()).collect();
        if checks.is_empty() {
            None
        } else {
            Some(checks.iter().filter(|b| **b).count() as f64 / checks.len() as f64)
        }
    }
}

/// Depolarizing strength that brings a pure target down to fidelity `f`.
pub fn depolarization_for_fidelity(f: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&f) {
        return Err(Error::InvalidParameter { name: "fidelity", value: f });
    }
    Ok(2.0 * (1.0 - f))
}

/// ⟨ψ_c|S⁻¹S̃|ψ_c⟩ for the Pauli-basis over/under-rotation model.
pub fn spoofed_fidelity(c: f64, delta: f64) -> f64 {
    let (s, co) = delta.sin_cos();
    0.5 * (1.0 + s * (c * (1.0 - 2.0 * c * c).max(0.0).sqrt() + c * c) + co * (1.0 - c * c) + c * c)
}

/// Shots, batching and seed of a sampled point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling {
    pub shots: u64,
    pub batches: usize,
    pub seed: u64,
}

fn sample_point(
    o: &PauliObservable,
    rho: &DensityState,
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
    s: Sampling,
) -> Result<EstimateResult> {
    let sim = ShadowSimulator::new(ensemble, noise, rho)?;
    let est = Estimator::standard(o, &ideal_frame(ensemble)?)?;
    run_shadow(&sim, &est, s.shots, s.batches, s.seed)
}

/// Target state ρ_c, the prepared depolarized state and the fidelity observable.
pub struct SpoofSetup {
    pub c: f64,
    pub p: f64,
    pub target: PauliObservable,
    pub prepared: DensityState,
    pub stabilizer_norm: f64,
}

impl SpoofSetup {
    pub fn new(c: f64, fidelity: f64) -> Result<Self> {
        let p = depolarization_for_fidelity(fidelity)?;
        let pure = states::rho_c(c)?;
        let target = pure.as_observable()?;
        let prepared = pure.depolarize(p)?;
        let stabilizer_norm = target.stabilizer_norm();
        Ok(SpoofSetup { c, p, target, prepared, stabilizer_norm })
    }

    pub fn true_fidelity(&self) -> Result<f64> {
        ideal_expectation(&self.target, &StateData::new(&self.prepared)?)
    }
}

/// Figure-1 point: Pauli-basis measurements under over/under-rotation δ.
pub fn fig1_point(setup: &SpoofSetup, delta: f64, sampling: Option<Sampling>) -> Result<CurvePoint> {
    let ens = GateEnsemble::pauli_basis(1)?;
    let noise = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
    let report = noisy_frame(&ens, &noise)?;
    let exact = report.expectation(&setup.target, &StateData::new(&setup.prepared)?)?;
    let analytic = setup.p / 2.0 + (1.0 - setup.p) * spoofed_fidelity(setup.c, delta);
    let (sampled, se) = match sampling {
        Some(s) => {
            let r = sample_point(&setup.target, &setup.prepared, &ens, &noise, s)?;
            (Some(r.mean), Some(r.standard_error))
        }
        None => (None, None),
    };
    Ok(CurvePoint {
        x: delta,
        exact,
        analytic: Some(analytic),
        sampled,
        se,
        variance: None,
        kind: EstimatorKind::Standard,
        stabilizer_norm: setup.stabilizer_norm,
    })
}

/// RB decay parameters and infidelities for one δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbPoint {
    pub delta: f64,
    /// Second-largest |eigenvalue| of E_g[R(g) ⊗ Φ(g)].
    pub r_pair: f64,
    /// (tr E_g[R(g)⁻¹Φ(g)] − 1)/3.
    pub r_proxy: f64,
    pub infidelity_pair: f64,
    pub infidelity_proxy: f64,
}

/// Average gate infidelity from the RB decay of the 24 single-qubit Cliffords compiled
/// into X/Y half-pi pulses with over/under-rotation δ.
pub fn rb_infidelity(delta: f64) -> Result<RbPoint> {
    let ens = GateEnsemble::uniform_global(1)?;
    let noise = NoiseModel::overrotation(1, PulseSet::XyHalfPi, delta);
    let k = ens.len() as f64;
    let mut pair = DMatrix::<f64>::zeros(16, 16);
    let mut avg = DMatrix::<f64>::zeros(4, 4);
    for g in ens.gates() {
        let r = g.ptm()?;
        let lam = noise.channel(g)?;
        let phi = TransferChannel::from_clifford(g)?.compose(&lam)?;
        pair += r.kronecker(phi.ptm()) / k;
        avg += lam.ptm() / k;
    }
    let mut mags: Vec<f64> = pair.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let r_pair = mags[1];
    let r_proxy = (avg.trace() - 1.0) / 3.0;
    let d = 2.0;
    let infid = |r: f64| 1.0 - (r + (1.0 - r) / d);
    Ok(RbPoint { delta, r_pair, r_proxy, infidelity_pair: infid(r_pair), infidelity_proxy: infid(r_proxy) })
}

/// Relative difference of the pair-construction infidelity at ±δ.
pub fn rb_asymmetry(delta: f64) -> Result<f64> {
    let a = rb_infidelity(delta)?.infidelity_pair;
    let b = rb_infidelity(-delta)?.infidelity_pair;
    let m = a.abs().max(b.abs());
    Ok(if m == 0.0 { 0.0 } else { (a - b).abs() / m })
}

/// Infidelity/δ² at a small δ, the leading coefficient of the coherent-error scaling.
pub fn rb_quadratic_coefficient(delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter { name: "delta", value: delta });
    }
    Ok(rb_infidelity(delta)?.infidelity_pair / (delta * delta))
}

/// Settings of the Figure-1 scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Config {
    pub cs: Vec<f64>,
    pub fidelity: f64,
    pub deltas: Vec<f64>,
    pub shots: u64,
    pub batches: usize,
    pub seed: u64,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Fig1Config {
            cs: vec![0.0, 0.3, 1.0 / 3f64.sqrt()],
            fidelity: 0.99,
            deltas: crate::bounds::linspace(0.0, 0.5, 41),
            shots: 100_000,
            batches: 10,
            seed: 1,
        }
    }
}

/// Seed of point `j` on curve `i`.
pub fn point_seed(seed: u64, curve: usize, point: usize) -> u64 {
    derive_seed(seed, ((curve as u64) << 32) | point as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Result {
    pub curves: Vec<Curve>,
    pub rb: Vec<RbPoint>,
    /// max over δ > 0 of bias/infidelity for the c = 1/√3 curve (pair construction).
    pub spoof_ratio: Option<(f64, f64)>,
}

/// Largest bias/infidelity ratio over δ > 0 and the δ attaining it.
pub fn spoof_ratio(curve: &Curve, fidelity: f64, rb: &[RbPoint]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (p, r) in curve.points.iter().zip(rb) {
        if r.infidelity_pair <= 1e-12 {
            continue;
        }
        let ratio = (p.exact - fidelity).abs() / r.infidelity_pair;
        if best.is_none_or(|(b, _)| ratio > b) {
            best = Some((ratio, p.x));
        }
    }
    best
}

/// Sequential Figure-1 run.
pub fn scenario_fig1(cfg: &Fig1Config, sample: bool) -> Result<Fig1Result> {
    let mut curves = Vec::new();
    for (i, &c) in cfg.cs.iter().enumerate() {
        let setup = SpoofSetup::new(c, cfg.fidelity)?;
        let mut points = Vec::new();
        for (j, &delta) in cfg.deltas.iter().enumerate() {
            let s = sample.then(|| Sampling { shots: cfg.shots, batches: cfg.batches, seed: point_seed(cfg.seed, i, j) });
            points.push(fig1_point(&setup, delta, s)?);
        }
        curves.push(Curve { label: alloc::format!("c={c:.4}"), c, kind: EstimatorKind::Standard, points });
    }
    let rb = cfg.deltas.iter().map(|d| rb_infidelity(*d)).collect::<Result<Vec<_>>>()?;
    let magic = 1.0 / 3f64.sqrt();
    let spoof = curves.iter().find(|c| (c.c - magic).abs() < 1e-9).and_then(|c| spoof_ratio(c, cfg.fidelity, &rb));
    Ok(Fig1Result { curves, rb, spoof_ratio: spoof })
}

/// Settings of the Figure-2 scenario (local Clifford, standard and robust).
#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Config {
    pub cs: Vec<f64>,
    pub fidelity: f64,
    pub deltas: Vec<f64>,
    pub shots: u64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Fig2Config {
            cs: vec![0.0, 0.3, 1.0 / 3f64.sqrt()],
            fidelity: 0.99,
            deltas: crate::bounds::linspace(0.0, 0.5, 11),
            shots: 100_000,
            repeats: 20,
            seed: 2,
        }
    }
}

/// Exact standard and robust expectations for one Figure-2 point; the robust value
/// uses the exact expected calibration.
pub fn fig2_exact(setup: &SpoofSetup, delta: f64) -> Result<(f64, f64, FrameReport)> {
    let ens = GateEnsemble::local_clifford(1)?;
    let noise = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
    let report = noisy_frame(&ens, &noise)?;
    let st = StateData::new(&setup.prepared)?;
    let standard = report.expectation(&setup.target, &st)?;
    let robust = report.robust_expectation(&setup.target, &st, report.expected_mitigation()?)?;
    Ok((standard, robust, report))
}

/// One repeat of a Figure-2 point: (standard estimate, f̂_m, robust estimate).
pub fn fig2_repeat(setup: &SpoofSetup, delta: f64, shots: u64, seed: u64) -> Result<(f64, f64, f64)> {
    let ens = GateEnsemble::local_clifford(1)?;
    let noise = NoiseModel::overrotation(1, PulseSet::BlochRotations, delta);
    let sim = ShadowSimulator::new(&ens, &noise, &setup.prepared)?;
    let est = Estimator::standard(&setup.target, &ideal_frame(&ens)?)?;
    let standard = run_shadow(&sim, &est, shots, 1, derive_seed(seed, 0))?.mean;
    let zero = DensityState::zero(1)?;
    let cal_sim = ShadowSimulator::new(&ens, &noise, &zero)?;
    let values = calibration_batch(&cal_sim, derive_seed(seed, 1), 0, shots, 0)?;
    let cal = CalibrationResult::from_values(1, &values, default_mom_batches(shots));
    let robust = run_shadow(&sim, &Estimator::robust(&setup.target, cal.f_m)?, shots, 1, derive_seed(seed, 2))?.mean;
    Ok((standard, cal.f_m, robust))
}

/// Aggregates repeated estimates into a point.
pub fn repeat_point(x: f64, exact: f64, kind: EstimatorKind, st_norm: f64, values: &[f64]) -> CurvePoint {
    let v = if values.len() > 1 { variance(values) } else { 0.0 };
    CurvePoint {
        x,
        exact,
        analytic: None,
        sampled: Some(mean(values)),
        se: Some((v / values.len() as f64).sqrt()),
        variance: Some(v),
        kind,
        stabilizer_norm: st_norm,
    }
}

/// Sequential Figure-2 run; sampling is skipped when `repeats` is 0.
pub fn scenario_fig2(cfg: &Fig2Config) -> Result<Vec<Curve>> {
    let mut curves = Vec::new();
    for (i, &c) in cfg.cs.iter().enumerate() {
        let setup = SpoofSetup::new(c, cfg.fidelity)?;
        let mut std_pts = Vec::new();
        let mut rob_pts = Vec::new();
        for (j, &delta) in cfg.deltas.iter().enumerate() {
            let (e_std, e_rob, _) = fig2_exact(&setup, delta)?;
            if cfg.repeats == 0 {
                for (pts, e, kind) in [(&mut std_pts, e_std, EstimatorKind::Standard), (&mut rob_pts, e_rob, EstimatorKind::Robust)] {
                    pts.push(CurvePoint {
                        x: delta,
                        exact: e,
                        analytic: None,
                        sampled: None,
                        se: None,
                        variance: None,
                        kind,
                        stabilizer_norm: setup.stabilizer_norm,
                    });
                }
                continue;
            }
            let mut s_vals = Vec::with_capacity(cfg.repeats);
            let mut r_vals = Vec::with_capacity(cfg.repeats);
            for rep in 0..cfg.repeats {
                let seed = derive_seed(point_seed(cfg.seed, i, j), rep as u64);
                let (s, _, r) = fig2_repeat(&setup, delta, cfg.shots, seed)?;
                s_vals.push(s);
                r_vals.push(r);
            }
            std_pts.push(repeat_point(delta, e_std, EstimatorKind::Standard, setup.stabilizer_norm, &s_vals));
            rob_pts.push(repeat_point(delta, e_rob, EstimatorKind::Robust, setup.stabilizer_norm, &r_vals));
        }
        curves.push(Curve { label: alloc::format!("c={c:.4} standard"), c, kind: EstimatorKind::Standard, points: std_pts });
        curves.push(Curve { label: alloc::format!("c={c:.4} robust"), c, kind: EstimatorKind::Robust, points: rob_pts });
    }
    Ok(curves)
}

/// Grid points where the robust curve lies further from `target` than the standard
/// curve with the same state parameter (exact values).
pub fn robust_worse_points(curves: &[Curve], target: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for s in curves.iter().filter(|c| c.kind == EstimatorKind::Standard) {
        let Some(r) = curves.iter().find(|c| c.kind == EstimatorKind::Robust && c.c == s.c) else { continue };
        for (ps, pr) in s.points.iter().zip(&r.points) {
            if (pr.exact - target).abs() > (ps.exact - target).abs() + 1e-12 {
                out.push((s.c, ps.x));
            }
        }
    }
    out
}

/// ε·|((1+√2)/2)ⁿ − 2⁻ⁿ|.
pub fn worst_case_bias(n: usize, eps: f64) -> f64 {
    let h = (1.0 + 2f64.sqrt()) / 2.0;
    eps * (h.powi(n as i32) - 1.0 / dimension(n)).abs()
}

/// One row of the worst-case scaling table.
#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Row {
    pub n: usize,
    pub exact_bias: f64,
    pub closed_form: f64,
    pub stabilizer_norm: f64,
    /// Noisy expectation E[ô] from the frame.
    pub exact_expectation: f64,
    pub sampled: Option<EstimateResult>,
}

/// Magic-state observable, worst-case model and |0…0⟩ for n qubits.
pub fn prop1_setup(n: usize, eps: f64) -> Result<(GateEnsemble, NoiseModel, PauliObservable, DensityState)> {
    let ens = GateEnsemble::local_clifford(n)?;
    let noise = NoiseModel::basis_undo(n).with_mixing(eps)?;
    let o = states::tensor_power(&states::magic_h_observable(), n)?;
    Ok((ens, noise, o, DensityState::zero(n)?))
}

/// Exact (factorized frame) row, optionally with a Monte-Carlo run.
pub fn prop1_row(n: usize, eps: f64, sampling: Option<Sampling>) -> Result<Prop1Row> {
    let (ens, noise, o, rho) = prop1_setup(n, eps)?;
    let report = noisy_frame(&ens, &noise)?;
    let st = StateData::new(&rho)?;
    let exact_expectation = report.expectation(&o, &st)?;
    let exact_bias = (exact_expectation - ideal_expectation(&o, &st)?).abs();
    let sampled = match sampling {
        Some(s) => Some(sample_point(&o, &rho, &ens, &noise, s)?),
        None => None,
    };
    Ok(Prop1Row {
        n,
        exact_bias,
        closed_form: worst_case_bias(n, eps),
        stabilizer_norm: o.stabilizer_norm(),
        exact_expectation,
        sampled,
    })
}

/// Least-squares slope of log₂(y) against x.
pub fn log2_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let mx = mean(xs);
    let my = mean(&ly);
    let num: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Result {
    pub rows: Vec<Prop1Row>,
    /// Slope of log₂(bias) over the fit window.
    pub slope: f64,
    pub fit_window: (usize, usize),
    /// Slope over every row, for reference.
    pub slope_all: f64,
}

/// Worst-case scaling table for n in `ns`; sampled for n ≤ `mc_max`.
pub fn scenario_prop1(ns: &[usize], eps: f64, fit_window: (usize, usize), mc_max: usize, sampling: Sampling) -> Result<Prop1Result> {
    let mut rows = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let s = (n <= mc_max).then(|| Sampling { seed: derive_seed(sampling.seed, i as u64), ..sampling });
        rows.push(prop1_row(n, eps, s)?);
    }
    Ok(prop1_summary(rows, fit_window))
}

pub fn prop1_summary(rows: Vec<Prop1Row>, fit_window: (usize, usize)) -> Prop1Result {
    let fit: Vec<&Prop1Row> = rows.iter().filter(|r| r.n >= fit_window.0 && r.n <= fit_window.1).collect();
    let slope = log2_slope(&fit.iter().map(|r| r.n as f64).collect::<Vec<_>>(), &fit.iter().map(|r| r.exact_bias).collect::<Vec<_>>());
    let slope_all = log2_slope(&rows.iter().map(|r| r.n as f64).collect::<Vec<_>>(), &rows.iter().map(|r| r.exact_bias).collect::<Vec<_>>());
    Prop1Result { rows, slope, fit_window, slope_all }
}

/// One row of the robust-shadow bit-flip table.
#[derive(Clone, Debug, PartialEq)]
pub struct RseRow {
    pub n: usize,
    pub eps: f64,
    /// E f̂ from the frame.
    pub expected_calibration: f64,
    /// (d(1−ε)ⁿ − 1)/((d+1)(d−1)).
    pub closed_form_calibration: f64,
    pub traceless_expectation: f64,
    pub standard_bias: f64,
    /// None when d(1−ε)ⁿ ≤ 1 (mitigation diverges).
    pub robust_bias: Option<f64>,
    /// |⟨O₀⟩|·|(d−1)/(d(1−ε)ⁿ − 1) − 1|.
    pub closed_form_robust_bias: Option<f64>,
    /// |⟨O₀⟩|·(½(1+ε)ⁿ − 1).
    pub lower_bound: f64,
    /// |⟨O₀⟩·(½(1+ε)ⁿ − 1)|.
    pub lower_bound_abs: f64,
    pub calibration: Option<CalibrationResult>,
    pub standard_estimate: Option<EstimateResult>,
    pub robust_estimate: Option<EstimateResult>,
}

impl RseRow {
    pub fn diverges(&self) -> bool {
        self.robust_bias.is_none()
    }
}

/// Ensemble for the bit-flip table: the enumerated group for n ≤ 2, sampled beyond.
pub fn rse_ensemble(n: usize) -> Result<GateEnsemble> {
    if n <= 2 {
        GateEnsemble::uniform_global(n)
    } else {
        GateEnsemble::sampled_global(n)
    }
}

/// O = |+⟩⟨+|^{⊗n} measured on ρ = |+⟩⟨+|^{⊗n} under right bit-flip noise.
pub fn rse_row(n: usize, eps: f64, sampling: Option<Sampling>) -> Result<RseRow> {
    let ens = rse_ensemble(n)?;
    let noise = NoiseModel::bit_flip_right(n, eps)?;
    let o = states::tensor_power(&states::plus_observable(), n)?;
    let rho = DensityState::product(vec![states::plus().dense()?.clone(); n])?;
    let report = noisy_frame(&ens, &noise)?;
    let st = StateData::new(&rho)?;
    let d = dimension(n);
    let ideal = ideal_expectation(&o, &st)?;
    let o0 = ideal - o.trace() / d;
    let fe = report.expected_calibration()?;
    let closed = (d * (1.0 - eps).powi(n as i32) - 1.0) / ((d + 1.0) * (d - 1.0));
    let denom = d * (1.0 - eps).powi(n as i32) - 1.0;
    let (robust_bias, closed_rb) = if denom > 0.0 {
        let f_m = report.expected_mitigation()?;
        let rb = (report.robust_expectation(&o, &st, f_m)? - ideal).abs();
        (Some(rb), Some(o0.abs() * ((d - 1.0) / denom - 1.0).abs()))
    } else {
        (None, None)
    };
    let half = 0.5 * (1.0 + eps).powi(n as i32) - 1.0;
    let (calibration, standard_estimate, robust_estimate) = match sampling {
        Some(s) => {
            let sim = ShadowSimulator::new(&ens, &noise, &rho)?;
            let zero = DensityState::zero(n)?;
            let cal_sim = ShadowSimulator::new(&ens, &noise, &zero)?;
            let cs = derive_seed(s.seed, 0);
            let mut values = Vec::with_capacity(s.shots as usize);
            for b in 0..s.batches {
                let k = batch_shots(s.shots, s.batches, b);
                values.extend(calibration_batch(&cal_sim, cs, b, k, batch_offset(s.shots, s.batches, b))?);
            }
            let cal = CalibrationResult::from_values(n, &values, default_mom_batches(s.shots));
            let est = Estimator::standard(&o, &ideal_frame(&ens)?)?;
            let std_r = run_shadow(&sim, &est, s.shots, s.batches, derive_seed(s.seed, 1))?;
            let rob_r = match Estimator::robust(&o, cal.f_m) {
                Ok(e) => Some(run_shadow(&sim, &e, s.shots, s.batches, derive_seed(s.seed, 2))?),
                Err(_) => None,
            };
            (Some(cal), Some(std_r), rob_r)
        }
        None => (None, None, None),
    };
    Ok(RseRow {
        n,
        eps,
        expected_calibration: fe,
        closed_form_calibration: closed,
        traceless_expectation: o0,
        standard_bias: report.exact_bias(&o, &st)?,
        robust_bias,
        closed_form_robust_bias: closed_rb,
        lower_bound: o0.abs() * half,
        lower_bound_abs: (o0 * half).abs(),
        calibration,
        standard_estimate,
        robust_estimate,
    })
}

pub fn scenario_rse_bitflip(ns: &[usize], eps: f64, sampling: Option<Sampling>) -> Result<Vec<RseRow>> {
    ns.iter()
        .enumerate()
        .map(|(i, &n)| rse_row(n, eps, sampling.map(|s| Sampling { seed: derive_seed(s.seed, i as u64), ..s })))
        .collect()
}
