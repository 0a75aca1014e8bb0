//! Rayon drivers over the core's per-batch, per-chunk and per-point functions.
//!
//! Every unit of work owns its random stream, and results are merged in index order,
//! so outputs match the sequential core routines for any worker count.

use rayon::prelude::*;
use shadowlab_core::bounds::{
    concentration_chunks, mitigation_map, ConcentrationCounts, ConcentrationReport, ConcentrationSetup, MapPoint,
    TailDistribution,
};
use shadowlab_core::clifford::GateEnsemble;
use shadowlab_core::noise::NoiseModel;
use shadowlab_core::pauli::DensityState;
use shadowlab_core::rng::{derive_seed, stream_rng};
use shadowlab_core::scenario::{
    fig1_point, fig2_exact, fig2_repeat, point_seed, prop1_row, prop1_summary, rb_infidelity, repeat_point,
    rse_row, spoof_ratio, Curve, CurvePoint, EstimatorKind, Fig1Config, Fig1Result, Fig2Config, Prop1Result, RbPoint,
    RseRow, Sampling, SpoofSetup,
};
use shadowlab_core::shadow::{
    batch_offset, batch_shots, default_mom_batches, run_batch, CalibrationResult, EstimateResult, Estimator,
    ShadowSample, ShadowSimulator,
};
use shadowlab_core::stats::Moments;
use shadowlab_core::Result;

pub type Record = Vec<(ShadowSample, f64)>;

/// Parallel counterpart of `run_shadow`; optionally keeps every (sample, ô) pair.
pub fn estimate(
    sim: &ShadowSimulator<'_>,
    est: &Estimator,
    shots: u64,
    batches: usize,
    seed: u64,
    keep: bool,
) -> Result<(EstimateResult, Option<Record>)> {
    let parts: Vec<(Moments, Record)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rec = Vec::new();
            let k = batch_shots(shots, batches, b);
            let m = run_batch(sim, est, seed, b, k, batch_offset(shots, batches, b), keep.then_some(&mut rec))?;
            Ok((m, rec))
        })
        .collect::<Result<_>>()?;
    let moments: Vec<Moments> = parts.iter().map(|p| p.0).collect();
    let record = keep.then(|| parts.into_iter().flat_map(|p| p.1).collect());
    Ok((EstimateResult::from_batches(&moments, est.is_robust()), record))
}

/// Parallel counterpart of `calibrate_rse`; optionally keeps every (sample, f̂) pair.
pub fn calibrate(
    ensemble: &GateEnsemble,
    noise: &NoiseModel,
    shots: u64,
    batches: usize,
    mom_batches: Option<usize>,
    seed: u64,
    keep: bool,
) -> Result<(CalibrationResult, Option<Record>)> {
    let zero = DensityState::zero(ensemble.n())?;
    let sim = ShadowSimulator::new(ensemble, noise, &zero)?;
    let parts: Vec<Record> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let offset = batch_offset(shots, batches, b);
            let k = batch_shots(shots, batches, b);
            let mut out = Vec::with_capacity(k as usize);
            for i in 0..k {
                let s = sim.simulate_shot(offset + i, &mut rng)?;
                let v = sim.calibration_value(&s)?;
                out.push((s, v));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let record: Record = parts.into_iter().flatten().collect();
    let values: Vec<f64> = record.iter().map(|r| r.1).collect();
    let cal = CalibrationResult::from_values(ensemble.n(), &values, mom_batches.unwrap_or(default_mom_batches(shots)));
    Ok((cal, keep.then_some(record)))
}

/// Parallel counterpart of `concentration_experiment`.
pub fn concentration(
    k: usize,
    distribution: TailDistribution,
    gamma: Option<&[f64]>,
    trials: u64,
    delta: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    let setup = ConcentrationSetup::new(k, distribution, gamma, delta)?;
    let parts: Vec<ConcentrationCounts> = concentration_chunks(trials)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| setup.run_chunk(seed, c as u64, size))
        .collect();
    let mut total = ConcentrationCounts::default();
    parts.iter().for_each(|p| total.merge(p));
    Ok(setup.report(&total))
}

/// Mitigation verdict grid, one f_eff row per task.
pub fn mitigation_grid(f_eff: &[f64], f_m: &[f64]) -> Result<Vec<MapPoint>> {
    let rows: Vec<Vec<MapPoint>> = f_eff.par_iter().map(|fe| mitigation_map(&[*fe], f_m)).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Parallel counterpart of `scenario_fig1`.
pub fn fig1(cfg: &Fig1Config, sample: bool) -> Result<Fig1Result> {
    let setups: Vec<SpoofSetup> = cfg.cs.iter().map(|c| SpoofSetup::new(*c, cfg.fidelity)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.cs.len()).flat_map(|i| (0..cfg.deltas.len()).map(move |j| (i, j))).collect();
    let points: Vec<CurvePoint> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let s = sample.then(|| Sampling { shots: cfg.shots, batches: cfg.batches, seed: point_seed(cfg.seed, i, j) });
            fig1_point(&setups[i], cfg.deltas[j], s)
        })
        .collect::<Result<_>>()?;
    let curves: Vec<Curve> = cfg
        .cs
        .iter()
        .enumerate()
        .map(|(i, &c)| Curve {
            label: format!("c={c:.4}"),
            c,
            kind: EstimatorKind::Standard,
            points: points[i * cfg.deltas.len()..(i + 1) * cfg.deltas.len()].to_vec(),
        })
        .collect();
    let rb = rb_axis(&cfg.deltas)?;
    let magic = 1.0 / 3f64.sqrt();
    let spoof = curves.iter().find(|c| (c.c - magic).abs() < 1e-9).and_then(|c| spoof_ratio(c, cfg.fidelity, &rb));
    Ok(Fig1Result { curves, rb, spoof_ratio: spoof })
}

pub fn rb_axis(deltas: &[f64]) -> Result<Vec<RbPoint>> {
    deltas.par_iter().map(|d| rb_infidelity(*d)).collect()
}

/// Parallel counterpart of `scenario_fig2`.
pub fn fig2(cfg: &Fig2Config) -> Result<Vec<Curve>> {
    let setups: Vec<SpoofSetup> = cfg.cs.iter().map(|c| SpoofSetup::new(*c, cfg.fidelity)).collect::<Result<_>>()?;
    let nd = cfg.deltas.len();
    let tasks: Vec<(usize, usize)> = (0..cfg.cs.len()).flat_map(|i| (0..nd).map(move |j| (i, j))).collect();
    let pairs: Vec<(CurvePoint, CurvePoint)> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let setup = &setups[i];
            let delta = cfg.deltas[j];
            let (e_std, e_rob, _) = fig2_exact(setup, delta)?;
            if cfg.repeats == 0 {
                let p = |exact, kind| CurvePoint {
                    x: delta,
                    exact,
                    analytic: None,
                    sampled: None,
                    se: None,
                    variance: None,
                    kind,
                    stabilizer_norm: setup.stabilizer_norm,
                };
                return Ok((p(e_std, EstimatorKind::Standard), p(e_rob, EstimatorKind::Robust)));
            }
            let reps: Vec<(f64, f64, f64)> = (0..cfg.repeats)
                .into_par_iter()
                .map(|rep| fig2_repeat(setup, delta, cfg.shots, derive_seed(point_seed(cfg.seed, i, j), rep as u64)))
                .collect::<Result<_>>()?;
            let s: Vec<f64> = reps.iter().map(|r| r.0).collect();
            let r: Vec<f64> = reps.iter().map(|r| r.2).collect();
            Ok((
                repeat_point(delta, e_std, EstimatorKind::Standard, setup.stabilizer_norm, &s),
                repeat_point(delta, e_rob, EstimatorKind::Robust, setup.stabilizer_norm, &r),
            ))
        })
        .collect::<Result<_>>()?;
    let mut curves = Vec::new();
    for (i, &c) in cfg.cs.iter().enumerate() {
        let row = &pairs[i * nd..(i + 1) * nd];
        curves.push(Curve {
            label: format!("c={c:.4} standard"),
            c,
            kind: EstimatorKind::Standard,
            points: row.iter().map(|p| p.0.clone()).collect(),
        });
        curves.push(Curve {
            label: format!("c={c:.4} robust"),
            c,
            kind: EstimatorKind::Robust,
            points: row.iter().map(|p| p.1.clone()).collect(),
        });
    }
    Ok(curves)
}

/// Parallel counterpart of `scenario_prop1`.
pub fn prop1(ns: &[usize], eps: f64, fit_window: (usize, usize), mc_max: usize, sampling: Sampling) -> Result<Prop1Result> {
    let rows = ns
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = (n <= mc_max).then(|| Sampling { seed: derive_seed(sampling.seed, i as u64), ..sampling });
            prop1_row(n, eps, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(prop1_summary(rows, fit_window))
}

/// Parallel counterpart of `scenario_rse_bitflip`.
pub fn rse_bitflip(ns: &[usize], eps: f64, sampling: Option<Sampling>) -> Result<Vec<RseRow>> {
    ns.par_iter()
        .enumerate()
        .map(|(i, &n)| rse_row(n, eps, sampling.map(|s| Sampling { seed: derive_seed(s.seed, i as u64), ..s })))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use shadowlab_core::bounds::concentration_experiment;
    use shadowlab_core::frame::ideal_frame;
    use shadowlab_core::pauli::PauliObservable;
    use shadowlab_core::scenario::{scenario_fig1, scenario_fig2};
    use shadowlab_core::shadow::{calibrate_rse, run_shadow};

    #[test]
    fn matches_sequential_estimate() {
        let ens = GateEnsemble::local_clifford(2).unwrap();
        let noise = NoiseModel::bit_flip_right(2, 0.05).unwrap();
        let rho = DensityState::zero(2).unwrap();
        let o = PauliObservable::pauli("ZZ".parse().unwrap(), 1.0);
        let sim = ShadowSimulator::new(&ens, &noise, &rho).unwrap();
        let est = Estimator::standard(&o, &ideal_frame(&ens).unwrap()).unwrap();
        let (par, rec) = estimate(&sim, &est, 5000, 7, 11, true).unwrap();
        assert_eq!(par, run_shadow(&sim, &est, 5000, 7, 11).unwrap());
        let rec = rec.unwrap();
        assert_eq!(rec.len(), 5000);
        assert!(rec.iter().enumerate().all(|(i, r)| r.0.shot == i as u64));
        let (cal, _) = calibrate(&ens, &noise, 3000, 5, None, 4, false).unwrap();
        assert_eq!(cal, calibrate_rse(&ens, &noise, 3000, 5, None, 4).unwrap());
    }

    #[test]
    fn matches_sequential_concentration_and_scenarios() {
        let a = concentration(15, TailDistribution::Sphere, None, 20_000, 0.05, 3).unwrap();
        let b = concentration_experiment(15, TailDistribution::Sphere, None, 20_000, 0.05, 3).unwrap();
        assert_eq!(a, b);
        let cfg = Fig1Config { deltas: vec![0.0, 0.2], shots: 2000, batches: 2, ..Fig1Config::default() };
        assert_eq!(fig1(&cfg, true).unwrap(), scenario_fig1(&cfg, true).unwrap());
        let cfg = Fig2Config { deltas: vec![0.1], shots: 500, repeats: 2, ..Fig2Config::default() };
        assert_eq!(fig2(&cfg).unwrap(), scenario_fig2(&cfg).unwrap());
    }
}
