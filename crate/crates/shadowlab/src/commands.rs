//! Subcommand implementations: each reads the config, computes, and writes into an output directory.

use serde_json::{json, Value};
use shadowlab_core::bounds::{
    bias_budget, linspace, mitigation_analysis, recovered_boundary, variance_consistency, Verdict,
};
use shadowlab_core::frame::{ideal_expectation, ideal_frame, noisy_frame, StateData};
use shadowlab_core::pauli::{dimension, DensityState, PauliObservable};
use shadowlab_core::rng::derive_seed;
use shadowlab_core::scenario::{
    fig1_point, rb_asymmetry, rb_quadratic_coefficient, robust_worse_points, Curve, EstimatorKind, Fig1Config,
    Fig2Config, Sampling, SpoofSetup,
};
use shadowlab_core::shadow::{Estimator, ShadowSimulator};

use crate::config::{probability, Config, ScenarioSpec};
use crate::error::{CliError, CliResult};
use crate::formats::{EnsembleJson, FrameReportJson};
use crate::output::{num, opt, Output, Table};
use crate::parallel;
use crate::svg::{Plot, Series};

/// Human-readable summary lines printed by the binary.
pub type Summary = Vec<String>;

fn outcome_bits(x: u64, n: usize) -> String {
    (0..n).map(|q| if (x >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

fn samples_table(n: usize, record: &[(shadowlab_core::shadow::ShadowSample, f64)], value: &str) -> Table {
    let mut t = Table::new(&["shot", "gate_id", "outcome", value]);
    for (s, v) in record {
        t.push(vec![s.shot.to_string(), s.gate.id(), outcome_bits(s.outcome, n), num(*v)]);
    }
    t
}

/// Exact noisy expectation when the frame is computable exactly.
fn exact_expectation(cfg: &Config, o: &PauliObservable, rho: &DensityState) -> Option<(f64, f64)> {
    let ens = cfg.ensemble().ok()?;
    let noise = cfg.noise(ens.n()).ok()?;
    let report = noisy_frame(&ens, &noise).ok()?;
    let st = StateData::new(rho).ok()?;
    Some((report.expectation(o, &st).ok()?, ideal_expectation(o, &st).ok()?))
}

pub fn frame(cfg: &Config, _seed: u64, out: &mut Output) -> CliResult<Summary> {
    let ens = cfg.ensemble()?;
    let noise = cfg.noise(ens.n())?;
    let report = noisy_frame(&ens, &noise)?;
    let mut j = serde_json::to_value(FrameReportJson::from_report(&report)?).expect("frame report serializes");
    let mut lines = vec![format!("frame: n = {}, pauli = {}, exact = {}", report.n(), report.is_pauli(), report.is_exact())];
    if cfg.observable.is_some() && cfg.state.is_some() {
        let o = cfg.observable(ens.n())?;
        let rho = cfg.state(ens.n())?;
        let st = StateData::new(&rho)?;
        let e = report.expectation(&o, &st)?;
        let b = report.exact_bias(&o, &st)?;
        j["expectation"] = json!(e);
        j["ideal_expectation"] = json!(ideal_expectation(&o, &st)?);
        j["exact_bias"] = json!(b);
        lines.push(format!("E[o] = {e:.10}, exact bias = {b:.3e}"));
    }
    out.json("frame.json", &j)?;
    if ens.is_enumerated() {
        out.json("ensemble.json", &EnsembleJson::from_ensemble(&ens))?;
    }
    Ok(lines)
}

pub fn estimate(cfg: &Config, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let ens = cfg.ensemble()?;
    let n = ens.n();
    let noise = cfg.noise(n)?;
    let o = cfg.observable(n)?;
    let rho = cfg.state(n)?;
    let s = cfg.sampling()?;
    let sim = ShadowSimulator::new(&ens, &noise, &rho)?;
    let mut calibration = Value::Null;
    let est = if s.robust {
        let f_m = match s.f_m {
            Some(f) => f,
            None => {
                let (cal, _) = parallel::calibrate(&ens, &noise, s.shots, s.batches, s.mom_batches, derive_seed(seed, 1), false)?;
                calibration = json!({"f_m": cal.f_m, "mean": cal.mean, "se": cal.standard_error, "mom_batches": cal.mom_batches});
                cal.f_m
            }
        };
        Estimator::robust(&o, f_m)?
    } else {
        Estimator::standard(&o, &ideal_frame(&ens)?)?
    };
    let (r, record) = parallel::estimate(&sim, &est, s.shots, s.batches, seed, s.raw_samples)?;
    let exact = exact_expectation(cfg, &o, &rho);
    let variance = if s.robust {
        Value::Null
    } else {
        let factors = cfg.observable_factors(n);
        match variance_consistency(&o, factors.as_deref(), &rho, &ens, &noise, s.shots, derive_seed(seed, 2)) {
            Ok(v) => json!({
                "exact_mean": v.exact_mean,
                "exact_second_moment": v.exact_second_moment,
                "exact_variance": v.exact_variance,
                "global_bound": v.bounds.global,
                "local_kbody_bound": v.bounds.local_kbody,
                "local_pauli_bound": v.bounds.local_pauli,
                "applicable_bound": v.applicable_bound(&ens),
                "observed_c": v.observed_c,
                "empirical_second_moment": v.empirical_second_moment,
                "empirical_variance": v.empirical_variance,
                "second_moment_se": v.second_moment_se,
                "consistent": v.consistent(),
            }),
            Err(e) => json!({ "unavailable": e.to_string() }),
        }
    };
    let j = json!({
        "estimate": r.mean,
        "se": r.standard_error,
        "median_of_means": r.median_of_means,
        "variance": r.variance,
        "shots": r.shots,
        "batches": r.batches,
        "robust": r.robust,
        "seed": seed,
        "config_hash": out.meta().config_hash,
        "calibration": calibration,
        "variance_check": variance,
        "exact_expectation": exact.map(|e| e.0),
        "ideal_expectation": exact.map(|e| e.1),
        "simulator": if sim.is_product() { "product" } else { "dense" },
    });
    out.json("estimate.json", &j)?;
    if let Some(rec) = record {
        out.csv("samples.csv", &samples_table(n, &rec, "estimate"))?;
    }
    let mut lines = vec![format!("estimate = {:.6} ± {:.6} ({} shots)", r.mean, r.standard_error, r.shots)];
    if let Some((e, _)) = exact {
        lines.push(format!("exact = {e:.6}, deviation = {:.2} SE", (r.mean - e) / r.standard_error.max(1e-300)));
    }
    Ok(lines)
}

pub fn calibrate(cfg: &Config, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let ens = cfg.ensemble()?;
    let noise = cfg.noise(ens.n())?;
    let s = cfg.sampling()?;
    let (cal, record) = parallel::calibrate(&ens, &noise, s.shots, s.batches, s.mom_batches, seed, s.raw_samples)?;
    let expected = noisy_frame(&ens, &noise).ok().and_then(|r| r.expected_calibration().ok());
    let d = dimension(ens.n());
    let j = json!({
        "estimate": cal.mean,
        "se": cal.standard_error,
        "f_m": cal.f_m,
        "mom_batches": cal.mom_batches,
        "shots": cal.shots,
        "seed": seed,
        "config_hash": out.meta().config_hash,
        "expected_calibration": expected,
        "expected_f_m": expected.map(|e| (d + 1.0) * e),
        "consistent": expected.map(|e| (cal.mean - e).abs() <= 4.0 * cal.standard_error),
    });
    out.json("calibration.json", &j)?;
    if let Some(rec) = record {
        out.csv("samples.csv", &samples_table(ens.n(), &rec, "calibration"))?;
    }
    let mut lines = vec![format!("f̂ = {:.6} ± {:.6}, f̂_m = {:.6}", cal.mean, cal.standard_error, cal.f_m)];
    if let Some(e) = expected {
        lines.push(format!("E f̂ = {e:.6}"));
    }
    Ok(lines)
}

pub fn bounds(cfg: &Config, _seed: u64, out: &mut Output) -> CliResult<Summary> {
    let ens = cfg.ensemble()?;
    let n = ens.n();
    let noise = cfg.noise(n)?;
    let o = cfg.observable(n)?;
    let rho = match cfg.state {
        Some(_) => Some(cfg.state(n)?),
        None => None,
    };
    let b = bias_budget(&o, rho.as_ref(), &ens, &noise)?;
    let violations = b.violations(n, 1e-9);
    let mut j = json!({
        "naive_bound": b.naive_bound,
        "naive_exact": b.naive_exact,
        "thm1_general_bound": b.thm1_general_bound,
        "general_exact": b.general_exact,
        "distance_kind": if b.general_exact { "exact" } else { "surrogate" },
        "thm1_pauli_hs_bound": b.thm1_pauli_hs_bound,
        "thm1_pauli_st_bound": b.thm1_pauli_st_bound,
        "exact_bias": b.exact_bias,
        "max_channel_distance": b.max_channel_distance,
        "max_eigenvalue_gap": b.max_eigenvalue_gap,
        "max_gate_distance": b.max_gate_distance,
        "stabilizer_norm": b.stabilizer_norm,
        "hs_norm": b.hs_norm,
        "traceless_op_norm": b.traceless_op_norm,
        "chain_implied": b.chain_implied(n),
        "violations": violations,
    });
    let mut lines = vec![format!(
        "exact bias {} ≤ general {:.6e} ({}), naive {}",
        opt(b.exact_bias),
        b.thm1_general_bound,
        if b.general_exact { "exact" } else { "surrogate" },
        opt(b.naive_bound)
    )];
    if let (Some(rho), true) = (&rho, noise.is_pauli()) {
        let report = noisy_frame(&ens, &noise)?;
        let f_m = match cfg.mitigation.as_ref().and_then(|m| m.f_m) {
            Some(f) => f,
            None => report.expected_mitigation()?,
        };
        match mitigation_analysis(&o, rho, &report, f_m) {
            Ok(m) => {
                lines.push(format!("f_eff = {:.6}, f_m = {:.6}: robust {}", m.f_eff, m.f_m, m.verdict.as_str()));
                j["mitigation"] = json!({
                    "lambda_bar": m.lambda_bar,
                    "f_eff": m.f_eff,
                    "f_m": m.f_m,
                    "traceless_expectation": m.traceless_expectation,
                    "bias_std": m.bias_std,
                    "bias_rs": m.bias_rs,
                    "direct_bias_std": m.direct_bias_std,
                    "direct_bias_rs": m.direct_bias_rs,
                    "verdict": m.verdict.as_str(),
                    "region": m.region.as_str(),
                });
            }
            Err(e) => j["mitigation"] = json!({ "undefined": e.to_string() }),
        }
    }
    if !violations.is_empty() {
        lines.push(format!("bound violations: {}", violations.join(", ")));
    }
    out.json("bounds.json", &j)?;
    Ok(lines)
}

/// Summary of a verdict grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSummary {
    pub points: usize,
    /// Threshold rule and direct comparison agree on helps vs hurts.
    pub agreements: usize,
    pub exact_agreements: usize,
    pub boundary_rows: usize,
    pub boundary_max_error: f64,
    pub f_m_step: f64,
}

pub fn mitigation_map(cfg: &Config, _seed: u64, out: &mut Output) -> CliResult<Summary> {
    let m = cfg.mitigation()?;
    let fe = linspace(m.f_eff_range[0], m.f_eff_range[1], m.f_eff_points);
    let fm = linspace(m.f_m_range[0], m.f_m_range[1], m.f_m_points);
    let (summary, points) = map_with_summary(&fe, &fm)?;
    let mut t = Table::new(&["f_eff", "f_m", "region", "threshold_verdict", "direct_verdict", "agree", "realised_f_eff"]);
    for p in &points {
        t.push(vec![
            num(p.f_eff),
            num(p.f_m),
            p.region.as_str().into(),
            p.verdict.as_str().into(),
            p.direct.as_str().into(),
            ((p.verdict == Verdict::Hurts) == (p.direct == Verdict::Hurts)).to_string(),
            num(p.realised_f_eff),
        ]);
    }
    out.csv("mitigation_map.csv", &t)?;
    let boundary = recovered_boundary(&points);
    let mut bt = Table::new(&["f_eff", "recovered_f_m", "threshold_f_m"]);
    for (f, e, th) in &boundary {
        bt.push(vec![num(*f), num(*e), num(*th)]);
    }
    out.csv("mitigation_boundary.csv", &bt)?;
    let mut plot = Plot::new("Mitigation boundary", "f_eff", "f_m");
    plot.series.push(Series::line("f_eff/(2-f_eff)", boundary.iter().map(|b| (b.0, b.2)).collect(), 0));
    plot.series.push(Series::markers("grid edge", boundary.iter().map(|b| (b.0, b.1)).collect(), None, 1));
    out.svg("mitigation_boundary.svg", &plot)?;
    out.json(
        "mitigation_map.json",
        &json!({
            "points": summary.points,
            "agreements": summary.agreements,
            "exact_agreements": summary.exact_agreements,
            "boundary_rows": summary.boundary_rows,
            "boundary_max_error": summary.boundary_max_error,
            "f_m_step": summary.f_m_step,
        }),
    )?;
    Ok(vec![format!(
        "{} grid points, {} agree; boundary max error {:.2e} (grid step {:.2e})",
        summary.points, summary.agreements, summary.boundary_max_error, summary.f_m_step
    )])
}

pub fn map_with_summary(
    fe: &[f64],
    fm: &[f64],
) -> CliResult<(MapSummary, Vec<shadowlab_core::bounds::MapPoint>)> {
    let points = parallel::mitigation_grid(fe, fm)?;
    let boundary = recovered_boundary(&points);
    let step = if fm.len() > 1 { (fm[fm.len() - 1] - fm[0]) / (fm.len() - 1) as f64 } else { 0.0 };
    let summary = MapSummary {
        points: points.len(),
        agreements: points.iter().filter(|p| (p.verdict == Verdict::Hurts) == (p.direct == Verdict::Hurts)).count(),
        exact_agreements: points.iter().filter(|p| p.verdict == p.direct).count(),
        boundary_rows: boundary.len(),
        boundary_max_error: boundary.iter().map(|b| (b.1 - b.2).abs()).fold(0.0, f64::max),
        f_m_step: step,
    };
    Ok((summary, points))
}

pub fn concentrate(cfg: &Config, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let (c, dist) = cfg.concentration()?;
    let mut t = Table::new(&["k", "t", "bound", "frequency", "slack", "pass"]);
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    for (i, &k) in c.ks.iter().enumerate() {
        let r = parallel::concentration(k, dist, c.gamma.as_deref(), c.trials, c.delta, derive_seed(seed, i as u64))?;
        for row in &r.rows {
            t.push(vec![k.to_string(), num(row.t), num(row.bound), num(row.frequency), num(row.slack), row.pass.to_string()]);
        }
        let pass = r.rows.iter().all(|row| row.pass);
        lines.push(format!("k = {k}: tail bound {}", if pass { "holds" } else { "exceeded" }));
        reports.push(json!({
            "k": r.k,
            "trials": r.trials,
            "tail": r.rows.iter().map(|row| json!({
                "t": row.t, "bound": row.bound, "frequency": row.frequency, "slack": row.slack, "pass": row.pass,
            })).collect::<Vec<_>>(),
            "gaussian": r.gaussian.map(|g| json!({
                "sigma": g.sigma, "delta": g.delta, "bound": g.bound, "coverage": g.coverage, "pass": g.pass,
                "literal_bound": g.literal_bound, "literal_coverage": g.literal_coverage,
            })),
            "mitigation_mean": r.mitigation_mean.map(|m| json!({
                "lambda_bar": m.lambda_bar, "mean": m.mean, "se": m.standard_error, "pass": m.pass,
            })),
        }));
    }
    out.csv("concentration.csv", &t)?;
    out.json("concentration.json", &reports)?;
    Ok(lines)
}

fn scenario_spec(cfg: &Config) -> CliResult<&ScenarioSpec> {
    cfg.scenario.as_ref().ok_or_else(|| CliError::config("missing [scenario] section"))
}

fn delta_grid(s: &ScenarioSpec, points: usize) -> CliResult<Vec<f64>> {
    let [lo, hi] = s.delta_range.unwrap_or([0.0, 0.5]);
    let k = s.delta_points.unwrap_or(points);
    if k == 0 || !(lo <= hi) {
        return Err(CliError::config("delta grid must be non-empty and increasing"));
    }
    Ok(linspace(lo, hi, k))
}

fn cs(s: &ScenarioSpec) -> CliResult<Vec<f64>> {
    let cs = s.cs.clone().unwrap_or_else(|| vec![0.0, 0.3, 1.0 / 3f64.sqrt()]);
    if cs.is_empty() || cs.iter().any(|c| !(0.0..=1.0 / 2f64.sqrt()).contains(c)) {
        return Err(CliError::config("state parameters c must lie in [0, 1/√2]"));
    }
    Ok(cs)
}

fn fidelity(s: &ScenarioSpec) -> CliResult<f64> {
    let f = s.fidelity.unwrap_or(0.99);
    if !(0.5..=1.0).contains(&f) {
        return Err(CliError::config("fidelity must lie in [0.5, 1]"));
    }
    Ok(f)
}

fn n_range(s: &ScenarioSpec, default: [usize; 2]) -> CliResult<Vec<usize>> {
    let [lo, hi] = s.n_range.unwrap_or(default);
    if lo == 0 || lo > hi || hi > 16 {
        return Err(CliError::config("n_range must satisfy 1 ≤ lo ≤ hi ≤ 16"));
    }
    Ok((lo..=hi).collect())
}

fn sampling(s: &ScenarioSpec, seed: u64) -> CliResult<Sampling> {
    let shots = s.shots.unwrap_or(100_000);
    let batches = s.batches.unwrap_or(10);
    if batches == 0 || shots < batches as u64 {
        return Err(CliError::config("scenario needs batches ≥ 1 and shots ≥ batches"));
    }
    Ok(Sampling { shots, batches, seed })
}

pub fn scenario(cfg: &Config, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let s = scenario_spec(cfg)?;
    match s.id.as_str() {
        "fig1" => fig1(s, seed, out),
        "fig2" => fig2(s, seed, out),
        "prop1" => prop1(s, seed, out),
        "rse-bitflip" => rse(s, seed, out),
        "rb" => rb(s, out),
        other => Err(CliError::config(format!("unknown scenario `{other}`"))),
    }
}

/// Long-format table of curves; an empty list gives the header alone.
pub fn curves_table(curves: &[Curve]) -> Table {
    let mut t = Table::new(&CURVE_HEADER);
    for c in curves {
        for p in &c.points {
            t.push(vec![
                c.label.clone(),
                num(c.c),
                p.kind.as_str().into(),
                num(p.stabilizer_norm),
                num(p.x),
                num(p.exact),
                opt(p.analytic),
                opt(p.sampled),
                opt(p.se),
                opt(p.variance),
                p.consistent().map(|b| b.to_string()).unwrap_or_default(),
            ]);
        }
    }
    t
}

pub const CURVE_HEADER: [&str; 11] =
    ["curve", "c", "estimator", "stabilizer_norm", "delta", "exact", "analytic", "sampled", "se", "variance", "consistent"];

fn fig1(s: &ScenarioSpec, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let sm = sampling(s, seed)?;
    let cfg = Fig1Config {
        cs: cs(s)?,
        fidelity: fidelity(s)?,
        deltas: delta_grid(s, 41)?,
        shots: sm.shots,
        batches: sm.batches,
        seed,
    };
    let r = parallel::fig1(&cfg, !s.exact_only)?;
    out.csv("fig1.csv", &curves_table(&r.curves))?;
    for (i, c) in r.curves.iter().enumerate() {
        let mut t = Table::new(&["delta", "exact", "sampled", "se"]);
        for p in &c.points {
            t.push(vec![num(p.x), num(p.exact), opt(p.sampled), opt(p.se)]);
        }
        out.csv(&format!("fig1_c{i}.csv", ), &t)?;
    }
    let mut rbt = Table::new(&["delta", "r_pair", "r_proxy", "infidelity_pair", "infidelity_proxy"]);
    for p in &r.rb {
        rbt.push(vec![num(p.delta), num(p.r_pair), num(p.r_proxy), num(p.infidelity_pair), num(p.infidelity_proxy)]);
    }
    out.csv("rb_axis.csv", &rbt)?;
    for (name, by_infidelity) in [("fig1.svg", true), ("fig1_delta.svg", false)] {
        let x_label = if by_infidelity { "average gate infidelity (RB)" } else { "delta (rad)" };
        let mut plot = Plot::new("Pauli-basis shadows under over/under-rotation", x_label, "estimated fidelity");
        plot.references.push((cfg.fidelity, "true fidelity".into()));
        for (i, c) in r.curves.iter().enumerate() {
            let x = |j: usize, d: f64| if by_infidelity { r.rb[j].infidelity_pair } else { d };
            plot.series.push(Series::line(
                format!("{} exact", c.label),
                c.points.iter().enumerate().map(|(j, p)| (x(j, p.x), p.exact)).collect(),
                i,
            ));
            if c.points.iter().any(|p| p.sampled.is_some()) {
                plot.series.push(Series::markers(
                    format!("{} sampled", c.label),
                    c.points.iter().enumerate().filter_map(|(j, p)| p.sampled.map(|v| (x(j, p.x), v))).collect(),
                    Some(c.points.iter().filter_map(|p| p.se).collect()),
                    i,
                ));
            }
        }
        out.svg(name, &plot)?;
    }
    let small = cfg.deltas.iter().copied().find(|d| *d > 0.0 && *d <= 0.05).unwrap_or(0.01);
    let asym = cfg.deltas.iter().filter(|d| **d != 0.0).map(|d| rb_asymmetry(*d)).collect::<Result<Vec<_>, _>>()?;
    let max_asym = asym.iter().copied().fold(0.0, f64::max);
    let rates: Vec<Value> =
        r.curves.iter().map(|c| json!({"curve": c.label, "consistency_rate": c.consistency_rate()})).collect();
    let analytic_err = r
        .curves
        .iter()
        .flat_map(|c| c.points.iter().filter_map(|p| p.analytic.map(|a| (a - p.exact).abs())))
        .fold(0.0, f64::max);
    out.json(
        "fig1.json",
        &json!({
            "fidelity": cfg.fidelity,
            "depolarization": SpoofSetup::new(cfg.cs[0], cfg.fidelity)?.p,
            "spoof_ratio": r.spoof_ratio.map(|x| x.0),
            "spoof_delta": r.spoof_ratio.map(|x| x.1),
            "max_analytic_error": analytic_err,
            "consistency": rates,
            "rb_quadratic_coefficient": rb_quadratic_coefficient(small)?,
            "rb_quadratic_delta": small,
            "rb_max_relative_asymmetry": max_asym,
            "rb_symmetric": max_asym < 1e-9,
        }),
    )?;
    let mut lines = vec![format!("max |exact − analytic| = {analytic_err:.2e}")];
    if let Some((ratio, d)) = r.spoof_ratio {
        lines.push(format!("spoof ratio bias/infidelity = {ratio:.1} at δ = {d}"));
    }
    for c in &r.curves {
        if let Some(rate) = c.consistency_rate() {
            lines.push(format!("{}: {:.1}% of points within 4 SE", c.label, 100.0 * rate));
        }
    }
    Ok(lines)
}

fn fig2(s: &ScenarioSpec, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let shots = s.shots.unwrap_or(100_000);
    if shots == 0 {
        return Err(CliError::config("shots must be positive"));
    }
    let cfg = Fig2Config {
        cs: cs(s)?,
        fidelity: fidelity(s)?,
        deltas: delta_grid(s, 11)?,
        shots,
        repeats: if s.exact_only { 0 } else { s.repeats.unwrap_or(20) },
        seed,
    };
    let curves = parallel::fig2(&cfg)?;
    out.csv("fig2.csv", &curves_table(&curves))?;
    for kind in [EstimatorKind::Standard, EstimatorKind::Robust] {
        let mut plot = Plot::new(format!("Local Clifford shadows, {} estimator", kind.as_str()), "delta (rad)", "estimated fidelity");
        plot.references.push((cfg.fidelity, "true fidelity".into()));
        for (i, c) in curves.iter().filter(|c| c.kind == kind).enumerate() {
            plot.series.push(Series::dashed(format!("c={:.4} exact", c.c), c.points.iter().map(|p| (p.x, p.exact)).collect(), i));
            if c.points.iter().any(|p| p.sampled.is_some()) {
                plot.series.push(Series::markers(
                    format!("c={:.4} mean", c.c),
                    c.points.iter().filter_map(|p| p.sampled.map(|v| (p.x, v))).collect(),
                    Some(c.points.iter().filter_map(|p| p.variance).collect()),
                    i,
                ));
            }
        }
        out.svg(&format!("fig2_{}.svg", kind.as_str()), &plot)?;
    }
    let worse = robust_worse_points(&curves, cfg.fidelity);
    let steeper: Vec<Value> = curves
        .iter()
        .filter(|c| c.kind == EstimatorKind::Standard && c.c == 0.0)
        .flat_map(|c| c.points.iter().filter(|p| p.x > 0.0))
        .map(|p| -> CliResult<Value> {
            let setup = SpoofSetup::new(0.0, cfg.fidelity)?;
            let pauli = fig1_point(&setup, p.x, None)?.exact;
            Ok(json!({"delta": p.x, "local_clifford": p.exact, "pauli_basis": pauli, "steeper": p.exact < pauli}))
        })
        .collect::<CliResult<_>>()?;
    let rates: Vec<Value> =
        curves.iter().map(|c| json!({"curve": c.label, "consistency_rate": c.consistency_rate()})).collect();
    out.json(
        "fig2.json",
        &json!({
            "robust_worse_points": worse.iter().map(|(c, d)| json!({"c": c, "delta": d})).collect::<Vec<_>>(),
            "robust_worse_anywhere": !worse.is_empty(),
            "unit_norm_state_vs_pauli_basis": steeper,
            "consistency": rates,
            "repeats": cfg.repeats,
            "shots": cfg.shots,
        }),
    )?;
    let mut lines = vec![if worse.is_empty() {
        "robust bias exceeds standard bias at no grid point".to_string()
    } else {
        format!("robust bias exceeds standard bias at {} grid points", worse.len())
    }];
    for c in &curves {
        if let Some(rate) = c.consistency_rate() {
            lines.push(format!("{}: {:.1}% of points within 4 SE", c.label, 100.0 * rate));
        }
    }
    Ok(lines)
}

fn prop1(s: &ScenarioSpec, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let ns = n_range(s, [1, 12])?;
    let eps = probability(s.eps.unwrap_or(0.1), "eps")?;
    let [f0, f1] = s.fit_window.unwrap_or([8, 12]);
    let mc_max = if s.exact_only { 0 } else { s.mc_max.unwrap_or(4) };
    let r = parallel::prop1(&ns, eps, (f0, f1), mc_max, sampling(s, seed)?)?;
    let mut t = Table::new(&["n", "exact_bias", "closed_form", "stabilizer_norm", "exact_expectation", "sampled", "se", "consistent"]);
    for row in &r.rows {
        t.push(vec![
            row.n.to_string(),
            num(row.exact_bias),
            num(row.closed_form),
            num(row.stabilizer_norm),
            num(row.exact_expectation),
            opt(row.sampled.as_ref().map(|x| x.mean)),
            opt(row.sampled.as_ref().map(|x| x.standard_error)),
            row.sampled
                .as_ref()
                .map(|x| ((x.mean - row.exact_expectation).abs() <= 4.0 * x.standard_error).to_string())
                .unwrap_or_default(),
        ]);
    }
    out.csv("prop1.csv", &t)?;
    let mut plot = Plot::new("Worst-case bias under local Clifford shadows", "n", "bias");
    plot.log2_y = true;
    plot.series.push(Series::line("exact", r.rows.iter().map(|x| (x.n as f64, x.exact_bias)).collect(), 0));
    plot.series.push(Series::dashed("closed form", r.rows.iter().map(|x| (x.n as f64, x.closed_form)).collect(), 1));
    out.svg("prop1.svg", &plot)?;
    let target = ((1.0 + 2f64.sqrt()) / 2.0).log2();
    let max_err = r.rows.iter().map(|x| (x.exact_bias - x.closed_form).abs()).fold(0.0, f64::max);
    out.json(
        "prop1.json",
        &json!({
            "eps": eps,
            "slope": r.slope,
            "fit_window": [r.fit_window.0, r.fit_window.1],
            "slope_all_rows": r.slope_all,
            "asymptotic_slope": target,
            "max_closed_form_error": max_err,
        }),
    )?;
    Ok(vec![
        format!("max |exact − closed form| = {max_err:.2e}"),
        format!("log2 slope over n ∈ [{f0}, {f1}] = {:.4} (asymptote {target:.4})", r.slope),
    ])
}

fn rse(s: &ScenarioSpec, seed: u64, out: &mut Output) -> CliResult<Summary> {
    let ns = n_range(s, [1, 4])?;
    let eps = probability(s.eps.unwrap_or(0.1), "eps")?;
    let sm = if s.exact_only { None } else { Some(sampling(s, seed)?) };
    let rows = parallel::rse_bitflip(&ns, eps, sm)?;
    let mut t = Table::new(&[
        "n",
        "eps",
        "expected_calibration",
        "closed_form_calibration",
        "calibration_mean",
        "calibration_se",
        "traceless_expectation",
        "standard_bias",
        "robust_bias",
        "closed_form_robust_bias",
        "lower_bound",
        "lower_bound_abs",
        "diverges",
        "standard_estimate",
        "standard_se",
        "robust_estimate",
        "robust_se",
    ]);
    for r in &rows {
        t.push(vec![
            r.n.to_string(),
            num(r.eps),
            num(r.expected_calibration),
            num(r.closed_form_calibration),
            opt(r.calibration.as_ref().map(|c| c.mean)),
            opt(r.calibration.as_ref().map(|c| c.standard_error)),
            num(r.traceless_expectation),
            num(r.standard_bias),
            opt(r.robust_bias),
            opt(r.closed_form_robust_bias),
            num(r.lower_bound),
            num(r.lower_bound_abs),
            r.diverges().to_string(),
            opt(r.standard_estimate.as_ref().map(|e| e.mean)),
            opt(r.standard_estimate.as_ref().map(|e| e.standard_error)),
            opt(r.robust_estimate.as_ref().map(|e| e.mean)),
            opt(r.robust_estimate.as_ref().map(|e| e.standard_error)),
        ]);
    }
    out.csv("rse_bitflip.csv", &t)?;
    let mut plot = Plot::new("Robust shadows under bit-flip noise", "n", "bias");
    plot.series.push(Series::line("standard", rows.iter().map(|r| (r.n as f64, r.standard_bias)).collect(), 0));
    plot.series.push(Series::line("robust", rows.iter().filter_map(|r| r.robust_bias.map(|b| (r.n as f64, b))).collect(), 1));
    plot.series.push(Series::dashed("lower bound", rows.iter().map(|r| (r.n as f64, r.lower_bound)).collect(), 2));
    out.svg("rse_bitflip.svg", &plot)?;
    let mut lines = Vec::new();
    for r in &rows {
        lines.push(match r.robust_bias {
            Some(b) => format!("n = {}: standard bias {:.2e}, robust bias {b:.6}, lower bound {:.6}", r.n, r.standard_bias, r.lower_bound),
            None => format!("n = {}: mitigation diverges (d(1−ε)ⁿ ≤ 1)", r.n),
        });
    }
    out.json(
        "rse_bitflip.json",
        &json!({
            "eps": eps,
            "rows": rows.iter().map(|r| json!({
                "n": r.n,
                "expected_calibration": r.expected_calibration,
                "closed_form_calibration": r.closed_form_calibration,
                "standard_bias": r.standard_bias,
                "robust_bias": r.robust_bias,
                "lower_bound": r.lower_bound,
                "lower_bound_abs": r.lower_bound_abs,
                "diverges": r.diverges(),
                "calibration_consistent": r.calibration.as_ref().map(|c| (c.mean - r.expected_calibration).abs() <= 4.0 * c.standard_error),
            })).collect::<Vec<_>>(),
        }),
    )?;
    Ok(lines)
}

fn rb(s: &ScenarioSpec, out: &mut Output) -> CliResult<Summary> {
    let deltas = delta_grid(s, 41)?;
    let pts = parallel::rb_axis(&deltas)?;
    let mut t = Table::new(&["delta", "r_pair", "r_proxy", "infidelity_pair", "infidelity_proxy"]);
    for p in &pts {
        t.push(vec![num(p.delta), num(p.r_pair), num(p.r_proxy), num(p.infidelity_pair), num(p.infidelity_proxy)]);
    }
    out.csv("rb_axis.csv", &t)?;
    let mut plot = Plot::new("RB infidelity of X/Y half-pi pulses", "delta (rad)", "average gate infidelity");
    plot.series.push(Series::line("pair construction", pts.iter().map(|p| (p.delta, p.infidelity_pair)).collect(), 0));
    plot.series.push(Series::dashed("proxy", pts.iter().map(|p| (p.delta, p.infidelity_proxy)).collect(), 1));
    out.svg("rb_axis.svg", &plot)?;
    let small = deltas.iter().copied().find(|d| *d > 0.0 && *d <= 0.05).unwrap_or(0.01);
    let q = rb_quadratic_coefficient(small)?;
    out.json("rb_axis.json", &json!({"quadratic_coefficient": q, "quadratic_delta": small}))?;
    Ok(vec![format!("infidelity ≈ {q:.4}·δ² near δ = 0")])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_strings_are_qubit_ordered() {
        assert_eq!(outcome_bits(0b110, 3), "011");
    }

    #[test]
    fn empty_curve_list_gives_header() {
        let csv = String::from_utf8(curves_table(&[]).to_csv().unwrap()).unwrap();
        assert_eq!(csv, format!("{}\n", CURVE_HEADER.join(",")));
    }

    #[test]
    fn small_map_agrees() {
        let fe = linspace(-1.5, 2.5, 21);
        let fm = linspace(-1.0, 1.0, 21);
        let (s, _) = map_with_summary(&fe, &fm).unwrap();
        assert_eq!(s.agreements, s.points);
        assert!(s.boundary_max_error <= s.f_m_step + 1e-12);
    }
}
