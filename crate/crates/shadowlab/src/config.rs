//! Versioned TOML run configuration and its translation into core objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shadowlab_core::bounds::TailDistribution;
use shadowlab_core::clifford::GateEnsemble;
use shadowlab_core::noise::NoiseModel;
use shadowlab_core::pauli::{states, DensityState, PauliLabel, PauliObservable};
use shadowlab_core::pulses::PulseSet;

use crate::error::{CliError, CliResult};
use crate::formats::{read_json, ChannelJson, EnsembleJson, ObservableJson, StateJson};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    /// Used when `--seed` is not given.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub observable: Option<ObservableSpec>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub sampling: Option<SamplingSpec>,
    #[serde(default)]
    pub mitigation: Option<MitigationSpec>,
    #[serde(default)]
    pub concentration: Option<ConcentrationSpec>,
    #[serde(default)]
    pub scenario: Option<ScenarioSpec>,
    /// Directory that relative file paths resolve against; set by the loader.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// global | sampled-global | local | pauli-basis | file
    pub kind: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// noiseless | depolarizing | bit-flip | overrotation | basis-undo | channel
    pub model: String,
    #[serde(default)]
    pub params: NoiseParams,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// bloch | xy
    #[serde(default)]
    pub pulses: Option<String>,
    /// Λ_ε(g) = (1 − ε)·id + ε·Λ(g).
    #[serde(default)]
    pub mixing: Option<f64>,
    /// right | left (channel model only).
    #[serde(default)]
    pub placement: Option<String>,
    #[serde(default)]
    pub pauli_probs: Option<Vec<f64>>,
    #[serde(default)]
    pub ptm: Option<Vec<f64>>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    /// magic-h | plus | rho-c (n-fold tensor powers; rho-c needs n = 1)
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// zero | plus | magic-h | rho-c | bloch
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub bloch: Option<[f64; 3]>,
    /// Global depolarization applied after the preset (dense).
    #[serde(default)]
    pub depolarize: Option<f64>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Median-of-means batches for calibration; default ⌊√shots⌋.
    #[serde(default)]
    pub mom_batches: Option<usize>,
    /// Use the robust estimator (calibrating first unless `f_m` is given).
    #[serde(default)]
    pub robust: bool,
    #[serde(default)]
    pub f_m: Option<f64>,
    /// Write per-shot rows to `samples.csv`.
    #[serde(default)]
    pub raw_samples: bool,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec { shots: default_shots(), batches: default_batches(), mom_batches: None, robust: false, f_m: None, raw_samples: false }
    }
}

fn default_shots() -> u64 {
    10_000
}

fn default_batches() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationSpec {
    /// f_m for the `bounds` mitigation analysis; default is E f̂_m.
    #[serde(default)]
    pub f_m: Option<f64>,
    #[serde(default = "default_f_eff_range")]
    pub f_eff_range: [f64; 2],
    #[serde(default = "default_f_m_range")]
    pub f_m_range: [f64; 2],
    #[serde(default = "default_grid")]
    pub f_eff_points: usize,
    #[serde(default = "default_grid")]
    pub f_m_points: usize,
}

impl Default for MitigationSpec {
    fn default() -> Self {
        MitigationSpec {
            f_m: None,
            f_eff_range: default_f_eff_range(),
            f_m_range: default_f_m_range(),
            f_eff_points: default_grid(),
            f_m_points: default_grid(),
        }
    }
}

fn default_f_eff_range() -> [f64; 2] {
    [-1.5, 2.5]
}

fn default_f_m_range() -> [f64; 2] {
    [-1.0, 1.0]
}

fn default_grid() -> usize {
    101
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSpec {
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    /// sphere | gaussian
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Fixed signal vector; default is a random unit vector.
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
}

impl Default for ConcentrationSpec {
    fn default() -> Self {
        ConcentrationSpec {
            ks: default_ks(),
            distribution: default_distribution(),
            sigma: None,
            trials: default_trials(),
            delta: default_delta(),
            gamma: None,
        }
    }
}

fn default_ks() -> Vec<usize> {
    vec![15, 255]
}

fn default_distribution() -> String {
    "sphere".into()
}

fn default_trials() -> u64 {
    100_000
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// fig1 | fig2 | prop1 | rse-bitflip | rb
    pub id: String,
    #[serde(default)]
    pub cs: Option<Vec<f64>>,
    #[serde(default)]
    pub fidelity: Option<f64>,
    #[serde(default)]
    pub delta_range: Option<[f64; 2]>,
    #[serde(default)]
    pub delta_points: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub n_range: Option<[usize; 2]>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub batches: Option<usize>,
    #[serde(default)]
    pub repeats: Option<usize>,
    /// Largest n sampled by Monte Carlo (prop1).
    #[serde(default)]
    pub mc_max: Option<usize>,
    #[serde(default)]
    pub fit_window: Option<[usize; 2]>,
    /// Skip all sampling and emit exact curves only.
    #[serde(default)]
    pub exact_only: bool,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::config(format!("unsupported config version {} (expected {CONFIG_VERSION})", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Config::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form of the parsed config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn section<'a, T>(&self, v: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        v.as_ref().ok_or_else(|| CliError::config(format!("missing [{name}] section")))
    }

    pub fn ensemble(&self) -> CliResult<GateEnsemble> {
        let e = self.section(&self.ensemble, "ensemble")?;
        if e.kind == "file" {
            let path = e.path.as_deref().ok_or_else(|| CliError::config("ensemble kind `file` needs `path`"))?;
            let j: EnsembleJson = read_json(&self.resolve(path))?;
            return j.to_ensemble();
        }
        let n = e.n.ok_or_else(|| CliError::config("ensemble needs `n`"))?;
        check_n(n)?;
        Ok(match e.kind.as_str() {
            "global" => {
                if n > 2 {
                    return Err(CliError::config("kind `global` is enumerated and needs n ≤ 2; use `sampled-global`"));
                }
                GateEnsemble::uniform_global(n)?
            }
            "sampled-global" => GateEnsemble::sampled_global(n)?,
            "local" => GateEnsemble::local_clifford(n)?,
            "pauli-basis" => GateEnsemble::pauli_basis(n)?,
            other => return Err(CliError::config(format!("unknown ensemble kind `{other}`"))),
        })
    }

    pub fn noise(&self, n: usize) -> CliResult<NoiseModel> {
        let Some(spec) = &self.noise else {
            return Ok(NoiseModel::noiseless(n));
        };
        let p = &spec.params;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::config(format!("noise model `{}` needs `{name}`", spec.model)));
        let model = match spec.model.as_str() {
            "noiseless" => NoiseModel::noiseless(n),
            "depolarizing" => NoiseModel::depolarizing(n, probability(need(p.q, "q")?, "q")?)?,
            "bit-flip" => NoiseModel::bit_flip_right(n, probability(need(p.eps, "eps")?, "eps")?)?,
            "overrotation" => {
                let set = match p.pulses.as_deref().unwrap_or("bloch") {
                    "bloch" => PulseSet::BlochRotations,
                    "xy" => PulseSet::XyHalfPi,
                    other => return Err(CliError::config(format!("unknown pulse set `{other}`"))),
                };
                NoiseModel::overrotation(n, set, need(p.delta, "delta")?)
            }
            "basis-undo" => NoiseModel::basis_undo(n),
            "channel" => {
                let j = if let Some(path) = &p.path {
                    read_json::<ChannelJson>(&self.resolve(path))?
                } else {
                    ChannelJson { n, ptm: p.ptm.clone(), pauli_probs: p.pauli_probs.clone() }
                };
                if j.n != n {
                    return Err(CliError::config(format!("channel acts on {} qubits, ensemble on {n}", j.n)));
                }
                let ch = j.to_channel()?;
                match p.placement.as_deref().unwrap_or("right") {
                    "right" => NoiseModel::right(ch),
                    "left" => NoiseModel::left(ch),
                    other => return Err(CliError::config(format!("unknown placement `{other}`"))),
                }
            }
            other => return Err(CliError::config(format!("unknown noise model `{other}`"))),
        };
        match p.mixing {
            Some(eps) => Ok(model.with_mixing(probability(eps, "mixing")?)?),
            None => Ok(model),
        }
    }

    pub fn observable(&self, n: usize) -> CliResult<PauliObservable> {
        let o = self.section(&self.observable, "observable")?;
        let obs = match (&o.preset, &o.terms, &o.path) {
            (Some(preset), None, None) => preset_observable(preset, o.c, n)?,
            (None, Some(terms), None) => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    out.push((t.label.parse::<PauliLabel>()?, t.value));
                }
                if out.iter().any(|(l, _)| l.n() != n) {
                    return Err(CliError::config(format!("observable labels must have {n} letters")));
                }
                PauliObservable::from_terms(n, out)?
            }
            (None, None, Some(path)) => read_json::<ObservableJson>(&self.resolve(path))?.to_observable()?,
            _ => return Err(CliError::config("observable needs exactly one of `preset`, `terms` or `path`")),
        };
        if obs.n() != n {
            return Err(CliError::config(format!("observable acts on {} qubits, ensemble on {n}", obs.n())));
        }
        Ok(obs)
    }

    /// Observable factors when the preset is a tensor power.
    pub fn observable_factors(&self, n: usize) -> Option<Vec<PauliObservable>> {
        let o = self.observable.as_ref()?;
        match o.preset.as_deref()? {
            "magic-h" => Some(vec![states::magic_h_observable(); n]),
            "plus" => Some(vec![states::plus_observable(); n]),
            _ => None,
        }
    }

    pub fn state(&self, n: usize) -> CliResult<DensityState> {
        let s = self.section(&self.state, "state")?;
        let mut rho = match (&s.preset, &s.path) {
            (Some(preset), None) => preset_state(preset, s, n)?,
            (None, Some(path)) => read_json::<StateJson>(&self.resolve(path))?.to_state()?,
            _ => return Err(CliError::config("state needs exactly one of `preset` or `path`")),
        };
        if rho.n() != n {
            return Err(CliError::config(format!("state has {} qubits, ensemble {n}", rho.n())));
        }
        if let Some(p) = s.depolarize {
            rho = rho.depolarize(probability(p, "depolarize")?)?;
        }
        Ok(rho)
    }

    pub fn sampling(&self) -> CliResult<SamplingSpec> {
        let s = self.sampling.clone().unwrap_or_default();
        if s.batches == 0 || s.shots < s.batches as u64 {
            return Err(CliError::config("sampling needs batches ≥ 1 and shots ≥ batches"));
        }
        if s.mom_batches == Some(0) {
            return Err(CliError::config("mom_batches must be positive"));
        }
        Ok(s)
    }

    pub fn mitigation(&self) -> CliResult<MitigationSpec> {
        let m = self.mitigation.clone().unwrap_or_default();
        if m.f_eff_points < 2 || m.f_m_points < 2 {
            return Err(CliError::config("mitigation grids need at least 2 points"));
        }
        if m.f_eff_range[0] >= m.f_eff_range[1] || m.f_m_range[0] >= m.f_m_range[1] {
            return Err(CliError::config("mitigation ranges must be increasing"));
        }
        Ok(m)
    }

    pub fn concentration(&self) -> CliResult<(ConcentrationSpec, TailDistribution)> {
        let c = self.concentration.clone().unwrap_or_default();
        if c.ks.is_empty() || c.ks.iter().any(|k| *k < 2) {
            return Err(CliError::config("concentration needs k ≥ 2"));
        }
        if c.trials < 1000 {
            return Err(CliError::config("concentration needs trials ≥ 1000"));
        }
        if !(c.delta > 0.0 && c.delta < 1.0) {
            return Err(CliError::config("concentration delta must lie in (0, 1)"));
        }
        let dist = match c.distribution.as_str() {
            "sphere" => TailDistribution::Sphere,
            "gaussian" => {
                let sigma = c.sigma.ok_or_else(|| CliError::config("gaussian distribution needs `sigma`"))?;
                if !(sigma > 0.0) {
                    return Err(CliError::config("sigma must be positive"));
                }
                TailDistribution::Gaussian { sigma }
            }
            other => return Err(CliError::config(format!("unknown distribution `{other}`"))),
        };
        if let Some(g) = &c.gamma {
            if c.ks.iter().any(|k| *k != g.len()) {
                return Err(CliError::config("gamma length must equal every k"));
            }
        }
        Ok((c, dist))
    }
}

pub fn check_n(n: usize) -> CliResult<()> {
    if n == 0 || n > 16 {
        return Err(CliError::config(format!("n = {n} outside 1..=16")));
    }
    Ok(())
}

pub fn probability(p: f64, name: &str) -> CliResult<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::config(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(p)
}

fn preset_observable(preset: &str, c: Option<f64>, n: usize) -> CliResult<PauliObservable> {
    Ok(match preset {
        "magic-h" => states::tensor_power(&states::magic_h_observable(), n)?,
        "plus" => states::tensor_power(&states::plus_observable(), n)?,
        "rho-c" => {
            if n != 1 {
                return Err(CliError::config("preset `rho-c` is single-qubit"));
            }
            states::rho_c(c.ok_or_else(|| CliError::config("preset `rho-c` needs `c`"))?)?.as_observable()?
        }
        other => return Err(CliError::config(format!("unknown observable preset `{other}`"))),
    })
}

fn preset_state(preset: &str, s: &StateSpec, n: usize) -> CliResult<DensityState> {
    let power = |rho: DensityState| -> CliResult<DensityState> {
        Ok(DensityState::product(vec![rho.dense()?.clone(); n])?)
    };
    Ok(match preset {
        "zero" => DensityState::zero(n)?,
        "plus" => power(states::plus())?,
        "magic-h" => power(states::magic_h())?,
        "rho-c" => power(states::rho_c(s.c.ok_or_else(|| CliError::config("preset `rho-c` needs `c`"))?)?)?,
        "bloch" => power(DensityState::bloch(s.bloch.ok_or_else(|| CliError::config("preset `bloch` needs `bloch`"))?)?)?,
        other => return Err(CliError::config(format!("unknown state preset `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = Config::parse(
            r#"
version = 1
seed = 7
[ensemble]
kind = "local"
n = 2
[noise]
model = "bit-flip"
params = { eps = 0.1, mixing = 0.5 }
[observable]
terms = [{ label = "ZZ", value = 1.0 }]
[state]
preset = "plus"
[sampling]
shots = 1000
batches = 4
"#,
        )
        .unwrap();
        assert_eq!(cfg.ensemble().unwrap().n(), 2);
        assert_eq!(cfg.noise(2).unwrap().mixing(), 0.5);
        assert_eq!(cfg.observable(2).unwrap().num_terms(), 1);
        assert_eq!(cfg.state(2).unwrap().n(), 2);
        assert_eq!(cfg.sampling().unwrap().shots, 1000);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Config::parse("version = 2"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("version = 1\nbogus = 3"), Err(CliError::Config(_))));
        let cfg = Config::parse("version = 1\n[noise]\nmodel = \"depolarizing\"\nparams = { q = 1.5 }").unwrap();
        assert_eq!(cfg.noise(1).unwrap_err().exit_code(), 2);
        let cfg = Config::parse("version = 1\n[ensemble]\nkind = \"global\"\nn = 3").unwrap();
        assert!(cfg.ensemble().is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = Config::parse("version = 1\nseed = 3").unwrap();
        let b = Config::parse("# comment\nversion=1\n\nseed   = 3\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), Config::parse("version = 1\nseed = 4").unwrap().hash());
    }
}
