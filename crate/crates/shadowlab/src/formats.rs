//! JSON encodings of observables, states, gate ensembles, channels and frame reports.

use std::path::Path;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use shadowlab_core::channel::{PauliChannel, TransferChannel};
use shadowlab_core::clifford::{CliffordElement, EnsembleKind, GateEnsemble};
use shadowlab_core::frame::{AveragedNoise, FrameReport};
use shadowlab_core::pauli::{DensityState, PauliLabel, PauliObservable};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    /// One letter per qubit, qubit 0 first; `I`, `1` or `𝟙` for identity.
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableJson {
    pub n: usize,
    pub coeffs: Vec<TermJson>,
}

impl ObservableJson {
    pub fn from_observable(o: &PauliObservable) -> Self {
        ObservableJson {
            n: o.n(),
            coeffs: o.terms().map(|(l, v)| TermJson { label: l.to_string(), value: *v }).collect(),
        }
    }

    pub fn to_observable(&self) -> CliResult<PauliObservable> {
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for t in &self.coeffs {
            let label: PauliLabel = t.label.parse()?;
            if label.n() != self.n {
                return Err(CliError::config(format!("label {} does not have {} letters", t.label, self.n)));
            }
            terms.push((label, t.value));
        }
        Ok(PauliObservable::from_terms(self.n, terms)?)
    }
}

/// Dense state as a row-major list of [re, im] pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub n: usize,
    pub matrix: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn from_state(rho: &DensityState) -> CliResult<Self> {
        let m = rho.dense()?;
        let d = m.nrows();
        let mut matrix = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                matrix.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Ok(StateJson { n: rho.n(), matrix })
    }

    pub fn to_state(&self) -> CliResult<DensityState> {
        let d = 1usize << self.n;
        if self.matrix.len() != d * d {
            return Err(CliError::config(format!("state matrix needs {} entries, found {}", d * d, self.matrix.len())));
        }
        let m = DMatrix::from_fn(d, d, |i, j| {
            let [re, im] = self.matrix[i * d + j];
            Complex::new(re, im)
        });
        Ok(DensityState::from_matrix(self.n, m)?)
    }
}

pub fn kind_name(kind: EnsembleKind) -> &'static str {
    match kind {
        EnsembleKind::Global => "global",
        EnsembleKind::SampledGlobal => "sampled-global",
        EnsembleKind::LocalClifford => "local",
        EnsembleKind::PauliBasis => "pauli-basis",
        EnsembleKind::Custom => "custom",
    }
}

/// Weighted gate list; gates are hex-encoded tableaux.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleJson {
    pub kind: String,
    pub n: usize,
    pub gates: Vec<String>,
    pub probs: Vec<f64>,
}

impl EnsembleJson {
    pub fn from_ensemble(e: &GateEnsemble) -> Self {
        EnsembleJson {
            kind: kind_name(e.kind()).to_string(),
            n: e.n(),
            gates: e.gates().iter().map(|g| hex::encode(g.to_bytes())).collect(),
            probs: e.probs().to_vec(),
        }
    }

    /// Named families are rebuilt from their constructor; anything else becomes a custom list.
    pub fn to_ensemble(&self) -> CliResult<GateEnsemble> {
        match self.kind.as_str() {
            "global" if self.gates.is_empty() => return Ok(GateEnsemble::uniform_global(self.n)?),
            "sampled-global" => return Ok(GateEnsemble::sampled_global(self.n)?),
            "local" if self.gates.is_empty() => return Ok(GateEnsemble::local_clifford(self.n)?),
            "pauli-basis" if self.gates.is_empty() => return Ok(GateEnsemble::pauli_basis(self.n)?),
            _ => {}
        }
        let mut gates = Vec::with_capacity(self.gates.len());
        for h in &self.gates {
            let bytes = hex::decode(h).map_err(|e| CliError::config(format!("gate {h}: {e}")))?;
            gates.push(CliffordElement::from_bytes(self.n, &bytes)?);
        }
        Ok(GateEnsemble::custom(self.n, gates, self.probs.clone())?)
    }
}

/// Either a full transfer matrix (label-index order, row-major) or Pauli error probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptm: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_probs: Option<Vec<f64>>,
}

impl ChannelJson {
    pub fn from_channel(ch: &TransferChannel) -> Self {
        let m = ch.ptm();
        let dd = m.nrows();
        let mut ptm = Vec::with_capacity(dd * dd);
        for i in 0..dd {
            for j in 0..dd {
                ptm.push(m[(i, j)]);
            }
        }
        ChannelJson { n: ch.n(), ptm: Some(ptm), pauli_probs: None }
    }

    pub fn to_channel(&self) -> CliResult<TransferChannel> {
        match (&self.ptm, &self.pauli_probs) {
            (Some(p), None) => {
                let dd = 1usize << (2 * self.n);
                if p.len() != dd * dd {
                    return Err(CliError::config(format!("ptm needs {} entries, found {}", dd * dd, p.len())));
                }
                Ok(TransferChannel::from_ptm(self.n, DMatrix::from_row_slice(dd, dd, p))?)
            }
            (None, Some(p)) => Ok(PauliChannel::from_probs(self.n, p.clone())?.to_channel()),
            _ => Err(CliError::config("channel needs exactly one of `ptm` or `pauli_probs`")),
        }
    }
}

/// Largest qubit count for which per-label vectors are written out.
pub const LABEL_EXPORT_LIMIT: usize = 4;
/// Largest qubit count for which averaged-channel rows are written out.
pub const ROW_EXPORT_LIMIT: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameRowJson {
    pub label: String,
    pub s: f64,
    /// λ̄_a for Pauli models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_bar: Option<f64>,
    /// Row a of Λ̄_a in label-index order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_row: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameReportJson {
    pub n: usize,
    pub exact: bool,
    pub pauli: bool,
    pub averaging: &'static str,
    pub expected_calibration: Option<f64>,
    pub expected_mitigation: Option<f64>,
    pub max_channel_distance: f64,
    pub distance_exact: bool,
    pub max_eigenvalue_gap: Option<f64>,
    pub rows: Vec<FrameRowJson>,
}

impl FrameReportJson {
    pub fn from_report(r: &FrameReport) -> CliResult<Self> {
        let n = r.n();
        let averaging = match r.averaged_noise() {
            AveragedNoise::Dense(_) => "dense",
            AveragedNoise::Uniform(_) => "uniform",
            AveragedNoise::Factorized { .. } => "factorized",
        };
        let mut rows = Vec::new();
        if n <= LABEL_EXPORT_LIMIT {
            for a in PauliLabel::all(n) {
                let channel_row = if n <= ROW_EXPORT_LIMIT {
                    Some(PauliLabel::all(n).map(|b| r.avg_entry(&a, &b)).collect())
                } else {
                    None
                };
                rows.push(FrameRowJson {
                    label: a.to_string(),
                    s: r.s(&a),
                    lambda_bar: r.is_pauli().then(|| r.avg_eigenvalue(&a)),
                    channel_row,
                });
            }
        }
        let dist = r.max_channel_distance(None)?;
        Ok(FrameReportJson {
            n,
            exact: r.is_exact(),
            pauli: r.is_pauli(),
            averaging,
            expected_calibration: r.expected_calibration().ok(),
            expected_mitigation: r.expected_mitigation().ok(),
            max_channel_distance: dist.value,
            distance_exact: dist.exact,
            max_eigenvalue_gap: r.is_pauli().then(|| r.max_eigenvalue_gap(None)),
            rows,
        })
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use shadowlab_core::pauli::states;

    #[test]
    fn observable_round_trip() {
        let o = states::tensor_power(&states::magic_h_observable(), 2).unwrap();
        let j = ObservableJson::from_observable(&o);
        let text = serde_json::to_string(&j).unwrap();
        let back: ObservableJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_observable().unwrap(), o);
        let parsed: ObservableJson =
            serde_json::from_str(r#"{"n":2,"coeffs":[{"label":"Z𝟙","value":0.5},{"label":"XX","value":1}]}"#).unwrap();
        let o = parsed.to_observable().unwrap();
        assert_eq!(o.coeff(&"ZI".parse().unwrap()), 0.5);
    }

    #[test]
    fn ensemble_round_trip() {
        let e = GateEnsemble::uniform_global(1).unwrap();
        let mut j = EnsembleJson::from_ensemble(&e);
        assert_eq!(j.gates.len(), 24);
        j.kind = "custom".into();
        let back = j.to_ensemble().unwrap();
        assert_eq!(back.gates(), e.gates());
    }

    #[test]
    fn state_and_channel_round_trip() {
        let rho = states::rho_c(0.3).unwrap();
        let back = StateJson::from_state(&rho).unwrap().to_state().unwrap();
        assert!((back.dense().unwrap() - rho.dense().unwrap()).norm() < 1e-15);
        let ch = PauliChannel::bit_flip(0.1).unwrap().to_channel();
        let j = ChannelJson::from_channel(&ch);
        assert_eq!(j.to_channel().unwrap().ptm(), ch.ptm());
        let p = ChannelJson { n: 1, ptm: None, pauli_probs: Some(vec![0.9, 0.1, 0.0, 0.0]) };
        assert!((p.to_channel().unwrap().ptm() - ch.ptm()).norm() < 1e-15);
    }
}
