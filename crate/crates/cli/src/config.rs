use crate::error::{CliError, CliResult};
use chernq_core::adiabatic::Sampling;
use chernq_core::backend_sv::NoiseSpec;
use chernq_core::models::ModelSpec;
use chernq_core::readout::{Backend, Shots};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "statevector")]
    Statevector,
    #[serde(rename = "statevector+shots")]
    StatevectorShots,
    #[serde(rename = "mps")]
    Mps,
    #[serde(rename = "noisy")]
    Noisy,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown backend {s:?}; expected oracle, statevector, statevector+shots, mps or noisy"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    First,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub depolarizing_1q: f64,
    pub depolarizing_2q: f64,
    pub readout_flip: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        let p = NoiseSpec::hardware_like(0);
        NoiseParams {
            depolarizing_1q: p.depolarizing_p,
            depolarizing_2q: p.depolarizing_p_2q.unwrap_or(p.depolarizing_p),
            readout_flip: p.readout_flip_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WannierParams {
    /// Increments per half of the kx sweep.
    pub n_half: usize,
    pub n_ky: usize,
    pub work_qubits: usize,
    pub measured_qubits: usize,
    /// Evolution time per half sweep.
    pub time: f64,
    pub epsilon: f64,
    pub density_points: usize,
    pub periodic_density: bool,
    /// Use the double loop instead of the mirror-symmetric sweep.
    pub double_loop: bool,
}

impl Default for WannierParams {
    fn default() -> Self {
        WannierParams {
            n_half: 100,
            n_ky: 24,
            work_qubits: 11,
            measured_qubits: 9,
            time: 10.0,
            epsilon: 0.1,
            density_points: 512,
            periodic_density: true,
            double_loop: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergParams {
    pub sites: usize,
    pub coupling: f64,
    /// Coupling on the twisted bond; defaults to `coupling`.
    pub twisted_coupling: Option<f64>,
    pub periodic: bool,
    pub twisted_bond: usize,
    pub n_theta: usize,
}

impl Default for HeisenbergParams {
    fn default() -> Self {
        HeisenbergParams { sites: 4, coupling: 1.0, twisted_coupling: None, periodic: false, twisted_bond: 0, n_theta: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Flux,
    Wannier,
    Heisenberg,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    pub model: ModelSpec,
    pub grid: usize,
    pub steps_per_link: usize,
    pub total_time: f64,
    pub sampling: Sampling,
    pub backend: BackendKind,
    pub shots: u64,
    pub chi_max: usize,
    pub cutoff: f64,
    pub seed: u64,
    pub zone: Zone,
    pub tiling: usize,
    pub noise: NoiseParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wannier: Option<WannierParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heisenberg: Option<HeisenbergParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Flux,
            model: ModelSpec::Qwz { u: 1.0 },
            grid: 15,
            steps_per_link: 2,
            total_time: 11.0,
            sampling: Sampling::Left,
            backend: BackendKind::Statevector,
            shots: 8192,
            chi_max: 60,
            cutoff: 1e-12,
            seed: 0,
            zone: Zone::First,
            tiling: 2,
            noise: NoiseParams::default(),
            wannier: None,
            heisenberg: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.grid < 2 {
            return bad(format!("grid must be at least 2, got {}", self.grid));
        }
        if self.steps_per_link == 0 {
            return bad("steps_per_link must be at least 1".into());
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return bad(format!("total_time must be positive, got {}", self.total_time));
        }
        let sampling_backend = matches!(self.backend, BackendKind::StatevectorShots | BackendKind::Noisy);
        if sampling_backend && self.shots == 0 {
            return bad(format!("backend {:?} needs shots >= 1", self.backend));
        }
        if self.backend == BackendKind::Mps && self.chi_max == 0 {
            return bad("chi_max must be at least 1 for the mps backend".into());
        }
        if self.cutoff < 0.0 {
            return bad("cutoff must be non-negative".into());
        }
        if self.tiling == 0 {
            return bad("tiling must be at least 1".into());
        }
        self.noise_spec(0).validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(w) = &self.wannier {
            if w.measured_qubits == 0 || w.measured_qubits > w.work_qubits {
                return bad(format!("need work_qubits >= measured_qubits >= 1, got {} and {}", w.work_qubits, w.measured_qubits));
            }
            if w.n_half == 0 || w.n_ky < 8 || !(w.time > 0.0) || !(w.epsilon > 0.0) || w.density_points == 0 {
                return bad("wannier parameters out of range (n_half >= 1, n_ky >= 8, time > 0, epsilon > 0)".into());
            }
        }
        if let Some(h) = &self.heisenberg {
            if !(2..=12).contains(&h.sites) || h.n_theta < 3 {
                return bad("heisenberg needs 2..=12 sites and n_theta >= 3".into());
            }
        }
        Ok(())
    }

    pub fn noise_spec(&self, seed: u64) -> NoiseSpec {
        NoiseSpec {
            depolarizing_p: self.noise.depolarizing_1q,
            depolarizing_p_2q: Some(self.noise.depolarizing_2q),
            readout_flip_p: self.noise.readout_flip,
            seed,
        }
    }

    /// Circuit backend and shot policy, or `None` for the oracle.
    pub fn execution(&self) -> Option<(Backend, Shots)> {
        let sampled = Shots::Sampled { shots: self.shots, seed: self.seed };
        match self.backend {
            BackendKind::Oracle => None,
            BackendKind::Statevector => Some((Backend::StateVector, Shots::Exact)),
            BackendKind::StatevectorShots => Some((Backend::StateVector, sampled)),
            BackendKind::Mps => Some((
                Backend::Mps { chi_max: self.chi_max, cutoff: self.cutoff },
                if self.shots == 0 { Shots::Exact } else { sampled },
            )),
            BackendKind::Noisy => Some((Backend::Noisy(self.noise_spec(self.seed)), sampled)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_names_round_trip() {
        for (s, k) in [("oracle", BackendKind::Oracle), ("statevector+shots", BackendKind::StatevectorShots)] {
            assert_eq!(s.parse::<BackendKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{s}\""));
        }
        assert!("gpu".parse::<BackendKind>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.backend = BackendKind::StatevectorShots;
        c.shots = 0;
        assert!(c.validate().is_err());
        c = RunConfig { backend: BackendKind::Mps, chi_max: 0, ..RunConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips() {
        let c = RunConfig { wannier: Some(WannierParams::default()), ..RunConfig::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
