//! Phase readout: Hadamard tests, quantum phase estimation, Wannier-centre
//! densities and winding numbers.

use crate::adiabatic::EvolutionPlan;
use crate::backend_mps::{mps_from_basis, MpsState};
use crate::backend_sv::{self, bitstring, NoiseSpec, StateVector};
use crate::circuit::{inverse_qft, Circuit, Gate};
use crate::error::{Error, Result};
use crate::numerics::CMatrix;
use crate::oracle::wrap_angle;
use crate::seed::{rng, stable_hash};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

/// Where circuits run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    StateVector,
    Mps { chi_max: usize, cutoff: f64 },
    /// Statevector trajectories; one trajectory per shot.
    Noisy(NoiseSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

impl Shots {
    pub fn count(&self) -> u64 {
        match self {
            Shots::Exact => 0,
            Shots::Sampled { shots, .. } => *shots,
        }
    }

    /// Same shot count, seed derived for sub-task `index`.
    pub fn derive(&self, index: u64) -> Shots {
        match *self {
            Shots::Exact => Shots::Exact,
            Shots::Sampled { shots, seed } => Shots::Sampled { shots, seed: stable_hash(seed, index) },
        }
    }
}

/// Outcome weights over the measured lines of `circ` starting from `|0...0>`:
/// probabilities for exact runs, counts for sampled runs.
pub fn measure_outcomes(backend: &Backend, circ: &Circuit, shots: Shots) -> Result<Vec<f64>> {
    let lines = circ.measured_lines();
    if lines.is_empty() {
        return Err(Error::InvalidParameter("circuit measures no lines".into()));
    }
    let width = circ.width();
    match (backend, shots) {
        (Backend::StateVector, _) => {
            let state = backend_sv::run(circ, &StateVector::zero(width))?;
            let probs = state.marginal(lines)?;
            Ok(match shots {
                Shots::Exact => probs,
                Shots::Sampled { shots, seed } => {
                    backend_sv::multinomial(&probs, shots, &mut rng(seed)).into_iter().map(|n| n as f64).collect()
                }
            })
        }
        (Backend::Mps { chi_max, cutoff }, _) => {
            let mut mps: MpsState = mps_from_basis(width, &"0".repeat(width), *chi_max, *cutoff)?;
            mps.run_circuit(circ)?;
            match shots {
                Shots::Exact => mps.marginal(lines),
                Shots::Sampled { shots, seed } => {
                    let counts = crate::backend_mps::mps_sample(&mps, lines, shots, seed)?;
                    let mut table = vec![0.0; 1usize << lines.len()];
                    for (key, n) in counts {
                        table[usize::from_str_radix(&key, 2).expect("binary key")] = n as f64;
                    }
                    Ok(table)
                }
            }
        }
        (Backend::Noisy(_), Shots::Exact) => {
            Err(Error::InvalidParameter("the noisy backend needs a shot count".into()))
        }
        (Backend::Noisy(noise), Shots::Sampled { shots, seed }) => {
            let spec = NoiseSpec { seed, ..*noise };
            let counts = backend_sv::sample_noisy(circ, &StateVector::zero(width), &spec, lines, shots)?;
            let mut table = vec![0.0; 1usize << lines.len()];
            for (key, n) in counts {
                table[usize::from_str_radix(&key, 2).expect("binary key")] = n as f64;
            }
            Ok(table)
        }
    }
}

fn check_single_qubit_plan(plan: &EvolutionPlan, u_init: &CMatrix) -> Result<()> {
    if plan.dim() != 2 || u_init.shape() != (2, 2) {
        return Err(Error::Shape("readout circuits need a single system qubit".into()));
    }
    Ok(())
}

/// Cosine and sine Hadamard-test circuits. Line 0 is the auxiliary qubit,
/// line 1 the system. With `<psi|U|psi> = e^{i theta}`:
/// `P_cos(0) = (1 + cos theta)/2`, `P_sin(0) = (1 - sin theta)/2`.
pub fn hadamard_test_circuits(plan: &EvolutionPlan, u_init: &CMatrix) -> Result<(Circuit, Circuit)> {
    check_single_qubit_plan(plan, u_init)?;
    let mut base = Circuit::new(2);
    base.push(Gate::unitary1(1, u_init.clone())?)?;
    base.push(Gate::h(0))?;
    for f in &plan.factors {
        base.push(Gate::controlled_shared(0, &[1], Arc::clone(&f.unitary))?)?;
    }
    let mut cos = base.clone();
    cos.push(Gate::h(0))?;
    cos.measure(&[0])?;
    let mut sin = base;
    sin.push(Gate::s(0))?;
    sin.push(Gate::h(0))?;
    sin.measure(&[0])?;
    Ok((cos, sin))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardEstimate {
    pub p_cos0: f64,
    pub p_sin0: f64,
    /// 0 for exact probabilities.
    pub shots: u64,
    pub theta: f64,
}

impl HadamardEstimate {
    pub fn from_probabilities(p_cos0: f64, p_sin0: f64, shots: u64) -> HadamardEstimate {
        HadamardEstimate { p_cos0, p_sin0, shots, theta: reconstruct_theta(p_cos0, p_sin0) }
    }

    /// `cos^2 + sin^2` of the implied estimates.
    pub fn consistency(&self) -> f64 {
        let x = 2.0 * self.p_cos0 - 1.0;
        let y = 1.0 - 2.0 * self.p_sin0;
        x * x + y * y
    }
}

/// Angle of `(2 p_cos0 - 1, 1 - 2 p_sin0)` in `[-pi, pi)`, inputs clamped to `[0, 1]`.
pub fn reconstruct_theta(p_cos0: f64, p_sin0: f64) -> f64 {
    let x = 2.0 * p_cos0.clamp(0.0, 1.0) - 1.0;
    let y = 1.0 - 2.0 * p_sin0.clamp(0.0, 1.0);
    let t = y.atan2(x);
    if t >= PI {
        -PI
    } else {
        t
    }
}

/// Run both Hadamard-test circuits. Sampled runs use seeds derived from the
/// given one for the cosine (index 0) and sine (index 1) circuits.
pub fn hadamard_estimate(plan: &EvolutionPlan, u_init: &CMatrix, backend: &Backend, shots: Shots) -> Result<HadamardEstimate> {
    let (cos, sin) = hadamard_test_circuits(plan, u_init)?;
    let p = |circ: &Circuit, idx: u64| -> Result<f64> {
        let w = measure_outcomes(backend, circ, shots.derive(idx))?;
        Ok(w[0] / w.iter().sum::<f64>())
    };
    Ok(HadamardEstimate::from_probabilities(p(&cos, 0)?, p(&sin, 1)?, shots.count()))
}

/// How controlled powers `U^(2^j)` are realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerStrategy {
    /// Repeat every factor `2^j` times, gate by gate.
    Repeat,
    /// One controlled gate carrying the pre-multiplied power.
    Fused,
}

/// Phase-estimation circuit of width `m + 1`: work lines `0..m` (line 0 most
/// significant, controlling `U^(2^(m-1))`), system on line `m`. The top
/// `m_meas` work lines are measured.
pub fn qpe_circuit(plan: &EvolutionPlan, u_init: &CMatrix, m: usize, m_meas: usize, strategy: PowerStrategy) -> Result<Circuit> {
    check_single_qubit_plan(plan, u_init)?;
    if m == 0 || m_meas == 0 || m_meas > m {
        return Err(Error::InvalidParameter(format!("need m >= m_meas >= 1, got m={m}, m_meas={m_meas}")));
    }
    if m > 40 {
        return Err(Error::TooLarge { dim: m, cap: 40 });
    }
    let sys = m;
    let mut circ = Circuit::new(m + 1);
    circ.push(Gate::unitary1(sys, u_init.clone())?)?;
    for j in 0..m {
        circ.push(Gate::h(j))?;
    }
    for j in (0..m).rev() {
        let power = 1u64 << (m - 1 - j);
        match strategy {
            PowerStrategy::Repeat => {
                for _ in 0..power {
                    for f in &plan.factors {
                        circ.push(Gate::controlled_shared(j, &[sys], Arc::clone(&f.unitary))?)?;
                    }
                }
            }
            PowerStrategy::Fused => {
                circ.push(Gate::controlled(j, &[sys], plan.unitary_power(power))?)?;
            }
        }
    }
    circ.extend_shifted(&inverse_qft(m), 0)?;
    circ.measure(&(0..m_meas).collect::<Vec<_>>())?;
    Ok(circ)
}

/// Exact outcome probabilities at or below this are dropped from QPE results.
pub const EXACT_PROBABILITY_FLOOR: f64 = 1e-14;

/// `(2 pi b / 2^m_meas)` mapped to `[-pi, pi)`, then divided by the plan's
/// Berry-phase multiplicity.
pub fn decode_phase(b: usize, m_meas: usize, multiplicity: u32) -> f64 {
    let raw = wrap_angle(2.0 * PI * b as f64 / (1u64 << m_meas) as f64);
    raw / multiplicity as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpeResult {
    pub work_qubits: usize,
    pub measured_qubits: usize,
    pub multiplicity: u32,
    /// 0 for exact probabilities.
    pub shots: u64,
    /// Outcome bitstring to probability or count.
    pub histogram: BTreeMap<String, f64>,
    /// Decoded Berry phase and weight per observed outcome.
    pub samples: Vec<(f64, f64)>,
}

/// Phase estimation of the plan's eigenphase on the state `u_init|0>`.
/// MPS backends repeat the plan gate by gate; the others use fused powers.
pub fn qpe_run(
    plan: &EvolutionPlan,
    u_init: &CMatrix,
    m: usize,
    m_meas: usize,
    backend: &Backend,
    shots: Shots,
) -> Result<QpeResult> {
    let strategy = match backend {
        Backend::Mps { .. } => PowerStrategy::Repeat,
        _ => PowerStrategy::Fused,
    };
    let circ = qpe_circuit(plan, u_init, m, m_meas, strategy)?;
    let table = measure_outcomes(backend, &circ, shots)?;
    // exact tables carry rounding-level entries on impossible outcomes
    let floor = if shots == Shots::Exact { EXACT_PROBABILITY_FLOOR } else { 0.0 };
    let mut histogram = BTreeMap::new();
    let mut samples = Vec::new();
    for (b, &w) in table.iter().enumerate() {
        if w > floor {
            histogram.insert(bitstring(b, m_meas), w);
            samples.push((decode_phase(b, m_meas, plan.multiplicity), w));
        }
    }
    Ok(QpeResult { work_qubits: m, measured_qubits: m_meas, multiplicity: plan.multiplicity, shots: shots.count(), histogram, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityTable {
    /// Grid point of the largest value (first on ties).
    pub fn peak(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.grid[best]
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.grid.len() as f64
    }
}

/// Lorentzian-broadened density `sum_j w_j eps / (eps^2 + d(x, x_j)^2)` on
/// `points` uniform grid points over `[-pi, pi)`. `periodic` wraps `d` onto
/// `[-pi, pi)`; otherwise `d = x - x_j`.
pub fn wannier_density(samples: &[(f64, f64)], eps: f64, points: usize, periodic: bool) -> Result<DensityTable> {
    if samples.is_empty() {
        return Err(Error::Empty("no phase samples".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("broadening must be positive, got {eps}")));
    }
    if points == 0 {
        return Err(Error::InvalidParameter("density grid needs points".into()));
    }
    let grid: Vec<f64> = (0..points).map(|i| -PI + 2.0 * PI * i as f64 / points as f64).collect();
    let values = grid
        .iter()
        .map(|&x| {
            samples
                .iter()
                .map(|&(xj, w)| {
                    let d = if periodic { wrap_angle(x - xj) } else { x - xj };
                    w * eps / (eps * eps + d * d)
                })
                .sum()
        })
        .collect();
    Ok(DensityTable { grid, values })
}

/// Winding of the centres over a closed ky sweep (the last centre connects
/// back to the first). Each jump is wrapped to `[-pi, pi)`; a jump larger
/// than `pi/2 + resolution` means the sweep is undersampled.
pub fn winding_number(centers: &[f64], resolution: f64) -> Result<i64> {
    if centers.len() < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 ky points, got {}", centers.len())));
    }
    let n = centers.len();
    let mut total = 0.0;
    for i in 0..n {
        let jump = wrap_angle(centers[(i + 1) % n] - centers[i]);
        if jump.abs() > PI / 2.0 + resolution {
            return Err(Error::Undersampled { index: i, jump });
        }
        total += jump;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}
