//! Pipelines behind each subcommand. All functions are deterministic given
//! their config; wall time is added by the binary.

use crate::config::{BackendKind, RunConfig, Task, Zone};
use crate::error::{CliError, CliResult};
use crate::record::{
    round_chern, CellError, FluxSummary, Meta, PhaseDiagramRecord, ResultRecord, SweepPoint, SweepRecord, WannierSummary,
};
use chernq_core::adiabatic::{double_loop_plan_with, line_path, mirror_symmetric_plan, plaquette_path};
use chernq_core::models::{ground_prep_unitary, BlochModel, Haldane, ModelSpec, TwistedHeisenbergChain};
use chernq_core::oracle::{chern_fukui, heisenberg_twist_berry_phase, hybrid_wannier_trace, wrap_angle, FluxGrid};
use chernq_core::readout::{hadamard_estimate, qpe_run, DensityTable, wannier_density, winding_number, Backend, Shots};
use chernq_core::seed::stable_hash;
use rayon::prelude::*;
use std::f64::consts::PI;

pub fn run_config(config: &RunConfig) -> CliResult<ResultRecord> {
    match config.task {
        Task::Flux => cmd_flux(config),
        Task::Wannier => cmd_wannier(config),
        Task::Heisenberg => cmd_heisenberg(config),
    }
}

pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![from];
    }
    (0..points).map(|i| from + (to - from) * i as f64 / (points - 1) as f64).collect()
}

/// Berry flux through one plaquette from the double-loop Hadamard test. The
/// circuit measures the phase `theta` of `Ubar U`, which is twice the Berry
/// phase in the `i <n|dn>` convention; the lattice flux uses the opposite
/// (`arg prod <n_a|n_b>`) convention, hence `-theta / 2`.
pub fn plaquette_circuit_flux(
    model: &dyn BlochModel,
    corner: [f64; 2],
    dk: f64,
    config: &RunConfig,
    backend: &Backend,
    shots: Shots,
) -> chernq_core::Result<f64> {
    let u_init = ground_prep_unitary(model, corner)?;
    let path = plaquette_path(corner, dk, config.steps_per_link)?;
    let plan = double_loop_plan_with(model, &path, config.total_time, config.sampling)?;
    let est = hadamard_estimate(&plan, &u_init, backend, shots)?;
    Ok(-est.theta / 2.0)
}

pub fn cmd_flux(config: &RunConfig) -> CliResult<ResultRecord> {
    config.validate()?;
    let mut echo = config.clone();
    echo.task = Task::Flux;
    let model = config.model;
    let n = config.grid;
    let (oracle, oracle_c) = chern_fukui(&model, n).map_err(|e| CliError::core("oracle flux grid", e))?;
    let (grid, deviation) = match config.execution() {
        None => (oracle.clone(), None),
        Some((backend, shots)) => {
            let dk = oracle.delta_k;
            let fluxes = (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (ix, iy) = (idx % n, idx / n);
                    let corner = oracle.corner(ix, iy);
                    plaquette_circuit_flux(&model, corner, dk, config, &backend, shots.derive(idx as u64)).map_err(|e| {
                        CliError::core(format!("plaquette ({ix}, {iy}) at k = ({:.4}, {:.4})", corner[0], corner[1]), e)
                    })
                })
                .collect::<CliResult<Vec<f64>>>()?;
            let rows = fluxes.chunks(n).map(|r| r.to_vec()).collect();
            let grid = FluxGrid::new(oracle.origin, dk, rows, model.label());
            let dev = grid
                .fluxes
                .iter()
                .flatten()
                .zip(oracle.fluxes.iter().flatten())
                .map(|(a, b)| wrap_angle(a - b).abs())
                .fold(0.0, f64::max);
            (grid, Some(dev))
        }
    };
    let shown = match config.zone {
        Zone::First => grid.clone(),
        Zone::Extended => grid.tile(config.tiling),
    };
    Ok(ResultRecord {
        config: echo,
        grid: shown.fluxes.clone(),
        chern_real: Some(grid.chern),
        chern_int: Some(round_chern(grid.chern)),
        flux: Some(FluxSummary {
            n: shown.n,
            origin: shown.origin,
            delta_k: shown.delta_k,
            zone: config.zone,
            oracle_chern: oracle_c,
            max_abs_deviation: deviation,
        }),
        wannier: None,
        heisenberg: None,
        meta: Meta::new(config.seed, None),
    })
}

/// One `cmd_flux` per parameter value. Point `i` runs with seed
/// `stable_hash(seed, i)`; failures are recorded and the sweep continues.
pub fn cmd_sweep(config: &RunConfig, parameter: &str, from: f64, to: f64, points: usize) -> CliResult<SweepRecord> {
    config.validate()?;
    if points < 2 {
        return Err(CliError::Config(format!("a sweep needs at least 2 points, got {points}")));
    }
    config.model.with_parameter(parameter, from).map_err(|e| CliError::core("sweep parameter", e))?;
    let values = linspace(from, to, points);
    let results: Vec<SweepPoint> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let cfg = RunConfig {
                model: config.model.with_parameter(parameter, value).expect("checked above"),
                seed: stable_hash(config.seed, i as u64),
                out: None,
                ..config.clone()
            };
            match cmd_flux(&cfg) {
                Ok(r) => SweepPoint { value, record: Some(r), error: None },
                Err(e) => SweepPoint { value, record: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(SweepRecord {
        config: config.clone(),
        parameter: parameter.to_string(),
        values,
        points: results,
        meta: Meta::new(config.seed, None),
    })
}

/// Axis values; a zero-length range collapses to a single value.
fn axis(range: (f64, f64, usize)) -> CliResult<Vec<f64>> {
    let (from, to, points) = range;
    if from == to {
        return Ok(vec![from]);
    }
    if points < 2 {
        return Err(CliError::Config(format!("phase diagram axes need at least 2 points, got {points}")));
    }
    Ok(linspace(from, to, points))
}

/// Haldane Chern numbers over an `(m, phi)` grid with the analytic
/// boundary `|m| = 3 sqrt(3) |sin phi|` alongside.
pub fn cmd_phase_diagram(config: &RunConfig, m_range: (f64, f64, usize), phi_range: (f64, f64, usize)) -> CliResult<PhaseDiagramRecord> {
    config.validate()?;
    let (t1, t2) = match config.model {
        ModelSpec::Haldane { t1, t2, .. } => (t1, t2),
        ModelSpec::Qwz { .. } => (1.0, 1.0),
    };
    let m_values = axis(m_range)?;
    let phi_values = axis(phi_range)?;
    let np = phi_values.len();
    let cells: Vec<Result<(f64, i64), String>> = (0..m_values.len() * np)
        .into_par_iter()
        .map(|idx| {
            let cfg = RunConfig {
                model: ModelSpec::Haldane { t1, t2, m: m_values[idx / np], phi: phi_values[idx % np] },
                seed: stable_hash(config.seed, idx as u64),
                zone: Zone::First,
                out: None,
                ..config.clone()
            };
            cmd_flux(&cfg)
                .map(|r| (r.chern_real.expect("flux record"), r.chern_int.expect("flux record")))
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut chern_real = vec![vec![None; np]; m_values.len()];
    let mut chern_int = vec![vec![None; np]; m_values.len()];
    let mut errors = Vec::new();
    for (idx, cell) in cells.into_iter().enumerate() {
        let (i, j) = (idx / np, idx % np);
        match cell {
            Ok((r, c)) => {
                chern_real[i][j] = Some(r);
                chern_int[i][j] = Some(c);
            }
            Err(message) => errors.push(CellError { i_m: i, i_phi: j, message }),
        }
    }
    let expected = m_values.iter().map(|&m| phi_values.iter().map(|&p| Haldane::expected_chern(m, p)).collect()).collect();
    let boundary_m = phi_values.iter().map(|p| 3.0 * 3f64.sqrt() * p.sin().abs()).collect();
    Ok(PhaseDiagramRecord {
        config: config.clone(),
        m_values,
        phi_values,
        chern_real,
        chern_int,
        expected,
        boundary_m,
        errors,
        meta: Meta::new(config.seed, None),
    })
}

/// Hybrid Wannier centres over a ky sweep via phase estimation, their
/// broadened density and winding.
pub fn cmd_wannier(config: &RunConfig) -> CliResult<ResultRecord> {
    let mut echo = config.clone();
    echo.task = Task::Wannier;
    let params = *echo.wannier.get_or_insert_with(Default::default);
    echo.validate()?;
    let model = config.model;
    if !params.double_loop && !model.is_qwz() {
        return Err(CliError::Config("the mirror-symmetric sweep needs a mirror-symmetric model; use --double-loop".into()));
    }
    let oracle = hybrid_wannier_trace(&model, 2 * params.n_half, params.n_ky).map_err(|e| CliError::core("oracle Wannier trace", e))?;
    let points = params.density_points;
    let (rows, centers, winding, x_grid) = match config.execution() {
        None => {
            let mut rows = Vec::new();
            let mut x_grid = Vec::new();
            for &c in &oracle.centers {
                let d = wannier_density(&[(c, 1.0)], params.epsilon, points, params.periodic_density)?;
                rows.push(d.values);
                x_grid = d.grid;
            }
            (rows, oracle.centers.clone(), oracle.winding, x_grid)
        }
        Some((backend, shots)) => {
            let per_ky = oracle
                .ky
                .par_iter()
                .enumerate()
                .map(|(j, &ky)| {
                    wannier_point(&model, ky, &params, &backend, shots.derive(j as u64))
                        .map_err(|e| CliError::core(format!("ky point {j} (ky = {ky:.4})"), e))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mult = if params.double_loop { 2.0 } else { 1.0 };
            let raw: Vec<f64> = per_ky.iter().map(|p| p.1).collect();
            let x_grid = per_ky[0].0.grid.clone();
            let resolution = (2.0 * PI / points as f64).max(2.0 * PI / (1u64 << params.measured_qubits) as f64);
            let w = winding_number(&raw, resolution).map_err(|e| CliError::core("winding", e))?;
            let centers = raw.iter().map(|c| c / mult).collect();
            let rows = per_ky.into_iter().map(|p| p.0.values).collect();
            (rows, centers, (w as f64 / mult).round() as i64, x_grid)
        }
    };
    Ok(ResultRecord {
        config: echo,
        grid: rows,
        chern_real: Some(winding as f64),
        chern_int: Some(winding),
        flux: None,
        wannier: Some(WannierSummary {
            ky: oracle.ky.clone(),
            centers,
            winding,
            oracle_centers: oracle.centers,
            oracle_winding: oracle.winding,
            x_grid,
        }),
        heisenberg: None,
        meta: Meta::new(config.seed, None),
    })
}

/// Density and peak position for one ky. With the double loop the
/// density is built over the doubled phase `2 X_W`.
fn wannier_point(
    model: &ModelSpec,
    ky: f64,
    params: &crate::config::WannierParams,
    backend: &Backend,
    shots: Shots,
) -> chernq_core::Result<(DensityTable, f64)> {
    let start = [-PI, ky];
    let u_init = ground_prep_unitary(model, start)?;
    let plan = if params.double_loop {
        double_loop_plan_with(model, &line_path(ky, params.n_half)?, params.time, chernq_core::adiabatic::Sampling::Midpoint)?
    } else {
        mirror_symmetric_plan(model, ky, params.n_half, params.time)?
    };
    let res = qpe_run(&plan, &u_init, params.work_qubits, params.measured_qubits, backend, shots)?;
    let mult = res.multiplicity as f64;
    let raw: Vec<(f64, f64)> = res.samples.iter().map(|&(p, w)| (wrap_angle(p * mult), w)).collect();
    let density = wannier_density(&raw, params.epsilon, params.density_points, params.periodic_density)?;
    let peak = density.peak();
    Ok((density, peak))
}

pub fn cmd_heisenberg(config: &RunConfig) -> CliResult<ResultRecord> {
    let mut echo = config.clone();
    echo.task = Task::Heisenberg;
    echo.backend = BackendKind::Oracle;
    let p = *echo.heisenberg.get_or_insert_with(Default::default);
    echo.validate()?;
    let mut chain = TwistedHeisenbergChain::uniform(p.sites, p.coupling, p.periodic, p.twisted_bond)
        .map_err(|e| CliError::core("chain", e))?;
    if let Some(j) = p.twisted_coupling {
        chain.bonds[p.twisted_bond].coupling = j;
    }
    let twist = heisenberg_twist_berry_phase(&chain, p.n_theta).map_err(|e| CliError::core("twist Berry phase", e))?;
    Ok(ResultRecord {
        config: echo,
        grid: Vec::new(),
        chern_real: None,
        chern_int: None,
        flux: None,
        wannier: None,
        heisenberg: Some(twist),
        meta: Meta::new(config.seed, None),
    })
}


/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "CHERNQ_THREADS";

/// Worker count: explicit flag, then `CHERNQ_THREADS`, then hardware.
pub fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    if let Some(n) = flag {
        return if n == 0 { Err(CliError::Config("--threads must be at least 1".into())) } else { Ok(n) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}
