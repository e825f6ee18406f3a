use chernq_cli::record::to_json;
use chernq_cli::{
    cmd_flux, cmd_heisenberg, cmd_phase_diagram, cmd_sweep, cmd_wannier, run_config, BackendKind, HeisenbergParams,
    ResultRecord, RunConfig, Task, WannierParams, Zone,
};
use chernq_core::models::ModelSpec;
use std::f64::consts::PI;
use std::process::Command;

fn oracle(u: f64) -> RunConfig {
    RunConfig { model: ModelSpec::Qwz { u }, backend: BackendKind::Oracle, ..RunConfig::default() }
}

#[test]
fn record_round_trips_byte_for_byte() {
    let cfg = RunConfig { backend: BackendKind::StatevectorShots, shots: 256, seed: 9, grid: 6, ..RunConfig::default() };
    let text = to_json(&cmd_flux(&cfg).unwrap()).unwrap();
    let parsed: ResultRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(to_json(&parsed).unwrap(), text);
}

#[test]
fn rerun_from_config_echo_is_identical() {
    let cfg = RunConfig { backend: BackendKind::StatevectorShots, shots: 512, seed: 3, grid: 7, ..RunConfig::default() };
    let first = cmd_flux(&cfg).unwrap();
    let again = run_config(&first.config).unwrap();
    assert_eq!(to_json(&first).unwrap(), to_json(&again).unwrap());
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let cfg = RunConfig { backend: BackendKind::StatevectorShots, shots: 128, seed: 11, grid: 5, ..RunConfig::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| to_json(&cmd_sweep(&cfg, "u", -1.5, 1.5, 4).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn sweep_seeds_differ_per_point() {
    let cfg = RunConfig { backend: BackendKind::StatevectorShots, shots: 64, seed: 1, grid: 4, ..RunConfig::default() };
    let rec = cmd_sweep(&cfg, "u", 1.0, 1.0 + 1e-12, 2).unwrap();
    let seeds: Vec<u64> = rec.points.iter().map(|p| p.record.as_ref().unwrap().config.seed).collect();
    assert_ne!(seeds[0], seeds[1]);
}

#[test]
fn oracle_sweep_over_u_is_a_step_function() {
    let rec = cmd_sweep(&oracle(0.0), "u", -3.0, 3.0, 13).unwrap();
    for (v, p) in rec.values.iter().zip(&rec.points) {
        if [-2.0, 0.0, 2.0].iter().any(|t| (v - t).abs() < 1e-9) {
            continue;
        }
        let expected = if v.abs() > 2.0 { 0 } else if *v > 0.0 { 1 } else { -1 };
        assert_eq!(p.record.as_ref().unwrap().chern_int, Some(expected), "u = {v}");
    }
}

#[test]
fn haldane_sweep_over_phi_follows_its_sign() {
    let cfg = RunConfig { model: ModelSpec::Haldane { t1: 1.0, t2: 1.0, m: 0.0, phi: 0.0 }, ..oracle(0.0) };
    let rec = cmd_sweep(&cfg, "phi", -PI, PI, 9).unwrap();
    for (v, p) in rec.values.iter().zip(&rec.points) {
        if v.sin().abs() < 1e-9 {
            assert!(p.error.is_some() || p.record.is_some());
            continue;
        }
        let expected = if v.sin() > 0.0 { 1 } else { -1 };
        assert_eq!(p.record.as_ref().unwrap().chern_int, Some(expected), "phi = {v}");
    }
}

#[test]
fn flat_phase_range_collapses_to_a_row() {
    let rec = cmd_phase_diagram(&oracle(0.0), (1.0, 1.0, 21), (-PI, PI, 7)).unwrap();
    assert_eq!(rec.m_values, vec![1.0]);
    assert_eq!(rec.chern_int.len(), 1);
    assert_eq!(rec.chern_int[0].len(), 7);
}

#[test]
fn coarse_statevector_phase_diagram_rounds_correctly() {
    let cfg = RunConfig { backend: BackendKind::Statevector, grid: 9, ..oracle(0.0) };
    let rec = cmd_phase_diagram(&cfg, (-6.0, 6.0, 7), (-PI, PI, 7)).unwrap();
    let step = 2.0;
    for (i, m) in rec.m_values.iter().enumerate() {
        for (j, phi) in rec.phi_values.iter().enumerate() {
            let boundary = 3.0 * 3f64.sqrt() * phi.sin().abs();
            if (m.abs() - boundary).abs() <= step || phi.sin().abs() < 1e-9 {
                continue;
            }
            assert_eq!(rec.chern_int[i][j], Some(rec.expected[i][j]), "m {m} phi {phi}");
        }
    }
}

#[test]
fn extended_zone_tiles_the_grid() {
    let cfg = RunConfig { zone: Zone::Extended, tiling: 2, ..oracle(1.0) };
    let rec = cmd_flux(&cfg).unwrap();
    assert_eq!(rec.grid.len(), 30);
    assert_eq!(rec.chern_int, Some(1));
    assert_eq!(rec.grid[0][0], rec.grid[15][15]);
}

#[test]
fn heisenberg_records_are_quantized() {
    for (sites, tol) in [(2, 1e-10), (4, 1e-6)] {
        let cfg = RunConfig {
            task: Task::Heisenberg,
            heisenberg: Some(HeisenbergParams { sites, ..HeisenbergParams::default() }),
            ..RunConfig::default()
        };
        let t = cmd_heisenberg(&cfg).unwrap().heisenberg.unwrap();
        assert!(t.residual < tol, "n {sites}: {t:?}");
    }
    let cut = RunConfig {
        task: Task::Heisenberg,
        heisenberg: Some(HeisenbergParams { sites: 4, periodic: true, twisted_coupling: Some(0.0), ..HeisenbergParams::default() }),
        ..RunConfig::default()
    };
    let t = cmd_heisenberg(&cut).unwrap().heisenberg.unwrap();
    assert!(t.gamma.abs() < 1e-10, "{t:?}");
}

#[test]
fn oracle_wannier_record_carries_the_trace() {
    let cfg = RunConfig { task: Task::Wannier, wannier: Some(WannierParams::default()), ..oracle(-1.0) };
    let rec = cmd_wannier(&cfg).unwrap();
    assert_eq!(rec.chern_int, Some(-1));
    let w = rec.wannier.unwrap();
    assert_eq!(w.centers.len(), 24);
    assert_eq!(rec.grid.len(), 24);
    assert_eq!(rec.grid[0].len(), w.x_grid.len());
}

#[test]
fn statevector_wannier_with_reduced_register() {
    let params = WannierParams { work_qubits: 8, measured_qubits: 7, ..WannierParams::default() };
    let cfg = RunConfig { task: Task::Wannier, backend: BackendKind::Statevector, wannier: Some(params), ..oracle(1.0) };
    assert_eq!(cmd_wannier(&cfg).unwrap().chern_int, Some(1));
    // the double loop reads 2 X_W, so its trace jumps twice as far per ky step
    let double = WannierParams { double_loop: true, n_ky: 48, ..params };
    let cfg = RunConfig { wannier: Some(double), ..cfg };
    assert_eq!(cmd_wannier(&cfg).unwrap().chern_int, Some(1));
}

fn chernq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_chernq")).args(args).env("CHERNQ_THREADS", "2").output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let ok = chernq(&["flux", "--backend", "oracle", "--no-timing"]);
    assert_eq!(ok.status.code(), Some(0));
    let rec: ResultRecord = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(rec.chern_int, Some(1));
    // u = 2 puts the Dirac point on the grid corner (pi, pi)
    assert_eq!(chernq(&["flux", "--backend", "oracle", "--u", "2"]).status.code(), Some(3));
    assert_eq!(chernq(&["flux", "--backend", "statevector+shots", "--shots", "0"]).status.code(), Some(2));
    assert_eq!(chernq(&["flux", "--model", "kagome"]).status.code(), Some(2));
    assert_eq!(chernq(&["heisenberg", "--sites", "4", "--periodic", "--twisted-coupling", "0", "--coupling", "0"]).status.code(), Some(3));
}

#[test]
fn binary_rerun_is_byte_identical() {
    let dir = std::env::temp_dir().join(format!("chernq-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let first = dir.join("first.json");
    let second = dir.join("second.json");
    let csv = dir.join("grid.csv");
    let f = first.to_str().unwrap();
    let out = chernq(&["flux", "--backend", "statevector+shots", "--shots", "300", "--grid", "5", "--seed", "4", "--no-timing", "--out", f, "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = chernq(&["run", "--config", f, "--no-timing", "--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
    std::fs::remove_dir_all(&dir).unwrap();
}
