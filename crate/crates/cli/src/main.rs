use chernq_cli::commands::resolve_threads;
use chernq_cli::record::{grid_csv, to_json};
use chernq_cli::{
    cmd_flux, cmd_heisenberg, cmd_phase_diagram, cmd_sweep, cmd_wannier, run_config, BackendKind, CliError, CliResult,
    HeisenbergParams, NoiseParams, RunConfig, Task, WannierParams, Zone,
};
use chernq_core::adiabatic::Sampling;
use chernq_core::models::ModelSpec;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "chernq", version, about = "Chern numbers and Wannier windings from simulated adiabatic circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Berry-flux grid and Chern number.
    Flux(FluxArgs),
    /// Chern number over a range of one model parameter.
    Sweep(SweepArgs),
    /// Haldane Chern numbers over an (m, phi) grid.
    PhaseDiagram(PhaseArgs),
    /// Hybrid Wannier centres via phase estimation.
    Wannier(WannierArgs),
    /// Twist Berry phase of a Heisenberg chain.
    Heisenberg(HeisenbergArgs),
    /// Re-run from a config echo or a saved record.
    Run(RunArgs),
}

fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unrecognised value {s:?}"))
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: $CHERNQ_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the plot grid as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Leave wall time out of the record so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct Common {
    /// qwz or haldane.
    #[arg(long, default_value = "qwz")]
    model: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    m: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
    phi: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t2: f64,
    /// Plaquettes per side.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    steps_per_link: Option<usize>,
    /// Evolution time per plaquette loop.
    #[arg(long)]
    total_time: Option<f64>,
    /// left or midpoint.
    #[arg(long, value_parser = parse_name::<Sampling>)]
    sampling: Option<Sampling>,
    /// oracle, statevector, statevector+shots, mps or noisy.
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    chi_max: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// first or extended.
    #[arg(long, value_parser = parse_name::<Zone>)]
    zone: Option<Zone>,
    /// Tiling factor of the extended zone.
    #[arg(long)]
    tiling: Option<usize>,
    #[arg(long)]
    depolarizing_1q: Option<f64>,
    #[arg(long)]
    depolarizing_2q: Option<f64>,
    #[arg(long)]
    readout_flip: Option<f64>,
    #[command(flatten)]
    output: Output,
}

impl Common {
    fn config(&self, task: Task) -> CliResult<RunConfig> {
        let d = RunConfig::default();
        let model = match self.model.as_str() {
            "qwz" => ModelSpec::Qwz { u: self.u },
            "haldane" => ModelSpec::Haldane { t1: self.t1, t2: self.t2, m: self.m, phi: self.phi },
            other => return Err(CliError::Config(format!("unknown model {other:?}; expected qwz or haldane"))),
        };
        let noise = NoiseParams {
            depolarizing_1q: self.depolarizing_1q.unwrap_or(d.noise.depolarizing_1q),
            depolarizing_2q: self.depolarizing_2q.unwrap_or(d.noise.depolarizing_2q),
            readout_flip: self.readout_flip.unwrap_or(d.noise.readout_flip),
        };
        Ok(RunConfig {
            task,
            model,
            grid: self.grid.unwrap_or(d.grid),
            steps_per_link: self.steps_per_link.unwrap_or(d.steps_per_link),
            total_time: self.total_time.unwrap_or(d.total_time),
            sampling: self.sampling.unwrap_or(d.sampling),
            backend: self.backend.unwrap_or(d.backend),
            shots: self.shots.unwrap_or(d.shots),
            chi_max: self.chi_max.unwrap_or(d.chi_max),
            cutoff: self.cutoff.unwrap_or(d.cutoff),
            seed: self.output.seed.unwrap_or(d.seed),
            zone: self.zone.unwrap_or(d.zone),
            tiling: self.tiling.unwrap_or(d.tiling),
            noise,
            wannier: None,
            heisenberg: None,
            out: self.output.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

#[derive(Args)]
struct FluxArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Model parameter to vary (u, m, phi, t1, t2).
    #[arg(long)]
    parameter: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long)]
    points: usize,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    m_from: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    m_to: f64,
    #[arg(long, default_value_t = 21)]
    m_points: usize,
    #[arg(long, default_value_t = -std::f64::consts::PI, allow_hyphen_values = true)]
    phi_from: f64,
    #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
    phi_to: f64,
    #[arg(long, default_value_t = 21)]
    phi_points: usize,
}

#[derive(Args)]
struct WannierArgs {
    #[command(flatten)]
    common: Common,
    /// Increments per half of the kx sweep.
    #[arg(long)]
    n_half: Option<usize>,
    #[arg(long)]
    n_ky: Option<usize>,
    #[arg(long)]
    work_qubits: Option<usize>,
    #[arg(long)]
    measured_qubits: Option<usize>,
    /// Evolution time per half sweep.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    density_points: Option<usize>,
    /// Non-periodic distance in the density kernel.
    #[arg(long)]
    literal_density: bool,
    /// Full double loop instead of the mirror-symmetric sweep.
    #[arg(long)]
    double_loop: bool,
}

#[derive(Args)]
struct HeisenbergArgs {
    #[arg(long, default_value_t = 4)]
    sites: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    coupling: f64,
    /// Coupling on the twisted bond (default: --coupling).
    #[arg(long, allow_hyphen_values = true)]
    twisted_coupling: Option<f64>,
    /// Close the chain into a ring.
    #[arg(long)]
    periodic: bool,
    #[arg(long, default_value_t = 0)]
    twisted_bond: usize,
    #[arg(long, default_value_t = 100)]
    n_theta: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RunArgs {
    /// JSON file holding a RunConfig or a record with a `config` field.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    no_timing: bool,
}

fn write_file(path: &PathBuf, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn emit(json: &str, out: Option<&PathBuf>, csv: Option<(&PathBuf, String)>) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, json)?,
        None => print!("{json}"),
    }
    if let Some((p, text)) = csv {
        write_file(p, &text)?;
    }
    Ok(())
}

fn elapsed(start: Instant, timing: bool) -> Option<f64> {
    timing.then(|| start.elapsed().as_secs_f64())
}

fn install_threads(flag: Option<usize>) -> CliResult<()> {
    let n = resolve_threads(flag)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    let start = Instant::now();
    match cli.command {
        Command::Flux(a) => {
            install_threads(a.common.output.threads)?;
            let mut rec = cmd_flux(&a.common.config(Task::Flux)?)?;
            rec.meta.wall_time_s = elapsed(start, !a.common.output.no_timing);
            let o = &a.common.output;
            emit(&to_json(&rec)?, o.out.as_ref(), o.csv.as_ref().map(|p| (p, grid_csv(&rec.grid))))
        }
        Command::Sweep(a) => {
            install_threads(a.common.output.threads)?;
            let cfg = a.common.config(Task::Flux)?;
            let mut rec = cmd_sweep(&cfg, &a.parameter, a.from, a.to, a.points)?;
            rec.meta.wall_time_s = elapsed(start, !a.common.output.no_timing);
            let o = &a.common.output;
            emit(&to_json(&rec)?, o.out.as_ref(), o.csv.as_ref().map(|p| (p, rec.csv())))
        }
        Command::PhaseDiagram(a) => {
            install_threads(a.common.output.threads)?;
            let mut cfg = a.common.config(Task::Flux)?;
            if a.common.model != "haldane" {
                cfg.model = ModelSpec::Haldane { t1: a.common.t1, t2: a.common.t2, m: 0.0, phi: 0.0 };
            }
            let mut rec =
                cmd_phase_diagram(&cfg, (a.m_from, a.m_to, a.m_points), (a.phi_from, a.phi_to, a.phi_points))?;
            rec.meta.wall_time_s = elapsed(start, !a.common.output.no_timing);
            let o = &a.common.output;
            emit(&to_json(&rec)?, o.out.as_ref(), o.csv.as_ref().map(|p| (p, rec.csv())))
        }
        Command::Wannier(a) => {
            install_threads(a.common.output.threads)?;
            let mut cfg = a.common.config(Task::Wannier)?;
            let d = WannierParams::default();
            cfg.wannier = Some(WannierParams {
                n_half: a.n_half.unwrap_or(d.n_half),
                n_ky: a.n_ky.unwrap_or(d.n_ky),
                work_qubits: a.work_qubits.unwrap_or(d.work_qubits),
                measured_qubits: a.measured_qubits.unwrap_or(d.measured_qubits),
                time: a.time.unwrap_or(d.time),
                epsilon: a.epsilon.unwrap_or(d.epsilon),
                density_points: a.density_points.unwrap_or(d.density_points),
                periodic_density: !a.literal_density,
                double_loop: a.double_loop,
            });
            let mut rec = cmd_wannier(&cfg)?;
            rec.meta.wall_time_s = elapsed(start, !a.common.output.no_timing);
            let o = &a.common.output;
            emit(&to_json(&rec)?, o.out.as_ref(), o.csv.as_ref().map(|p| (p, grid_csv(&rec.grid))))
        }
        Command::Heisenberg(a) => {
            install_threads(a.output.threads)?;
            let cfg = RunConfig {
                task: Task::Heisenberg,
                backend: BackendKind::Oracle,
                seed: a.output.seed.unwrap_or(0),
                heisenberg: Some(HeisenbergParams {
                    sites: a.sites,
                    coupling: a.coupling,
                    twisted_coupling: a.twisted_coupling,
                    periodic: a.periodic,
                    twisted_bond: a.twisted_bond,
                    n_theta: a.n_theta,
                }),
                out: a.output.out.as_ref().map(|p| p.display().to_string()),
                ..RunConfig::default()
            };
            let mut rec = cmd_heisenberg(&cfg)?;
            rec.meta.wall_time_s = elapsed(start, !a.output.no_timing);
            emit(&to_json(&rec)?, a.output.out.as_ref(), None)
        }
        Command::Run(a) => {
            install_threads(a.threads)?;
            let text = std::fs::read_to_string(&a.config)
                .map_err(|source| CliError::Io { path: a.config.display().to_string(), source })?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let cfg: RunConfig = match value.get("config") {
                Some(c) => serde_json::from_value(c.clone())?,
                None => serde_json::from_value(value)?,
            };
            let mut rec = run_config(&cfg)?;
            rec.meta.wall_time_s = elapsed(start, !a.no_timing);
            emit(&to_json(&rec)?, a.out.as_ref(), a.csv.as_ref().map(|p| (p, grid_csv(&rec.grid))))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
