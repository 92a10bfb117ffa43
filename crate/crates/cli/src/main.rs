use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scatter_cs::harness::pipeline::{invert_scene, scene_matrix, simulate, solve, theory_report, Solver};
use scatter_cs::harness::{run, ExperimentConfig, ExperimentKind, Table};
use scatter_cs::io::{read_matrix, read_scene, read_to_string, read_vector, write_matrix, write_scene, write_string, write_vector};
use scatter_cs::sensing::MatrixKind;
use scatter_cs::{Error, Result};

#[derive(Parser)]
#[command(name = "scatter-cs", version, about = "Compressive inverse scattering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config file (TOML sections, flat keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Frequency or comma-separated frequency sweep.
    #[arg(long, value_delimiter = ',')]
    omega: Vec<f64>,
    /// Extra `section.key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw sensors and a target and synthesise far-field data.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Data vector output.
        #[arg(long)]
        data: PathBuf,
        /// Also write the matching sensing matrix.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Build the sensing matrix of a scene file.
    BuildMatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// mimo-born, simo-far-field or dt-near-field; inferred when absent.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Sparse recovery from a matrix file and a data file.
    Recover {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// bp, omp or bpdn:LAMBDA.
        #[arg(long, default_value = "bp")]
        solver: String,
        /// Scene with one incident wave; the output then holds the
        /// inverted strengths instead of the sparse estimate.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Coherence of far-field MIMO matrices against the predicted bound.
    McCoherence(ExperimentArgs),
    /// BP/OMP success rates versus sparsity (Born or exact data).
    McRecovery(ExperimentArgs),
    /// Noisy exact-model recovery against the lasso and strength bounds.
    McStability(ExperimentArgs),
    /// Near-field (diffraction tomography) coherence over an ωL sweep.
    McDt(ExperimentArgs),
    /// Far-field reciprocity residuals of the exact model.
    Reciprocity(ExperimentArgs),
    /// Resonant two-scatterer frequencies found by bisection.
    Resonance(ExperimentArgs),
    /// Evaluate the recoverability bounds for one sensor draw.
    Theory {
        #[command(flatten)]
        common: Common,
        /// Scene whose target feeds the stability bounds.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Noise level for the stability bounds.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn load_config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let text = match &common.config {
        Some(p) => read_to_string(p).map_err(|e| config_error(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_error(format!("override `{kv}` must be KEY=VALUE")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(s) = common.seed {
        overrides.push(("experiment.seed".into(), format!("\"{s}\"")));
    }
    if let Some(t) = common.trials {
        overrides.push(("experiment.trials".into(), t.to_string()));
    }
    if !common.omega.is_empty() {
        let list: Vec<String> = common.omega.iter().map(|w| format!("{w:?}")).collect();
        overrides.push(("physics.omega".into(), format!("[{}]", list.join(", "))));
    }
    let mut cfg = ExperimentConfig::from_toml_with(&text, kind, &overrides)?;
    if let Some(p) = &common.out {
        cfg.output = Some(p.clone());
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_string(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn omega_of(common: &Common) -> Result<f64> {
    match common.omega.as_slice() {
        [w] => Ok(*w),
        _ => Err(config_error("this command needs exactly one --omega")),
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { common, data, matrix } => {
            let cfg = load_config(&common, ExperimentKind::Recovery)?;
            let sim = simulate(&cfg)?;
            emit(cfg.output.as_deref(), &write_scene(&sim.scene))?;
            write_string(&data, &write_vector(&sim.data))?;
            if let Some(m) = matrix {
                write_string(&m, &write_matrix(&sim.matrix))?;
            }
            Ok(())
        }
        Command::BuildMatrix { common, scene, kind } => {
            let scene = read_scene(&read_to_string(&scene)?)?;
            let kind = kind
                .map(|k| MatrixKind::parse(&k).ok_or_else(|| config_error(format!("unknown matrix kind `{k}`"))))
                .transpose()?;
            let phi = scene_matrix(&scene, omega_of(&common)?, kind)?;
            emit(common.out.as_deref(), &write_matrix(&phi))
        }
        Command::Recover { common, matrix, data, solver, scene } => {
            let phi = read_matrix(&read_to_string(&matrix)?)?;
            let y = read_vector(&read_to_string(&data)?)?;
            let r = solve(&phi, &y, solver.parse::<Solver>()?)?;
            eprintln!(
                "support {:?}, residual {:e}, iterations {}, converged {}",
                r.support_hat, r.residual_2, r.iterations, r.converged
            );
            let out = match scene {
                Some(p) => {
                    let scene = read_scene(&read_to_string(&p)?)?;
                    let est = invert_scene(&scene, phi.omega, &r.sparse_estimate())?;
                    if !est.well_defined {
                        eprintln!("warning: a denominator vanished; those strengths are reported as zero");
                    }
                    est.nu_hat
                }
                None => r.sparse_estimate(),
            };
            emit(common.out.as_deref(), &write_vector(&out))
        }
        Command::Theory { common, scene, eps } => {
            let cfg = load_config(&common, ExperimentKind::Coherence)?;
            let scene = scene.map(|p| read_to_string(&p).and_then(|t| read_scene::<f64>(&t))).transpose()?;
            let report = theory_report(&cfg, scene.as_ref().map(|s| (&s.lattice, &s.target)), eps)?;
            emit(cfg.output.as_deref(), &report.table().to_csv()?)
        }
        Command::McCoherence(a) => experiment(&a.common, ExperimentKind::Coherence),
        Command::McRecovery(a) => experiment(&a.common, ExperimentKind::Recovery),
        Command::McStability(a) => experiment(&a.common, ExperimentKind::Stability),
        Command::McDt(a) => experiment(&a.common, ExperimentKind::Dt),
        Command::Reciprocity(a) => experiment(&a.common, ExperimentKind::Reciprocity),
        Command::Resonance(a) => experiment(&a.common, ExperimentKind::Resonance),
    }
}

fn experiment(common: &Common, kind: ExperimentKind) -> Result<()> {
    let mut cfg = load_config(common, kind)?;
    if cfg.kind != kind {
        return Err(config_error(format!("config describes {}, but the command is {kind}", cfg.kind)));
    }
    cfg.kind = kind;
    let table: Table = run(&cfg)?;
    emit(cfg.output.as_deref(), &table.to_csv()?)
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Simulate { common, .. }
        | Command::BuildMatrix { common, .. }
        | Command::Recover { common, .. }
        | Command::Theory { common, .. } => common,
        Command::McCoherence(a)
        | Command::McRecovery(a)
        | Command::McStability(a)
        | Command::McDt(a)
        | Command::Reciprocity(a)
        | Command::Resonance(a) => &a.common,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = common_of(&cli.command).threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
