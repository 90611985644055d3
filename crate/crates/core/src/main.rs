use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lamerecon::experiments::{run_experiment, DataMesh, ExperimentConfig, ExperimentKind, ResultBundle};
use lamerecon::Error;

/// Exit codes.
const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(name = "lamerecon", version, about = "Lame parameter reconstruction on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constant parameters (3, 7) from four boundary measurements.
    Example1(Common),
    /// Per-element reconstruction of mu = |x|, lambda = 1.
    Example2(Common),
    /// Per-element reconstruction of two Gaussian lambda bumps.
    Example3(Common),
    /// Sandwich, Loewner and energy identity checks on random ordered pairs.
    Monotonicity(Common),
    /// Empirical Lipschitz constant on quadrant-wise constant pairs.
    Stability(Common),
    /// Forward solves for the configured truth field and loads.
    Forward(Common),
    /// Whatever the config file describes.
    Custom(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum DataMeshArg {
    Same,
    Refine,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults reproduce the named experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for bundle.json and side files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for noise or random pairs.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the noise rows by a single level (with --rho).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long = "mesh-h")]
    mesh_h: Option<f64>,
    #[arg(long = "data-mesh", value_enum)]
    data_mesh: Option<DataMeshArg>,
    /// Print the effective config as JSON and exit.
    #[arg(long = "dump-config")]
    dump_config: bool,
}

fn build_config(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if kind != ExperimentKind::Custom && c.kind != kind {
                return Err(Error::Config(format!(
                    "{} describes {:?}, not {kind:?}",
                    path.display(),
                    c.kind
                )));
            }
            c
        }
        None if kind == ExperimentKind::Custom => {
            return Err(Error::Config("custom requires --config".into()))
        }
        None => ExperimentConfig::for_kind(kind),
    };
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
        config.campaign.seed = seed;
    }
    if args.noise.is_some() || args.rho.is_some() {
        let base = config.noise_rows.first().copied().unwrap_or(lamerecon::experiments::NoiseRow {
            epsilon: 0.0,
            rho: 0.0,
        });
        config.noise_rows = vec![lamerecon::experiments::NoiseRow {
            epsilon: args.noise.unwrap_or(base.epsilon),
            rho: args.rho.unwrap_or(base.rho),
        }];
    }
    if let Some(h) = args.mesh_h {
        config.mesh.target_h = h;
    }
    if let Some(d) = args.data_mesh {
        config.data_mesh = match d {
            DataMeshArg::Same => DataMesh::Same,
            DataMeshArg::Refine => DataMesh::Refine,
        };
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn print_summary(bundle: &ResultBundle) {
    if let Some(m) = &bundle.mesh {
        println!("mesh: h = {}, {} nodes, {} elements", m.target_h, m.nodes, m.elements);
    }
    for r in &bundle.runs {
        let constant = match (r.computed, r.exact) {
            (Some(c), Some(e)) => format!(" computed ({:.6}, {:.6}) exact ({}, {})", c[0], c[1], e[0], e[1]),
            _ => String::new(),
        };
        println!(
            "{}: eps {} rho {}{} rel.err ({:.3e}, {:.3e}) J {:.3e} -> {:.3e} in {} iterations ({:?})",
            r.label,
            r.epsilon,
            r.rho,
            constant,
            r.relative_error[0],
            r.relative_error[1],
            r.initial_value,
            r.final_value,
            r.iterations,
            r.stop
        );
        if let Some(b) = &r.bumps {
            println!("  bump centroids {:?}, distance {:?}", b.recovered, b.distance);
        }
    }
    for f in &bundle.forward {
        println!(
            "load {:?}: boundary energy {:.12e}, interior energy {:.12e}",
            f.load, f.boundary_energy, f.interior_energy
        );
    }
    if let Some(m) = &bundle.monotonicity {
        println!(
            "monotonicity: {} pairs, {} sandwich violations, {} Loewner violations, min gap {:?}, max energy defect {:e}",
            m.pairs.len(),
            m.sandwich_violations,
            m.loewner_violations,
            m.min_loewner_gap,
            m.max_energy_identity_defect
        );
    }
    if let Some(s) = &bundle.stability {
        println!(
            "stability: {} ratios, {} skipped, max ratio {:?}, min ratio {:?}",
            s.entries.len(),
            s.skipped.len(),
            s.max_ratio,
            s.min_ratio
        );
    }
    for v in &bundle.violations {
        println!("violation: {v}");
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parameter(_) | Error::Partition(_) => EXIT_CONFIG,
        Error::Numeric { .. } | Error::Precondition(_) => EXIT_SOLVER,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Example1(a) => (ExperimentKind::Example1, a),
        Command::Example2(a) => (ExperimentKind::Example2, a),
        Command::Example3(a) => (ExperimentKind::Example3, a),
        Command::Monotonicity(a) => (ExperimentKind::Monotonicity, a),
        Command::Stability(a) => (ExperimentKind::Stability, a),
        Command::Forward(a) => (ExperimentKind::Forward, a),
        Command::Custom(a) => (ExperimentKind::Custom, a),
    };
    let config = match build_config(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.dump_config {
        println!("{}", config.to_json());
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let (bundle, result) = run_experiment(&config);
    eprintln!("elapsed: {:.1} s", start.elapsed().as_secs_f64());
    print_summary(&bundle);
    if let Some(dir) = &config.output_dir {
        if let Err(e) = bundle.write(dir) {
            eprintln!("error: cannot write bundle: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Ok(()) if !bundle.violations.is_empty() => ExitCode::from(EXIT_VIOLATION),
        Ok(()) => ExitCode::SUCCESS,
    }
}
