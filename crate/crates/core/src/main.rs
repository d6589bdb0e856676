use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};

use phasefrac::bench::{
    compare_runs, load_config, parse_config, preview_mesh, run_case, Case, RunSpec,
};
use phasefrac::solvers::Scheme;
use phasefrac::{Error, Result};

#[derive(Parser)]
#[command(name = "phasefrac", version, about = "Phase-field fracture benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark case and write its outputs.
    Run {
        #[arg(long, value_parser = parse_case)]
        case: Option<Case>,
        /// TOML config; command-line flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<Scheme>,
        /// Reference increments over the load ramp (increments per cycle for fatigue).
        #[arg(long)]
        increments: Option<usize>,
        #[arg(long, value_enum)]
        adaptive: Option<Switch>,
        /// Length scale over element size in the refined band.
        #[arg(long)]
        refine: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate finished runs that share a case and mesh.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        runs: Vec<PathBuf>,
        /// Also write comparison.txt and comparison.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the mesh of a config as VTK without solving.
    Mesh {
        #[arg(long, value_name = "CONFIG")]
        preview: PathBuf,
        /// Output file; defaults to mesh.vtk in the run's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_case(s: &str) -> std::result::Result<Case, String> {
    s.parse()
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn resolve(case: Option<Case>, config: Option<&Path>) -> Result<RunSpec> {
    match (config, case) {
        (Some(path), hint) => {
            let text = std::fs::read_to_string(path)?;
            let spec = parse_config(&text, path, hint)?;
            if let Some(c) = hint.filter(|c| *c != spec.case) {
                return Err(Error::ConfigValidation(vec![format!(
                    "--case {c} disagrees with `case = \"{}\"` in {}",
                    spec.case,
                    path.display()
                )]));
            }
            Ok(spec)
        }
        (None, Some(c)) => Ok(RunSpec::preset(c)),
        (None, None) => Err(Error::ConfigValidation(vec![
            "give --case or --config".into()
        ])),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("PHASEFRAC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "PHASEFRAC_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    info!("assembly limited to {n} threads");
    Ok(())
}

/// Exit code when the solver gave up before the end of the load program.
const EXIT_ABORTED: u8 = 3;

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            case,
            config,
            scheme,
            increments,
            adaptive,
            refine,
            out,
        } => {
            let mut spec = resolve(case, config.as_deref())?;
            if let Some(s) = scheme {
                spec.scheme = s;
            }
            if let Some(n) = increments {
                if spec.case == Case::Fatigue {
                    spec.fatigue.increments_per_cycle = n;
                } else {
                    spec.increments = n;
                }
            }
            if let Some(a) = adaptive {
                spec.adaptive = matches!(a, Switch::On);
            }
            if let Some(r) = refine {
                spec.refine = r;
            }
            if let Some(o) = out {
                spec.out = o;
            }
            spec.validate()?;
            info!(
                "running {} with {} into {}",
                spec.case,
                spec.scheme,
                spec.out.display()
            );
            let outcome = run_case(&spec)?;
            let s = &outcome.summary;
            println!(
                "{} {}: {} increments, {} iterations, {:.2} s, peak {:.4e} N, crack {:.4e} mm",
                s.case,
                s.scheme,
                s.increments,
                s.cum_iterations,
                s.wall_seconds,
                s.peak_reaction_n,
                s.final_crack_length_mm
            );
            if let Some(n) = s.cycles_to_failure {
                println!("failure after {n} cycles");
            }
            if let Some(balanced) = s.energy_balanced {
                println!(
                    "energy balance {}",
                    if balanced { "holds" } else { "VIOLATED" }
                );
            }
            println!("outputs in {}", spec.out.display());
            if let Some(reason) = &s.abort_reason {
                error!("{reason}");
                return Ok(ExitCode::from(EXIT_ABORTED));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { runs, out } => {
            let report = compare_runs(&runs)?;
            print!("{}", report.to_text());
            if let Some(dir) = out {
                report.save(&dir)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh { preview, output } => {
            let spec = load_config(&preview)?;
            let path = match output {
                Some(p) => p,
                None => {
                    std::fs::create_dir_all(&spec.out)?;
                    spec.out.join("mesh.vtk")
                }
            };
            let sig = preview_mesh(&spec, &path)?;
            println!(
                "{} nodes, {} elements, {} unknowns, smallest element {:.4e} mm -> {}",
                sig.nodes,
                sig.elements,
                sig.unknowns,
                sig.min_element_size,
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
