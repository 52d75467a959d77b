use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use triodflow::config::{presets, DeltaSpec, OneOrMany, ScenarioConfig, ScenarioKind};
use triodflow::runner::run_scenario;
use triodflow::scenarios::JunctionFix;
use triodflow::spectral::SystemConvention;

#[derive(Parser)]
#[command(name = "triodflow", about = "Curvature flow of planar triods", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Directory for report files.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Spatial (or with --temporal, temporal) convergence against a reference run.
    Convergence {
        #[arg(long)]
        temporal: bool,
        /// Full-resolution reference (J_ref = 360); takes about an hour.
        #[arg(long, conflicts_with = "temporal")]
        paper_scale: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Comma-separated element counts (temporal: the fixed J).
        #[arg(long, value_delimiter = ',')]
        j: Option<Vec<usize>>,
        /// Comma-separated step counts (temporal only).
        #[arg(long, value_delimiter = ',', requires = "temporal")]
        n: Option<Vec<usize>>,
        #[arg(long, conflicts_with = "temporal")]
        j_ref: Option<usize>,
        #[arg(long)]
        n_ref: Option<usize>,
        /// Step size, a number or a rule such as 0.2h^2.
        #[arg(long, conflicts_with = "temporal")]
        delta: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Relaxation towards equilibrium for a sweep of epsilon values.
    Epsilon {
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Condition numbers of the mass blocks or of the step matrix.
    Conditioning {
        which: Conditioning,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        j: Option<Vec<usize>>,
        #[arg(long)]
        delta: Option<String>,
        /// Mass only: rotation of the assembly data in degrees.
        #[arg(long)]
        rotation_deg: Option<f64>,
        /// System only.
        #[arg(long)]
        convention: Option<Convention>,
        #[command(flatten)]
        out: Output,
    },
    /// Spiral-shaped triod, several step sizes.
    Spiral {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Triod with self-intersecting curves.
    Selfintersect {
        /// Use J = 20 instead of J = 60.
        #[arg(long)]
        coarse: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        junction_fix: Option<Fix>,
        #[command(flatten)]
        out: Output,
    },
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum Conditioning {
    Mass,
    System,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Reduced,
    RowAmended,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fix {
    Shift,
    Reinterpret,
    None,
}

fn delta_spec(s: String) -> DeltaSpec {
    match s.trim().parse::<f64>() {
        Ok(v) => DeltaSpec::Value(v),
        Err(_) => DeltaSpec::Rule(s),
    }
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn many(v: Option<Vec<usize>>) -> Option<OneOrMany<usize>> {
    v.map(OneOrMany::Many)
}

fn one(v: Option<usize>) -> Option<OneOrMany<usize>> {
    v.map(OneOrMany::One)
}

fn build(command: Command) -> Option<(ScenarioConfig, Option<PathBuf>)> {
    let (cfg, out) = match command {
        Command::Version => return None,
        Command::Run { config, out } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    std::process::exit(2);
                }
            };
            (cfg, out)
        }
        Command::Convergence {
            temporal,
            paper_scale,
            epsilon,
            j,
            n,
            j_ref,
            n_ref,
            delta,
            t,
            out,
        } => {
            let mut c = if temporal {
                presets::convergence_time()
            } else {
                presets::convergence(paper_scale)
            };
            set(&mut c.epsilon, epsilon);
            if temporal {
                set(&mut c.j, j.and_then(|v| v.first().copied()).map(OneOrMany::One));
                set(&mut c.steps, many(n));
            } else {
                set(&mut c.j, many(j));
                set(&mut c.j_ref, j_ref);
                set(&mut c.delta, delta.map(delta_spec));
            }
            set(&mut c.n_ref, n_ref);
            set(&mut c.t_final, t);
            (c, out)
        }
        Command::Epsilon {
            epsilons,
            j,
            delta,
            threshold,
            z,
            max_steps,
            out,
        } => {
            let mut c = presets::epsilon_study();
            set(&mut c.epsilons, epsilons);
            set(&mut c.j, one(j));
            set(&mut c.delta, delta.map(delta_spec));
            set(&mut c.threshold, threshold);
            set(&mut c.z, z);
            set(&mut c.max_steps, max_steps);
            (c, out)
        }
        Command::Conditioning {
            which,
            epsilons,
            j,
            delta,
            rotation_deg,
            convention,
            out,
        } => {
            let mut c = match which {
                Conditioning::Mass => {
                    let mut c = presets::conditioning_mass();
                    set(&mut c.j, j.and_then(|v| v.first().copied()).map(OneOrMany::One));
                    set(&mut c.rotation_deg, rotation_deg);
                    c
                }
                Conditioning::System => {
                    let mut c = presets::conditioning_system();
                    set(&mut c.j, many(j));
                    c.convention = convention.map(|v| match v {
                        Convention::Reduced => SystemConvention::Reduced,
                        Convention::RowAmended => SystemConvention::RowAmended,
                    });
                    c
                }
            };
            set(&mut c.epsilons, epsilons);
            set(&mut c.delta, delta.map(delta_spec));
            (c, out)
        }
        Command::Spiral {
            epsilon,
            j,
            deltas,
            t,
            out,
        } => {
            let mut c = presets::spiral();
            set(&mut c.epsilon, epsilon);
            set(&mut c.j, one(j));
            set(&mut c.deltas, deltas);
            set(&mut c.t_final, t);
            (c, out)
        }
        Command::Selfintersect {
            coarse,
            epsilon,
            j,
            delta,
            t,
            junction_fix,
            out,
        } => {
            let mut c = presets::self_intersect(coarse);
            set(&mut c.epsilon, epsilon);
            set(&mut c.j, one(j));
            set(&mut c.delta, delta.map(delta_spec));
            set(&mut c.t_final, t);
            c.junction_fix = junction_fix.map(|f| match f {
                Fix::Shift => JunctionFix::Shift,
                Fix::Reinterpret => JunctionFix::Reinterpret,
                Fix::None => JunctionFix::None,
            });
            (c, out)
        }
    };
    Some((cfg, out.output_dir))
}

fn default_dir(cfg: &ScenarioConfig) -> PathBuf {
    let name = cfg.scenario.map_or("custom".to_string(), |k: ScenarioKind| k.to_string());
    PathBuf::from("out").join(name)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let Some((cfg, dir)) = build(cli.command) else {
        println!("triodflow {}", env!("CARGO_PKG_VERSION"));
        return ExitCode::SUCCESS;
    };
    let dir = dir.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| default_dir(&cfg));
    match run_scenario(&cfg, &dir) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
