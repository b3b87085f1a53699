use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flowforge::pipeline::{self, Objective, RunConfig};
use flowforge_cli::{exit_code, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK};
use log::{error, info, warn};

#[derive(Parser)]
#[command(name = "flowforge", version, about = "Flow-field shape optimization pipeline")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(short, long, global = true, default_value = "flowforge.json")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    J1,
    J2,
    J3,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the initial mesh (mesh_PAR.txt).
    Mesh,
    /// Solve the simplified model on a shape and write its diagnostics.
    Solve {
        /// Shape name, e.g. PAR or PAR_J1.
        #[arg(long, default_value = pipeline::BASE_SHAPE)]
        shape: String,
    },
    /// Single-criterion optimization with unit weights.
    Optimize {
        #[arg(long, value_enum, default_value = "all")]
        objective: Which,
    },
    /// Approximate the Pareto front (front.json); resumes an interrupted run.
    Pareto,
    /// Simplified versus Brinkman comparison of all shapes (report.md).
    Report,
    /// Serve front.json read-only for the navigator.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
    /// Print the JSON schema of the configuration.
    Schema,
}

fn run(cli: Cli) -> flowforge::Result<i32> {
    if let Command::Schema = cli.command {
        println!("{}", pipeline::CONFIG_SCHEMA);
        return Ok(EXIT_OK);
    }
    let cfg = RunConfig::load(&cli.config)?;
    info!("config {} (hash {})", cli.config.display(), cfg.hash());
    match cli.command {
        Command::Mesh => {
            let path = pipeline::cmd_mesh(&cfg)?;
            println!("{}", path.display());
        }
        Command::Solve { shape } => {
            let r = pipeline::cmd_solve(&cfg, Some(&shape))?;
            let s = r.summary();
            println!(
                "{}: {} channels, spread {:.4e}, channel sum {:.6e} of inlet {:.6e} m³/s",
                s.shape,
                r.flow_rates.len(),
                s.spread,
                s.channel_sum,
                s.inlet_flow
            );
        }
        Command::Optimize { objective } => {
            let list = match objective {
                Which::J1 => vec![Objective::J1],
                Which::J2 => vec![Objective::J2],
                Which::J3 => vec![Objective::J3],
                Which::All => Objective::ALL.to_vec(),
            };
            let mut code = EXIT_OK;
            for o in list {
                let r = pipeline::cmd_optimize(&cfg, o)?;
                println!(
                    "{}: {} after {} iterations, J {:?} -> {:?}",
                    r.name,
                    r.stop.as_str(),
                    r.iterations,
                    r.initial_costs,
                    r.final_costs
                );
                if !r.stop.converged() {
                    warn!("{} did not converge; best iterate written", r.name);
                    code = EXIT_NOT_CONVERGED;
                }
            }
            return Ok(code);
        }
        Command::Pareto => {
            let f = pipeline::cmd_pareto(&cfg)?;
            let q = f.quality.unwrap_or(f64::INFINITY);
            println!(
                "{} points from {} solves, quality {q:.4e}",
                f.points.len(),
                f.n_solves()
            );
            if q > cfg.mco.quality_target {
                warn!("quality target {} not reached within the budget", cfg.mco.quality_target);
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::Report => {
            let path = pipeline::cmd_report(&cfg)?;
            println!("{}", path.display());
        }
        Command::Serve { bind } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(flowforge_cli::serve(&cfg.output_dir, bind))?;
        }
        Command::Schema => unreachable!(),
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLOWFORGE_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
