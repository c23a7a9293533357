use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use symbiont_harness::analysis::{classify, sanction, solve_mdp};
use symbiont_harness::output::{emit_outputs, read_journal, OutputOptions};
use symbiont_harness::session::{serve, ServeOptions, DEFAULT_WINDOW};
use symbiont_harness::sweep::{load_sweep, summary_csv, sweep};
use symbiont_harness::{load_scenario, replay, run};

#[derive(Parser)]
#[command(
    name = "symbiont",
    version,
    about = "Human-AI ecosystem simulator under institutional shaping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every action against the reference region and report lineage prevalences.
    Classify { scenario: PathBuf },
    /// Run the coupled population and macro dynamics.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also render SVG charts.
        #[arg(long)]
        svg: bool,
        /// Replay a steered session from its patch journal.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Run every point of a parameter grid.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabular MDP commands.
    Mdp {
        #[command(subcommand)]
        command: MdpCommand,
    },
    /// Peer margin matrix from each agent's last action.
    SanctionRound { scenario: PathBuf },
    /// Serve live steering sessions over TCP.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Rows included in each state event.
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Write each session's outputs and journal here on disconnect.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MdpCommand {
    /// Solve by value iteration on the shaped reward.
    Solve {
        scenario: PathBuf,
        #[arg(long)]
        mdp: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
    },
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Classify { scenario } => {
            let s = load_scenario(&scenario)?;
            print_json(&classify(&s)?)?;
        }
        Command::Simulate {
            scenario,
            out,
            svg,
            replay: journal,
        } => {
            let s = load_scenario(&scenario)?;
            let record = match journal {
                Some(path) => replay(&s, &read_journal(&path)?)?,
                None => run(&s)?,
            };
            for p in emit_outputs(&record, &out, OutputOptions { svg })? {
                println!("wrote {}", p.display());
            }
            println!(
                "winner: {}  t_crit: {}  lever first true: {}",
                record.fixation_winner.as_deref().unwrap_or("none"),
                record.t_crit.map_or("none".into(), |t| t.to_string()),
                record.lever_first_true.map_or("none".into(), |t| t.to_string()),
            );
        }
        Command::Sweep { spec, out } => {
            let spec = load_sweep(&spec)?;
            let result = sweep(&spec)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("sweep_summary.csv");
            std::fs::write(&path, summary_csv(&result)?).with_context(|| format!("writing {}", path.display()))?;
            println!("{} grid points, wrote {}", result.points.len(), path.display());
        }
        Command::Mdp {
            command:
                MdpCommand::Solve {
                    scenario,
                    mdp,
                    tol,
                    max_iters,
                },
        } => {
            let s = load_scenario(&scenario)?;
            print_json(&solve_mdp(&s, &mdp, tol, max_iters)?)?;
        }
        Command::SanctionRound { scenario } => {
            let s = load_scenario(&scenario)?;
            print_json(&sanction(&s)?)?;
        }
        Command::Serve {
            scenario,
            port,
            host,
            window,
            record,
        } => {
            let s = load_scenario(&scenario)?;
            eprintln!("serving `{}` on {host}:{port}", s.name);
            serve(
                s,
                (host.as_str(), port),
                ServeOptions {
                    window,
                    record,
                    max_sessions: None,
                },
            )?;
        }
    }
    Ok(())
}
