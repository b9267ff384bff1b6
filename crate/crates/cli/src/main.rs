use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vfe_cli::config::{parse_fraction, parse_list, parse_window};
use vfe_cli::{execute, exit_code, RunConfig, Target, EXIT_REJECTED};
use vfe_core::analysis::{DEFAULT_HOLDER_WINDOW, DEFAULT_PHI_TERMS};
use vfe_core::reproduce::{standard_steps, Scale};

/// Regular polygons under the vortex filament equation.
///
/// Relative output directories are placed under $VFE_OUT_DIR when it is set.
#[derive(Parser)]
#[command(name = "vfe", version)]
struct Cli {
    /// Run the configuration stored in this file instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate G(a, b, c) by direct summation and in closed form.
    Gauss {
        #[arg(short, allow_negative_numbers = true)]
        a: i64,
        #[arg(short, allow_negative_numbers = true)]
        b: i64,
        #[arg(short)]
        c: i64,
    },
    /// Build the exact polygon at t = (2 pi / M^2)(p / q).
    Algebraic {
        #[arg(value_name = "M")]
        m: u32,
        p: i64,
        q: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one period from the regular M-gon.
    Simulate {
        #[arg(long = "M", short = 'M', value_name = "M")]
        m: u32,
        #[arg(long, default_value_t = 512)]
        nodes_per_side: usize,
        /// Defaults to the standard count for the resolution.
        #[arg(long)]
        steps: Option<usize>,
        /// "paper1260", "none" or a file with one time per line.
        #[arg(long, default_value = "none")]
        dump_times: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Post-process a run from its manifest.
    Analyze {
        manifest: PathBuf,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PHI_TERMS)]
        phi_terms: usize,
        /// "lo,hi" in units of the period.
        #[arg(long)]
        holder_window: Option<String>,
        /// "p/q": fit point as a fraction of the period.
        #[arg(long, default_value = "1/5")]
        holder_at: String,
    },
    /// Rerun a published experiment and check it against the reference values.
    Reproduce {
        /// table1, table2, riemann or holder.
        target: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        /// Comma-separated polygon orders.
        #[arg(long = "m", value_name = "LIST")]
        ms: Option<String>,
        /// Override the resolution implied by --scale.
        #[arg(long)]
        nodes_per_side: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build(command: Command) -> vfe_core::Result<RunConfig> {
    Ok(match command {
        Command::Gauss { a, b, c } => RunConfig::Gauss { a, b, c },
        Command::Algebraic { m, p, q, out } => RunConfig::Algebraic {
            m,
            p,
            q,
            out: out.unwrap_or_else(|| format!("algebraic_M{m}_p{p}_q{q}").into()),
        },
        Command::Simulate { m, nodes_per_side, steps, dump_times, out } => RunConfig::Simulate {
            m,
            nodes_per_side,
            steps: steps.unwrap_or_else(|| standard_steps(m, nodes_per_side)),
            dump_times: dump_times.parse()?,
            out: out.unwrap_or_else(|| format!("run_M{m}_n{nodes_per_side}").into()),
        },
        Command::Analyze { manifest, out, phi_terms, holder_window, holder_at } => RunConfig::Analyze {
            manifest,
            out,
            phi_terms,
            holder_window: holder_window.as_deref().map(parse_window).transpose()?.unwrap_or(DEFAULT_HOLDER_WINDOW),
            holder_at: parse_fraction(&holder_at)?,
        },
        Command::Reproduce { target, scale, ms, nodes_per_side, out } => {
            let target: Target = target.parse()?;
            let scale: Scale = scale.parse()?;
            RunConfig::Reproduce {
                target,
                scale,
                ms: ms.as_deref().map(parse_list).transpose()?.unwrap_or_else(|| target.default_ms()),
                nodes_per_side,
                out: out.unwrap_or_else(|| format!("reproduce_{}", target.name()).into()),
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match (cli.config, cli.command) {
        (Some(path), None) => RunConfig::load(&path),
        (None, Some(command)) => build(command),
        (Some(_), Some(_)) => Err(vfe_core::VfeError::InvalidArgument("give either --config or a subcommand".into())),
        (None, None) => Err(vfe_core::VfeError::InvalidArgument("no subcommand given; see --help".into())),
    };
    let result = config.and_then(|c| execute(&c));
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.accepted {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_REJECTED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
