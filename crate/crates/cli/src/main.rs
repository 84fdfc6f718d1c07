use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chemdist::{assemble, parse_assignment, run_with_threads, RunError};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "chemdist", version, about = "Chemical distance experiments on supercritical bond percolation")]
struct Cli {
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true, env = "CHEMDIST_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; inline flags override its parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "L")]
    half_side: Option<i64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    margin: Option<i64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Extra parameter as key=value, value parsed as JSON (e.g. --set 'y=[1,0]').
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct DistArgs {
    #[command(flatten)]
    common: Common,
    /// Source point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    source: Option<Vec<i64>>,
    /// Target point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    target: Option<Vec<i64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a configuration and write a binary dump with a JSON header.
    Sample(Common),
    /// Print D, D* and a geodesic between two points as JSON.
    Dist(DistArgs),
    /// Time constant along a direction.
    Mu(Common),
    /// Variance scaling of D*.
    Var(Common),
    /// Moderate-deviation tail probabilities.
    Tails(Common),
    /// Gap between the mean distance and the norm.
    Gap(Common),
    /// Chemical ball against the norm ball.
    Shape(Common),
    /// Mismatch between D^t and D*.
    Coupling(Common),
    /// Single-box resampling check for D^t.
    EfronStein(Common),
    /// Skeleton length along a geodesic.
    Skeleton(Common),
    /// Finite-cluster and hole size tails.
    DiagTails(Common),
}

fn overrides(c: &Common) -> Result<Vec<(String, Value)>, RunError> {
    let mut out = Vec::new();
    if let Some(d) = c.d {
        out.push(("d".into(), json!(d)));
    }
    if let Some(l) = c.half_side {
        out.push(("L".into(), json!(l)));
    }
    if let Some(p) = c.p {
        out.push(("p".into(), json!(p)));
    }
    if let Some(m) = c.margin {
        out.push(("margin".into(), json!(m)));
    }
    if let Some(r) = c.replications {
        out.push(("replications".into(), json!(r)));
    }
    for s in &c.set {
        out.push(parse_assignment(s)?);
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (name, common, extra) = match &cli.command {
        Command::Sample(c) => ("sample", c, vec![]),
        Command::Dist(a) => {
            let mut extra = vec![];
            if let Some(s) = &a.source {
                extra.push(("source".to_string(), json!(s)));
            }
            if let Some(t) = &a.target {
                extra.push(("target".to_string(), json!(t)));
            }
            ("dist", &a.common, extra)
        }
        Command::Mu(c) => ("mu", c, vec![]),
        Command::Var(c) => ("var", c, vec![]),
        Command::Tails(c) => ("tails", c, vec![]),
        Command::Gap(c) => ("gap", c, vec![]),
        Command::Shape(c) => ("shape", c, vec![]),
        Command::Coupling(c) => ("coupling", c, vec![]),
        Command::EfronStein(c) => ("efron-stein", c, vec![]),
        Command::Skeleton(c) => ("skeleton", c, vec![]),
        Command::DiagTails(c) => ("diag-tails", c, vec![]),
    };
    let mut ov = overrides(common)?;
    ov.extend(extra);
    let config = assemble(name, common.config.as_deref(), ov, common.seed, common.output_dir.clone())?;
    let out = run_with_threads(&config, cli.threads)?;
    let mut text = String::new();
    if name == "dist" {
        text = serde_json::to_string_pretty(&out.summary).unwrap() + "\n";
    } else {
        for f in &out.files {
            text += &format!("{}\n", f.display());
        }
    }
    // a closed stdout (e.g. piped into head) is not a failure of the run
    let _ = std::io::stdout().write_all(text.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chemdist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
