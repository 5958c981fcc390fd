//! `twistlab`: runs the diagnostics over n-grids and writes a JSON report,
//! CSV tables and optional SVG plots.

mod commands;
mod plot;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use settings::Settings;

#[derive(Parser)]
#[command(name = "twistlab", version, about = "Centralizer and disjoint-singularity experiments on finite Köthe lattices")]
struct Cli {
    /// JSON file whose keys mirror the long flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sign averages ∇ over canonical normalized families.
    Nabla(Settings),
    /// Growth parameters M(n) and m(n).
    Params(Settings),
    /// Distance to linear maps on canonical disjoint spans.
    Distance(Settings),
    /// Lower track and upper scan for ψ(n).
    Psi(Settings),
    /// Numerical Lozanovskii factorization on random positive vectors.
    Decompose(Settings),
    /// Empirical quasi-linearity and centralizer constants.
    Constants(Settings),
    /// The acceptance battery.
    Suite(Settings),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Nabla(_) => "nabla",
            Command::Params(_) => "params",
            Command::Distance(_) => "distance",
            Command::Psi(_) => "psi",
            Command::Decompose(_) => "decompose",
            Command::Constants(_) => "constants",
            Command::Suite(_) => "suite",
        }
    }

    fn into_settings(self) -> Settings {
        match self {
            Command::Nabla(s)
            | Command::Params(s)
            | Command::Distance(s)
            | Command::Psi(s)
            | Command::Decompose(s)
            | Command::Constants(s)
            | Command::Suite(s) => s,
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TWISTLAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("TWISTLAB_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let name = cli.command.name();
    let base = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let settings = Settings::merged(cli.command.into_settings(), base);
    let outcome = match name {
        "nabla" => commands::nabla_cmd(&settings),
        "params" => commands::params_cmd(&settings),
        "distance" => commands::distance_cmd(&settings),
        "psi" => commands::psi_cmd(&settings),
        "decompose" => commands::decompose_cmd(&settings),
        "constants" => commands::constants_cmd(&settings),
        _ => commands::suite_cmd(&settings),
    }?;

    let dir = settings.out_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut report = json!({
        "command": name,
        "version": twistlab_core::VERSION,
        "config_hash": settings.hash(name),
        "settings": settings,
        "rows": outcome.rows,
    });
    if let (Some(r), Some(extra)) = (report.as_object_mut(), outcome.extra.as_object()) {
        for (k, v) in extra {
            r.insert(k.clone(), v.clone());
        }
    }
    let write = |file: String, body: &str| -> Result<()> {
        let path = dir.join(file);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write("report.json".into(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write(format!("{name}.csv"), &outcome.csv)?;
    if settings.plot() {
        if let Some(svg) = &outcome.svg {
            write(format!("{name}.svg"), svg)?;
        }
    }
    match &outcome.summary {
        Some(text) => println!("{text}"),
        None => print!("{}", outcome.csv),
    }
    eprintln!("wrote {}", dir.display());
    Ok(outcome.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
