//! `fluxmech <scenario> [--config FILE] [--set key=value]... [--out DIR] [--threads N]`
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fluxmech_core::Error;

use crate::config::resolve;
use crate::scenarios::{catalog, find};

#[derive(Debug, Parser)]
#[command(name = "fluxmech", version, about = "Fluxonium-mechanical hybrid scenarios")]
struct Cli {
    /// Scenario to run, or `list` for the catalog.
    scenario: String,
    /// Flat `key = value unit` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set omega_m=4MHz`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output root; artifacts go to `<root>/<scenario>/`. Defaults to
    /// $FLUXMECH_OUT_DIR, then `./fluxmech-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit without running.
    #[arg(long)]
    dry_run: bool,
    /// Skip writing plot.py.
    #[arg(long)]
    no_plot: bool,
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("fluxmech: {msg}");
    ExitCode::from(code)
}

fn list() {
    for s in catalog() {
        println!("{:<20} {:<15} {}", s.name, s.figure, s.summary);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.scenario == "list" {
        list();
        return ExitCode::SUCCESS;
    }
    let Some(scenario) = find(&cli.scenario) else {
        let names: Vec<&str> = catalog().iter().map(|s| s.name).collect();
        let near = names.iter().max_by(|a, b| strsim::jaro_winkler(&cli.scenario, a).total_cmp(&strsim::jaro_winkler(&cli.scenario, b)));
        return fail(
            EXIT_CONFIG,
            format!("unknown scenario `{}`; did you mean `{}`? (`fluxmech list` shows all)", cli.scenario, near.unwrap_or(&"list")),
        );
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())),
        },
        None => String::new(),
    };
    let schema = (scenario.schema)();
    let resolved = match resolve(scenario.name, &schema, &text, &cli.set) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if cli.dry_run {
        print!("{}", resolved.render());
        for p in &schema {
            println!("#   {:<20} {:<32} {}", p.key, p.kind.describe(), p.help);
        }
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(EXIT_CONFIG, "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(EXIT_CONFIG, e);
        }
    }
    let root = cli
        .out
        .or_else(|| std::env::var_os("FLUXMECH_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fluxmech-out"));
    let dir = root.join(scenario.name);

    let artifacts = match (scenario.run)(&resolved) {
        Ok(a) => a,
        Err(e @ Error::InvalidParameter { .. }) => return fail(EXIT_CONFIG, format!("{}: {e}", scenario.name)),
        Err(e) => return fail(EXIT_NUMERICAL, format!("{}: {e}", scenario.name)),
    };
    match output::write_run(&dir, scenario.name, scenario.figure, &resolved.render(), artifacts, !cli.no_plot) {
        Ok(m) => {
            for f in &m.files {
                println!("{}  {}", f.sha256, dir.join(&f.path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_IO, format!("writing {}: {e}", dir.display())),
    }
}
