//! Experiment runner for the `concave_l2` library: reads scenario files,
//! runs one subcommand and writes CSV (and optionally SVG) results.

pub mod commands;
pub mod config;
pub mod plot;
pub mod suite;

use clap::{Parser, Subcommand};
use commands::{CommandError, Outcome, RunOptions, Table};
use config::{ParseError, Scenario};
use std::path::{Path, PathBuf};

/// Scenario files shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("bidisc-linear", include_str!("../scenarios/bidisc-linear.cfg")),
    ("annulus-sqrt-r", include_str!("../scenarios/annulus-sqrt-r.cfg")),
    ("annulus-off-period", include_str!("../scenarios/annulus-off-period.cfg")),
    ("suita-bidisc", include_str!("../scenarios/suita-bidisc.cfg")),
    ("suita-annulus", include_str!("../scenarios/suita-annulus.cfg")),
    ("suita-annulus-half", include_str!("../scenarios/suita-annulus-half.cfg")),
    ("extended-suita-disc", include_str!("../scenarios/extended-suita-disc.cfg")),
    ("extended-suita-equal", include_str!("../scenarios/extended-suita-equal.cfg")),
    ("extended-suita-gap", include_str!("../scenarios/extended-suita-gap.cfg")),
    ("ohsawa-bidisc", include_str!("../scenarios/ohsawa-bidisc.cfg")),
    ("ohsawa-two-point", include_str!("../scenarios/ohsawa-two-point.cfg")),
    ("ohsawa-annulus", include_str!("../scenarios/ohsawa-annulus.cfg")),
];

pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED.iter().find(|b| b.0 == name).map(|b| config::parse(b.1, None).expect("bundled scenarios parse"))
}

#[derive(Debug, Parser)]
#[command(name = "concave-l2", version, about = "Minimal L2 integral experiments on products of discs and annuli")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file, or the name of a bundled scenario (optionally `builtin:<name>`).
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Also write an SVG plot where the subcommand has one.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Multiplies default grid sizes and quadrature resolution.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub grid_scale: f64,
    /// Overrides the scenario's Laurent truncation degree.
    #[arg(long, global = true)]
    pub basis_n: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Closed-form shell and sublevel integrals against quadrature.
    ValidateClosedforms,
    /// Samples G(h⁻¹(r)) and checks concavity and the linearity prediction.
    GCurve,
    /// G(0) against the extension bound over a sweep of pole moduli.
    JetEquality,
    /// Product Suita inequality at the first poles.
    Suita,
    /// Weighted Suita inequality and its character verdict.
    ExtendedSuita,
    /// Ohsawa comparison on the product grid of poles.
    Ohsawa,
    /// Concavity and decay on seeded random scenarios.
    ConcavitySuite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ValidateClosedforms => "validate-closedforms",
            Command::GCurve => "g-curve",
            Command::JetEquality => "jet-equality",
            Command::Suita => "suita",
            Command::ExtendedSuita => "extended-suita",
            Command::Ohsawa => "ohsawa",
            Command::ConcavitySuite => "concavity-suite",
        }
    }
}

pub fn resolve_config(arg: &str) -> Result<Scenario, ParseError> {
    let name = arg.strip_prefix("builtin:").unwrap_or(arg);
    let path = Path::new(arg);
    if !arg.starts_with("builtin:") && path.exists() {
        return config::load(path);
    }
    bundled(name).ok_or_else(|| ParseError { line: 0, msg: format!("no scenario file or bundled scenario named `{arg}`") })
}

/// Runs a subcommand without touching the filesystem.
pub fn execute(cmd: Command, sc: Option<&Scenario>, opts: &RunOptions) -> Result<Outcome, CommandError> {
    let need = || sc.ok_or_else(|| CommandError::Config(ParseError { line: 0, msg: format!("{} needs --config", cmd.name()) }));
    match cmd {
        Command::ValidateClosedforms => commands::validate_closedforms(opts),
        Command::GCurve => commands::g_curve(need()?, opts),
        Command::JetEquality => commands::jet_equality_sweep(need()?, opts),
        Command::Suita => commands::suita(need()?),
        Command::ExtendedSuita => commands::extended_suita(need()?),
        Command::Ohsawa => commands::ohsawa(need()?),
        Command::ConcavitySuite => commands::concavity_suite(sc, opts),
    }
}

pub fn write_csv(path: &Path, table: &Table) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()
}

/// Parses, runs and writes outputs; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let sc = match cli.config.as_deref().map(resolve_config).transpose() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if !(cli.grid_scale.is_finite() && cli.grid_scale > 0.0) {
        eprintln!("error: --grid-scale must be positive");
        return 2;
    }
    let opts = RunOptions { grid_scale: cli.grid_scale, basis_n: cli.basis_n, seed: cli.seed };
    let outcome = match execute(cli.command, sc.as_ref(), &opts) {
        Ok(o) => o,
        Err(CommandError::Config(e)) => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("FAIL {}: {e}", cli.command.name());
            return 1;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return 2;
    }
    let stem = format!("{}_{}", outcome.id, cli.command.name());
    let csv_path = cli.out.join(format!("{stem}.csv"));
    if let Err(e) = write_csv(&csv_path, &outcome.table) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return 2;
    }
    println!("wrote {}", csv_path.display());
    if cli.svg {
        if let Some(plot) = &outcome.plot {
            let p = cli.out.join(format!("{stem}.svg"));
            if let Err(e) = std::fs::write(&p, plot.to_svg()) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return 2;
            }
            println!("wrote {}", p.display());
        }
    }
    for n in &outcome.notes {
        println!("  {n}");
    }
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if outcome.passed() {
        0
    } else {
        let failed: Vec<&str> = outcome.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        eprintln!("failed invariant(s): {}", failed.join(", "));
        1
    }
}
