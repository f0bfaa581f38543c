//! `klein`: build twistor-holomorphic Klein bottles from a config, certify
//! them, and write reports and meshes.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use klein_core::gluing::TracefreeForm;
use klein_core::mesh::MeshFormat;
use klein_core::report::{parse_complex, Report, REPORT_HEADER};
use num_complex::Complex64;

use commands::{FormsInput, VeronesePair};
use config::{RawConfig, RunConfig};
use exit::CliError;

#[derive(Parser, Debug)]
#[command(name = "klein", version, about = "Willmore-minimizing Klein bottles in R^4", after_help = exit_help())]
struct Cli {
    /// TOML config file (flat keys; complex numbers as "re+imi").
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for grid computations (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report path (overrides the `report` config key).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Random seed (overrides the `seed` config key).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

fn exit_help() -> String {
    format!(
        "Every run writes a report starting with '{REPORT_HEADER}'.\n\
         Exit codes: 0 all checks pass; 10-19 config; 20-29 construction; 30-39 verification; 40-49 IO.\n\
         Config keys can be overridden by KLEIN_<KEY> environment variables."
    )
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Antiholomorphic involutions of a torus.
    #[command(subcommand)]
    Involution(InvolutionCmd),
    /// The Klein bottle family.
    #[command(subcommand)]
    Klein(KleinCmd),
    /// The Veronese RP^2.
    #[command(subcommand)]
    Veronese(VeroneseCmd),
    /// Rotations for the gluing construction.
    #[command(subcommand)]
    Glue(GlueCmd),
    /// Klein and Veronese suites plus the exceptional gluing pair.
    Report,
}

#[derive(Subcommand, Debug)]
enum InvolutionCmd {
    /// Validate `z -> a conj(z) + b`, decide fixpoints, give the normal form.
    Classify {
        /// Lattice generators "w1,w2".
        #[arg(long, value_parser = parse_pair)]
        lattice: [Complex64; 2],
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        a: Complex64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_c)]
        b: Complex64,
    },
}

#[derive(Subcommand, Debug)]
enum KleinCmd {
    /// Construct g, phi1 and the triple; emit the construction record.
    Build,
    /// Full invariant suite.
    Verify,
    /// Willmore energy.
    Energy,
    /// Euler normal number.
    Euler,
    /// Export a mesh of the double cover.
    Mesh {
        /// Output path (overrides the `mesh` config key).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum FormatArg {
    Obj,
    Ply,
}

#[derive(Subcommand, Debug)]
enum VeroneseCmd {
    /// Energy, e(nu), symmetry and pointwise identities.
    Verify,
}

#[derive(Subcommand, Debug)]
enum GlueCmd {
    /// Find S in SO(2), T in SO(k) with positive pairing, or report the exceptional case.
    CheckForms(FormsArgs),
    /// Connected-sum energy bound; energies in units of pi.
    Bound {
        #[arg(long)]
        w1: f64,
        #[arg(long)]
        w2: f64,
    },
}

#[derive(Args, Debug)]
struct FormsArgs {
    /// Use the Veronese form against its mirror image or itself.
    #[arg(long, value_enum)]
    veronese_pair: Option<VeronesePair>,
    /// Comma-separated normal components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p11: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p12: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q11: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q12: Vec<f64>,
    /// Let T range over O(k) instead of SO(k).
    #[arg(long)]
    allow_reflection: bool,
}

fn parse_c(s: &str) -> Result<Complex64, String> {
    parse_complex(s).ok_or_else(|| format!("'{s}' is not a complex number (re+imi)"))
}

fn parse_pair(s: &str) -> Result<[Complex64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected two generators 'w1,w2'")?;
    Ok([parse_c(a)?, parse_c(b)?])
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let table = config::load_table(cli.config.as_deref(), std::env::vars())?;
    let mut cfg = RawConfig::from_table(table)?.resolve()?;
    if let Some(p) = &cli.output {
        cfg.report = p.clone();
    }
    if let Some(s) = cli.seed {
        cfg.verify.seed = s;
    }
    Ok(cfg)
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Involution(InvolutionCmd::Classify { .. }) => "involution classify",
        Command::Klein(KleinCmd::Build) => "klein build",
        Command::Klein(KleinCmd::Verify) => "klein verify",
        Command::Klein(KleinCmd::Energy) => "klein energy",
        Command::Klein(KleinCmd::Euler) => "klein euler",
        Command::Klein(KleinCmd::Mesh { .. }) => "klein mesh",
        Command::Veronese(_) => "veronese verify",
        Command::Glue(GlueCmd::CheckForms(_)) => "glue check-forms",
        Command::Glue(GlueCmd::Bound { .. }) => "glue bound",
        Command::Report => "report",
    }
    .to_string()
}

fn dispatch(cli: &Cli, cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    match &cli.command {
        Command::Involution(InvolutionCmd::Classify { lattice, a, b }) => {
            commands::involution_classify(*lattice, *a, *b, cfg.verify.seed, report)
        }
        Command::Klein(k) => match k {
            KleinCmd::Build => commands::build(cfg, report).map(|_| ()),
            KleinCmd::Verify => commands::klein_verify(cfg, report),
            KleinCmd::Energy => commands::klein_energy(cfg, report),
            KleinCmd::Euler => commands::klein_euler(cfg, report),
            KleinCmd::Mesh { out, format } => {
                let path = out.clone().unwrap_or_else(|| cfg.mesh.clone());
                let explicit = format.map(|f| match f {
                    FormatArg::Obj => MeshFormat::Obj,
                    FormatArg::Ply => MeshFormat::Ply,
                });
                let fmt = commands::mesh_format(&path, explicit)?;
                commands::klein_mesh(cfg, &path, fmt, cfg.verify.execution, report)
            }
        },
        Command::Veronese(VeroneseCmd::Verify) => commands::veronese(cfg, report),
        Command::Glue(GlueCmd::CheckForms(f)) => {
            let explicit = [&f.p11, &f.p12, &f.q11, &f.q12];
            let forms = if explicit.iter().all(|v| !v.is_empty()) {
                Some((TracefreeForm::new(f.p11.clone(), f.p12.clone())?, TracefreeForm::new(f.q11.clone(), f.q12.clone())?))
            } else {
                None
            };
            let input = FormsInput { pair: f.veronese_pair, forms, allow_reflection: f.allow_reflection };
            commands::glue_check_forms(input, report)
        }
        Command::Glue(GlueCmd::Bound { w1, w2 }) => {
            commands::glue_bound(*w1, *w2, report);
            Ok(())
        }
        Command::Report => commands::aggregate(cfg, report),
    }
}

/// The report, the outcome, and where the report goes.
fn run(cli: &Cli) -> (Report, Result<(), CliError>, PathBuf) {
    let mut report = Report::new();
    report.section("run").set("command", command_name(&cli.command));
    let cfg = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            // without a usable config the report goes to the flag path or the default
            let path = cli.output.clone().unwrap_or_else(|| RawConfig::default().report);
            return (report, Err(e), path);
        }
    };
    cfg.write(report.section("config"));
    cfg.verify.tol.write(report.section("tolerances"));
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            return (report, Err(CliError::ConfigInvalid(format!("threads: {e}"))), cfg.report);
        }
    }
    let outcome = dispatch(cli, &cfg, &mut report).and_then(|()| {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        if failed == 0 {
            Ok(())
        } else {
            Err(CliError::ChecksFailed(failed))
        }
    });
    (report, outcome, cfg.report)
}

fn write_report(report: &Report, path: &std::path::Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, report.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut report, outcome, path) = run(&cli);
    let mut code = 0;
    if let Err(err) = &outcome {
        report.section("error").set("kind", err.kind()).set("code", err.code() as i64).set("message", err.to_string());
        eprintln!("error: {err}");
        code = err.code();
    }
    print!("{}", report.render());
    if let Err(io) = write_report(&report, &path) {
        eprintln!("error: {io}");
        code = io.code();
    }
    ExitCode::from(code as u8)
}
