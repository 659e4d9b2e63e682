//! `orbitlab`: seeded batch experiments over the orbitlab kernels.
//!
//! Every subcommand writes its tables and a `manifest.json` echoing the
//! resolved configuration into `--out`. Exit status is 0 on success, 1 on
//! invalid input and 2 when a numerical routine fails.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use orbitlab::LabError;

use crate::config::{Kind, Param, RunConfig, GLOBAL};
use crate::output::RunOutput;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lab(LabError),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lab(LabError::Numeric(_)) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lab(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

pub type Runner = fn(&RunConfig) -> Result<RunOutput, CliError>;

pub struct Spec {
    pub group: &'static str,
    pub name: &'static str,
    pub about: &'static str,
    pub params: &'static [Param],
    pub run: Runner,
}

const GROUPS: &[(&str, &str)] = &[
    ("billiard", "Elliptic billiards with a barrier"),
    ("lattice", "Flows on the space of affine lattices"),
    ("eaton", "Periodic arrays of Eaton and flat lenses"),
    ("gaps", "Gaps of fractional parts of square roots"),
];

fn param_arg(p: &Param) -> Arg {
    let mut help = p.help.to_string();
    if let Some(d) = p.default {
        if p.kind != Kind::Bool {
            help.push_str(&format!(" [default: {d}]"));
        }
    }
    let arg = Arg::new(p.name).long(p.name).help(help);
    match p.kind {
        Kind::Bool => arg.action(ArgAction::SetTrue),
        _ => arg.value_name("VALUE").allow_hyphen_values(true),
    }
}

fn cli() -> Command {
    let mut root = Command::new("orbitlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Seeded experiments on lattices, billiards, lens arrays and gap statistics")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (group, about) in GROUPS {
        let mut g = Command::new(*group).about(*about).subcommand_required(true).arg_required_else_help(true);
        for s in commands::SPECS.iter().filter(|s| s.group == *group) {
            let mut c = Command::new(s.name).about(s.about);
            c = c.arg(Arg::new("config").long("config").value_name("FILE").help("INI file of key = value settings"));
            for p in GLOBAL.iter().chain(s.params) {
                c = c.arg(param_arg(p));
            }
            g = g.subcommand(c);
        }
        root = root.subcommand(g);
    }
    root
}

/// Values given on the command line, as raw strings.
fn flag_values(m: &ArgMatches, params: &[Param]) -> Vec<(String, String)> {
    GLOBAL
        .iter()
        .chain(params)
        .filter_map(|p| match p.kind {
            Kind::Bool => m.get_flag(p.name).then(|| (p.name.to_string(), "true".to_string())),
            _ => m.get_one::<String>(p.name).map(|v| (p.name.to_string(), v.clone())),
        })
        .collect()
}

fn run<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return Err(CliError::Usage("missing subcommand".into()));
            }
            return Err(CliError::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    let (group, gm) = matches.subcommand().expect("subcommand required");
    let (name, m) = gm.subcommand().expect("subcommand required");
    let spec = commands::SPECS.iter().find(|s| s.group == group && s.name == name).expect("registered subcommand");
    let env: Vec<(String, String)> = std::env::vars().collect();
    let cfg = config::resolve(
        &format!("{group} {name}"),
        spec.params,
        m.get_one::<String>("config").map(Into::into),
        &env,
        &flag_values(m, spec.params),
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let out = pool.install(|| (spec.run)(&cfg))?;
    let written = output::write_all(&cfg, &out)?;
    for (k, v) in &out.summary {
        println!("{k} = {v}");
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
