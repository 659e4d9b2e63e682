//! Parameter tables, the INI config file and resolution of the final
//! run configuration from defaults, config file, environment and flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::CliError;

/// Environment variables `ORBITLAB_<KEY>` override the config file.
pub const ENV_PREFIX: &str = "ORBITLAB_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Str,
    Bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub kind: Kind,
    /// `None` makes the parameter required.
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn float(name: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { name, kind: Kind::Float, default: Some(default), help }
}

pub const fn int(name: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { name, kind: Kind::Int, default: Some(default), help }
}

pub const fn text(name: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { name, kind: Kind::Str, default: Some(default), help }
}

pub const fn flag(name: &'static str, help: &'static str) -> Param {
    Param { name, kind: Kind::Bool, default: Some("false"), help }
}

pub const fn required(name: &'static str, kind: Kind, help: &'static str) -> Param {
    Param { name, kind, default: None, help }
}

/// Settings shared by every subcommand.
pub const GLOBAL: &[Param] = &[
    int("seed", "0", "master seed; task k draws from stream k"),
    int("workers", "0", "worker threads, 0 for one per core"),
    text("out", "out", "output directory"),
    text("format", "csv", "table format: csv or jsonl"),
    flag("svg", "also render each table as an SVG plot"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    Config,
    Env,
    Flag,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::Config => "config",
            Source::Env => "env",
            Source::Flag => "flag",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Typed {
    Float(f64),
    Int(u64),
    Str(String),
    Bool(bool),
}

impl Typed {
    fn parse(p: &Param, raw: &str) -> Result<Self, CliError> {
        let raw = raw.trim();
        let bad = || CliError::Usage(format!("invalid value '{raw}' for {}", p.name));
        Ok(match p.kind {
            Kind::Float => {
                let v: f64 = raw.parse().map_err(|_| bad())?;
                if !v.is_finite() {
                    return Err(bad());
                }
                Typed::Float(v)
            }
            Kind::Int => Typed::Int(raw.replace('_', "").parse().map_err(|_| bad())?),
            Kind::Str => Typed::Str(raw.to_string()),
            Kind::Bool => Typed::Bool(match raw {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                _ => return Err(bad()),
            }),
        })
    }

    fn to_json(&self) -> Value {
        match self {
            Typed::Float(v) => json!(v),
            Typed::Int(v) => json!(v),
            Typed::Str(v) => json!(v),
            Typed::Bool(v) => json!(v),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub format: Format,
    pub svg: bool,
    pub config_file: Option<PathBuf>,
    params: BTreeMap<&'static str, (Typed, Source)>,
}

impl RunConfig {
    fn get(&self, name: &str) -> &Typed {
        match self.params.get(name) {
            Some((v, _)) => v,
            None => panic!("parameter '{name}' is not declared for {}", self.command),
        }
    }

    pub fn f64(&self, name: &str) -> f64 {
        match self.get(name) {
            Typed::Float(v) => *v,
            other => panic!("parameter '{name}' is {other:?}, not a float"),
        }
    }

    pub fn u64(&self, name: &str) -> u64 {
        match self.get(name) {
            Typed::Int(v) => *v,
            other => panic!("parameter '{name}' is {other:?}, not an integer"),
        }
    }

    pub fn usize(&self, name: &str) -> usize {
        self.u64(name) as usize
    }

    pub fn str(&self, name: &str) -> &str {
        match self.get(name) {
            Typed::Str(v) => v,
            other => panic!("parameter '{name}' is {other:?}, not a string"),
        }
    }

    pub fn bool(&self, name: &str) -> bool {
        match self.get(name) {
            Typed::Bool(v) => *v,
            other => panic!("parameter '{name}' is {other:?}, not a flag"),
        }
    }

    /// Command parameters as JSON, with where each value came from.
    pub fn to_json(&self) -> (Value, Value) {
        let mut params = serde_json::Map::new();
        let mut sources = serde_json::Map::new();
        for (k, (v, s)) in &self.params {
            params.insert(k.to_string(), v.to_json());
            sources.insert(k.to_string(), json!(s.name()));
        }
        (Value::Object(params), Value::Object(sources))
    }
}

/// `key = value` lines; `#` and `;` start comments.
pub fn parse_ini(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value, got '{line}'", i + 1)));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_ini(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_ini(&text)
}

/// Merges the layers in increasing priority: defaults, config file,
/// environment, flags. Unknown config keys are rejected; unknown
/// environment variables are ignored.
pub fn resolve(
    command: &str,
    params: &[Param],
    config_file: Option<PathBuf>,
    env: &[(String, String)],
    flags: &[(String, String)],
) -> Result<RunConfig, CliError> {
    let all: Vec<&Param> = GLOBAL.iter().chain(params).collect();
    let lookup = |k: &str| all.iter().find(|p| p.name == k).copied();
    let mut raw: BTreeMap<&'static str, (String, Source)> = BTreeMap::new();
    for p in &all {
        if let Some(d) = p.default {
            raw.insert(p.name, (d.to_string(), Source::Default));
        }
    }
    if let Some(path) = &config_file {
        for (k, v) in read_ini(path)? {
            let p = lookup(&k).ok_or_else(|| CliError::Usage(format!("unknown key '{k}' in {}", path.display())))?;
            raw.insert(p.name, (v, Source::Config));
        }
    }
    for (k, v) in env {
        let Some(key) = k.strip_prefix(ENV_PREFIX) else { continue };
        if let Some(p) = all.iter().find(|p| p.name.eq_ignore_ascii_case(key)) {
            raw.insert(p.name, (v.clone(), Source::Env));
        }
    }
    for (k, v) in flags {
        let p = lookup(k).ok_or_else(|| CliError::Usage(format!("unknown option --{k}")))?;
        raw.insert(p.name, (v.clone(), Source::Flag));
    }
    let mut typed = BTreeMap::new();
    for p in &all {
        let (v, src) = raw
            .get(p.name)
            .ok_or_else(|| CliError::Usage(format!("{command}: missing required option --{}", p.name)))?;
        typed.insert(p.name, (Typed::parse(p, v)?, *src));
    }
    let mut take = |name: &str| typed.remove(name).map(|(v, _)| v);
    let seed = match take("seed") {
        Some(Typed::Int(v)) => v,
        _ => unreachable!(),
    };
    let workers = match take("workers") {
        Some(Typed::Int(v)) => v as usize,
        _ => unreachable!(),
    };
    let out = match take("out") {
        Some(Typed::Str(v)) => PathBuf::from(v),
        _ => unreachable!(),
    };
    let format = match take("format") {
        Some(Typed::Str(v)) => match v.as_str() {
            "csv" => Format::Csv,
            "jsonl" => Format::Jsonl,
            _ => return Err(CliError::Usage(format!("unknown format '{v}', expected csv or jsonl"))),
        },
        _ => unreachable!(),
    };
    let svg = matches!(take("svg"), Some(Typed::Bool(true)));
    Ok(RunConfig { command: command.to_string(), seed, workers, out, format, svg, config_file, params: typed })
}
