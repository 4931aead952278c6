//! Command-line front-end: resolves a [`config::RunConfig`] from an
//! INI-style file and flags, then runs one of the pipelines in
//! [`commands`].

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use config::{load_ini, Command, RunConfig, Settings};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "witten-lab",
    version,
    about = "Spectra of the Witten-deformed Hodge Laplacian"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// INI-style config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// circle | torus | octahedron | mesh:<path>
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub n2: Option<String>,
    #[arg(long)]
    pub radius: Option<String>,
    #[arg(long)]
    pub l1: Option<String>,
    #[arg(long)]
    pub l2: Option<String>,
    /// Field catalog id.
    #[arg(long)]
    pub field: Option<String>,
    /// Field parameter, e.g. `--param eps=0.3`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub t: Option<String>,
    /// geom:<start>:<end>:<count> or list:<t1>,<t2>,...
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// Degree, comma list, or `all`.
    #[arg(long)]
    pub degree: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    /// parallel | sequential
    #[arg(long)]
    pub execution: Option<String>,
    /// standard | paper | none
    #[arg(long = "oracle-mode")]
    pub oracle_mode: Option<String>,
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Comma list of Hessian eigenvalues for the oracle command.
    #[arg(long)]
    pub xi: Option<String>,
    #[arg(long = "box")]
    pub half_width: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long = "brute-force")]
    pub brute_force: Option<String>,
    /// a/b
    #[arg(long)]
    pub slope: Option<String>,
    #[arg(long = "n-leaf")]
    pub n_leaf: Option<String>,
    #[arg(long = "n-trans")]
    pub n_trans: Option<String>,
    /// tent:<lo>:<peak>:<hi> | hat:<width> | plateau:<end>:<ramp>
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    /// Flag values as config keys.
    pub fn overrides(&self) -> Result<Settings> {
        let mut s = Settings::new();
        let pairs = [
            ("model.kind", &self.model),
            ("model.n", &self.n),
            ("model.n2", &self.n2),
            ("model.radius", &self.radius),
            ("model.l1", &self.l1),
            ("model.l2", &self.l2),
            ("field.id", &self.field),
            ("schedule.t", &self.t),
            ("schedule.grid", &self.t_grid),
            ("solver.degree", &self.degree),
            ("solver.k", &self.k),
            ("solver.tol", &self.tol),
            ("solver.seed", &self.seed),
            ("solver.threads", &self.threads),
            ("solver.execution", &self.execution),
            ("oracle.mode", &self.oracle_mode),
            ("oracle.cutoff", &self.cutoff),
            ("oracle.xi", &self.xi),
            ("oracle.box", &self.half_width),
            ("oracle.grid", &self.grid),
            ("oracle.brute-force", &self.brute_force),
            ("foliation.slope", &self.slope),
            ("foliation.n-leaf", &self.n_leaf),
            ("foliation.n-trans", &self.n_trans),
            ("foliation.phi", &self.phi),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                s.insert(key.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            s.insert("output.dir".into(), out.display().to_string());
        }
        for p in &self.params {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--param expects KEY=VALUE, got `{p}`")))?;
            let key = format!("field.{}", k.trim());
            if !config::is_known(&key) {
                return Err(CliError::Config(format!(
                    "unknown field parameter `{}`",
                    k.trim()
                )));
            }
            s.insert(key, v.trim().to_string());
        }
        Ok(s)
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let mut settings = match &self.config {
            Some(path) => load_ini(path)?,
            None => Settings::new(),
        };
        settings.extend(self.overrides()?);
        RunConfig::resolve(self.command, &settings)
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.resolve().and_then(|cfg| commands::execute(&cfg)) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
