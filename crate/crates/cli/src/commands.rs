//! The five pipelines. Each writes its files under the output directory and
//! returns their paths.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use witten_core::complex::{
    betti_with, build_circle, build_complex, build_flat_torus, load_mesh, octahedron, Mesh,
};
use witten_core::foliation::{build_kronecker, trace_report, TraceReport};
use witten_core::io::{fmt_f64, to_json_string};
use witten_core::morse::{find_critical_points_with, morse_counts, CriticalPoint, MorseData};
use witten_core::oracle::{
    aggregate_limit_spectrum, brute_force_oscillator, minimal_box, morse_inequalities_check,
    oscillator_spectrum, ModelSpectrum, OracleMode, OscillatorModel,
};
use witten_core::witten::{spectral_flow, witten_spectrum, FlowResult, SpectrumTable};

use crate::config::{Command, ModelSpec, RunConfig};
use crate::error::{CliError, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Common wrapper of every JSON output.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, config: &RunConfig, body: T) -> Result<()> {
        let env = Envelope {
            tool: TOOL,
            version: VERSION,
            config,
            body,
        };
        self.text(name, &to_json_string(&env)?)
    }
}

pub fn build_mesh(spec: &ModelSpec) -> Result<Mesh> {
    let mesh = match spec {
        ModelSpec::Circle { n, radius } => build_circle(*n, *radius)?,
        ModelSpec::Torus { n1, n2, l1, l2 } => build_flat_torus(*n1, *n2, *l1, *l2)?,
        ModelSpec::Octahedron => octahedron()?,
        ModelSpec::Mesh { path } => load_mesh(path).map_err(|e| match e {
            witten_core::Error::Io(e) => {
                CliError::Config(format!("model.kind: cannot read {}: {e}", path.display()))
            }
            other => other.into(),
        })?,
    };
    Ok(mesh)
}

/// Runs the configured command, inside a dedicated pool when a thread
/// count is given.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    #[cfg(feature = "parallel")]
    if cfg.solver.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.solver.threads)
            .build()
            .map_err(|e| CliError::Config(format!("solver.threads: {e}")))?;
        return pool.install(|| dispatch(cfg));
    }
    dispatch(cfg)
}

fn dispatch(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match cfg.command {
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Flow => cmd_flow(cfg),
        Command::MorseCheck => cmd_morse_check(cfg),
        Command::Oracle => cmd_oracle(cfg),
        Command::Foliation => cmd_foliation(cfg),
    }
}

fn check_k(cfg: &RunConfig, dims: &[usize]) -> Result<()> {
    for &p in &cfg.solver.degrees {
        if cfg.solver.k >= dims[p] {
            return Err(CliError::Config(format!(
                "solver.k: k = {} must be smaller than the {}-cochain dimension {}",
                cfg.solver.k, p, dims[p]
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumBody<'a> {
    tables: &'a [SpectrumTable],
}

/// One solve per `(t, degree)`; CSV per degree plus a JSON copy.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mesh = build_mesh(&cfg.model)?;
    let complex = build_complex(&mesh)?;
    check_k(cfg, &complex.dims())?;
    let field = cfg.field.bind(mesh.model())?;
    let opts = cfg.eigen_options();
    let jobs: Vec<(f64, usize)> = cfg
        .schedule
        .values
        .iter()
        .flat_map(|&t| cfg.solver.degrees.iter().map(move |&p| (t, p)))
        .collect();
    let tables = cfg
        .solver
        .execution
        .map(&jobs, |&(t, p)| {
            witten_spectrum(&complex, &field, t, p, cfg.solver.k, &opts)
        })
        .into_iter()
        .collect::<witten_core::Result<Vec<_>>>()?;

    let mut w = Writer::new(&cfg.output)?;
    for &p in &cfg.solver.degrees {
        let mut csv = format!("{}\n", SpectrumTable::CSV_HEADER);
        for table in tables.iter().filter(|s| s.degree == p) {
            csv.push_str(&table.csv_rows());
        }
        w.text(&format!("spectrum_p{p}.csv"), &csv)?;
    }
    w.json("spectrum.json", cfg, SpectrumBody { tables: &tables })?;
    Ok(w.written)
}

#[derive(Serialize)]
struct FlowBody<'a> {
    oracle_mode: Option<OracleMode>,
    critical_counts: Option<Vec<usize>>,
    #[serde(flatten)]
    flow: &'a FlowResult,
}

/// Limit values for the first `k` eigenvalues, widening the cutoff until
/// enough oscillator levels are listed.
fn oracle_limits(data: &MorseData, p: usize, k: usize, mode: OracleMode) -> Result<Vec<f64>> {
    let mut cutoff = 4.0;
    loop {
        let spec = aggregate_limit_spectrum(data, p, cutoff, mode)?;
        if spec.len() >= k || cutoff > 1e4 {
            let mut v = spec.values();
            v.truncate(k);
            return Ok(v);
        }
        cutoff *= 2.0;
    }
}

/// Rescaled spectra along the schedule, with oracle limits and one
/// `t t·λ` series file per track.
pub fn cmd_flow(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mesh = build_mesh(&cfg.model)?;
    let complex = build_complex(&mesh)?;
    check_k(cfg, &complex.dims())?;
    let field = cfg.field.bind(mesh.model())?;
    let exec = cfg.solver.execution;
    let mut flow = spectral_flow(
        &complex,
        &field,
        &cfg.schedule.values,
        &cfg.solver.degrees,
        cfg.solver.k,
        &cfg.eigen_options(),
        exec,
    )?;
    if flow.schedule.is_empty() {
        return Err(CliError::Numerical(format!(
            "every t was skipped; first reason: {}",
            flow.skipped
                .first()
                .map(|s| s.reason.as_str())
                .unwrap_or("unknown")
        )));
    }
    let mut counts = None;
    if let Some(mode) = cfg.oracle.mode {
        let data = find_critical_points_with(&cfg.field, &mesh, exec)?;
        for &p in &cfg.solver.degrees {
            flow.attach_oracle(p, oracle_limits(&data, p, cfg.solver.k, mode)?);
        }
        counts = Some(morse_counts(&data));
    }

    let mut w = Writer::new(&cfg.output)?;
    w.json(
        "flow.json",
        cfg,
        FlowBody {
            oracle_mode: cfg.oracle.mode,
            critical_counts: counts,
            flow: &flow,
        },
    )?;
    for &p in &cfg.solver.degrees {
        for i in 0..cfg.solver.k {
            let mut s = String::from("# t t_lambda\n");
            for (t, v) in flow.track(p, i) {
                let _ = writeln!(s, "{} {}", fmt_f64(t), fmt_f64(v));
            }
            w.text(&format!("flow_p{p}_track{i}.dat"), &s)?;
        }
    }
    Ok(w.written)
}

#[derive(Serialize)]
struct MorseBody<'a> {
    counts: Vec<usize>,
    betti: Vec<usize>,
    slacks: Vec<f64>,
    pass: bool,
    euler_equality: bool,
    critical_points: &'a [CriticalPoint],
    warnings: &'a [String],
}

/// Critical-point counts against computed Betti numbers.
pub fn cmd_morse_check(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mesh = build_mesh(&cfg.model)?;
    let complex = build_complex(&mesh)?;
    let data = find_critical_points_with(&cfg.field, &mesh, cfg.solver.execution)?;
    let counts = morse_counts(&data);
    let betti = betti_with(&complex, &cfg.eigen_options())?;
    let report = morse_inequalities_check(&counts, &betti)?;
    let mut w = Writer::new(&cfg.output)?;
    w.json(
        "morse.json",
        cfg,
        MorseBody {
            counts,
            betti,
            slacks: report.slacks,
            pass: report.pass,
            euler_equality: report.euler_equality,
            critical_points: &data.points,
            warnings: &data.warnings,
        },
    )?;
    Ok(w.written)
}

#[derive(Serialize)]
struct OracleBody {
    mode: OracleMode,
    xi: Vec<f64>,
    spectra: BTreeMap<String, ModelSpectrum>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    brute_force: BTreeMap<String, ModelSpectrum>,
    /// Largest `|closed form − brute force|` over the listed values.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    max_deviation: BTreeMap<String, f64>,
}

/// Closed-form oscillator spectrum of one critical point, optionally next to
/// the finite-difference diagonalization.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mode = cfg.oracle.mode.ok_or_else(|| {
        CliError::Config("oracle.mode: the oracle command needs standard or paper".into())
    })?;
    let mut body = OracleBody {
        mode,
        xi: cfg.oracle.xi.clone(),
        spectra: BTreeMap::new(),
        brute_force: BTreeMap::new(),
        max_deviation: BTreeMap::new(),
    };
    for &p in &cfg.solver.degrees {
        let model = OscillatorModel::new(cfg.oracle.xi.clone(), p)?;
        let closed = oscillator_spectrum(&model, cfg.oracle.cutoff, mode)?;
        if cfg.oracle.brute_force {
            let r = cfg.oracle.half_width.unwrap_or_else(|| minimal_box(&model));
            let mut brute = brute_force_oscillator(&model, r, cfg.oracle.grid)?;
            if mode == OracleMode::Half {
                for e in &mut brute.entries {
                    e.0 /= 2.0;
                }
                brute.mode = mode;
            }
            let dev = closed
                .values()
                .iter()
                .zip(brute.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            body.max_deviation.insert(p.to_string(), dev);
            body.brute_force.insert(p.to_string(), brute);
        }
        body.spectra.insert(p.to_string(), closed);
    }
    let mut w = Writer::new(&cfg.output)?;
    w.json("oracle.json", cfg, body)?;
    Ok(w.written)
}

/// Leafwise traces and measured Morse inequalities on a Kronecker foliation.
pub fn cmd_foliation(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let f = &cfg.foliation;
    let model = build_kronecker(f.slope[0], f.slope[1], f.n_leaf, f.n_trans)?;
    let report: TraceReport = trace_report(
        &model,
        &cfg.field,
        &cfg.schedule.values,
        &f.phi,
        &cfg.eigen_options(),
        cfg.solver.execution,
    )?;
    let mut w = Writer::new(&cfg.output)?;
    w.json("foliation.json", cfg, &report)?;
    for (p, values) in &report.traces {
        let mut s = String::from("# t trace\n");
        for (t, v) in report.schedule.iter().zip(values) {
            let _ = writeln!(s, "{} {}", fmt_f64(*t), fmt_f64(*v));
        }
        w.text(&format!("trace_p{p}.dat"), &s)?;
    }
    Ok(w.written)
}
