//! Run configuration: an INI-style file of `[section]` headers and
//! `key = value` lines, overridden by command-line flags, resolved into a
//! typed [`RunConfig`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use witten_core::foliation::TestFunction;
use witten_core::morse::FieldKind;
use witten_core::oracle::OracleMode;
use witten_core::witten::geometric_schedule;
use witten_core::Execution;

use crate::error::{CliError, Result};

/// Every accepted key, with its documentation. Field parameters live under
/// `[field]` next to the catalog id.
pub const KEYS: &[(&str, &str)] = &[
    (
        "model.kind",
        "circle | torus | octahedron | mesh:<path to OFF file>",
    ),
    (
        "model.n",
        "vertices of the circle, or grid size of the torus along θ₁",
    ),
    ("model.n2", "torus grid size along θ₂ (default: model.n)"),
    ("model.radius", "circle radius (default 1)"),
    ("model.l1", "torus period along θ₁ (default 2π)"),
    ("model.l2", "torus period along θ₂ (default 2π)"),
    (
        "field.id",
        "catalog id: cos-theta, cos-k-theta, sum-cos, cos2-plus-cos, tilted, height, zero",
    ),
    ("field.k", "wave number of cos-k-theta"),
    ("field.eps", "tilt of the tilted field"),
    (
        "schedule.t",
        "single deformation parameter; overrides schedule.grid",
    ),
    (
        "schedule.grid",
        "geom:<start>:<end>:<count> or list:<t1>,<t2>,... (decreasing)",
    ),
    (
        "solver.degree",
        "form degree, comma list, or all (default 0; all for the oracle command)",
    ),
    ("solver.k", "number of eigenvalues per solve (default 8)"),
    ("solver.tol", "relative residual bound (default 1e-8)"),
    ("solver.seed", "seed of the eigensolver starting block"),
    (
        "solver.threads",
        "worker threads, 0 for all cores (default 0)",
    ),
    (
        "solver.execution",
        "parallel | sequential (default parallel)",
    ),
    ("oracle.mode", "standard | paper | none (default standard)"),
    (
        "oracle.cutoff",
        "largest oscillator eigenvalue listed (oracle command, default 6)",
    ),
    (
        "oracle.xi",
        "comma list of Hessian eigenvalues (oracle command, default 1)",
    ),
    (
        "oracle.box",
        "half-width of the finite-difference box (default from ξ)",
    ),
    (
        "oracle.grid",
        "grid points per axis of the finite-difference box, at least 200 (default 200)",
    ),
    (
        "oracle.brute-force",
        "true | false: also diagonalize the box operator (default true)",
    ),
    ("foliation.slope", "a/b with gcd(a,b) = 1 (default 1/1)"),
    ("foliation.n-leaf", "vertices per leaf (default 512)"),
    (
        "foliation.n-trans",
        "transverse quadrature points (default 64)",
    ),
    (
        "foliation.phi",
        "tent:<lo>:<peak>:<hi> | hat:<width> | plateau:<end>:<ramp> (default tent:0.5:2.5:4.5)",
    ),
    ("output.dir", "output directory (default witten-out)"),
];

pub fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Flat `section.key → value` map.
pub type Settings = BTreeMap<String, String>;

pub fn parse_ini(text: &str, path: &Path) -> Result<Settings> {
    let err =
        |line: usize, msg: String| CliError::Config(format!("{}:{}: {msg}", path.display(), line));
    let mut out = Settings::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(i + 1, format!("malformed section header `{line}`")))?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let sec = section
            .as_ref()
            .ok_or_else(|| err(i + 1, "key outside of any [section]".to_string()))?;
        let full = format!("{sec}.{}", key.trim());
        if !is_known(&full) {
            return Err(err(i + 1, format!("unknown key `{full}`")));
        }
        if out.insert(full.clone(), value.trim().to_string()).is_some() {
            return Err(err(i + 1, format!("duplicate key `{full}`")));
        }
    }
    Ok(out)
}

pub fn load_ini(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_ini(&text, path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Flow,
    MorseCheck,
    Oracle,
    Foliation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Circle {
        n: usize,
        radius: f64,
    },
    Torus {
        n1: usize,
        n2: usize,
        l1: f64,
        l2: f64,
    },
    Octahedron,
    Mesh {
        path: PathBuf,
    },
}

impl ModelSpec {
    pub fn dimension(&self) -> usize {
        match self {
            ModelSpec::Circle { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleSpec {
    pub spec: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSpec {
    pub degrees: Vec<usize>,
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    pub threads: usize,
    pub execution: Execution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSpec {
    /// `None` disables oracle attachment.
    pub mode: Option<OracleMode>,
    pub cutoff: f64,
    pub xi: Vec<f64>,
    pub half_width: Option<f64>,
    pub grid: usize,
    pub brute_force: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationSpec {
    pub slope: [i64; 2],
    pub n_leaf: usize,
    pub n_trans: usize,
    pub phi: TestFunction,
}

/// Fully resolved configuration; embedded verbatim in every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelSpec,
    pub field: FieldKind,
    pub schedule: ScheduleSpec,
    pub solver: SolverSpec,
    pub oracle: OracleSpec,
    pub foliation: FoliationSpec,
    pub output: PathBuf,
}

struct Lookup<'a>(&'a Settings);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(is_known(key), "{key}");
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("{key}: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| bad(key, format!("cannot parse `{p}`")))
        })
        .collect()
}

pub fn parse_schedule(key: &str, s: &str) -> Result<Vec<f64>> {
    let values = if let Some(rest) = s.strip_prefix("geom:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(
                key,
                format!("expected geom:<start>:<end>:<count>, got `{s}`"),
            ));
        }
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| bad(key, format!("cannot parse `{p}`")))
        };
        let n = parts[2]
            .parse::<usize>()
            .map_err(|_| bad(key, format!("cannot parse `{}`", parts[2])))?;
        if n == 0 {
            return Err(bad(key, "empty schedule"));
        }
        geometric_schedule(num(parts[0])?, num(parts[1])?, n).map_err(|e| bad(key, e))?
    } else if let Some(rest) = s.strip_prefix("list:") {
        parse_list(key, rest)?
    } else {
        return Err(bad(
            key,
            format!("expected geom:... or list:..., got `{s}`"),
        ));
    };
    if values.is_empty() {
        return Err(bad(key, "empty schedule"));
    }
    if values.iter().any(|t| !(*t > 0.0 && t.is_finite()))
        || values.windows(2).any(|w| !(w[0] > w[1]))
    {
        return Err(bad(
            key,
            "t values must be positive and strictly decreasing",
        ));
    }
    Ok(values)
}

fn parse_model(l: &Lookup) -> Result<ModelSpec> {
    let kind = l.raw("model.kind").unwrap_or("circle");
    let unused = |keys: &[&str]| -> Result<()> {
        match keys.iter().find(|k| l.raw(k).is_some()) {
            Some(k) => Err(bad(k, format!("not used by model `{kind}`"))),
            None => Ok(()),
        }
    };
    let spec = match kind {
        "circle" => {
            unused(&["model.n2", "model.l1", "model.l2"])?;
            ModelSpec::Circle {
                n: l.or("model.n", 8192)?,
                radius: l.or("model.radius", 1.0)?,
            }
        }
        "torus" => {
            unused(&["model.radius"])?;
            let n1 = l.or("model.n", 64)?;
            ModelSpec::Torus {
                n1,
                n2: l.or("model.n2", n1)?,
                l1: l.or("model.l1", 2.0 * PI)?,
                l2: l.or("model.l2", 2.0 * PI)?,
            }
        }
        "octahedron" => {
            unused(&[
                "model.n",
                "model.n2",
                "model.radius",
                "model.l1",
                "model.l2",
            ])?;
            ModelSpec::Octahedron
        }
        other => match other.strip_prefix("mesh:") {
            Some(path) if !path.is_empty() => {
                unused(&[
                    "model.n",
                    "model.n2",
                    "model.radius",
                    "model.l1",
                    "model.l2",
                ])?;
                ModelSpec::Mesh {
                    path: PathBuf::from(path),
                }
            }
            _ => return Err(bad("model.kind", format!("unknown model `{other}`"))),
        },
    };
    Ok(spec)
}

fn parse_field(l: &Lookup, model: &ModelSpec, command: Command) -> Result<FieldKind> {
    let default = match (command, model) {
        (Command::Foliation, _) | (_, ModelSpec::Circle { .. }) => "cos-theta",
        (_, ModelSpec::Torus { .. }) => "sum-cos",
        _ => "height",
    };
    let id = l.raw("field.id").unwrap_or(default);
    let mut params = BTreeMap::new();
    for key in ["field.k", "field.eps"] {
        if let Some(v) = l.parse::<f64>(key)? {
            params.insert(key["field.".len()..].to_string(), v);
        }
    }
    FieldKind::parse(id, &params).map_err(|e| bad("field", e))
}

fn parse_degrees(l: &Lookup, dim: usize, default: &str) -> Result<Vec<usize>> {
    let raw = l.raw("solver.degree").unwrap_or(default);
    let degrees: Vec<usize> = if raw == "all" {
        (0..=dim).collect()
    } else {
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| bad("solver.degree", format!("cannot parse `{p}`")))
            })
            .collect::<Result<_>>()?
    };
    if degrees.is_empty() || degrees.iter().any(|&p| p > dim) {
        return Err(bad(
            "solver.degree",
            format!("degrees must lie in 0..={dim}"),
        ));
    }
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("solver.degree", "degrees must be strictly increasing"));
    }
    Ok(degrees)
}

pub fn parse_phi(key: &str, s: &str) -> Result<TestFunction> {
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or_default();
    let args: Vec<f64> = parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| bad(key, format!("cannot parse `{p}`")))
        })
        .collect::<Result<_>>()?;
    let phi = match (kind, args.as_slice()) {
        ("tent", &[lo, peak, hi]) => TestFunction::Tent { lo, peak, hi },
        ("hat", &[width]) => TestFunction::Hat { width },
        ("plateau", &[end, ramp]) => TestFunction::Plateau { end, ramp },
        _ => return Err(bad(key, format!("unrecognized test function `{s}`"))),
    };
    phi.validate().map_err(|e| bad(key, e))?;
    Ok(phi)
}

fn parse_slope(s: &str) -> Result<[i64; 2]> {
    let (a, b) = s
        .split_once('/')
        .ok_or_else(|| bad("foliation.slope", format!("expected a/b, got `{s}`")))?;
    let num = |p: &str| {
        p.trim()
            .parse::<i64>()
            .map_err(|_| bad("foliation.slope", format!("cannot parse `{p}`")))
    };
    Ok([num(a)?, num(b)?])
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true or false, got `{s}`"))),
    }
}

impl RunConfig {
    pub fn resolve(command: Command, settings: &Settings) -> Result<Self> {
        if let Some(k) = settings.keys().find(|k| !is_known(k)) {
            return Err(CliError::Config(format!("unknown key `{k}`")));
        }
        let l = Lookup(settings);
        let model = parse_model(&l)?;
        let field = parse_field(&l, &model, command)?;
        let xi = parse_list("oracle.xi", l.raw("oracle.xi").unwrap_or("1"))?;
        if xi.is_empty() {
            return Err(bad("oracle.xi", "needs at least one value"));
        }
        let dim = match command {
            Command::Foliation => 1,
            Command::Oracle => xi.len(),
            _ => model.dimension(),
        };

        let schedule = match (l.parse::<f64>("schedule.t")?, l.raw("schedule.grid")) {
            (Some(t), _) => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(bad("schedule.t", "t must be positive"));
                }
                ScheduleSpec {
                    spec: format!("list:{t}"),
                    values: vec![t],
                }
            }
            (None, grid) => {
                let spec = grid.unwrap_or("geom:1.0:0.02:25").to_string();
                let values = parse_schedule("schedule.grid", &spec)?;
                ScheduleSpec { spec, values }
            }
        };

        let execution = match l.raw("solver.execution").unwrap_or("parallel") {
            "parallel" => Execution::Parallel,
            "sequential" => Execution::Sequential,
            other => {
                return Err(bad(
                    "solver.execution",
                    format!("unknown execution `{other}`"),
                ))
            }
        };
        let k: usize = l.or("solver.k", 8)?;
        let tol: f64 = l.or("solver.tol", 1e-8)?;
        if k == 0 {
            return Err(bad("solver.k", "k must be positive"));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(bad("solver.tol", "tol must lie in (0, 1)"));
        }
        let solver = SolverSpec {
            degrees: parse_degrees(
                &l,
                dim,
                if command == Command::Oracle {
                    "all"
                } else {
                    "0"
                },
            )?,
            k,
            tol,
            seed: l.or(
                "solver.seed",
                witten_core::eigen::EigenOptions::default().seed,
            )?,
            threads: l.or("solver.threads", 0)?,
            execution,
        };

        let mode = match l.raw("oracle.mode").unwrap_or("standard") {
            "none" => None,
            other => Some(OracleMode::parse(other).map_err(|e| bad("oracle.mode", e))?),
        };
        let oracle = OracleSpec {
            mode,
            cutoff: l.or("oracle.cutoff", 6.0)?,
            xi,
            half_width: l.parse("oracle.box")?,
            grid: l.or("oracle.grid", 200)?,
            brute_force: parse_bool(
                "oracle.brute-force",
                l.raw("oracle.brute-force").unwrap_or("true"),
            )?,
        };
        if !(oracle.cutoff > 0.0 && oracle.cutoff.is_finite()) {
            return Err(bad("oracle.cutoff", "cutoff must be finite and positive"));
        }

        let foliation = FoliationSpec {
            slope: parse_slope(l.raw("foliation.slope").unwrap_or("1/1"))?,
            n_leaf: l.or("foliation.n-leaf", 512)?,
            n_trans: l.or("foliation.n-trans", 64)?,
            phi: parse_phi(
                "foliation.phi",
                l.raw("foliation.phi").unwrap_or("tent:0.5:2.5:4.5"),
            )?,
        };

        Ok(RunConfig {
            command,
            model,
            field,
            schedule,
            solver,
            oracle,
            foliation,
            output: PathBuf::from(l.raw("output.dir").unwrap_or("witten-out")),
        })
    }

    pub fn eigen_options(&self) -> witten_core::eigen::EigenOptions {
        witten_core::eigen::EigenOptions {
            tol: self.solver.tol,
            seed: self.solver.seed,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn ini_sections_and_errors() {
        let p = Path::new("run.ini");
        let s = parse_ini(
            "# c\n[model]\nkind = torus\nn = 32\n\n[field]\nid=tilted\neps = 0.3\n",
            p,
        )
        .unwrap();
        assert_eq!(s["model.kind"], "torus");
        assert_eq!(s["field.eps"], "0.3");
        assert!(parse_ini("[model]\ncolour = red\n", p)
            .unwrap_err()
            .to_string()
            .contains("unknown key"));
        assert!(parse_ini("kind = torus\n", p).is_err());
        assert!(parse_ini("[model]\nn = 1\nn = 2\n", p).is_err());
        assert!(parse_ini("[model\n", p).is_err());
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(Command::Flow, &Settings::new()).unwrap();
        assert_eq!(
            c.model,
            ModelSpec::Circle {
                n: 8192,
                radius: 1.0
            }
        );
        assert_eq!(c.field, FieldKind::CosTheta);
        assert_eq!(c.schedule.values.len(), 25);
        assert_eq!(c.oracle.mode, Some(OracleMode::Standard));
        let c =
            RunConfig::resolve(Command::Spectrum, &settings(&[("model.kind", "torus")])).unwrap();
        assert_eq!(c.field, FieldKind::SumCos);
    }

    #[test]
    fn validation() {
        let err = |pairs: &[(&str, &str)]| {
            RunConfig::resolve(Command::Spectrum, &settings(pairs)).is_err()
        };
        assert!(err(&[("field.id", "tilted")]));
        assert!(err(&[("field.id", "cos-theta"), ("field.eps", "0.3")]));
        assert!(err(&[("schedule.grid", "list:")]));
        assert!(err(&[("schedule.grid", "geom:1:0.02:0")]));
        assert!(err(&[("schedule.grid", "list:0.1,0.5")]));
        assert!(err(&[("solver.degree", "2")]));
        assert!(err(&[("model.kind", "sphere")]));
        assert!(err(&[("model.l1", "3")]));
        assert!(err(&[("foliation.phi", "tent:3:2:1")]));
        assert!(err(&[("bogus.key", "1")]));
        let c = RunConfig::resolve(
            Command::Spectrum,
            &settings(&[
                ("model.kind", "torus"),
                ("solver.degree", "all"),
                ("schedule.grid", "list:0.5,0.1"),
            ]),
        )
        .unwrap();
        assert_eq!(c.solver.degrees, vec![0, 1, 2]);
        assert_eq!(c.schedule.values, vec![0.5, 0.1]);
        assert_eq!(parse_schedule("g", "geom:1:0.5:2").unwrap(), vec![1.0, 0.5]);
    }
}
