//! Declarative experiment files: one `[[experiment]]` table per run.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use flowibp::flow::{SdeSystem, TimeGrid, DEFAULT_STEPS_PER_UNIT};
use flowibp::geometry::ManifoldSpec;
use flowibp::linalg::{Vector, MAX_DIM};
use serde::Deserialize;
use toml::{Spanned, Value};

use crate::registry::Experiment;

/// Seed used when neither the table nor `FLOWIBP_SEED` provides one.
pub const DEFAULT_SEED: u64 = 7;
pub const SEED_ENV: &str = "FLOWIBP_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Parse,
    UnknownName,
    Range,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Parse => "parse error",
            DiagnosticKind::UnknownName => "unknown name",
            DiagnosticKind::Range => "out of range",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.kind, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// Cylindrical functional named in a config.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionalSpec {
    Coord { axis: usize, t: f64 },
    PairDot { t1: f64, t2: f64 },
    Const { c: f64, t: f64 },
    Bump { t: f64 },
}

impl FunctionalSpec {
    pub fn times(&self) -> Vec<f64> {
        match *self {
            FunctionalSpec::Coord { t, .. } | FunctionalSpec::Const { t, .. } | FunctionalSpec::Bump { t } => vec![t],
            FunctionalSpec::PairDot { t1, t2 } => vec![t1, t2],
        }
    }

    fn with_times(&self, ts: &[f64]) -> Self {
        match *self {
            FunctionalSpec::Coord { axis, .. } => FunctionalSpec::Coord { axis, t: ts[0] },
            FunctionalSpec::Const { c, .. } => FunctionalSpec::Const { c, t: ts[0] },
            FunctionalSpec::Bump { .. } => FunctionalSpec::Bump { t: ts[0] },
            FunctionalSpec::PairDot { .. } => FunctionalSpec::PairDot { t1: ts[0], t2: ts[1] },
        }
    }
}

impl FromStr for FunctionalSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (head, at) = s.split_once('@').ok_or_else(|| format!("functional {s:?} lacks @<time>"))?;
        let times: Vec<f64> = at
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad time {t:?} in {s:?}")))
            .collect::<Result<_, _>>()?;
        let one = || match times.as_slice() {
            [t] => Ok(*t),
            _ => Err(format!("{s:?} takes exactly one time")),
        };
        let (name, arg) = match head.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (head, None),
        };
        match (name, arg) {
            ("coord", Some(a)) => {
                let axis = a.parse().map_err(|_| format!("bad axis {a:?}"))?;
                Ok(FunctionalSpec::Coord { axis, t: one()? })
            }
            ("const", Some(a)) => {
                let c = a.parse().map_err(|_| format!("bad constant {a:?}"))?;
                Ok(FunctionalSpec::Const { c, t: one()? })
            }
            ("bump", None) => Ok(FunctionalSpec::Bump { t: one()? }),
            ("pairdot", None) => match times.as_slice() {
                [t1, t2] => Ok(FunctionalSpec::PairDot { t1: *t1, t2: *t2 }),
                _ => Err(format!("{s:?} takes exactly two times")),
            },
            _ => Err(format!("unknown functional {s:?}")),
        }
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalSpec::Coord { axis, t } => write!(f, "coord:{axis}@{t}"),
            FunctionalSpec::PairDot { t1, t2 } => write!(f, "pairdot@{t1},{t2}"),
            FunctionalSpec::Const { c, t } => write!(f, "const:{c}@{t}"),
            FunctionalSpec::Bump { t } => write!(f, "bump@{t}"),
        }
    }
}

/// Perturbation `h` named in a config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HSpec {
    Zero,
    /// `h_s = s u`
    Linear,
    /// `h_s = s² u`, sampled at grid nodes
    Quadratic,
    /// Occupation time of the hemisphere `<x, hemisphere> > 0`, times `u`
    Occupation,
}

impl FromStr for HSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "h:zero" => Ok(HSpec::Zero),
            "h:linear" => Ok(HSpec::Linear),
            "h:quadratic" => Ok(HSpec::Quadratic),
            "h:occupation" => Ok(HSpec::Occupation),
            _ => Err(format!("unknown h-process {s:?}")),
        }
    }
}

impl fmt::Display for HSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HSpec::Zero => "h:zero",
            HSpec::Linear => "h:linear",
            HSpec::Quadratic => "h:quadratic",
            HSpec::Occupation => "h:occupation",
        })
    }
}

/// Vector field process named in a config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSpec {
    Zero,
    Killing,
    Radial,
    GradZ,
}

impl FromStr for FieldSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hfield:zero" => Ok(FieldSpec::Zero),
            "hfield:killing" => Ok(FieldSpec::Killing),
            "hfield:radial" => Ok(FieldSpec::Radial),
            "hfield:gradz" => Ok(FieldSpec::GradZ),
            _ => Err(format!("unknown vector field process {s:?}")),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldSpec::Zero => "hfield:zero",
            FieldSpec::Killing => "hfield:killing",
            FieldSpec::Radial => "hfield:radial",
            FieldSpec::GradZ => "hfield:gradz",
        })
    }
}

/// Weight function `Ψ` for the weighted gradient estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsiSpec {
    One,
    /// `Ψ(s) = s`
    Linear,
    /// Indicator of `[a, b)`
    Indicator(f64, f64),
}

impl FromStr for PsiSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one" => Ok(PsiSpec::One),
            "linear" => Ok(PsiSpec::Linear),
            _ => {
                let rest = s.strip_prefix("indicator:").ok_or_else(|| format!("unknown weight {s:?}"))?;
                let (a, b) = rest.split_once(',').ok_or_else(|| format!("indicator needs a,b in {s:?}"))?;
                let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad bound {x:?}"));
                Ok(PsiSpec::Indicator(parse(a)?, parse(b)?))
            }
        }
    }
}

/// Member of the gradient estimator family named in a config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorSpec {
    Bismut,
    Thalmaier,
    Psi,
    CrnFd,
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bismut" => Ok(EstimatorSpec::Bismut),
            "thalmaier" => Ok(EstimatorSpec::Thalmaier),
            "psi" => Ok(EstimatorSpec::Psi),
            "crn_fd" => Ok(EstimatorSpec::CrnFd),
            _ => Err(format!("unknown estimator {s:?}")),
        }
    }
}

/// Which pairing of `girsanov_derivative` a row reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    Direct,
    Fd,
    FdVsDirect,
}

impl FromStr for DerivativeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(DerivativeMode::Direct),
            "fd" => Ok(DerivativeMode::Fd),
            "fd_vs_direct" => Ok(DerivativeMode::FdVsDirect),
            _ => Err(format!("unknown mode {s:?} (expected direct, fd or fd_vs_direct)")),
        }
    }
}

impl fmt::Display for DerivativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DerivativeMode::Direct => "direct",
            DerivativeMode::Fd => "fd",
            DerivativeMode::FdVsDirect => "fd_vs_direct",
        })
    }
}

/// A validated experiment. Times are already snapped onto the grid.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub label: String,
    /// Line of the table header in the config file.
    pub line: usize,
    pub manifold: ManifoldSpec<f64>,
    pub system_name: String,
    pub system: SdeSystem<f64>,
    pub functional: Option<FunctionalSpec>,
    pub h: Option<HSpec>,
    pub hfield: Option<FieldSpec>,
    pub x: Vector<f64>,
    pub v0: Option<Vector<f64>>,
    /// Direction of `h` in `T_x M`.
    pub u: Option<Vector<f64>>,
    pub hemisphere: Vector<f64>,
    pub axis: Vector<f64>,
    pub horizon: f64,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub width: Option<f64>,
    pub tau: f64,
    pub eps: f64,
    pub psi: Option<PsiSpec>,
    pub estimator: EstimatorSpec,
    pub compare: Option<EstimatorSpec>,
    pub mode: DerivativeMode,
    pub n_paths: u64,
    pub n_base_points: u64,
    pub steps_per_unit: usize,
    pub seed: u64,
    pub z_threshold: f64,
    pub expected: Option<f64>,
    pub tol_se: f64,
    pub tol_abs: Option<f64>,
    pub tol_rel: f64,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Grid with every time this experiment reads marked.
    pub fn grid(&self) -> TimeGrid<f64> {
        let mut marked = vec![self.horizon];
        if let Some(f) = &self.functional {
            marked.extend(f.times());
        }
        marked.extend(self.t);
        if let (Some(r), Some(w)) = (self.r, self.width) {
            marked.push(r);
            marked.push(r + w);
        }
        TimeGrid::uniform(self.horizon, self.steps_per_unit, &marked).expect("validated grid").0
    }
}

/// Parsed config file.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    pub experiments: Vec<ExperimentConfig>,
    pub output: Option<String>,
    pub format: Option<OutputFormat>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    experiment: Vec<Spanned<BTreeMap<String, Spanned<Value>>>>,
    output: Option<Spanned<String>>,
    format: Option<Spanned<String>>,
}

const KEYS: &[&str] = &[
    "experiment",
    "label",
    "manifold",
    "system",
    "functional",
    "h",
    "hfield",
    "x",
    "v0",
    "u",
    "hemisphere",
    "axis",
    "T",
    "t",
    "r",
    "width",
    "tau",
    "eps",
    "psi",
    "estimator",
    "compare",
    "mode",
    "n_paths",
    "n_base_points",
    "steps_per_unit",
    "seed",
    "z_threshold",
    "expected",
    "tol_se",
    "tol_abs",
    "tol_rel",
];

/// Line number (1-based) of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a config document. The seed default comes from
/// `default_seed` (normally [`DEFAULT_SEED`] or `FLOWIBP_SEED`).
pub fn parse_config(text: &str, default_seed: u64) -> Result<ConfigFile, Vec<Diagnostic>> {
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        vec![Diagnostic { line, kind: DiagnosticKind::Parse, message: e.message().trim().to_string() }]
    })?;
    let mut diags = Vec::new();
    let mut file = ConfigFile::default();
    if let Some(out) = raw.output {
        file.output = Some(out.into_inner());
    }
    if let Some(fmt) = raw.format {
        match fmt.get_ref().parse() {
            Ok(f) => file.format = Some(f),
            Err(message) => diags.push(Diagnostic {
                line: line_of(text, fmt.span().start),
                kind: DiagnosticKind::UnknownName,
                message,
            }),
        }
    }
    for table in raw.experiment {
        let line = line_of(text, table.span().start);
        let mut reader = TableReader { text, line, table: table.into_inner(), diags: &mut diags };
        if let Some(cfg) = reader.experiment(default_seed) {
            file.experiments.push(cfg);
        }
    }
    if diags.is_empty() {
        Ok(file)
    } else {
        diags.sort_by_key(|d| d.line);
        Err(diags)
    }
}

struct TableReader<'a> {
    text: &'a str,
    line: usize,
    table: BTreeMap<String, Spanned<Value>>,
    diags: &'a mut Vec<Diagnostic>,
}

impl TableReader<'_> {
    fn line_of_key(&self, key: &str) -> usize {
        self.table.get(key).map(|v| line_of(self.text, v.span().start)).unwrap_or(self.line)
    }

    fn report(&mut self, key: &str, kind: DiagnosticKind, message: String) {
        let line = self.line_of_key(key);
        self.diags.push(Diagnostic { line, kind, message });
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                let msg = format!("{key} must be a string, got {}", other.type_str());
                self.report(key, DiagnosticKind::Parse, msg);
                None
            }
        }
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str) -> Option<T> {
        let s = self.string(key)?;
        match s.parse() {
            Ok(v) => Some(v),
            Err(msg) => {
                self.report(key, DiagnosticKind::UnknownName, msg);
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => None,
            Some(Value::Float(x)) => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(other) => {
                let msg = format!("{key} must be a number, got {}", other.type_str());
                self.report(key, DiagnosticKind::Parse, msg);
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<u64> {
        match self.table.get(key).map(|v| v.get_ref()) {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(Value::Integer(i)) => {
                let msg = format!("{key} must be non-negative, got {i}");
                self.report(key, DiagnosticKind::Range, msg);
                None
            }
            Some(other) => {
                let msg = format!("{key} must be an integer, got {}", other.type_str());
                self.report(key, DiagnosticKind::Parse, msg);
                None
            }
        }
    }

    fn vector(&mut self, key: &str) -> Option<Vector<f64>> {
        let arr = match self.table.get(key).map(|v| v.get_ref()) {
            None => return None,
            Some(Value::Array(a)) => a.clone(),
            Some(other) => {
                let msg = format!("{key} must be an array of numbers, got {}", other.type_str());
                self.report(key, DiagnosticKind::Parse, msg);
                return None;
            }
        };
        let xs: Option<Vec<f64>> = arr
            .iter()
            .map(|v| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect();
        match xs {
            Some(xs) if !xs.is_empty() && xs.len() <= MAX_DIM => Some(Vector::from_slice(&xs)),
            Some(xs) => {
                let msg = format!("{key} must have 1..={MAX_DIM} entries, got {}", xs.len());
                self.report(key, DiagnosticKind::Range, msg);
                None
            }
            None => {
                self.report(key, DiagnosticKind::Parse, format!("{key} must contain only numbers"));
                None
            }
        }
    }

    fn range(&mut self, key: &str, ok: bool, message: impl FnOnce() -> String) -> bool {
        if !ok {
            let msg = message();
            self.report(key, DiagnosticKind::Range, msg);
        }
        ok
    }

    fn require<T>(&mut self, key: &str, value: Option<T>, what: &str) -> Option<T> {
        if value.is_none() && !self.table.contains_key(key) {
            let line = self.line;
            self.diags.push(Diagnostic {
                line,
                kind: DiagnosticKind::Parse,
                message: format!("{what} requires {key}"),
            });
        }
        value
    }

    fn experiment(&mut self, default_seed: u64) -> Option<ExperimentConfig> {
        let before = self.diags.len();
        let unknown: Vec<String> = self.table.keys().filter(|k| !KEYS.contains(&k.as_str())).cloned().collect();
        for key in unknown {
            self.report(&key, DiagnosticKind::UnknownName, format!("unknown key {key:?}"));
        }

        let experiment: Option<Experiment> = self.parsed("experiment");
        let experiment = self.require("experiment", experiment, "every table")?;
        let what = experiment.name();
        let system_name = self.string("system");
        let system_name = self.require("system", system_name, what)?;
        let system = match system_name.parse::<SdeSystem<f64>>() {
            Ok(s) => s,
            Err(e) => {
                self.report("system", DiagnosticKind::UnknownName, e.to_string());
                return None;
            }
        };
        let manifold = match self.string("manifold") {
            None => system.manifold,
            Some(s) => match s.parse::<ManifoldSpec<f64>>() {
                Ok(m) if m.kind == system.manifold.kind => m,
                Ok(m) => {
                    let msg = format!("manifold {m} does not match system {system_name}");
                    self.report("manifold", DiagnosticKind::Range, msg);
                    system.manifold
                }
                Err(e) => {
                    self.report("manifold", DiagnosticKind::UnknownName, e.to_string());
                    system.manifold
                }
            },
        };
        let dim = manifold.ambient_dim();

        let functional: Option<FunctionalSpec> = self.parsed("functional");
        let h: Option<HSpec> = self.parsed("h");
        let hfield: Option<FieldSpec> = self.parsed("hfield");
        let psi: Option<PsiSpec> = self.parsed("psi");
        let estimator: EstimatorSpec = self.parsed("estimator").unwrap_or(EstimatorSpec::Bismut);
        let compare: Option<EstimatorSpec> = self.parsed("compare");
        let mode: DerivativeMode = self.parsed("mode").unwrap_or(DerivativeMode::Direct);
        let label = self.string("label").unwrap_or_else(|| match experiment {
            Experiment::GirsanovDerivative => format!("{what}:{mode}"),
            _ => what.to_string(),
        });

        let needs = experiment.needs();
        let functional = if needs.functional { self.require("functional", functional, what) } else { functional };
        let h = if needs.h { self.require("h", h, what) } else { h };
        let hfield = if needs.hfield { self.require("hfield", hfield, what) } else { hfield };
        if needs.deterministic_h && matches!(h, Some(HSpec::Occupation)) {
            self.report("h", DiagnosticKind::Range, format!("{what} needs a deterministic h"));
        }

        let check_dim = |reader: &mut Self, key: &str, v: Option<Vector<f64>>| -> Option<Vector<f64>> {
            match v {
                Some(v) if v.dim() != dim => {
                    reader.report(
                        key,
                        DiagnosticKind::Range,
                        format!("{key} has {} entries, manifold needs {dim}", v.dim()),
                    );
                    None
                }
                other => other,
            }
        };
        let x = self.vector("x");
        let x = check_dim(self, "x", x);
        let x = match x {
            Some(x) => {
                if manifold.constraint_defect(&x) > 1e-9 {
                    self.report("x", DiagnosticKind::Range, format!("x = {x:?} is not on {manifold}"));
                }
                x
            }
            None => default_point(&manifold),
        };
        let tangent = |reader: &mut Self, key: &str, v: Option<Vector<f64>>| -> Option<Vector<f64>> {
            let v = check_dim(reader, key, v)?;
            let p = manifold.point(x).ok()?;
            if (manifold.tangent_project(&p, &v).coords - v).max_abs() > 1e-9 {
                reader.report(key, DiagnosticKind::Range, format!("{key} is not tangent at x"));
            }
            Some(v)
        };
        let v0 = self.vector("v0");
        let v0 = tangent(self, "v0", v0);
        let v0 = if needs.v0 { self.require("v0", v0, what) } else { v0 };
        let u = self.vector("u");
        let u = tangent(self, "u", u);
        let u = if matches!(h, Some(HSpec::Linear | HSpec::Quadratic | HSpec::Occupation)) {
            self.require("u", u, "this h-process")
        } else {
            u
        };
        let hemisphere = self.vector("hemisphere");
        let hemisphere =
            check_dim(self, "hemisphere", hemisphere).unwrap_or_else(|| Vector::basis(dim, dim.min(2) - 1));
        let axis = self.vector("axis");
        let axis = check_dim(self, "axis", axis).unwrap_or_else(|| Vector::basis(dim, dim - 1));

        let horizon = self.number("T");
        let horizon = horizon.or_else(|| functional.as_ref().and_then(|f| f.times().into_iter().reduce(f64::max)));
        let horizon = self.require("T", horizon, what)?;
        self.range("T", horizon > 0.0 && horizon <= 100.0, || format!("T = {horizon} must lie in (0, 100]"));
        let t = self.number("t");
        let t = if needs.t { self.require("t", t, what) } else { t };
        let r = self.number("r");
        let width = self.number("width");
        let (r, width) =
            if needs.window { (self.require("r", r, what), self.require("width", width, what)) } else { (r, width) };
        let tau = self.number("tau").unwrap_or(0.0);
        self.range("tau", tau.abs() <= needs.max_tau, || format!("|tau| = {} exceeds {}", tau.abs(), needs.max_tau));
        let eps = self.number("eps").unwrap_or(0.02);
        self.range("eps", (1e-4..=1e-1).contains(&eps), || format!("eps = {eps} must lie in [1e-4, 1e-1]"));
        let n_paths = self.count("n_paths").unwrap_or(100_000);
        self.range("n_paths", n_paths >= 2, || format!("n_paths = {n_paths} must be at least 2"));
        let n_base_points = self.count("n_base_points").unwrap_or(256);
        if needs.base_points {
            self.range("n_base_points", n_base_points >= 2, || "n_base_points must be at least 2".into());
        }
        let spu = self.count("steps_per_unit").unwrap_or(DEFAULT_STEPS_PER_UNIT as u64) as usize;
        self.range("steps_per_unit", (1..=1 << 16).contains(&spu), || format!("steps_per_unit = {spu} out of range"));
        let seed = self.count("seed").unwrap_or(default_seed);
        let z_threshold = self.number("z_threshold").unwrap_or(4.0);
        self.range("z_threshold", z_threshold > 0.0, || "z_threshold must be positive".into());
        let expected = self.number("expected");
        let tol_se = self.number("tol_se").unwrap_or(3.0);
        let tol_abs = self.number("tol_abs");
        let tol_rel = self.number("tol_rel").unwrap_or(0.0);
        for (key, v) in [("tol_se", Some(tol_se)), ("tol_abs", tol_abs), ("tol_rel", Some(tol_rel))] {
            if let Some(v) = v {
                self.range(key, v >= 0.0, || format!("{key} must be non-negative"));
            }
        }
        if needs.compact && !manifold.is_compact() {
            self.report("system", DiagnosticKind::Range, format!("{what} needs a compact manifold"));
        }
        if needs.gradient_system && !system.is_gradient_system() {
            self.report("system", DiagnosticKind::Range, format!("{system_name} is not a gradient system"));
        }
        if experiment == Experiment::GradientConsistency && compare.is_none() {
            self.require::<()>("compare", None, what);
        }
        let uses = |e: EstimatorSpec| estimator == e || compare == Some(e) || experiment.fixed_estimator() == Some(e);
        if uses(EstimatorSpec::Thalmaier) && (r.is_none() || width.is_none()) {
            self.require::<()>(if r.is_none() { "r" } else { "width" }, None, "the Thalmaier estimator");
        }
        if uses(EstimatorSpec::Psi) && psi.is_none() {
            self.require::<()>("psi", None, "the weighted estimator");
        }
        if let Some(f) = &functional {
            if let FunctionalSpec::Coord { axis, .. } = f {
                self.range("functional", *axis < dim, || format!("axis {axis} out of range for dimension {dim}"));
            }
            if experiment.gradient_like() && f.times().len() != 1 {
                self.report("functional", DiagnosticKind::Range, format!("{what} needs a one-slot function"));
            }
        }
        if self.diags.len() > before {
            return None;
        }

        // Snap every time onto the grid.
        let mut warnings = Vec::new();
        let mut marked = vec![horizon];
        let ftimes = functional.as_ref().map(|f| f.times()).unwrap_or_default();
        marked.extend(&ftimes);
        marked.extend(t);
        if let (Some(r), Some(w)) = (r, width) {
            marked.push(r);
            marked.push(r + w);
        }
        let inside = |time: f64| time > 0.0 && time <= horizon + 1e-12;
        for &time in &ftimes {
            self.range("functional", inside(time), || format!("time {time} lies outside (0, T = {horizon}]"));
        }
        if let FunctionalSpec::PairDot { t1, t2 } = functional.clone().unwrap_or(FunctionalSpec::Bump { t: 1.0 }) {
            self.range("functional", t1 < t2, || format!("pairdot times must increase, got {t1}, {t2}"));
        }
        if let Some(t) = t {
            self.range("t", inside(t), || format!("t = {t} lies outside (0, T = {horizon}]"));
        }
        if let (Some(r), Some(w)) = (r, width) {
            if !(r >= 0.0 && w > 0.0 && r + w <= horizon + 1e-12) {
                self.report("r", DiagnosticKind::Range, format!("window [{r}, {}] not inside [0, {horizon}]", r + w));
            }
        }
        if self.diags.len() > before {
            return None;
        }
        for time in &mut marked {
            *time = time.min(horizon);
        }
        let (grid, snaps) = match TimeGrid::uniform(horizon, spu, &marked) {
            Ok(g) => g,
            Err(e) => {
                self.report("T", DiagnosticKind::Range, e.to_string());
                return None;
            }
        };
        let snapped: Vec<f64> = snaps.iter().map(|s| grid.times()[s.index]).collect();
        for s in &snaps {
            if s.distance() > 1e-12 {
                warnings.push(format!(
                    "line {}: time {} snapped to grid node {} (distance {:.3e})",
                    self.line,
                    s.requested,
                    grid.times()[s.index],
                    s.distance()
                ));
            }
        }
        let horizon = snapped[0];
        let mut rest = snapped[1..].iter().copied();
        let functional = functional.map(|f| f.with_times(&rest.by_ref().take(ftimes.len()).collect::<Vec<_>>()));
        let t = t.map(|_| rest.next().unwrap());
        let (r, width) = match (r, width) {
            (Some(_), Some(_)) => {
                let (a, b) = (rest.next().unwrap(), rest.next().unwrap());
                (Some(a), Some(b - a))
            }
            other => other,
        };

        Some(ExperimentConfig {
            experiment,
            label,
            line: self.line,
            manifold,
            system_name,
            system,
            functional,
            h,
            hfield,
            x,
            v0,
            u,
            hemisphere,
            axis,
            horizon,
            t,
            r,
            width,
            tau,
            eps,
            psi,
            estimator,
            compare,
            mode,
            n_paths,
            n_base_points,
            steps_per_unit: spu,
            seed,
            z_threshold,
            expected,
            tol_se,
            tol_abs,
            tol_rel,
            warnings,
        })
    }
}

/// Origin in Euclidean space, `(1, 0)` on the circle, `(1, 0, 0)` on the sphere.
fn default_point(m: &ManifoldSpec<f64>) -> Vector<f64> {
    if m.is_compact() {
        Vector::basis(m.ambient_dim(), 0)
    } else {
        Vector::zeros(m.ambient_dim())
    }
}
