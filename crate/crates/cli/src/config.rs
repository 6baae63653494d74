//! Experiment configuration: a TOML document with the sections `model`,
//! `prep`, `sweep`, `numerics` and `output`. See the README for the grammar.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use toml::{Table, Value};

use mflab_core::flow::{FlowConfig, Integrator};
use mflab_core::fock::TruncationPolicy;
use mflab_core::linalg::{self, CMat};
use mflab_core::liouville::MeasureSpec;
use mflab_core::many_body::ModelSpec;
use mflab_core::wigner::StatePreparation;

/// A rejected field, addressed by its dotted path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Convergence,
    Duhamel,
    Liouville,
    AlgebraAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        Self::Convergence,
        Self::Duhamel,
        Self::Liouville,
        Self::AlgebraAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::Duhamel => "duhamel",
            Self::Liouville => "liouville",
            Self::AlgebraAudit => "algebra-audit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prep {
    Hermite(Vec<C64>),
    Superposition(Vec<(C64, Vec<C64>)>),
    Atomic(Vec<(f64, Vec<C64>)>),
    GaussianOnSphere { center: Vec<C64>, spread: f64, samples: usize },
}

impl Prep {
    pub fn name(&self) -> &'static str {
        match self {
            Prep::Hermite(_) => "hermite",
            Prep::Superposition(_) => "superposition",
            Prep::Atomic(_) => "atomic",
            Prep::GaussianOnSphere { .. } => "gaussian-on-sphere",
        }
    }

    /// Many-body preparation, when the kind has one.
    pub fn state(&self) -> Option<StatePreparation> {
        match self {
            Prep::Hermite(z) => Some(StatePreparation::Hermite(z.clone())),
            Prep::Superposition(t) => Some(StatePreparation::Superposition(t.clone())),
            _ => None,
        }
    }

    /// Initial classical measure: the limit atoms of a many-body preparation
    /// or the configured measure.
    pub fn measure(&self) -> mflab_core::Result<MeasureSpec> {
        Ok(match self {
            Prep::Hermite(_) | Prep::Superposition(_) => {
                let atoms = self.state().expect("many-body prep").classical_atoms()?;
                if atoms.len() == 1 {
                    MeasureSpec::Dirac(atoms[0].1.clone())
                } else {
                    MeasureSpec::Atomic(atoms)
                }
            }
            Prep::Atomic(a) => MeasureSpec::Atomic(a.clone()),
            Prep::GaussianOnSphere { center, spread, samples } => MeasureSpec::GaussianOnSphere {
                center: center.clone(),
                spread: *spread,
                m: *samples,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Probes {
    Random { count: usize, max_norm: f64 },
    Explicit(Vec<Vec<C64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub n_list: Vec<usize>,
    pub times: Vec<f64>,
    pub probes: Probes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleSettings {
    pub steps: usize,
    pub radius: f64,
    /// Time window; `None` means `[0.1 T, 0.9 T]` for the horizon `T`.
    pub window: Option<(f64, f64)>,
    /// Offset of the test-function center along the initial velocity.
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub seed: u64,
    pub flow: FlowConfig,
    pub truncation: TruncationPolicy,
    pub simpson_nodes: usize,
    pub liouville: LiouvilleSettings,
    pub audit_cases: usize,
    pub audit_n_max: usize,
    pub a_grid: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json-lines" | "jsonl" => Some(Format::JsonLines),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
    pub prefix: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub prep: Prep,
    pub sweep: Sweep,
    pub numerics: Numerics,
    pub output: Output,
}

impl ExperimentConfig {
    /// Checks that apply only to one experiment kind.
    pub fn validate_for(&self, kind: ExperimentKind) -> Vec<FieldError> {
        let mut errors = Vec::new();
        let mut err = |path: &str, message: String| errors.push(FieldError { path: path.into(), message });
        match kind {
            ExperimentKind::Convergence | ExperimentKind::Duhamel => {
                if self.prep.state().is_none() {
                    err(
                        "prep.kind",
                        format!("'{}' has no many-body state; use hermite or superposition", self.prep.name()),
                    );
                }
                if kind == ExperimentKind::Duhamel && !self.sweep.times.iter().any(|&t| t > 0.0) {
                    err("sweep.times", "needs at least one positive time".into());
                }
            }
            ExperimentKind::Liouville => {
                let horizon = self.horizon();
                if !(horizon > 0.0) {
                    err("sweep.times", "needs a positive horizon".into());
                }
                if let Some((t0, t1)) = self.numerics.liouville.window {
                    if t0 < 0.0 || t1 > horizon {
                        err(
                            "numerics.liouville_window",
                            format!("window [{t0}, {t1}] is not covered by the time grid [0, {horizon}]"),
                        );
                    }
                }
            }
            ExperimentKind::AlgebraAudit => {}
        }
        errors
    }

    pub fn horizon(&self) -> f64 {
        self.sweep.times.iter().copied().fold(0.0, f64::max)
    }
}

const SECTIONS: [&str; 5] = ["model", "prep", "sweep", "numerics", "output"];

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: String, message: impl Into<String>) {
        self.0.push(FieldError { path, message: message.into() });
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        _ => None,
    }
}

fn complex(v: &Value) -> Option<C64> {
    match v {
        Value::Array(a) if a.len() == 2 => Some(C64::new(number(&a[0])?, number(&a[1])?)),
        other => number(other).map(|x| C64::new(x, 0.0)),
    }
}

fn complex_vec(v: &Value) -> Option<Vec<C64>> {
    v.as_array()?.iter().map(complex).collect()
}

fn matrix(v: &Value) -> Option<CMat> {
    let rows: Vec<Vec<C64>> = v.as_array()?.iter().map(complex_vec).collect::<Option<_>>()?;
    let r = rows.len();
    let cdim = rows.first().map(|x| x.len()).unwrap_or(0);
    if r == 0 || rows.iter().any(|x| x.len() != cdim) {
        return None;
    }
    Some(CMat::from_fn(r, cdim, |i, j| rows[i][j]))
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, errors: &mut Errors) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(name.into(), "must be a table");
                None
            }
        };
        Self { name, table, used: BTreeSet::new() }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn get<T>(
        &mut self,
        key: &'static str,
        what: &str,
        errors: &mut Errors,
        f: impl FnOnce(&Value) -> Option<T>,
    ) -> Option<T> {
        let v = self.raw(key)?;
        let out = f(v);
        if out.is_none() {
            errors.push(self.path(key), format!("expected {what}"));
        }
        out
    }

    fn f64(&mut self, key: &'static str, errors: &mut Errors) -> Option<f64> {
        self.get(key, "a number", errors, number)
    }

    fn usize(&mut self, key: &'static str, errors: &mut Errors) -> Option<usize> {
        self.get(key, "a non-negative integer", errors, |v| {
            v.as_integer().and_then(|i| usize::try_from(i).ok())
        })
    }

    fn string(&mut self, key: &'static str, errors: &mut Errors) -> Option<&'a str> {
        let v = self.raw(key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                errors.push(self.path(key), "expected a string");
                None
            }
        }
    }

    fn numbers(&mut self, key: &'static str, errors: &mut Errors) -> Option<Vec<f64>> {
        self.get(key, "an array of numbers", errors, |v| {
            v.as_array()?.iter().map(number).collect()
        })
    }

    fn complexes(&mut self, key: &'static str, errors: &mut Errors) -> Option<Vec<C64>> {
        self.get(key, "an array of complex entries (number or [re, im])", errors, complex_vec)
    }

    fn matrix(&mut self, key: &'static str, errors: &mut Errors) -> Option<CMat> {
        self.get(key, "a rectangular array of rows of complex entries", errors, matrix)
    }

    fn require<T>(&self, key: &str, v: Option<T>, errors: &mut Errors) -> Option<T> {
        if v.is_none() && !self.table.is_some_and(|t| t.contains_key(key)) {
            errors.push(self.path(key), "is required");
        }
        v
    }

    fn finish(self, errors: &mut Errors) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.used.contains(key.as_str()) {
                    errors.push(format!("{}.{}", self.name, key), "unknown key");
                }
            }
        }
    }
}

/// Parses and validates a configuration, collecting every field error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<FieldError>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        vec![FieldError {
            path: "<document>".into(),
            message: e.message().to_string(),
        }]
    })?;
    let mut errors = Errors(Vec::new());
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errors.push(key.clone(), "unknown section");
        }
    }
    let model = parse_model(&root, &mut errors);
    let d = model.as_ref().map(|m| m.d());
    let prep = parse_prep(&root, d, &mut errors);
    let sweep = parse_sweep(&root, d, &mut errors);
    let numerics = parse_numerics(&root, &mut errors);
    let output = parse_output(&root, &mut errors);
    match (model, prep, sweep, numerics, output) {
        (Some(model), Some(prep), Some(sweep), Some(numerics), Some(output)) if errors.0.is_empty() => {
            Ok(ExperimentConfig { model, prep, sweep, numerics, output })
        }
        _ => {
            if errors.0.is_empty() {
                errors.push("<document>".into(), "incomplete configuration");
            }
            Err(errors.0)
        }
    }
}

fn parse_model(root: &Table, errors: &mut Errors) -> Option<ModelSpec> {
    let mut s = Section::new(root, "model", errors);
    if s.table.is_none() && root.get("model").is_none() {
        errors.push("model".into(), "section is required");
        return None;
    }
    let preset = s.string("preset", errors);
    let preset = s.require("preset", preset, errors);
    let mut built: Option<mflab_core::Result<ModelSpec>> = None;
    match preset {
        Some("kerr1") => {
            let omega = s.f64("omega", errors).unwrap_or(1.0);
            let g = s.f64("g", errors).unwrap_or(1.0);
            built = Some(ModelSpec::kerr1(omega, g));
        }
        Some("kerr") => {
            let omegas = s.numbers("omegas", errors);
            let omegas = s.require("omegas", omegas, errors);
            let g = s.f64("g", errors).unwrap_or(1.0);
            if let Some(o) = omegas {
                if o.is_empty() || o.len() > 3 {
                    errors.push("model.omegas".into(), "needs between 1 and 3 modes");
                } else {
                    built = Some(ModelSpec::kerr(&o, g));
                }
            }
        }
        Some("lattice-delta") => {
            let d = s.usize("d", errors).unwrap_or(2);
            let trap = s.f64("trap", errors).unwrap_or(0.5);
            let kappa = s.f64("kappa", errors).unwrap_or(1.0);
            built = Some(ModelSpec::lattice_delta(d, trap, kappa));
        }
        Some("lattice-hartree") => {
            let d = s.usize("d", errors).unwrap_or(3);
            let kappa = s.f64("kappa", errors).unwrap_or(1.0);
            let width = s.f64("width", errors).unwrap_or(1.0);
            built = Some(ModelSpec::lattice_hartree(d, kappa, width));
        }
        Some("inline") => {
            let d = s.usize("d", errors);
            let d = s.require("d", d, errors);
            let a = s.matrix("a", errors);
            let a = s.require("a", a, errors);
            let q = s.matrix("q", errors);
            let q = s.require("q", q, errors);
            if let Some(d) = d {
                let d2 = d * (d + 1) / 2;
                let mut ok = true;
                if let Some(a) = &a {
                    if a.nrows() != d || a.ncols() != d {
                        errors.push("model.a".into(), format!("must be {d}x{d}, got {}x{}", a.nrows(), a.ncols()));
                        ok = false;
                    } else if linalg::hermitian_residual(a) > linalg::HERMITIAN_TOL {
                        errors.push("model.a".into(), "is not Hermitian");
                        ok = false;
                    }
                }
                if let Some(q) = &q {
                    if q.nrows() != d2 || q.ncols() != d2 {
                        errors.push(
                            "model.q".into(),
                            format!("must be {d2}x{d2} (sector-2 coordinates), got {}x{}", q.nrows(), q.ncols()),
                        );
                        ok = false;
                    } else if linalg::hermitian_residual(q) > linalg::HERMITIAN_TOL {
                        errors.push("model.q".into(), "is not Hermitian");
                        ok = false;
                    }
                }
                if let (true, Some(a), Some(q)) = (ok, a, q) {
                    built = Some(ModelSpec::new(a, q, "inline"));
                }
            }
        }
        Some(other) => errors.push(
            "model.preset".into(),
            format!("unknown preset '{other}' (kerr1, kerr, lattice-delta, lattice-hartree, inline)"),
        ),
        None => {}
    }
    s.finish(errors);
    match built? {
        Ok(m) => Some(m),
        Err(e) => {
            errors.push("model".into(), e.to_string());
            None
        }
    }
}

fn check_len(path: &str, v: &[C64], d: Option<usize>, errors: &mut Errors) {
    if let Some(d) = d {
        if v.len() != d {
            errors.push(path.into(), format!("has length {}, model has d = {d}", v.len()));
        }
    }
}

fn parse_prep(root: &Table, d: Option<usize>, errors: &mut Errors) -> Option<Prep> {
    let mut s = Section::new(root, "prep", errors);
    if root.get("prep").is_none() {
        errors.push("prep".into(), "section is required");
        return None;
    }
    let kind = s.string("kind", errors);
    let kind = s.require("kind", kind, errors);
    let prep = match kind {
        Some("hermite") => {
            let z = s.complexes("z", errors);
            s.require("z", z, errors).map(|z| {
                check_len("prep.z", &z, d, errors);
                Prep::Hermite(z)
            })
        }
        Some("superposition") | Some("atomic") => {
            let is_sup = kind == Some("superposition");
            let key = if is_sup { "terms" } else { "atoms" };
            let raw = s.raw(key);
            let Some(Value::Array(items)) = raw else {
                errors.push(s.path(key), "expected an array of tables {weight, z}");
                s.finish(errors);
                return None;
            };
            let mut sup = Vec::new();
            let mut atoms = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("prep.{key}[{i}]");
                let Some(t) = item.as_table() else {
                    errors.push(path, "expected a table {weight, z}");
                    continue;
                };
                for k in t.keys() {
                    if k != "weight" && k != "z" {
                        errors.push(format!("{path}.{k}"), "unknown key");
                    }
                }
                let z = t.get("z").and_then(complex_vec);
                let Some(z) = z else {
                    errors.push(format!("{path}.z"), "expected an array of complex entries");
                    continue;
                };
                check_len(&format!("{path}.z"), &z, d, errors);
                if is_sup {
                    match t.get("weight").and_then(complex) {
                        Some(w) => sup.push((w, z)),
                        None => errors.push(format!("{path}.weight"), "expected a complex amplitude"),
                    }
                } else {
                    match t.get("weight").and_then(number) {
                        Some(w) if w > 0.0 => atoms.push((w, z)),
                        _ => errors.push(format!("{path}.weight"), "expected a positive weight"),
                    }
                }
            }
            if is_sup {
                if sup.is_empty() {
                    errors.push("prep.terms".into(), "needs at least one term");
                }
                Some(Prep::Superposition(sup))
            } else {
                let total: f64 = atoms.iter().map(|a| a.0).sum();
                if atoms.is_empty() || (total - 1.0).abs() > 1e-12 {
                    errors.push("prep.atoms".into(), format!("weights must sum to 1, got {total}"));
                }
                Some(Prep::Atomic(atoms))
            }
        }
        Some("gaussian-on-sphere") => {
            let center = s.complexes("center", errors);
            let center = s.require("center", center, errors);
            let spread = s.f64("spread", errors).unwrap_or(0.05);
            let samples = s.usize("samples", errors).unwrap_or(1000);
            if samples == 0 {
                errors.push("prep.samples".into(), "must be >= 1");
            }
            if !(spread >= 0.0) {
                errors.push("prep.spread".into(), "must be non-negative");
            }
            center.map(|center| {
                check_len("prep.center", &center, d, errors);
                Prep::GaussianOnSphere { center, spread, samples }
            })
        }
        Some(other) => {
            errors.push(
                "prep.kind".into(),
                format!("unknown kind '{other}' (hermite, superposition, atomic, gaussian-on-sphere)"),
            );
            None
        }
        None => None,
    };
    s.finish(errors);
    if let Some(p) = &prep {
        if let Some(st) = p.state() {
            if let Some(d) = d {
                if let Err(e) = st.validate(d) {
                    errors.push("prep".into(), e.to_string());
                }
            }
        }
    }
    prep
}

fn parse_sweep(root: &Table, d: Option<usize>, errors: &mut Errors) -> Option<Sweep> {
    let mut s = Section::new(root, "sweep", errors);
    let n_list = s.get("n_list", "an array of positive integers", errors, |v| {
        v.as_array()?
            .iter()
            .map(|x| x.as_integer().and_then(|i| usize::try_from(i).ok()).filter(|&n| n > 0))
            .collect::<Option<Vec<usize>>>()
    });
    let n_list = s.require("n_list", n_list, errors);
    if let Some(n) = &n_list {
        if n.is_empty() {
            errors.push("sweep.n_list".into(), "must not be empty");
        } else if n.windows(2).any(|w| w[0] >= w[1]) {
            errors.push("sweep.n_list".into(), "must be strictly increasing");
        }
    }
    let times = s.numbers("times", errors).unwrap_or_else(|| vec![0.0, 1.0]);
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[0] >= w[1]) {
        errors.push("sweep.times".into(), "must be non-empty, non-negative and strictly increasing");
    }
    let count = s.usize("probe_count", errors);
    let max_norm = s.f64("probe_max_norm", errors).unwrap_or(2.0);
    let explicit = s.raw("probes");
    let probes = match (explicit, count) {
        (Some(v), None) => {
            let list: Option<Vec<Vec<C64>>> = v.as_array().and_then(|a| a.iter().map(complex_vec).collect());
            match list {
                Some(l) if !l.is_empty() => {
                    for (i, p) in l.iter().enumerate() {
                        check_len(&format!("sweep.probes[{i}]"), p, d, errors);
                    }
                    Some(Probes::Explicit(l))
                }
                _ => {
                    errors.push("sweep.probes".into(), "expected a non-empty array of complex vectors");
                    None
                }
            }
        }
        (Some(_), Some(_)) => {
            errors.push("sweep.probes".into(), "give either probes or probe_count, not both");
            None
        }
        (None, count) => {
            if !(max_norm > 0.0) {
                errors.push("sweep.probe_max_norm".into(), "must be positive");
            }
            Some(Probes::Random { count: count.unwrap_or(8), max_norm })
        }
    };
    s.finish(errors);
    Some(Sweep { n_list: n_list?, times, probes: probes? })
}

fn parse_numerics(root: &Table, errors: &mut Errors) -> Option<Numerics> {
    let mut s = Section::new(root, "numerics", errors);
    let seed = s.get("seed", "a non-negative integer", errors, |v| {
        v.as_integer().and_then(|i| u64::try_from(i).ok())
    });
    let defaults = FlowConfig::default();
    let integrator = match s.string("integrator", errors) {
        None | Some("rk4") => Integrator::Rk4,
        Some("split-step") => Integrator::SplitStep,
        Some(other) => {
            errors.push("numerics.integrator".into(), format!("unknown integrator '{other}' (rk4, split-step)"));
            Integrator::Rk4
        }
    };
    let flow = FlowConfig {
        integrator,
        step: s.f64("step", errors).unwrap_or(defaults.step),
        conservation_tol: s.f64("conservation_tol", errors).unwrap_or(defaults.conservation_tol),
        max_halvings: s.usize("max_halvings", errors).unwrap_or(defaults.max_halvings),
    };
    if let Err(e) = flow.validate() {
        errors.push("numerics".into(), e.to_string());
    }
    let tp = TruncationPolicy::default();
    let truncation = TruncationPolicy {
        n_max: s.usize("n_max", errors).unwrap_or(tp.n_max),
        buffer: s.usize("buffer", errors).unwrap_or(tp.buffer),
        tail_tol: s.f64("tail_tol", errors).unwrap_or(tp.tail_tol),
    };
    if let Err(e) = truncation.validate() {
        errors.push("numerics.n_max".into(), e.to_string());
    }
    let simpson_nodes = s.usize("simpson_nodes", errors).unwrap_or(65);
    if simpson_nodes < 3 || simpson_nodes % 2 == 0 {
        errors.push("numerics.simpson_nodes".into(), "must be odd and >= 3");
    }
    let steps = s.usize("liouville_steps", errors).unwrap_or(64);
    if steps < 4 || steps % 2 != 0 {
        errors.push("numerics.liouville_steps".into(), "must be even and >= 4");
    }
    let radius = s.f64("liouville_radius", errors).unwrap_or(0.5);
    if !(radius > 0.0) {
        errors.push("numerics.liouville_radius".into(), "must be positive");
    }
    let window = s.numbers("liouville_window", errors).and_then(|w| {
        if w.len() == 2 && w[0] < w[1] {
            Some((w[0], w[1]))
        } else {
            errors.push("numerics.liouville_window".into(), "expected [t0, t1] with t0 < t1");
            None
        }
    });
    let shift = s.f64("liouville_shift", errors).unwrap_or(0.15);
    let audit_cases = s.usize("audit_cases", errors).unwrap_or(50);
    let audit_n_max = s.usize("audit_n_max", errors).unwrap_or(4);
    if audit_n_max == 0 {
        errors.push("numerics.audit_n_max".into(), "must be >= 1");
    }
    let a_grid = match s.raw("form_bound_a") {
        None => mflab_core::many_body::default_a_grid(),
        Some(v) => {
            let grid = match v {
                Value::Array(a) => a.iter().map(number).collect::<Option<Vec<f64>>>(),
                other => number(other).map(|x| vec![x]),
            };
            match grid {
                Some(g) if !g.is_empty() => {
                    for (i, a) in g.iter().enumerate() {
                        if !(*a > 0.0 && *a < 1.0) {
                            errors.push(format!("numerics.form_bound_a[{i}]"), format!("a = {a} is outside (0, 1)"));
                        }
                    }
                    g
                }
                _ => {
                    errors.push("numerics.form_bound_a".into(), "expected a number or an array of numbers");
                    Vec::new()
                }
            }
        }
    };
    s.finish(errors);
    Some(Numerics {
        seed: seed.unwrap_or(0),
        flow,
        truncation,
        simpson_nodes,
        liouville: LiouvilleSettings { steps, radius, window, shift },
        audit_cases,
        audit_n_max,
        a_grid,
    })
}

fn parse_output(root: &Table, errors: &mut Errors) -> Option<Output> {
    let mut s = Section::new(root, "output", errors);
    let dir = s.string("dir", errors).unwrap_or("results").into();
    let format = match s.string("format", errors) {
        None => Format::Csv,
        Some(f) => Format::parse(f).unwrap_or_else(|| {
            errors.push("output.format".into(), format!("unknown format '{f}' (csv, json-lines)"));
            Format::Csv
        }),
    };
    let prefix = s.string("prefix", errors).unwrap_or("").to_string();
    if prefix.contains(['/', '\\']) {
        errors.push("output.prefix".into(), "must not contain path separators");
    }
    s.finish(errors);
    Some(Output { dir, format, prefix })
}
