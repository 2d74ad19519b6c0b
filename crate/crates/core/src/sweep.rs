//! Configuration files, single-instance reports and one-parameter sweeps.
//!
//! A config is a flat `key = value` file; `#` starts a comment. Keys are the
//! model parameters (`alpha beta gamma zeta d x w n r_d r_s`) plus
//! `param`, `range` (`lo:hi:steps`), `outputs` (comma-separated subset of
//! `equilibria admissibility welfare pos`), `seed` and `grid_resolution`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::equilibria::{critical_zeta, nash_equilibria, AdmissibilityThresholds};
use crate::error::Error;
use crate::model::{ModelParams, ParamName, ParamValues};
use crate::welfare::maximize_welfare;

pub const MAX_STEPS: usize = 1_000_000;
pub const DEFAULT_GRID_RESOLUTION: f64 = 1e-3;
/// Relative residual above which the equilibrium quadratic's roots are
/// reported as a contract violation.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Where a config value came from: a file line or the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin(pub Option<usize>);

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(line) => write!(f, "line {line}"),
            None => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Syntax { origin: Origin, message: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: Origin, key: String },
    #[error("{origin}: bad value for `{field}`: {message}")]
    BadValue { origin: Origin, field: String, message: String },
    #[error("missing required key `{field}`")]
    Missing { field: String },
    #[error("{origin}: invalid parameter `{field}`: {reason}")]
    Invalid { origin: Origin, field: String, reason: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    /// The offending key, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. } => Some(key),
            ConfigError::BadValue { field, .. }
            | ConfigError::Missing { field }
            | ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Syntax { .. } | ConfigError::Io { .. } => None,
        }
    }
}

const EXTRA_KEYS: [&str; 5] = ["param", "range", "outputs", "seed", "grid_resolution"];

fn known_key(key: &str) -> bool {
    key.parse::<ParamName>().is_ok() || EXTRA_KEYS.contains(&key)
}

/// Which column groups a report computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub equilibria: bool,
    pub admissibility: bool,
    pub welfare: bool,
    pub pos: bool,
}

impl Outputs {
    pub const ALL: Outputs = Outputs {
        equilibria: true,
        admissibility: true,
        welfare: true,
        pos: true,
    };
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs::ALL
    }
}

impl FromStr for Outputs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Outputs {
            equilibria: false,
            admissibility: false,
            welfare: false,
            pos: false,
        };
        for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token {
                "equilibria" => out.equilibria = true,
                "admissibility" => out.admissibility = true,
                "welfare" => out.welfare = true,
                "pos" => out.pos = true,
                "all" => out = Outputs::ALL,
                other => return Err(format!("unknown output group `{other}`")),
            }
        }
        if out == (Outputs { equilibria: false, admissibility: false, welfare: false, pos: false }) {
            return Err("no output group selected".to_string());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self, String> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("need finite lo < hi, got {lo}:{hi}"));
        }
        if !(2..=MAX_STEPS).contains(&steps) {
            return Err(format!("steps must lie in [2, {MAX_STEPS}], got {steps}"));
        }
        Ok(SweepRange { lo, hi, steps })
    }

    /// The `i`-th swept value; the last one is exactly `hi`.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value(i))
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(format!("expected lo:hi:steps, got `{s}`"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
        let steps: usize = steps.parse().map_err(|e| format!("steps: {e}"))?;
        SweepRange::new(lo, hi, steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    origin: Origin,
}

/// Raw key/value pairs from a file and command-line overrides. Later entries
/// win, and overrides are always added after the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigSource {
    entries: Vec<Entry>,
}

impl ConfigSource {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let origin = Origin(Some(idx + 1));
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    origin,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim();
            if !known_key(key) {
                return Err(ConfigError::UnknownKey { origin, key: key.to_string() });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                origin,
            });
        }
        Ok(ConfigSource { entries })
    }

    pub fn read(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_string(),
            message: e.to_string(),
        })?;
        ConfigSource::parse(&text)
    }

    /// Adds a command-line override.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !known_key(key) {
            return Err(ConfigError::UnknownKey { origin: Origin(None), key: key.to_string() });
        }
        self.entries.push(Entry {
            key: key.to_string(),
            value: value.into(),
            origin: Origin(None),
        });
        Ok(())
    }

    fn latest(&self) -> HashMap<&str, &Entry> {
        self.entries.iter().map(|e| (e.key.as_str(), e)).collect()
    }

    pub fn resolve(&self) -> Result<Config, ConfigError> {
        let latest = self.latest();
        fn parsed<T: FromStr>(e: &Entry) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            e.value.parse().map_err(|err: T::Err| ConfigError::BadValue {
                origin: e.origin,
                field: e.key.clone(),
                message: err.to_string(),
            })
        }

        let sweep = match (latest.get("param"), latest.get("range")) {
            (None, None) => None,
            (Some(p), Some(r)) => Some((parsed::<ParamName>(p)?, parsed::<SweepRange>(r)?)),
            (Some(_), None) => return Err(ConfigError::Missing { field: "range".into() }),
            (None, Some(_)) => return Err(ConfigError::Missing { field: "param".into() }),
        };

        let mut values = ParamValues {
            d: 0.0,
            x: 0.0,
            w: 0.0,
            n: 1,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            zeta: 0.0,
            r_d: 0.0,
            r_s: 0.0,
        };
        let mut origins = HashMap::new();
        for name in ParamName::ALL {
            let value = match latest.get(name.as_str()) {
                Some(e) => {
                    let v: f64 = parsed(e)?;
                    origins.insert(name.as_str(), e.origin);
                    v
                }
                None => match sweep {
                    Some((swept, range)) if swept == name => range.lo,
                    _ => return Err(ConfigError::Missing { field: name.as_str().into() }),
                },
            };
            values.set(name, value).map_err(|e| invalid(e, &origins))?;
        }

        let swept = sweep.map(|(name, _)| name);
        if let Err(e) = ModelParams::new(values) {
            // A bad base value of the swept parameter only spoils the rows
            // that use it, so it is not a config error.
            let field_is_swept = matches!(&e, Error::InvalidParameter { field, .. }
                if swept.is_some_and(|s| s.as_str() == field));
            if !field_is_swept {
                return Err(invalid(e, &origins));
            }
        }

        Ok(Config {
            base: values,
            sweep: sweep.map(|(param, range)| SweepSpec { param, range }),
            outputs: latest.get("outputs").map(|e| parsed(e)).transpose()?.unwrap_or_default(),
            seed: latest.get("seed").map(|e| parsed(e)).transpose()?.unwrap_or(0),
            grid_resolution: latest
                .get("grid_resolution")
                .map(|e| parsed(e))
                .transpose()?
                .unwrap_or(DEFAULT_GRID_RESOLUTION),
        })
    }
}

fn invalid(e: Error, origins: &HashMap<&str, Origin>) -> ConfigError {
    match e {
        Error::InvalidParameter { field, reason } => ConfigError::Invalid {
            origin: origins.get(field.as_str()).copied().unwrap_or(Origin(None)),
            field,
            reason,
        },
        other => ConfigError::Invalid {
            origin: Origin(None),
            field: String::new(),
            reason: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: ParamName,
    pub range: SweepRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Base parameters; validated except possibly for the swept one.
    pub base: ParamValues,
    pub sweep: Option<SweepSpec>,
    pub outputs: Outputs,
    pub seed: u64,
    pub grid_resolution: f64,
}

impl Config {
    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.base).map_err(|e| invalid(e, &HashMap::new()))
    }
}

/// Flag tokens that can appear in a record's `flags` column.
pub mod flag {
    pub const NO_REAL_ROOTS: &str = "NoRealRoots";
    pub const DEGENERATE_ROOTS: &str = "DegenerateRoots";
    pub const VERDICT_MISMATCH: &str = "VerdictMismatch";
    pub const INVALID_PARAMETER: &str = "InvalidParameter";
    pub const WELFARE_ERROR: &str = "WelfareError";
    pub const CONTRACT_VIOLATION: &str = "ContractViolation";
}

pub const COLUMNS: [&str; 24] = [
    "param",
    "value",
    "discriminant",
    "a",
    "b",
    "s_star",
    "c_star",
    "s_dagger",
    "c_dagger",
    "star_admissible",
    "dagger_admissible",
    "star_region",
    "dagger_region",
    "r_d_1",
    "r_d_2",
    "zeta_bar",
    "sw_max",
    "sw_location",
    "sw_at_star",
    "sw_at_dagger",
    "pos_numerator",
    "pos",
    "flags",
    "error",
];

/// One output row. Absent values are `None` and serialize as empty fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    pub param: String,
    pub value: Option<f64>,
    pub discriminant: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub s_star: Option<f64>,
    pub c_star: Option<f64>,
    pub s_dagger: Option<f64>,
    pub c_dagger: Option<f64>,
    pub star_admissible: Option<bool>,
    pub dagger_admissible: Option<bool>,
    pub star_region: Option<bool>,
    pub dagger_region: Option<bool>,
    pub r_d_1: Option<f64>,
    pub r_d_2: Option<f64>,
    pub zeta_bar: Option<f64>,
    pub sw_max: Option<f64>,
    pub sw_location: Option<String>,
    pub sw_at_star: Option<f64>,
    pub sw_at_dagger: Option<f64>,
    pub pos_numerator: Option<f64>,
    pub pos: Option<f64>,
    pub flags: Vec<String>,
    pub error: Option<String>,
}

enum Cell<'a> {
    Num(Option<f64>),
    Bool(Option<bool>),
    Text(Option<&'a str>),
    List(&'a [String]),
}

impl Cell<'_> {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            Cell::Bool(v) => v.map(|v| v.to_string()).unwrap_or_default(),
            Cell::Text(v) => v.unwrap_or_default().to_string(),
            Cell::List(v) => v.join(";"),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(v) => v.map_or(Value::Null, Value::from),
            Cell::Bool(v) => v.map_or(Value::Null, Value::from),
            Cell::Text(v) => v.map_or(Value::Null, Value::from),
            Cell::List(v) => Value::from(v.join(";")),
        }
    }
}

impl Record {
    fn cells(&self) -> [Cell<'_>; 24] {
        use Cell::*;
        [
            Text(Some(&self.param)),
            Num(self.value),
            Num(self.discriminant),
            Num(self.a),
            Num(self.b),
            Num(self.s_star),
            Num(self.c_star),
            Num(self.s_dagger),
            Num(self.c_dagger),
            Bool(self.star_admissible),
            Bool(self.dagger_admissible),
            Bool(self.star_region),
            Bool(self.dagger_region),
            Num(self.r_d_1),
            Num(self.r_d_2),
            Num(self.zeta_bar),
            Num(self.sw_max),
            Text(self.sw_location.as_deref()),
            Num(self.sw_at_star),
            Num(self.sw_at_dagger),
            Num(self.pos_numerator),
            Num(self.pos),
            List(&self.flags),
            Text(self.error.as_deref()),
        ]
    }

    pub fn to_csv_fields(&self) -> Vec<String> {
        self.cells().iter().map(Cell::csv).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = COLUMNS
            .iter()
            .zip(self.cells().iter())
            .map(|(name, cell)| (name.to_string(), cell.json()))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_csv_fields(fields: &[&str]) -> Result<Self, String> {
        if fields.len() != COLUMNS.len() {
            return Err(format!("expected {} fields, got {}", COLUMNS.len(), fields.len()));
        }
        let num = |i: usize| -> Result<Option<f64>, String> {
            let f = fields[i];
            if f.is_empty() {
                Ok(None)
            } else {
                f.parse().map(Some).map_err(|e| format!("column {}: {e}", COLUMNS[i]))
            }
        };
        let boolean = |i: usize| -> Result<Option<bool>, String> {
            match fields[i] {
                "" => Ok(None),
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                other => Err(format!("column {}: expected true/false, got `{other}`", COLUMNS[i])),
            }
        };
        let text = |i: usize| (!fields[i].is_empty()).then(|| fields[i].to_string());
        Ok(Record {
            param: fields[0].to_string(),
            value: num(1)?,
            discriminant: num(2)?,
            a: num(3)?,
            b: num(4)?,
            s_star: num(5)?,
            c_star: num(6)?,
            s_dagger: num(7)?,
            c_dagger: num(8)?,
            star_admissible: boolean(9)?,
            dagger_admissible: boolean(10)?,
            star_region: boolean(11)?,
            dagger_region: boolean(12)?,
            r_d_1: num(13)?,
            r_d_2: num(14)?,
            zeta_bar: num(15)?,
            sw_max: num(16)?,
            sw_location: text(17),
            sw_at_star: num(18)?,
            sw_at_dagger: num(19)?,
            pos_numerator: num(20)?,
            pos: num(21)?,
            flags: if fields[22].is_empty() {
                Vec::new()
            } else {
                fields[22].split(';').map(str::to_string).collect()
            },
            error: text(23),
        })
    }

    pub fn has_flag(&self, token: &str) -> bool {
        self.flags.iter().any(|f| f == token)
    }

    pub fn contract_violation(&self) -> bool {
        self.has_flag(flag::CONTRACT_VIOLATION)
    }

    fn push_error(&mut self, token: &str, e: &Error) {
        if !self.has_flag(token) {
            self.flags.push(token.to_string());
        }
        let text = e.to_string();
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {text}"),
            None => text,
        });
    }
}

/// Computes one record for validated parameters.
pub fn analyze(p: &ModelParams, outputs: Outputs) -> Record {
    let mut r = Record::default();
    let eq = nash_equilibria(p);
    if outputs.equilibria {
        r.discriminant = Some(eq.roots.discriminant);
        r.a = eq.roots.a;
        r.b = eq.roots.b;
        r.s_star = eq.p_star.as_ref().map(|q| q.s);
        r.c_star = eq.p_star.as_ref().map(|q| q.c[0]);
        r.s_dagger = eq.p_dagger.as_ref().map(|q| q.s);
        r.c_dagger = eq.p_dagger.as_ref().map(|q| q.c[0]);
        if eq.roots.discriminant < 0.0 {
            r.flags.push(flag::NO_REAL_ROOTS.into());
        }
        if eq.degenerate {
            r.flags.push(flag::DEGENERATE_ROOTS.into());
        }
        let residual = eq.roots.relative_residual(p);
        if residual > ROOT_RESIDUAL_TOL {
            r.push_error(
                flag::CONTRACT_VIOLATION,
                &Error::ContractViolation(format!("quadratic relative residual {residual:e}")),
            );
        }
    }
    if outputs.admissibility {
        r.star_admissible = Some(eq.star_admissible);
        r.dagger_admissible = Some(eq.dagger_admissible);
        r.star_region = eq.region.map(|v| v.star);
        r.dagger_region = eq.region.map(|v| v.dagger);
        let t = AdmissibilityThresholds::of(p);
        r.r_d_1 = Some(t.r_d_1);
        r.r_d_2 = Some(t.r_d_2);
        r.zeta_bar = critical_zeta(p).ok().map(|z| z.zeta_bar);
        if eq.verdicts_agree() == Some(false) {
            r.flags.push(flag::VERDICT_MISMATCH.into());
        }
    }
    if outputs.welfare || outputs.pos {
        match maximize_welfare(p) {
            Ok(w) => {
                if outputs.welfare {
                    r.sw_max = Some(w.sw_max);
                    r.sw_location = Some(w.location.to_string());
                }
                if outputs.pos {
                    r.sw_at_star = w.sw_at_star;
                    r.sw_at_dagger = w.sw_at_dagger;
                    r.pos_numerator = w.pos.numerator;
                    r.pos = w.pos.ratio;
                    r.flags.extend(w.pos.flags.iter().map(|f| f.as_str().to_string()));
                }
            }
            Err(e @ Error::ContractViolation(_)) => r.push_error(flag::CONTRACT_VIOLATION, &e),
            Err(e) => r.push_error(flag::WELFARE_ERROR, &e),
        }
    }
    r
}

/// The report for the config's base parameters.
pub fn run_single(config: &Config) -> Result<Record, ConfigError> {
    Ok(analyze(&config.params()?, config.outputs))
}

/// One row per swept value, in sweep order. A value that breaks parameter
/// validation yields a row carrying only the value and the error.
pub fn run_sweep(config: &Config) -> Result<Table, ConfigError> {
    let Some(spec) = config.sweep else {
        return Err(ConfigError::Missing { field: "param".into() });
    };
    let base = config.base;
    let rows = (0..spec.range.steps)
        .into_par_iter()
        .map(|i| {
            let value = spec.range.value(i);
            let mut v = base;
            let mut row = match v.set(spec.param, value).and_then(|()| ModelParams::new(v)) {
                Ok(p) => analyze(&p, config.outputs),
                Err(e) => {
                    let mut r = Record::default();
                    r.push_error(flag::INVALID_PARAMETER, &e);
                    r
                }
            };
            row.param = spec.param.as_str().to_string();
            row.value = Some(value);
            row
        })
        .collect();
    Ok(Table { rows })
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("table line {line}: {message}")]
pub struct TableError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub rows: Vec<Record>,
}

impl Table {
    pub fn contract_violations(&self) -> usize {
        self.rows.iter().filter(|r| r.contract_violation()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(COLUMNS).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.to_csv_fields()).expect("writing to memory");
        }
        let bytes = w.into_inner().expect("flushing to memory");
        String::from_utf8(bytes).expect("fields are UTF-8")
    }

    pub fn to_json_lines(&self) -> String {
        self.rows.iter().map(|r| format!("{}\n", r.to_json())).collect()
    }

    pub fn parse_csv(text: &str) -> Result<Table, TableError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| TableError { line: 1, message: e.to_string() })?;
        if header.iter().ne(COLUMNS.iter().copied()) {
            return Err(TableError { line: 1, message: "unexpected header".into() });
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| TableError {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let fields: Vec<&str> = rec.iter().collect();
            rows.push(Record::from_csv_fields(&fields).map_err(|message| TableError { line, message })?);
        }
        Ok(Table { rows })
    }
}
