//! Flat `key = value [unit]` scenario configuration.
//!
//! ```text
//! # cooling run
//! omega_m = 6 MHz
//! b_field = 100 mT
//! gammas  = 0.1, 0.5, 1 kHz
//! coupling = exchange
//! ```
//!
//! Values are normalized to Hz, T, Φ0, s, m and kg. A bare number takes the
//! default unit of its key (`mT` for fields, the SI unit otherwise); in a
//! list, bare items take the unit of the last item.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown key `{key}` for scenario `{scenario}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { key: String, scenario: String, suggestion: Option<String> },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("conflicting values for `{key}` ({first} vs {second})")]
    Conflict { key: String, first: String, second: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Frequency,
    Field,
    Flux,
    Time,
    Length,
    Mass,
    Ratio,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)],
            Dim::Field => &[("mT", 1e-3), ("T", 1.0), ("uT", 1e-6), ("µT", 1e-6)],
            Dim::Flux => &[("Phi0", 1.0), ("Φ0", 1.0)],
            Dim::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9)],
            Dim::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9)],
            Dim::Mass => &[("kg", 1.0), ("g", 1e-3), ("ng", 1e-12), ("pg", 1e-15), ("fg", 1e-18)],
            Dim::Ratio => &[],
        }
    }

    /// Unit of a bare number.
    fn default_factor(self) -> f64 {
        self.units().first().map_or(1.0, |u| u.1)
    }

    /// Unit used in the resolved config.
    pub fn canonical(self) -> &'static str {
        match self {
            Dim::Frequency => "Hz",
            Dim::Field => "T",
            Dim::Flux => "Phi0",
            Dim::Time => "s",
            Dim::Length => "m",
            Dim::Mass => "kg",
            Dim::Ratio => "",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dim::Frequency => "frequency",
            Dim::Field => "magnetic field",
            Dim::Flux => "flux",
            Dim::Time => "time",
            Dim::Length => "length",
            Dim::Mass => "mass",
            Dim::Ratio => "dimensionless",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Quantity(Dim),
    List(Dim),
    Count,
    Choice(&'static [&'static str]),
}

impl Kind {
    pub fn describe(&self) -> String {
        let quantity = |d: Dim| match d.canonical() {
            "" => d.name().to_string(),
            u => format!("{} [{u}]", d.name()),
        };
        match *self {
            Kind::Quantity(d) => quantity(d),
            Kind::List(d) => format!("list of {}", quantity(d)),
            Kind::Count => "count".into(),
            Kind::Choice(opts) => format!("one of {}", opts.join("|")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn param(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Param {
    Param { key, kind, default, help }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    List(Vec<f64>),
    Count(usize),
    Text(String),
}

impl Value {
    fn render(&self, kind: Kind) -> String {
        let unit = |d: Dim| if d.canonical().is_empty() { String::new() } else { format!(" {}", d.canonical()) };
        match (self, kind) {
            (Value::Number(x), Kind::Quantity(d)) => format!("{x:e}{}", unit(d)),
            (Value::List(v), Kind::List(d)) => {
                let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
                format!("{}{}", items.join(", "), unit(d))
            }
            (Value::Count(n), _) => n.to_string(),
            (Value::Text(s), _) => s.clone(),
            (v, _) => format!("{v:?}"),
        }
    }
}

fn split_unit(token: &str) -> (&str, &str) {
    let token = token.trim();
    let b = token.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let exp = (c == b'e' || c == b'E')
            && i > 0
            && b[i - 1].is_ascii_digit()
            && b.get(i + 1).is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+');
        if c.is_ascii_digit() || c == b'.' || c == b'-' || c == b'+' || exp {
            i += 1;
        } else {
            break;
        }
    }
    (token[..i].trim(), token[i..].trim())
}

/// `x·factor`, dividing by the exact power of ten for sub-unit prefixes so
/// that `0.75 pg` becomes exactly `7.5e-16`.
fn scale(x: f64, factor: f64) -> f64 {
    if factor < 1.0 {
        x / (1.0 / factor).round()
    } else {
        x * factor
    }
}

fn parse_number(key: &str, text: &str, dim: Dim, unit_hint: Option<&str>) -> Result<f64, String> {
    let (num, unit) = split_unit(text);
    let x: f64 = num.parse().map_err(|_| format!("`{num}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{num}` is not finite"));
    }
    let unit = if unit.is_empty() { unit_hint.unwrap_or("") } else { unit };
    if unit.is_empty() {
        return Ok(scale(x, dim.default_factor()));
    }
    if dim == Dim::Ratio {
        return Err(format!("`{key}` is dimensionless but has unit `{unit}`"));
    }
    dim.units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| scale(x, *f))
        .ok_or_else(|| {
            let known: Vec<&str> = dim.units().iter().map(|u| u.0).collect();
            format!("unit `{unit}` is not a {} unit (expected one of {})", dim.name(), known.join(", "))
        })
}

pub fn parse_value(p: &Param, text: &str) -> Result<Value, String> {
    let text = text.trim();
    match p.kind {
        Kind::Quantity(d) => parse_number(p.key, text, d, None).map(Value::Number),
        Kind::List(d) => {
            let items: Vec<&str> = text.split(',').map(str::trim).collect();
            if items.iter().any(|s| s.is_empty()) {
                return Err("empty list element".into());
            }
            let trailing = split_unit(items[items.len() - 1]).1;
            let hint = (!trailing.is_empty()).then_some(trailing);
            items.iter().map(|s| parse_number(p.key, s, d, hint)).collect::<Result<_, _>>().map(Value::List)
        }
        Kind::Count => text.parse::<usize>().map(Value::Count).map_err(|_| format!("`{text}` is not a non-negative integer")),
        Kind::Choice(opts) => {
            if opts.contains(&text) {
                Ok(Value::Text(text.to_string()))
            } else {
                Err(format!("`{text}` is not one of {}", opts.join(", ")))
            }
        }
    }
}

/// Fully resolved configuration of one scenario run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: &'static str,
    pub schema: Vec<Param>,
    values: BTreeMap<&'static str, Value>,
}

impl Resolved {
    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("scenario schema has no key `{key}`"))
    }

    pub fn num(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Number(x) => *x,
            v => panic!("`{key}` is not a number: {v:?}"),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.get(key) {
            Value::Count(n) => *n,
            v => panic!("`{key}` is not a count: {v:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.get(key) {
            Value::List(v) => v,
            v => panic!("`{key}` is not a list: {v:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(s) => s,
            v => panic!("`{key}` is not a choice: {v:?}"),
        }
    }

    /// Canonical text form, one key per line in schema order.
    pub fn render(&self) -> String {
        let mut out = format!("# scenario = {}\n", self.scenario);
        let width = self.schema.iter().map(|p| p.key.len()).max().unwrap_or(0);
        for p in &self.schema {
            let _ = writeln!(out, "{:width$} = {}", p.key, self.values[p.key].render(p.kind));
        }
        out
    }
}

fn suggest(schema: &[Param], key: &str) -> Option<String> {
    let norm = |s: &str| s.to_lowercase().replace(['_', '-'], "");
    let k = norm(key);
    schema
        .iter()
        .map(|p| (p.key, strsim::jaro_winkler(&k, &norm(p.key))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(name, _)| name.to_string())
}

struct Entry {
    value: Value,
    origin: String,
}

/// Parses config text and `--set` overrides against `schema`.
pub fn resolve(scenario: &'static str, schema: &[Param], text: &str, overrides: &[String]) -> Result<Resolved, ConfigError> {
    let find = |key: &str| -> Result<&Param, ConfigError> {
        schema.iter().find(|p| p.key == key).ok_or_else(|| ConfigError::UnknownKey {
            key: key.to_string(),
            scenario: scenario.to_string(),
            suggestion: suggest(schema, key),
        })
    };
    let mut file: BTreeMap<&'static str, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let column = content.len() - content.trim_start().len() + 1;
            return Err(ConfigError::Parse { line, column, message: "expected `key = value`".into() });
        };
        let key = content[..eq].trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Parse { line, column: 1, message: format!("invalid key `{key}`") });
        }
        let p = find(key)?;
        let value = parse_value(p, &content[eq + 1..]).map_err(|message| ConfigError::Parse {
            line,
            column: eq + 2 + (content[eq + 1..].len() - content[eq + 1..].trim_start().len()),
            message: format!("`{key}`: {message}"),
        })?;
        insert(&mut file, p, value, format!("line {line}"))?;
    }
    let mut set: BTreeMap<&'static str, Entry> = BTreeMap::new();
    for o in overrides {
        let (key, v) = o.split_once('=').ok_or_else(|| ConfigError::Value {
            key: o.clone(),
            message: "override must look like key=value".into(),
        })?;
        let p = find(key.trim())?;
        let value = parse_value(p, v).map_err(|message| ConfigError::Value { key: p.key.to_string(), message })?;
        insert(&mut set, p, value, format!("--set {o}"))?;
    }
    let mut values = BTreeMap::new();
    for p in schema {
        let v = match set.remove(p.key).or_else(|| file.remove(p.key)) {
            Some(e) => e.value,
            None => parse_value(p, p.default).expect("schema defaults parse"),
        };
        values.insert(p.key, v);
    }
    Ok(Resolved { scenario, schema: schema.to_vec(), values })
}

fn insert(map: &mut BTreeMap<&'static str, Entry>, p: &Param, value: Value, origin: String) -> Result<(), ConfigError> {
    if let Some(prev) = map.get(p.key) {
        if prev.value != value {
            return Err(ConfigError::Conflict {
                key: p.key.to_string(),
                first: prev.origin.clone(),
                second: origin,
            });
        }
        return Ok(());
    }
    map.insert(p.key, Entry { value, origin });
    Ok(())
}
