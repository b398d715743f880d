//! Swept-variable traces and their CSV form.
//!
//! ```text
//! # key = value
//! phi_e [Phi0],level_1 [Hz]
//! 0.0000000000000000e0,3.7692901...e9
//! ```
//! Values are written with 17 significant digits so a parse reproduces the
//! in-memory trace bit for bit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceColumn {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub variable: String,
    pub unit: String,
    pub grid: Vec<f64>,
    pub columns: Vec<TraceColumn>,
    pub metadata: BTreeMap<String, String>,
}

fn strictly_monotone(grid: &[f64]) -> bool {
    grid.iter().all(|x| x.is_finite())
        && (grid.windows(2).all(|w| w[1] > w[0]) || grid.windows(2).all(|w| w[1] < w[0]))
}

impl SpectrumTrace {
    pub fn new(variable: &str, unit: &str, grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Format("empty grid".into()));
        }
        if !strictly_monotone(&grid) {
            return Err(Error::Format(format!("grid `{variable}` is not strictly monotone")));
        }
        Ok(Self {
            variable: variable.to_string(),
            unit: unit.to_string(),
            grid,
            columns: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn push_column(&mut self, name: &str, unit: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::Format(format!(
                "column `{name}` has {} values for a grid of {}",
                values.len(),
                self.grid.len()
            )));
        }
        if self.columns.iter().any(|c| c.name == name) || name == self.variable {
            return Err(Error::Format(format!("duplicate column `{name}`")));
        }
        self.columns.push(TraceColumn { name: name.to_string(), unit: unit.to_string(), values });
        Ok(())
    }

    pub fn with_column(mut self, name: &str, unit: &str, values: Vec<f64>) -> Result<Self> {
        self.push_column(name, unit, values)?;
        Ok(self)
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {} = {}\n", k.replace('\n', " "), v.replace('\n', " ")));
        }
        let mut header = vec![format!("{} [{}]", self.variable, self.unit)];
        header.extend(self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)));
        out.push_str(&header.join(","));
        out.push('\n');
        for (i, x) in self.grid.iter().enumerate() {
            out.push_str(&format!("{x:.16e}"));
            for c in &self.columns {
                out.push_str(&format!(",{:.16e}", c.values[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = loop {
            let (n, line) = lines.next().ok_or_else(|| Error::Format("missing header".into()))?;
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once(" = ")
                    .ok_or_else(|| Error::Format(format!("line {}: bad metadata line", n + 1)))?;
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            } else {
                break line;
            }
        };
        let names: Vec<(String, String)> = header
            .split(',')
            .map(|h| {
                let h = h.trim();
                match (h.rfind(" ["), h.ends_with(']')) {
                    (Some(p), true) => Ok((h[..p].to_string(), h[p + 2..h.len() - 1].to_string())),
                    _ => Err(Error::Format(format!("header field `{h}` lacks a [unit]"))),
                }
            })
            .collect::<Result<_>>()?;
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (n, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != names.len() {
                return Err(Error::Format(format!("line {}: expected {} fields", n + 1, names.len())));
            }
            for (c, f) in cols.iter_mut().zip(fields) {
                c.push(f.trim().parse().map_err(|_| Error::Format(format!("line {}: bad number `{f}`", n + 1)))?);
            }
        }
        let mut it = names.into_iter().zip(cols);
        let ((var, unit), grid) = it.next().ok_or_else(|| Error::Format("no columns".into()))?;
        let mut trace = SpectrumTrace::new(&var, &unit, grid)?;
        for ((name, unit), values) in it {
            trace.push_column(&name, &unit, values)?;
        }
        trace.metadata = metadata;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_monotone_and_ragged() {
        assert!(SpectrumTrace::new("x", "Hz", vec![0.0, 1.0, 1.0]).is_err());
        let mut t = SpectrumTrace::new("x", "Hz", vec![0.0, 1.0]).unwrap();
        assert!(t.push_column("y", "1", vec![1.0]).is_err());
        assert!(SpectrumTrace::new("x", "Hz", vec![3.0, 2.0, -1.0]).is_ok());
    }

    #[test]
    fn csv_shape() {
        let t = SpectrumTrace::new("phi_e", "Phi0", vec![0.0, 0.5])
            .unwrap()
            .with_column("a", "Hz", vec![1.0, 2.0])
            .unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "phi_e [Phi0],a [Hz]");
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn csv_roundtrip_is_exact(
            start in -1e9f64..1e9,
            steps in proptest::collection::vec(1e-12f64..1e6, 1..40),
            scale in -1e12f64..1e12,
        ) {
            let mut grid = vec![start];
            for s in &steps { let last = *grid.last().unwrap(); grid.push(last + s.max(last.abs() * 1e-12)); }
            let vals: Vec<f64> = grid.iter().map(|x| (x * 1.37).sin() * scale).collect();
            let mut t = SpectrumTrace::new("delta_p", "Hz", grid).unwrap();
            t.push_column("amp", "1", vals).unwrap();
            t.set_meta("config_hash", "abc");
            let back = SpectrumTrace::from_csv(&t.to_csv()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
