//! Bit-stable text output: CSV time series, tables and `key = value` summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rabisim_core::series::TimeSeries;

use crate::error::{Result, RunError};

/// Formats `x` with 12 significant digits, trailing zeros removed.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, x);
        trim_fraction(&s).to_string()
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').expect("exponent format");
        format!("{}e{e}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV text of a series: `t_ns` then every trace in insertion order.
pub fn csv_string(series: &TimeSeries) -> String {
    let mut out = String::from("t_ns");
    for (name, _) in series.traces() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, t) in series.times.iter().enumerate() {
        out.push_str(&format_value(t * 1e9));
        for (_, v) in series.traces() {
            out.push(',');
            out.push_str(&format_value(v[k]));
        }
        out.push('\n');
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

pub fn emit_csv(series: &TimeSeries, path: &Path) -> Result<()> {
    write(path, &csv_string(series))
}

/// Parses CSV produced by [`emit_csv`] back into a series (times in s).
pub fn parse_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| RunError::Invalid("empty CSV".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.first() != Some(&"t_ns") {
        return Err(RunError::Invalid("CSV must start with a t_ns column".into()));
    }
    let mut columns = vec![Vec::new(); names.len()];
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(RunError::Invalid(format!("CSV row {} has {} fields", i + 2, fields.len())));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            col.push(f.parse::<f64>().map_err(|e| RunError::Invalid(format!("CSV row {}: {e}", i + 2)))?);
        }
    }
    let mut cols = columns.into_iter();
    let times = cols.next().unwrap_or_default().into_iter().map(|t| t * 1e-9).collect();
    let mut series = TimeSeries::new(times);
    for (name, col) in names[1..].iter().zip(cols) {
        series.push_trace(*name, col)?;
    }
    Ok(series)
}

/// Non-time data such as spectra.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format_value(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Ordered `key = value` report. Keys are written once, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    entries: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.text(key, format_value(value));
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.text(key, if value { "true" } else { "false" });
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let m = message.into();
        if !self.warnings.contains(&m) {
            self.warnings.push(m);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn extend(&mut self, prefix: &str, other: Summary) {
        for (k, v) in other.entries {
            self.text(format!("{prefix}{k}"), v);
        }
        for w in other.warnings {
            self.warn(w);
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (i, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(out, "warning.{i} = {}", w.replace('\n', " "));
        }
        out
    }
}

/// Everything one experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// `(file stem, series)`
    pub series: Vec<(String, TimeSeries)>,
    pub tables: Vec<(String, Table)>,
    pub summary: Summary,
}

impl Outcome {
    pub fn series(&self, stem: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|(s, _)| s == stem).map(|(_, s)| s)
    }

    pub fn table(&self, stem: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == stem).map(|(_, t)| t)
    }

    /// Folds solver diagnostics and notes stored in series metadata into the
    /// summary: drift maxima, the lowest eigenvalue seen and every note.
    pub fn collect_diagnostics(&mut self) {
        let mut trace = None::<f64>;
        let mut herm = None::<f64>;
        let mut min_eig = None::<f64>;
        for (_, s) in &self.series {
            for (k, v) in &s.metadata {
                let parsed = v.parse::<f64>().ok();
                match (k.as_str(), parsed) {
                    ("max_trace_drift", Some(x)) => trace = Some(trace.map_or(x, |t| t.max(x))),
                    ("max_hermiticity_drift", Some(x)) => herm = Some(herm.map_or(x, |t| t.max(x))),
                    ("min_eigenvalue", Some(x)) => min_eig = Some(min_eig.map_or(x, |t| t.min(x))),
                    _ if k.starts_with("note.") || k.starts_with("warning") => self.summary.warn(v.clone()),
                    _ => {}
                }
            }
        }
        if let Some(x) = trace {
            self.summary.metric("max_trace_drift", x);
        }
        if let Some(x) = herm {
            self.summary.metric("max_hermiticity_drift", x);
        }
        if let Some(x) = min_eig {
            self.summary.metric("min_eigenvalue", x);
        }
    }

    /// Writes `<stem>.csv` per series and table plus `summary.txt`.
    pub fn write(&self, dir: &Path, header: &Summary) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        let mut written = Vec::new();
        for (stem, s) in &self.series {
            let p = dir.join(format!("{stem}.csv"));
            emit_csv(s, &p)?;
            written.push(p);
        }
        for (stem, t) in &self.tables {
            let p = dir.join(format!("{stem}.csv"));
            write(&p, &t.to_csv())?;
            written.push(p);
        }
        let mut full = header.clone();
        full.extend("", self.summary.clone());
        let p = dir.join("summary.txt");
        write(&p, &full.render())?;
        written.push(p);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(0.5), "0.5");
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_value(2.0 / 3.0 * 1e6), "666666.666667");
        assert_eq!(format_value(3.9e-7), "3.9e-7");
        assert_eq!(format_value(-1.23456789012345e15), "-1.23456789012e15");
    }

    #[test]
    fn summary_keys_are_unique_and_ordered() {
        let mut s = Summary::new();
        s.metric("b", 1.0);
        s.metric("a", 2.0);
        s.metric("b", 3.0);
        s.warn("w");
        s.warn("w");
        assert_eq!(s.render(), "b = 3\na = 2\nwarning.0 = w\n");
    }
}
