//! Column-oriented result tables with `#`-prefixed metadata, persisted as CSV.
//!
//! Layout:
//!
//! ```text
//! # figure: fig5
//! # seed: 20240611
//! # generated_at_unix: 1718000000
//! x,outage_analytic_lp2_p10db,outage_empirical_lp2_p10db
//! 0.001,0.0002,0.0001
//! ```
//!
//! The `generated_at_unix` line is the only non-reproducible byte range; equality and
//! determinism checks ignore it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const TIMESTAMP_KEY: &str = "generated_at_unix";

#[derive(Debug, Clone, Default)]
pub struct CurveTable {
    columns: Vec<(String, Vec<f64>)>,
    metadata: BTreeMap<String, String>,
    generated_at: Option<u64>,
}

impl PartialEq for CurveTable {
    fn eq(&self, other: &Self) -> bool {
        self.metadata == other.metadata
            && self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|((na, va), (nb, vb))| {
                    na == nb
                        && va.len() == vb.len()
                        && va.iter().zip(vb).all(|(a, b)| a.to_bits() == b.to_bits())
                })
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains([',', '\n', '\r', '"']) || name.starts_with('#') {
        return Err(Error::Table(format!("bad column name {name:?}")));
    }
    Ok(())
}

impl CurveTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a column. All columns must share one length.
    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        check_name(&name)?;
        if self.columns.iter().any(|(n, _)| *n == name) {
            return Err(Error::Table(format!("duplicate column {name}")));
        }
        if let Some((first, v)) = self.columns.first() {
            if v.len() != values.len() {
                return Err(Error::Table(format!(
                    "column {name} has {} rows, {first} has {}",
                    values.len(),
                    v.len()
                )));
            }
        }
        self.columns.push((name, values));
        Ok(())
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        debug_assert!(!key.contains(':') && key != TIMESTAMP_KEY);
        self.metadata.insert(key, value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn stamp_now(&mut self) {
        self.generated_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }

    pub fn generated_at(&self) -> Option<u64> {
        self.generated_at
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let v = v.replace(['\n', '\r'], " ");
            let _ = writeln!(out, "# {k}: {v}");
        }
        if let Some(ts) = self.generated_at {
            let _ = writeln!(out, "# {TIMESTAMP_KEY}: {ts}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let table_err = |e: csv::Error| Error::Table(e.to_string());
        w.write_record(self.columns.iter().map(|(n, _)| n.as_str()))
            .map_err(table_err)?;
        for row in 0..self.n_rows() {
            // `{}` on f64 prints the shortest string that parses back to the same bits.
            w.write_record(self.columns.iter().map(|(_, v)| format!("{}", v[row])))
                .map_err(table_err)?;
        }
        let body = w.into_inner().map_err(|e| Error::Table(e.to_string()))?;
        out.push_str(std::str::from_utf8(&body).map_err(|e| Error::Table(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut table = CurveTable::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let rest = line[1..].trim_start();
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| Error::Table(format!("metadata line without ':' {line:?}")))?;
            let v = v.strip_prefix(' ').unwrap_or(v);
            if k == TIMESTAMP_KEY {
                table.generated_at = Some(
                    v.parse()
                        .map_err(|_| Error::Table(format!("bad timestamp {v:?}")))?,
                );
            } else {
                table.metadata.insert(k.to_string(), v.to_string());
            }
        }

        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = r
            .headers()
            .map_err(|e| Error::Table(e.to_string()))?
            .clone();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Table(format!("row {i}: {e}")))?;
            for (col, field) in columns.iter_mut().zip(rec.iter()) {
                col.push(
                    field
                        .parse()
                        .map_err(|_| Error::Table(format!("row {i}: bad number {field:?}")))?,
                );
            }
        }
        for (name, values) in headers.iter().zip(columns) {
            table.push_column(name, values)?;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)
                .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        fs::write(path, self.to_csv_string()?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_csv_str(&text)
    }

    /// A minimal gnuplot script plotting every column against the first.
    pub fn gnuplot_stub(&self, csv_file: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key autotitle columnhead");
        if let Some(fig) = self.meta("figure") {
            let _ = writeln!(s, "set title '{fig}'");
        }
        if let Some((x, _)) = self.columns.first() {
            let _ = writeln!(s, "set xlabel '{x}'");
        }
        let series: Vec<String> = (2..=self.n_columns())
            .map(|i| format!("'{csv_file}' using 1:{i} with lines"))
            .collect();
        if !series.is_empty() {
            let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        }
        s
    }
}

/// Drops `# generated_at_unix:` lines so two CSV files can be compared byte-wise.
pub fn strip_timestamp(text: &str) -> String {
    let prefix = format!("# {TIMESTAMP_KEY}:");
    text.lines()
        .filter(|l| !l.starts_with(&prefix))
        .flat_map(|l| [l, "\n"])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CurveTable {
        let mut t = CurveTable::new();
        t.push_column("x", vec![1e-3, 0.1, 1.0, 12.5]).unwrap();
        t.push_column("y", vec![0.0, 1.0 / 3.0, f64::MIN_POSITIVE, -2.5e300])
            .unwrap();
        t.set_meta("figure", "fig5");
        t.set_meta("seed", 7);
        t
    }

    #[test]
    fn rejects_ragged_and_duplicate_columns() {
        let mut t = sample();
        assert!(t.push_column("z", vec![1.0]).is_err());
        assert!(t.push_column("x", vec![0.0; 4]).is_err());
        assert!(t.push_column("a,b", vec![0.0; 4]).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut t = sample();
        t.stamp_now();
        let text = t.to_csv_string().unwrap();
        let back = CurveTable::from_csv_str(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.generated_at(), t.generated_at());
        assert_eq!(back.meta("seed"), Some("7"));
    }

    #[test]
    fn timestamp_is_ignored_by_comparison() {
        let mut a = sample();
        let mut b = sample();
        a.generated_at = Some(1);
        b.generated_at = Some(2);
        assert_eq!(a, b);
        let (sa, sb) = (a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
        assert_ne!(sa, sb);
        assert_eq!(strip_timestamp(&sa), strip_timestamp(&sb));
    }

    #[test]
    fn gnuplot_stub_names_every_series() {
        let s = sample().gnuplot_stub("f.csv");
        assert!(s.contains("using 1:2"));
        assert!(!s.contains("using 1:3"));
    }
}
