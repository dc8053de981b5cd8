use std::io::{self, Write};

use serde_json::{json, Map, Value};

/// One table or summary value. Failures carry the reason instead of a number.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing(String),
}

impl Cell {
    pub fn num(v: f64) -> Self {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Missing(format!("non-finite value {v}"))
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn reason(&self) -> Option<&str> {
        match self {
            Cell::Missing(r) => Some(r),
            _ => None,
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Missing(_) => Value::Null,
        }
    }

    /// Exact round-trip text, used for CSV.
    fn plain(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing(_) => String::new(),
        }
    }

    fn human(&self) -> String {
        match self {
            Cell::Num(v) => {
                let a = v.abs();
                if a == 0.0 || (1e-3..1e6).contains(&a) {
                    format!("{v:.10}")
                } else {
                    format!("{v:.6e}")
                }
            }
            Cell::Missing(r) => format!("n/a ({r})"),
            other => other.plain(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub summary: Vec<(String, Cell)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: &'static str, config: Value, columns: &[&'static str]) -> Self {
        Self {
            command,
            config,
            summary: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: Cell) {
        self.summary.push((key.to_owned(), value));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_owned(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn row_reason(row: &[Cell]) -> Option<String> {
        let mut reasons: Vec<&str> = Vec::new();
        for r in row.iter().filter_map(Cell::reason) {
            if !reasons.contains(&r) {
                reasons.push(r);
            }
        }
        (!reasons.is_empty()).then(|| reasons.join("; "))
    }

    pub fn to_json(&self, started_unix: f64, wall: f64) -> Value {
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.json());
            if let Some(r) = v.reason() {
                summary.insert(format!("{k}_reason"), json!(r));
            }
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert((*c).to_owned(), v.json());
                }
                if let Some(r) = Self::row_reason(row) {
                    obj.insert("reason".into(), json!(r));
                }
                Value::Object(obj)
            })
            .collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail}))
            .collect();
        json!({
            "schema": 1,
            "command": self.command,
            "version": sharpnorm::VERSION,
            "config": self.config,
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
            "checks": checks,
            "passed": self.passed(),
            "timestamp": {"started_unix_s": started_unix, "wall_time_s": wall},
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        self.csv_records(out).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(inner) => inner,
            other => io::Error::other(format!("{other:?}")),
        })
    }

    fn csv_records<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let with_reason = self.rows.iter().any(|r| Self::row_reason(r).is_some());
        let mut header: Vec<&str> = self.columns.clone();
        if with_reason {
            header.push("reason");
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut fields: Vec<String> = row.iter().map(Cell::plain).collect();
            if with_reason {
                fields.push(Self::row_reason(row).unwrap_or_default());
            }
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_human<W: Write>(&self, mut out: W, wall: f64) -> io::Result<()> {
        writeln!(out, "sharpnorm {} (library {})", self.command, sharpnorm::VERSION)?;
        if let Value::Object(cfg) = &self.config {
            let pairs: Vec<String> = cfg.iter().map(|(k, v)| format!("{k}={}", compact(v))).collect();
            writeln!(out, "config: {}", pairs.join(" "))?;
        }
        if !self.summary.is_empty() {
            writeln!(out)?;
            let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &self.summary {
                writeln!(out, "  {k:<width$}  {}", v.human())?;
            }
        }
        if !self.rows.is_empty() {
            writeln!(out)?;
            let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::human).collect()).collect();
            let widths: Vec<usize> = (0..self.columns.len())
                .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
                .collect();
            let line = |fields: Vec<&str>| {
                fields
                    .iter()
                    .zip(&widths)
                    .map(|(f, w)| format!("{f:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(out, "  {}", line(self.columns.clone()))?;
            for r in &cells {
                writeln!(out, "  {}", line(r.iter().map(String::as_str).collect()))?;
            }
        }
        writeln!(out)?;
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{tag}  {}: {}", c.name, c.detail)?;
        }
        writeln!(out, "wall time {wall:.3} s")
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(compact).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", json!({"seed": 1}), &["a", "b"]);
        r.row(vec![Cell::num(1.5), Cell::Int(2)]);
        r.row(vec![Cell::num(f64::NAN), Cell::Missing("diverged".into())]);
        r.check("ok", true, "fine");
        r
    }

    #[test]
    fn non_finite_becomes_missing() {
        assert!(matches!(Cell::num(f64::INFINITY), Cell::Missing(_)));
        assert!(matches!(Cell::num(0.0), Cell::Num(_)));
    }

    #[test]
    fn csv_gains_reason_column_only_when_needed() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b,reason");
        assert_eq!(lines[1], "1.5e0,2,");
        assert!(lines[2].starts_with(",,non-finite value NaN; diverged"));

        let mut clean = Report::new("demo", json!({}), &["a"]);
        clean.row(vec![Cell::num(3.0)]);
        let mut buf = Vec::new();
        clean.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a\n3e0\n");
    }

    #[test]
    fn json_rows_use_null_and_reason() {
        let v = sample().to_json(0.0, 0.1);
        assert_eq!(v["rows"][0]["a"], 1.5);
        assert!(v["rows"][1]["a"].is_null());
        assert!(v["rows"][1]["reason"].as_str().unwrap().contains("diverged"));
        assert_eq!(v["passed"], true);
        assert_eq!(v["schema"], 1);
    }

    #[test]
    fn failed_check_fails_report() {
        let mut r = sample();
        r.check("bad", false, "nope");
        assert!(!r.passed());
        let mut buf = Vec::new();
        r.write_human(&mut buf, 0.0).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("FAIL  bad: nope"));
    }
}
