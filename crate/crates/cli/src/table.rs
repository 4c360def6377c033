//! Numeric CSV tables with a `#`-prefixed provenance header, and key-value
//! reports.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliError;

/// Prefix of the one header line that changes between identical runs.
pub const TIMESTAMP_PREFIX: &str = "created: ";

/// Plain decimal in [1e-4, 1e15), exponent form elsewhere. Both are the
/// shortest representation that parses back to the same value.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Header lines common to every output.
pub fn provenance(command: &str, seed: u64, config: &str) -> Vec<String> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    vec![
        format!("critspec {} {command}", env!("CARGO_PKG_VERSION")),
        format!("{TIMESTAMP_PREFIX}unix {secs}"),
        format!("seed: {seed}"),
        format!("config: {config}"),
    ]
}

fn write_comments(out: &mut String, comments: &[String]) {
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(comments: Vec<String>, header: &[&str]) -> Self {
        Self { comments, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        write_comments(&mut out, &self.comments);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| fmt_num(x))).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output"));
        out
    }

    /// Parses a rendered table. Errors name the offending line.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut comments = Vec::new();
        let mut offset = 0;
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(c) => {
                    comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                    offset += 1;
                }
                None => break,
            }
        }
        let body: String = text.lines().skip(offset).map(|l| format!("{l}\n")).collect();
        let schema = |line: u64, msg: String| CliError::Config(format!("line {}: {msg}", line + offset as u64));
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| schema(1, e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(schema(1, "missing column header".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                schema(line, format!("expected {} fields", header.len()))
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let row = rec
                .iter()
                .zip(&header)
                .map(|(f, h)| f.trim().parse::<f64>().map_err(|_| schema(line, format!("column {h}: {f:?} is not a number"))))
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        Ok(Self { comments, header, rows })
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Replaces the timestamp line with a fresh one.
    pub fn restamp(&mut self) {
        let fresh = provenance("", 0, "").swap_remove(1);
        for c in &mut self.comments {
            if c.starts_with(TIMESTAMP_PREFIX) {
                *c = fresh.clone();
            }
        }
    }
}

/// `key = value` lines under a provenance header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub comments: Vec<String>,
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn new(comments: Vec<String>) -> Self {
        Self { comments, entries: Vec::new() }
    }

    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn num(&mut self, key: &str, value: f64) {
        self.put(key, fmt_num(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        write_comments(&mut out, &self.comments);
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Self {
        let mut r = Report::default();
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                r.comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            } else if let Some((k, v)) = line.split_once(" = ") {
                r.entries.push((k.to_string(), v.to_string()));
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, -2.5, 1e-4, 9.99e-5, 123456.789, 1e15, 3.0e-300, f64::MAX, 0.1 + 0.2] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(1.5e-7), "1.5e-7");
        assert_eq!(fmt_num(42.0), "42");
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(vec!["a".into(), "created: unix 1".into()], &["x", "y"]);
        t.rows.push(vec![1.0, 2e-9]);
        t.rows.push(vec![-3.25, 7.0]);
        let text = t.render();
        let back = Table::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.render(), text);
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let text = "# one\n# two\nx,y\n1,2\n3,oops\n";
        let e = Table::parse(text).unwrap_err().to_string();
        assert!(e.contains("line 5"), "{e}");
        let e = Table::parse("x,y\n1,2\n3\n").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::new(vec!["c".into()]);
        r.num("nu", 0.5);
        r.put("clamped", "none");
        let back = Report::parse(&r.render());
        assert_eq!(back, r);
        assert_eq!(back.get("nu"), Some("0.5"));
    }
}
