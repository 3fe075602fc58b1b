//! Delimited text with a leading `#` comment block.
//!
//! Comment lines of the form `# key: value` become metadata entries; the
//! first non-comment line is the column header.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// 1-based line number in the source text.
    pub line: u64,
    pub fields: Vec<String>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut skipped = 0u64;
        for line in text.lines() {
            let trimmed = line.trim();
            if let Some(c) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = c.split_once(':') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                skipped += 1;
            } else if trimmed.is_empty() {
                skipped += 1;
            } else {
                break;
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(false).from_reader(text.as_bytes());
        let headers: Vec<String> =
            rdr.headers().map_err(|e| Error::Parse { line: skipped + 1, message: e.to_string() })?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Parse { line: skipped + 1, message: "missing column header".into() });
        }
        // csv's own line counter skips blank lines; count from the byte
        // offset, incrementally since records arrive in order.
        let bytes = text.as_bytes();
        let mut cursor = (0usize, 1u64);
        let mut line_at = |byte: u64| {
            let mut b = byte as usize;
            while b < bytes.len() && matches!(bytes[b], b'\n' | b'\r') {
                b += 1;
            }
            let (from, line) = if b >= cursor.0 { cursor } else { (0, 1) };
            let line = line + bytes[from..b].iter().filter(|&&c| c == b'\n').count() as u64;
            cursor = (b, line);
            line
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map(|p| line_at(p.byte())).unwrap_or(0);
                    return Err(Error::Parse { line, message: e.to_string() });
                }
            };
            let line = rec.position().map(|p| line_at(p.byte())).unwrap_or(0);
            rows.push(Row { line, fields: rec.iter().map(str::to_string).collect() });
        }
        Ok(Table { meta, headers, rows })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn meta_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.meta.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn push_row(&mut self, fields: Vec<String>) {
        let line = self.rows.len() as u64 + 1;
        self.rows.push(Row { line, fields });
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| Error::Malformed(format!("missing column `{name}`")))
    }

    /// Checks that the header is exactly `expected`, in order.
    pub fn expect_columns(&self, expected: &[&str]) -> Result<()> {
        if self.headers.iter().map(String::as_str).eq(expected.iter().copied()) {
            Ok(())
        } else {
            Err(Error::Malformed(format!("expected columns `{}`, found `{}`", expected.join(","), self.headers.join(","))))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(&r.fields).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input"));
        out
    }
}

impl Row {
    pub fn str(&self, idx: usize) -> &str {
        self.fields.get(idx).map(String::as_str).unwrap_or("")
    }

    pub fn f64(&self, idx: usize, name: &str) -> Result<f64> {
        let s = self.str(idx);
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse { line: self.line, message: format!("`{name}`: expected a finite number, got `{s}`") })
    }

    pub fn opt_f64(&self, idx: usize, name: &str) -> Result<Option<f64>> {
        if self.str(idx).is_empty() {
            Ok(None)
        } else {
            self.f64(idx, name).map(Some)
        }
    }

    pub fn bool(&self, idx: usize, name: &str) -> Result<bool> {
        match self.str(idx) {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            s => Err(Error::Parse { line: self.line, message: format!("`{name}`: expected 0/1, got `{s}`") }),
        }
    }

    pub fn parse_error(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, message: message.into() }
    }
}

/// Fixed six-decimal formatting used by report artifacts.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_meta_header_and_rows_with_line_numbers() {
        let text = "# sample_rate_hz: 1000\n# note\n a , b\n1,2\n\n3,4\n";
        let t = Table::parse(text).unwrap();
        assert_eq!(t.meta("sample_rate_hz"), Some("1000"));
        assert_eq!(t.headers, vec!["a", "b"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].line, 4);
        assert_eq!(t.rows[1].line, 6);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = Table::parse("a,b\n1,2,3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn bad_number_reports_line() {
        let t = Table::parse("a\nx\n").unwrap();
        let err = t.rows[0].f64(0, "a").unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, message: "`a`: expected a finite number, got `x`".into() });
    }

    #[test]
    fn text_round_trips() {
        let mut t = Table::new(&["x", "y"]);
        t.push_meta("seed", "7");
        t.push_row(vec!["1".into(), "a b".into()]);
        let text = t.to_text();
        let back = Table::parse(&text).unwrap();
        assert_eq!(back.to_text(), text);
    }
}
