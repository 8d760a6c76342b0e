//! Command reports and their JSON, CSV and Markdown renderings.
//!
//! Computed numbers are rounded to 6 significant digits in every format.
//! The echoed input configuration keeps full precision so that it parses back
//! to the same configuration. Rendering is deterministic: the same report
//! always yields the same bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format \"{other}\" (expected json, csv or markdown)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => num_json(*v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }

    fn to_plain(&self) -> String {
        match self {
            Cell::Num(v) => format_sig6(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rounds to 6 significant digits.
pub fn round_sig6(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of the 6-significant-digit rounding.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let r = round_sig6(v);
        // normalise -0 so that the output is sign-stable
        if r == 0.0 { "0".into() } else { r.to_string() }
    }
}

fn num_json(v: f64) -> Value {
    if v.is_finite() {
        let r = round_sig6(v);
        json!(if r == 0.0 { 0.0 } else { r })
    } else {
        json!(format_sig6(v))
    }
}

/// How a table is laid out in Markdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One line per row.
    Rows,
    /// Rows become columns: the first column's values form the header line.
    Transposed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SectionContent {
    Fields(Vec<(String, Cell)>),
    Table { headers: Vec<String>, rows: Vec<Vec<Cell>>, layout: Layout },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub title: String,
    pub content: SectionContent,
}

impl Section {
    pub fn fields(name: &str, title: &str, fields: Vec<(&str, Cell)>) -> Self {
        Section {
            name: name.into(),
            title: title.into(),
            content: SectionContent::Fields(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect()),
        }
    }

    pub fn table(name: &str, title: &str, headers: &[&str], rows: Vec<Vec<Cell>>, layout: Layout) -> Self {
        Section {
            name: name.into(),
            title: title.into(),
            content: SectionContent::Table {
                headers: headers.iter().map(|h| h.to_string()).collect(),
                rows,
                layout,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub tool_version: String,
    pub config_digest: String,
    pub input: Value,
    pub sections: Vec<Section>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str, input: Value) -> Self {
        let canonical = serde_json::to_string(&input).expect("json value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        Report {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_digest: hex,
            input,
            sections: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Value {
        let sections: Vec<Value> = self
            .sections
            .iter()
            .map(|s| {
                let mut obj = Map::new();
                obj.insert("name".into(), json!(s.name));
                obj.insert("title".into(), json!(s.title));
                match &s.content {
                    SectionContent::Fields(fields) => {
                        let map: Map<String, Value> = fields.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
                        obj.insert("fields".into(), Value::Object(map));
                    }
                    SectionContent::Table { headers, rows, .. } => {
                        obj.insert("headers".into(), json!(headers));
                        let rows: Vec<Value> =
                            rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
                        obj.insert("rows".into(), Value::Array(rows));
                    }
                }
                Value::Object(obj)
            })
            .collect();
        json!({
            "command": self.command,
            "tool_version": self.tool_version,
            "config_digest": self.config_digest,
            "input": self.input,
            "sections": sections,
            "warnings": self.warnings,
        })
    }
}

pub fn render_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("json value serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => render_csv(report).into_bytes(),
        Format::Markdown => render_markdown(report).into_bytes(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One block per section: a `# name` line, a header line and the rows.
/// Field sections use the header `key,value`. Warnings come last.
fn render_csv(report: &Report) -> String {
    let mut out = String::new();
    for (i, s) in report.sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {}", s.name);
        match &s.content {
            SectionContent::Fields(fields) => {
                out.push_str("key,value\n");
                for (k, v) in fields {
                    let _ = writeln!(out, "{},{}", csv_field(k), csv_field(&v.to_plain()));
                }
            }
            SectionContent::Table { headers, rows, .. } => {
                let _ = writeln!(out, "{}", headers.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
                for row in rows {
                    let line: Vec<String> = row.iter().map(|c| csv_field(&c.to_plain())).collect();
                    let _ = writeln!(out, "{}", line.join(","));
                }
            }
        }
    }
    if !report.warnings.is_empty() {
        out.push_str("\n# warnings\nwarning\n");
        for w in &report.warnings {
            let _ = writeln!(out, "{}", csv_field(w));
        }
    }
    out
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn md_table(out: &mut String, headers: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", headers.iter().map(|h| md_escape(h)).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(headers.len()));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.iter().map(|c| md_escape(c)).collect::<Vec<_>>().join(" | "));
    }
}

fn render_markdown(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} report\n", report.command);
    let _ = writeln!(out, "- tool version: {}", report.tool_version);
    let _ = writeln!(out, "- config digest: `{}`", report.config_digest);
    for s in &report.sections {
        let _ = writeln!(out, "\n## {}\n", s.title);
        match &s.content {
            SectionContent::Fields(fields) => {
                let rows: Vec<Vec<String>> = fields.iter().map(|(k, v)| vec![k.clone(), v.to_plain()]).collect();
                md_table(&mut out, &["key".into(), "value".into()], &rows);
            }
            SectionContent::Table { headers, rows, layout: Layout::Rows } => {
                let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(Cell::to_plain).collect()).collect();
                md_table(&mut out, headers, &rows);
            }
            SectionContent::Table { headers, rows, layout: Layout::Transposed } => {
                let mut new_headers = vec![headers[0].clone()];
                new_headers.extend(rows.iter().map(|r| r[0].to_plain()));
                let new_rows: Vec<Vec<String>> = (1..headers.len())
                    .map(|c| {
                        let mut line = vec![headers[c].clone()];
                        line.extend(rows.iter().map(|r| r.get(c).map(Cell::to_plain).unwrap_or_default()));
                        line
                    })
                    .collect();
                md_table(&mut out, &new_headers, &new_rows);
            }
        }
    }
    if !report.warnings.is_empty() {
        out.push_str("\n## Warnings\n\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(warnings: Vec<String>) -> Report {
        let mut r = Report::new("tabulate", json!({"b": 1, "a": [0.1, null]}));
        r.sections.push(Section::table(
            "tradeoff",
            "Accuracy budget per time gap",
            &["t_g_s", "Px_m", "Py_m", "Pz_m"],
            vec![
                vec![0.1.into(), 0.29.into(), 0.43.into(), 0.14.into()],
                vec![1.0.into(), 0.2.into(), "infeasible".into(), 0.05.into()],
            ],
            Layout::Transposed,
        ));
        r.sections.push(Section::fields("parameters", "Parameters", vec![("t_delay_s", 0.0.into()), ("ok", true.into())]));
        r.warnings = warnings;
        r
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.25), "0.25");
        assert_eq!(format_sig6(0.1 + 0.2), "0.3");
        assert_eq!(format_sig6(0.19995833), "0.199958");
        assert_eq!(format_sig6(1234567.0), "1234570");
        assert_eq!(format_sig6(-0.0), "0");
        assert_eq!(format_sig6(f64::INFINITY), "inf");
        assert_eq!(round_sig6(2.7394e-7), 2.7394e-7);
    }

    #[test]
    fn csv_header() {
        let csv = String::from_utf8(render_report(&sample(vec![]), Format::Csv)).unwrap();
        assert!(csv.contains("# tradeoff\nt_g_s,Px_m,Py_m,Pz_m\n0.1,0.29,0.43,0.14\n1,0.2,infeasible,0.05\n"));
        assert!(!csv.contains("# warnings"));
    }

    #[test]
    fn markdown_warnings_only_when_present() {
        let md = String::from_utf8(render_report(&sample(vec![]), Format::Markdown)).unwrap();
        assert!(!md.contains("Warnings"));
        assert!(md.contains("| t_g_s | 0.1 | 1 |"));
        assert!(md.contains("| Py_m | 0.43 | infeasible |"));
        let md = String::from_utf8(render_report(&sample(vec!["look".into()]), Format::Markdown)).unwrap();
        assert!(md.contains("## Warnings\n\n- look\n"));
    }

    #[test]
    fn rendering_is_deterministic() {
        for f in [Format::Json, Format::Csv, Format::Markdown] {
            assert_eq!(render_report(&sample(vec![]), f), render_report(&sample(vec![]), f));
        }
    }

    #[test]
    fn json_sorted_and_rounded() {
        let text = String::from_utf8(render_report(&sample(vec![]), Format::Json)).unwrap();
        let a = text.find("\"command\"").unwrap();
        let b = text.find("\"config_digest\"").unwrap();
        let c = text.find("\"input\"").unwrap();
        assert!(a < b && b < c);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["sections"][0]["rows"][0][1], json!(0.29));
        assert_eq!(v["config_digest"].as_str().unwrap().len(), 64);
    }
}
