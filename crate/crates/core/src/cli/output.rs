//! Plain CSV and Markdown emission. Numbers use Rust's shortest round-trip
//! formatting, so output never depends on locale.

use std::fs;
use std::io;
use std::path::Path;

pub const COUNT_HEADER: &str = "lambda,count,semiclassical,seconds";
pub const REPORT_HEADER: &str = "regime,a_theory,a_fit,C_theory,C_fit,rel_err";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub lambda: f64,
    pub count: u64,
    pub semiclassical: f64,
    pub seconds: f64,
}

impl CountRow {
    fn line(&self) -> String {
        format!("{},{},{},{}", self.lambda, self.count, self.semiclassical, self.seconds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub regime: String,
    pub a_theory: f64,
    pub a_fit: f64,
    pub c_theory: f64,
    pub c_fit: f64,
    pub rel_err: f64,
}

fn write_lines(path: &Path, header: &str, lines: impl IntoIterator<Item = String>) -> io::Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for line in lines {
        text.push_str(&line);
        text.push('\n');
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)
}

/// Writes the count table; an empty run yields a header-only file.
pub fn export_csv(path: &Path, rows: &[CountRow]) -> io::Result<()> {
    write_lines(path, COUNT_HEADER, rows.iter().map(CountRow::line))
}

pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> io::Result<()> {
    write_lines(path, header, rows.iter().map(|r| r.join(",")))
}

/// Reads `(λ, count)` pairs from a file written by [`export_csv`].
pub fn read_counts(path: &Path) -> io::Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == COUNT_HEADER => {}
        other => {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("expected header `{COUNT_HEADER}`, found {other:?}"),
            ))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| s.trim().parse::<f64>();
            match (fields.first().map(|s| parse(s)), fields.get(1).map(|s| parse(s))) {
                (Some(Ok(l)), Some(Ok(c))) if fields.len() == 4 => Ok((l, c)),
                _ => Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("malformed row {}: `{line}`", i + 2),
                )),
            }
        })
        .collect()
}

pub fn report_lines(rows: &[ReportRow]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.regime, r.a_theory, r.a_fit, r.c_theory, r.c_fit, r.rel_err
            )
        })
        .collect()
}

pub fn write_report(csv: &Path, markdown: &Path, rows: &[ReportRow]) -> io::Result<()> {
    write_lines(csv, REPORT_HEADER, report_lines(rows))?;
    fs::write(markdown, markdown_table(rows))
}

pub fn markdown_table(rows: &[ReportRow]) -> String {
    let mut out = String::from("| regime | a (theory) | a (fit) | C (theory) | C (fit) | rel. error |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {:.4} | {:.4} | {:.6} | {:.6} | {:.4} |\n",
            r.regime, r.a_theory, r.a_fit, r.c_theory, r.c_fit, r.rel_err
        ));
    }
    out
}
