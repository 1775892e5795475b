use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solution::Sense;

/// One `(function, method, sense)` line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub function: String,
    /// `opt`, `oracle` or a GA preset name
    pub method: String,
    pub sense: Sense,
    pub value_mean: Option<f64>,
    /// best over runs in the row's sense
    pub value_best: Option<f64>,
    pub time_mean_s: Option<f64>,
    /// certified relative gap, `opt` rows only
    pub gap: Option<f64>,
    pub value_worst: Option<f64>,
    pub runs: usize,
    pub incomplete: bool,
    /// space-separated coordinates of the best run
    pub x_best: String,
    /// `column:row` of the farm cell containing `x_best`, scenario jobs only
    pub cell: String,
    pub note: String,
}

impl ReportRow {
    pub fn new(function: &str, method: &str, sense: Sense) -> Self {
        ReportRow {
            function: function.to_string(),
            method: method.to_string(),
            sense,
            value_mean: None,
            value_best: None,
            time_mean_s: None,
            gap: None,
            value_worst: None,
            runs: 0,
            incomplete: false,
            x_best: String::new(),
            cell: String::new(),
            note: String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(Error::Config(format!("unknown report format `{other}` (csv, json, md)"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

const HEADER: [&str; 13] = [
    "function",
    "method",
    "sense",
    "value_mean",
    "value_best",
    "time_mean_s",
    "gap",
    "value_worst",
    "runs",
    "incomplete",
    "x_best",
    "cell",
    "note",
];

impl Report {
    pub fn rows_for<'a>(&'a self, function: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.function == function)
    }

    /// The report with every timing field cleared.
    pub fn without_timings(&self) -> Report {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.time_mean_s = None;
        }
        r
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(Report { rows })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Tables grouped per function: maximum, its time, minimum, its time.
    pub fn to_markdown(&self) -> String {
        let mut methods: Vec<&str> = Vec::new();
        let mut functions: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method.as_str()) {
                methods.push(&r.method);
            }
            if !functions.contains(&r.function.as_str()) {
                functions.push(&r.function);
            }
        }
        let mut s = String::new();
        let _ = write!(s, "| Function | Measurement |");
        for m in &methods {
            let _ = write!(s, " {m} |");
        }
        let _ = writeln!(s);
        let _ = write!(s, "|---|---|");
        for _ in &methods {
            let _ = write!(s, "---:|");
        }
        let _ = writeln!(s);
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        for f in &functions {
            for (sense, label) in [(Sense::Max, "Maximum"), (Sense::Min, "Minimum")] {
                let find = |m: &str| {
                    self.rows
                        .iter()
                        .find(|r| r.function == *f && r.method == m && r.sense == sense)
                };
                let _ = write!(s, "| {f} | {label} |");
                for m in &methods {
                    let cell = find(m).map_or("-".to_string(), |r| {
                        let mut c = fmt(r.value_mean);
                        if r.incomplete {
                            c.push_str(" (incomplete)");
                        }
                        c
                    });
                    let _ = write!(s, " {cell} |");
                }
                let _ = writeln!(s);
                let _ = write!(s, "| {f} | Time (s) |");
                for m in &methods {
                    let cell = find(m).map_or("-".to_string(), |r| fmt(r.time_mean_s));
                    let _ = write!(s, " {cell} |");
                }
                let _ = writeln!(s);
            }
        }
        s
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
            }
            Format::Json => self.to_json(),
            Format::Markdown => Ok(self.to_markdown()),
        }
    }

    pub fn emit(&self, format: Format, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.render(format)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
