//! Record formatting shared by the subcommands.

use std::io::{self, Write};

use clap::ValueEnum;
use nestrec::CheckReport;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// `index value` lines (b-file layout) or one report line per check.
    Plain,
    Csv,
    /// One JSON object per line.
    Json,
}

enum Out {
    Raw(Box<dyn Write>),
    Csv(csv::Writer<Box<dyn Write>>),
}

pub struct Sink {
    out: Out,
    header_done: bool,
    json: bool,
}

const REPORT_HEADER: [&str; 9] =
    ["check_name", "m", "n_lo", "n_hi", "passed", "failure_n", "expected", "actual", "context"];

impl Sink {
    pub fn new(w: Box<dyn Write>, format: Format) -> Self {
        let out = match format {
            Format::Csv => Out::Csv(csv::Writer::from_writer(w)),
            _ => Out::Raw(w),
        };
        Self { out, header_done: false, json: format == Format::Json }
    }

    fn csv_header(&mut self, header: &[&str]) -> io::Result<()> {
        if let Out::Csv(w) = &mut self.out {
            if !self.header_done {
                w.write_record(header)?;
                self.header_done = true;
            }
        }
        Ok(())
    }

    /// `(index, value)` records. `label` names the value column.
    pub fn pairs(&mut self, label: &str, it: impl Iterator<Item = (i128, i128)>) -> io::Result<()> {
        self.csv_header(&["n", label])?;
        let json = self.json;
        match &mut self.out {
            Out::Csv(w) => {
                for (n, v) in it {
                    w.write_record([n.to_string(), v.to_string()])?;
                }
            }
            Out::Raw(w) => {
                for (n, v) in it {
                    if json {
                        writeln!(w, "{{\"n\":{n},\"{label}\":{v}}}")?;
                    } else {
                        writeln!(w, "{n} {v}")?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn report(&mut self, r: &CheckReport) -> io::Result<()> {
        self.csv_header(&REPORT_HEADER)?;
        let json = self.json;
        match &mut self.out {
            Out::Raw(w) if json => writeln!(w, "{}", r.to_json()),
            Out::Raw(w) => writeln!(w, "{r}"),
            Out::Csv(w) => {
                let (fail_n, exp, act, ctx) = match &r.counterexample {
                    Some(c) => (c.n.to_string(), c.expected.to_string(), c.actual.to_string(), c.context.clone()),
                    None => Default::default(),
                };
                w.write_record([
                    r.check_name.clone(),
                    r.m.to_string(),
                    r.range.0.to_string(),
                    r.range.1.to_string(),
                    r.passed.to_string(),
                    fail_n,
                    exp,
                    act,
                    ctx,
                ])?;
                Ok(())
            }
        }
    }

    /// Free-form context. CSV has no comment syntax, so there it goes to stderr.
    pub fn note(&mut self, text: &str) -> io::Result<()> {
        let json = self.json;
        match &mut self.out {
            Out::Raw(w) if json => writeln!(w, "{}", serde_json::json!({ "note": text })),
            Out::Raw(w) => writeln!(w, "# {text}"),
            Out::Csv(_) => {
                eprintln!("note: {text}");
                Ok(())
            }
        }
    }

    pub fn finish(self) -> io::Result<()> {
        match self.out {
            Out::Raw(mut w) => w.flush(),
            Out::Csv(mut w) => w.flush(),
        }
    }
}
