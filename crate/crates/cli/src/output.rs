use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mhs_core::report::{CheckStats, ResidualReport};
use serde_json::{Map, Value};

use crate::Format;

pub const SCHEMA: &str = "v1";

/// Result of one command in every output format.
pub struct Outcome {
    pub command: &'static str,
    pub passed: bool,
    pub payload: Value,
    pub text: String,
    pub csv: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str, passed: bool, payload: Value, text: String) -> Self {
        Outcome {
            command,
            passed,
            payload,
            text,
            csv: None,
        }
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// Top-level JSON object: `schema`, `command`, `passed` and the payload's
/// fields. Keys are sorted, so equal payloads give equal bytes.
pub fn json_document(o: &Outcome) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), SCHEMA.into());
    m.insert("command".into(), o.command.into());
    m.insert("passed".into(), o.passed.into());
    match &o.payload {
        Value::Object(p) => {
            for (k, v) in p {
                m.insert(k.clone(), v.clone());
            }
        }
        v => {
            m.insert("result".into(), v.clone());
        }
    }
    Value::Object(m)
}

pub fn render(o: &Outcome, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json_document(o))?;
            s.push('\n');
            s
        }
        Format::Text => o.text.clone(),
        Format::Csv => match &o.csv {
            Some(c) => c.clone(),
            None => bail!("csv output is not available for '{}'", o.command),
        },
    })
}

pub fn emit(o: &Outcome, format: Format, out: Option<&Path>) -> Result<()> {
    let s = render(o, format)?;
    match out {
        Some(p) => std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(s.as_bytes())?,
    }
    Ok(())
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn check_line(c: &CheckStats) -> String {
    format!(
        "  {:<26} max {:<11.3e} mean {:<11.3e} tol {:<8.1e} n {:<5} failed {:<4} {}",
        c.name,
        c.max,
        c.mean,
        c.tolerance,
        c.n_ok,
        c.n_failed,
        if c.passed { "PASS" } else { "FAIL" }
    )
}

pub fn report_text(r: &ResidualReport) -> String {
    let mut s = String::new();
    let p = &r.provenance;
    let _ = writeln!(s, "{}", r.subject);
    let _ = writeln!(
        s,
        "  samples: {} {} seed {} on {}",
        p.count, p.generator, p.seed, p.domain
    );
    for c in &r.checks {
        let _ = writeln!(s, "{}", check_line(c));
        if let Some(e) = &c.first_error {
            let _ = writeln!(s, "    first error: {e}");
        }
    }
    for n in &r.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    s
}

pub fn reports_csv(reports: &[&ResidualReport]) -> String {
    let mut s = String::from("subject,check,max,mean,rms,n_ok,n_failed,tolerance,passed\n");
    for r in reports {
        for c in &r.checks {
            let _ = writeln!(
                s,
                "\"{}\",{},{},{},{},{},{},{},{}",
                r.subject.replace('"', "\"\""),
                c.name,
                num(c.max),
                num(c.mean),
                num(c.rms),
                c.n_ok,
                c.n_failed,
                num(c.tolerance),
                c.passed
            );
        }
    }
    s
}
