//! Report emission: human summary on stdout by default, raw JSON with
//! `--json`, and the primary artifact written to `--out` when given.

use crate::Cli;
use channel_moments::report::VerificationReport;
use serde_json::Value;
use std::io::Write;

pub fn write_out_file(cli: &Cli, contents: &str) -> std::io::Result<()> {
    if let Some(path) = &cli.out {
        let mut f = std::fs::File::create(path)?;
        f.write_all(contents.as_bytes())?;
        if !contents.ends_with('\n') {
            f.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn human_summary(report: &VerificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("check: {}\n", report.check));
    for (k, v) in &report.params {
        out.push_str(&format!("  param {k} = {}\n", render_value(v)));
    }
    for (k, v) in &report.values {
        out.push_str(&format!("  {k} = {}\n", render_value(v)));
    }
    out.push_str(&format!(
        "result: {} (tolerance {:e})",
        if report.pass { "PASS" } else { "FAIL" },
        report.tolerance
    ));
    out
}

/// Print the report (JSON or human form) and mirror the JSON to `--out`.
pub fn emit_report(cli: &Cli, report: &VerificationReport) -> std::io::Result<()> {
    let json = report.to_json();
    if cli.json {
        println!("{json}");
    } else {
        println!("{}", human_summary(report));
    }
    write_out_file(cli, &json)
}
