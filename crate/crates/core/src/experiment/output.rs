//! CSV and JSON rendering of result rows.
//!
//! The CSV starts with a schema line, then a header of the row field names,
//! then one line per row. Floats use Rust's shortest round-trip formatting,
//! so identical rows always render to identical bytes.

use std::fmt::Write as _;

use serde::Serialize;

use super::{ResultRow, RowRecord};

pub const SCHEMA_LINE: &str = "# schema qpsk-usd-results v1";

pub const CSV_HEADER: &str = "method,alpha_sq,M,eta_path,eta_det,xi,nu,discard_factor,\
p_conclusive,p_conclusive_se,p_error,p_error_se,n_trials,seed";

fn csv_line(out: &mut String, r: &ResultRow) {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.method,
        r.alpha_sq,
        r.stages,
        r.eta_path,
        r.eta_det,
        r.xi,
        r.nu,
        r.discard_factor,
        r.p_conclusive,
        r.p_conclusive_se,
        r.p_error,
        r.p_error_se,
        r.n_trials,
        r.seed
    )
    .expect("writing to a String");
}

pub fn to_csv(rows: &[RowRecord]) -> String {
    let mut out = String::new();
    out.push_str(SCHEMA_LINE);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for record in rows {
        csv_line(&mut out, &record.row);
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    rows: &'a [RowRecord],
}

/// Pretty-printed JSON with the binomial errors and empty-batch counts.
pub fn to_json(rows: &[RowRecord]) -> String {
    let summary = Summary {
        schema: "qpsk-usd-results v1",
        rows,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("rows serialize");
    text.push('\n');
    text
}
