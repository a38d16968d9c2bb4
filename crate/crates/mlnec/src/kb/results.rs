//! Result tables: one row per (fluent instance, time-point), ordered by
//! fluent then time so repeated runs emit byte-identical files.

use std::fmt::Write as _;

/// Marginal tables carry probabilities, MAP tables carry truth values.
#[derive(Clone, PartialEq, Debug)]
pub enum ResultsTable {
    Marginal(Vec<(String, u32, f64)>),
    Assignment(Vec<(String, u32, bool)>),
}

pub fn serialize_results(table: &ResultsTable) -> String {
    match table {
        ResultsTable::Marginal(rows) => {
            let mut rows = rows.clone();
            rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
            let mut out = String::from("time,fluent,probability\n");
            for (fluent, time, p) in rows {
                let _ = writeln!(out, "{time},{fluent},{p:.4}");
            }
            out
        }
        ResultsTable::Assignment(rows) => {
            let mut rows = rows.clone();
            rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
            let mut out = String::from("time,fluent,truth\n");
            for (fluent, time, v) in rows {
                let _ = writeln!(out, "{time},{fluent},{v}");
            }
            out
        }
    }
}
