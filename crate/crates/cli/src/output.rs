//! Rendering of command outcomes.

use std::time::Duration;

use serde::Serialize;

use crate::run::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Envelope<'a> {
    #[serde(flatten)]
    outcome: &'a Outcome,
    timing_ms: f64,
}

/// Pretty JSON with the wall time as the last field, `timing_ms`.
pub fn to_json(outcome: &Outcome, elapsed: Duration) -> String {
    let env = Envelope {
        outcome,
        timing_ms: (elapsed.as_secs_f64() * 1e3 * 1e3).round() / 1e3,
    };
    serde_json::to_string_pretty(&env).expect("reports serialize")
}

/// The JSON body without `timing_ms`; identical inputs give identical bytes.
pub fn body_json(outcome: &Outcome) -> String {
    serde_json::to_string_pretty(outcome).expect("reports serialize")
}

/// One row per atom of every witness comparison:
/// `check_id,atom,block,lhs,rhs,gap`.
pub fn to_csv(outcome: &Outcome) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check_id", "atom", "block", "lhs", "rhs", "gap"]).expect("in-memory write");
    for rec in &outcome.records {
        for wit in &rec.witnesses {
            for row in &wit.rows {
                w.write_record([
                    rec.id.clone(),
                    row.atom.to_string(),
                    row.block.to_string(),
                    row.lhs.to_string(),
                    row.rhs.to_string(),
                    row.gap.to_string(),
                ])
                .expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
