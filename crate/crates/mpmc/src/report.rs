//! Run records in text and json-lines form.

use mpmc_core::checker::ProbInterval;
use mpmc_core::Ternary;
use serde::Serialize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timings {
    pub steady: f64,
    pub explore: f64,
    pub check: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub formula: String,
    pub bindings: Vec<(String, String)>,
    pub verdict: Ternary,
    /// Bounds for the outermost `P` or `S` operator.
    pub interval: Option<ProbInterval>,
    /// Explored states.
    pub states: usize,
    /// Explored plus frontier states.
    pub total_states: usize,
    /// Fewest transitions from the initial state to the frontier.
    pub depth: Option<usize>,
    /// `None` leaves timings out of the output.
    pub timings: Option<Timings>,
    pub epsilon: f64,
    pub steady_epsilon: Option<f64>,
    pub strategy: String,
    /// The state cap stopped some exploration early.
    pub capped: bool,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// 0 true, 1 false, 2 unknown.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Ternary::True => 0,
            Ternary::False => 1,
            Ternary::Unknown => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    JsonLines,
}

#[derive(Serialize)]
struct Record<'a> {
    formula: &'a str,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    bindings: serde_json::Map<String, serde_json::Value>,
    verdict: &'static str,
    interval: Option<[f64; 2]>,
    states: usize,
    total_states: usize,
    depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
    epsilon: f64,
    steady_epsilon: Option<f64>,
    strategy: &'a str,
    capped: bool,
    warnings: &'a [String],
}

pub const TEXT_HEADER: &str = "formula\tsweep\teps\tdepth\tsteady_s\texplore_s\tcheck_s\tn\tverdict\t[lo, hi]";

/// One line, without the trailing newline.
pub fn emit_report(r: &RunReport, format: Format) -> String {
    match format {
        Format::Text => text_row(r),
        Format::JsonLines => {
            let rec = Record {
                formula: &r.formula,
                bindings: r
                    .bindings
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect(),
                verdict: r.verdict.as_str(),
                interval: r.interval.map(|iv| [iv.lo, iv.hi]),
                states: r.states,
                total_states: r.total_states,
                depth: r.depth,
                timings: r.timings,
                epsilon: r.epsilon,
                steady_epsilon: r.steady_epsilon,
                strategy: &r.strategy,
                capped: r.capped,
                warnings: &r.warnings,
            };
            serde_json::to_string(&rec).expect("report serializes")
        }
    }
}

fn text_row(r: &RunReport) -> String {
    let sweep = if r.bindings.is_empty() {
        "-".to_string()
    } else {
        r.bindings
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    let secs = |f: fn(&Timings) -> f64| r.timings.as_ref().map_or("-".to_string(), |t| format!("{:.1}", f(t)));
    let depth = r.depth.map_or("inf".to_string(), |d| d.to_string());
    let interval = r.interval.map_or("-".to_string(), |iv| iv.to_string());
    let mut row = format!(
        "{}\t{sweep}\t{:e}\t{depth}\t{}\t{}\t{}\t{}\t{}\t{interval}",
        r.formula,
        r.epsilon,
        secs(|t| t.steady),
        secs(|t| t.explore),
        secs(|t| t.check),
        r.states,
        r.verdict.as_str(),
    );
    if r.capped {
        row.push_str("\t(state cap reached)");
    }
    row
}
