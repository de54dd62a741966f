//! Trace and summary serialization.
//!
//! Iteration records go to the trace sink as JSON lines or CSV; both formats
//! carry the same fields and the same shortest-round-trip decimal numbers,
//! so they encode identical numeric content. Run summaries, deduplicated
//! points and certificates form a single JSON document written separately.

use std::fmt::Write as _;
use std::str::FromStr;

use conical_core::{DegeneracyCertificate, GridCell, IterationRecord, Outcome, SolveReport};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    TraceJsonLines,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "trace-json-lines" | "jsonl" => Ok(OutputFormat::TraceJsonLines),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!(
                "unknown format `{other}` (expected trace-json-lines or csv)"
            )),
        }
    }
}

/// One line of the trace output.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub run_id: usize,
    pub method: &'static str,
    pub iter: usize,
    pub point: Vec<f64>,
    pub gap: f64,
    pub gap2: Option<f64>,
    pub step_norm: f64,
    pub det_j: Option<f64>,
    pub cond_j: Option<f64>,
    pub pinv_used: bool,
    pub evals: usize,
}

impl TraceRow {
    pub fn from_record(run_id: usize, method: &'static str, rec: &IterationRecord) -> Self {
        TraceRow {
            run_id,
            method,
            iter: rec.index,
            point: rec.point.as_slice().to_vec(),
            gap: rec.gap,
            gap2: rec.gap2,
            step_norm: rec.step_norm,
            det_j: rec.det_j,
            cond_j: rec.cond_j,
            pinv_used: rec.used_pseudoinverse,
            evals: rec.evals,
        }
    }
}

pub fn rows_from_report(
    run_id: usize,
    method: &'static str,
    report: &SolveReport,
) -> Vec<TraceRow> {
    report
        .trace
        .iter()
        .map(|rec| TraceRow::from_record(run_id, method, rec))
        .collect()
}

/// Shortest decimal that round-trips to the same f64 (what `{}` prints).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn render_trace(rows: &[TraceRow], d: usize, format: OutputFormat) -> String {
    match format {
        OutputFormat::TraceJsonLines => {
            let mut out = String::new();
            for row in rows {
                out.push_str(&serde_json::to_string(row).expect("trace rows serialize"));
                out.push('\n');
            }
            out
        }
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str("run_id,method,iter");
            for a in 0..d {
                let _ = write!(out, ",point_{a}");
            }
            out.push_str(",gap,gap2,step_norm,det_j,cond_j,pinv_used,evals\n");
            for row in rows {
                let _ = write!(out, "{},{},{}", row.run_id, row.method, row.iter);
                for a in 0..d {
                    let _ = write!(out, ",{}", fmt_f64(row.point[a]));
                }
                let _ = writeln!(
                    out,
                    ",{},{},{},{},{},{},{}",
                    fmt_f64(row.gap),
                    fmt_opt(row.gap2),
                    fmt_f64(row.step_norm),
                    fmt_opt(row.det_j),
                    fmt_opt(row.cond_j),
                    row.pinv_used,
                    row.evals
                );
            }
            out
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub method: &'static str,
    pub start: Vec<f64>,
    pub outcome: Outcome,
    pub iterations: usize,
    pub evals: usize,
    pub pair_index: usize,
    pub final_point: Vec<f64>,
    pub final_gap: f64,
    pub min_gap: f64,
}

impl RunSummary {
    pub fn new(
        run_id: usize,
        method: &'static str,
        start: &conical_core::ParameterPoint,
        pair_index: usize,
        report: &SolveReport,
    ) -> Self {
        RunSummary {
            run_id,
            method,
            start: start.as_slice().to_vec(),
            outcome: report.outcome,
            iterations: report.iterations(),
            evals: report.total_evals(),
            pair_index,
            final_point: report.final_point.as_slice().to_vec(),
            final_gap: report.final_gap,
            min_gap: report.min_gap(),
        }
    }
}

/// A deduplicated converged point with its certificate.
#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub point: Vec<f64>,
    pub run_ids: Vec<usize>,
    pub certificate: Option<DegeneracyCertificate>,
    pub certificate_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanBlock {
    pub resolution: usize,
    pub region: [f64; 4],
    pub candidates: Vec<GridCell>,
    pub inconclusive: Vec<GridCell>,
}

/// Top-level machine-readable summary document.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub family: String,
    pub symmetry: String,
    pub mode: String,
    pub runs: Vec<RunSummary>,
    pub points: Vec<PointSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    pub exit_code: i32,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Merge converged run endpoints into clusters with the given radius; the
/// first member is the representative.
pub fn dedup_points(
    runs: &[(usize, &SolveReport)],
    merge_radius: f64,
) -> Vec<(conical_core::ParameterPoint, Vec<usize>)> {
    let mut clusters: Vec<(conical_core::ParameterPoint, Vec<usize>)> = Vec::new();
    for (run_id, report) in runs {
        if report.outcome != Outcome::Converged {
            continue;
        }
        let p = &report.final_point;
        match clusters
            .iter_mut()
            .find(|(rep, _)| rep.distance(p) <= merge_radius)
        {
            Some((_, ids)) => ids.push(*run_id),
            None => clusters.push((p.clone(), vec![*run_id])),
        }
    }
    clusters
}
