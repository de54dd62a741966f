//! Command implementations. Each runner returns the rendered trace, the
//! summary document and the exit code; delivery to files or streams happens
//! at the edge.

use anyhow::Result;
use conical_core::{
    berry_loop, certify, minimize_gap_squared, solve, LoopSpec, MatrixFamily, MultiplicityMode,
    Outcome, PairChoice, ParameterPoint, Region2D, RotationClass, SolveReport,
};
use rayon::prelude::*;

use crate::config::{pair_label, RunSpec};
use crate::output::{
    dedup_points, render_trace, rows_from_report, PointSummary, RunSummary, ScanBlock, Summary,
    TraceRow,
};

/// Converged endpoints closer than this merge into one reported point.
pub const MERGE_RADIUS: f64 = 1e-6;

pub struct CommandOutput {
    pub trace: String,
    pub summary: String,
    pub exit_code: i32,
}

/// Exit taxonomy: 0 all converged, 2 any avoided crossing, 3 any
/// non-convergence, 4 budget exhaustion only, 1 usage errors (at the edge).
fn exit_code_for(outcomes: impl Iterator<Item = Outcome>) -> i32 {
    let mut avoided = false;
    let mut not_converging = false;
    let mut budget = false;
    for o in outcomes {
        match o {
            Outcome::Converged => {}
            Outcome::AvoidedCrossing => avoided = true,
            Outcome::NotConverging => not_converging = true,
            Outcome::BudgetExhausted => budget = true,
        }
    }
    if avoided {
        2
    } else if not_converging {
        3
    } else if budget {
        4
    } else {
        0
    }
}

struct NewtonRun {
    run_id: usize,
    start: ParameterPoint,
    mode: MultiplicityMode,
    pair_index: usize,
    report: SolveReport,
}

/// Runs the Newton iteration from every start concurrently; results keep
/// start order so output is deterministic.
fn newton_runs(spec: &RunSpec, starts: &[ParameterPoint]) -> Result<Vec<NewtonRun>> {
    let results: Vec<Result<NewtonRun>> = starts
        .par_iter()
        .enumerate()
        .map(|(run_id, start)| {
            let mode = spec.mode.resolved(&spec.family, start)?;
            let pair_index = match mode.pair {
                PairChoice::Index(k) => k,
                PairChoice::Auto => unreachable!("resolved mode has a concrete pair"),
            };
            let report = solve(&spec.family, start, &mode, &spec.solver)?;
            Ok(NewtonRun {
                run_id,
                start: start.clone(),
                mode,
                pair_index,
                report,
            })
        })
        .collect();
    results.into_iter().collect()
}

fn certified_points(spec: &RunSpec, runs: &[NewtonRun]) -> Vec<PointSummary> {
    let converged: Vec<(usize, &SolveReport)> = runs
        .iter()
        .map(|r| (r.run_id, &r.report))
        .collect::<Vec<_>>();
    dedup_points(&converged, MERGE_RADIUS)
        .into_iter()
        .map(|(rep, run_ids)| {
            let mode = runs
                .iter()
                .find(|r| r.run_id == run_ids[0])
                .map(|r| r.mode)
                .unwrap_or(spec.mode);
            match certify(&spec.family, &rep, &mode) {
                Ok(cert) => PointSummary {
                    point: rep.as_slice().to_vec(),
                    run_ids,
                    certificate: Some(cert),
                    certificate_error: None,
                },
                Err(err) => PointSummary {
                    point: rep.as_slice().to_vec(),
                    run_ids,
                    certificate: None,
                    certificate_error: Some(err.to_string()),
                },
            }
        })
        .collect()
}

fn summary_header(spec: &RunSpec, command: &str) -> (String, String, String) {
    (
        command.to_string(),
        spec.family.name().to_string(),
        format!("{}", spec.family.symmetry()),
    )
}

/// `locate`: one solve per start, deduplicated points with certificates.
pub fn run_locate(spec: &RunSpec) -> Result<CommandOutput> {
    let runs = newton_runs(spec, &spec.starts)?;
    let mut rows: Vec<TraceRow> = Vec::new();
    for run in &runs {
        rows.extend(rows_from_report(run.run_id, "newton", &run.report));
    }
    let run_summaries: Vec<RunSummary> = runs
        .iter()
        .map(|r| RunSummary::new(r.run_id, "newton", &r.start, r.pair_index, &r.report))
        .collect();
    let points = certified_points(spec, &runs);
    let exit_code = exit_code_for(runs.iter().map(|r| r.report.outcome));
    let (command, family, symmetry) = summary_header(spec, "locate");
    let summary = Summary {
        command,
        family,
        symmetry,
        mode: format!("{} (pair {})", spec.mode.kind, pair_label(&spec.mode)),
        runs: run_summaries,
        points,
        scan: None,
        exit_code,
    };
    Ok(CommandOutput {
        trace: render_trace(&rows, spec.family.d(), spec.format),
        summary: summary.render(),
        exit_code,
    })
}

/// `scan`: Berry-phase grid scan, then refinement of each candidate cell by
/// the Newton iteration.
pub fn run_scan(
    spec: &RunSpec,
    region: &Region2D,
    resolution: usize,
    pair: usize,
) -> Result<CommandOutput> {
    let scan = conical_core::grid_scan(&spec.family, region, resolution, pair)?;
    let starts: Vec<ParameterPoint> = scan.candidates.iter().map(|c| c.center()).collect();
    let runs = newton_runs(spec, &starts)?;
    let mut rows: Vec<TraceRow> = Vec::new();
    for run in &runs {
        rows.extend(rows_from_report(run.run_id, "newton", &run.report));
    }
    let run_summaries: Vec<RunSummary> = runs
        .iter()
        .map(|r| RunSummary::new(r.run_id, "newton", &r.start, r.pair_index, &r.report))
        .collect();
    let points = certified_points(spec, &runs);
    let exit_code = exit_code_for(runs.iter().map(|r| r.report.outcome));
    let (command, family, symmetry) = summary_header(spec, "scan");
    let summary = Summary {
        command,
        family,
        symmetry,
        mode: format!("{} (pair {})", spec.mode.kind, pair_label(&spec.mode)),
        runs: run_summaries,
        points,
        scan: Some(ScanBlock {
            resolution,
            region: [region.x_min, region.x_max, region.y_min, region.y_max],
            candidates: scan.candidates,
            inconclusive: scan.inconclusive,
        }),
        exit_code,
    };
    Ok(CommandOutput {
        trace: render_trace(&rows, spec.family.d(), spec.format),
        summary: summary.render(),
        exit_code,
    })
}

/// `compare`: the Newton iteration and the quasi-Newton baseline side by
/// side from every start, aligned per run id.
pub fn run_compare(spec: &RunSpec) -> Result<CommandOutput> {
    let runs = newton_runs(spec, &spec.starts)?;
    let baselines: Vec<Result<(usize, SolveReport)>> = spec
        .starts
        .par_iter()
        .enumerate()
        .map(|(run_id, start)| {
            let pair = runs
                .iter()
                .find(|r| r.run_id == run_id)
                .map(|r| PairChoice::Index(r.pair_index))
                .unwrap_or(PairChoice::Auto);
            let report = minimize_gap_squared(&spec.family, start, pair, &spec.baseline)?;
            Ok((run_id, report))
        })
        .collect();
    let baselines: Vec<(usize, SolveReport)> = baselines.into_iter().collect::<Result<_>>()?;

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut run_summaries: Vec<RunSummary> = Vec::new();
    for run in &runs {
        rows.extend(rows_from_report(run.run_id, "newton", &run.report));
        run_summaries.push(RunSummary::new(
            run.run_id,
            "newton",
            &run.start,
            run.pair_index,
            &run.report,
        ));
        if let Some((_, baseline)) = baselines.iter().find(|(id, _)| *id == run.run_id) {
            rows.extend(rows_from_report(run.run_id, "baseline", baseline));
            run_summaries.push(RunSummary::new(
                run.run_id,
                "baseline",
                &run.start,
                run.pair_index,
                baseline,
            ));
        }
    }
    let points = certified_points(spec, &runs);
    // The verdict follows the Newton method; the baseline is the reference.
    let exit_code = exit_code_for(runs.iter().map(|r| r.report.outcome));
    let (command, family, symmetry) = summary_header(spec, "compare");
    let summary = Summary {
        command,
        family,
        symmetry,
        mode: format!("{} (pair {})", spec.mode.kind, pair_label(&spec.mode)),
        runs: run_summaries,
        points,
        scan: None,
        exit_code,
    };
    Ok(CommandOutput {
        trace: render_trace(&rows, spec.family.d(), spec.format),
        summary: summary.render(),
        exit_code,
    })
}

/// `certify`: non-degeneracy certificate at a claimed multiplicity point.
pub fn run_certify(spec: &RunSpec, alpha: &ParameterPoint) -> Result<CommandOutput> {
    let cert = certify(&spec.family, alpha, &spec.mode)?;
    let mut summary = serde_json::to_string_pretty(&cert)?;
    summary.push('\n');
    Ok(CommandOutput {
        trace: String::new(),
        summary,
        exit_code: 0,
    })
}

/// `list-builtins`: the registry as a fixed-width table.
pub fn list_builtins() -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22} {:>3} {:>3} {:<30} params\n",
        "name", "n", "d", "symmetry"
    ));
    for info in conical_core::builtin_catalog() {
        let params = if info.params.is_empty() {
            "-".to_string()
        } else {
            info.params
                .iter()
                .map(|p| match p.default {
                    Some(d) => format!("{} (default {d})", p.name),
                    None => format!("{} (required)", p.name),
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        out.push_str(&format!(
            "{:<22} {:>3} {:>3} {:<30} {}\n",
            info.name,
            info.n,
            info.d,
            format!("{}", info.symmetry),
            params
        ));
        out.push_str(&format!("{:<31}{}\n", "", info.summary));
    }
    out
}

/// Single Berry loop, exposed for completeness alongside `scan`.
pub fn run_loop_class(
    family: &MatrixFamily,
    center: &ParameterPoint,
    radius: f64,
    samples: usize,
    pair: usize,
) -> Result<RotationClass> {
    let spec = LoopSpec::new(center.clone(), radius, samples)?;
    Ok(berry_loop(family, &spec, pair)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_taxonomy() {
        use Outcome::*;
        assert_eq!(exit_code_for([Converged, Converged].into_iter()), 0);
        assert_eq!(exit_code_for([Converged, AvoidedCrossing].into_iter()), 2);
        assert_eq!(
            exit_code_for([NotConverging, BudgetExhausted].into_iter()),
            3
        );
        assert_eq!(
            exit_code_for([AvoidedCrossing, NotConverging].into_iter()),
            2,
            "avoided crossing takes priority in the taxonomy"
        );
        assert_eq!(exit_code_for([Converged, BudgetExhausted].into_iter()), 4);
        assert_eq!(exit_code_for(std::iter::empty()), 0);
    }
}
