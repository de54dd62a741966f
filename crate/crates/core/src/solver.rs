//! Newton iteration on the reduced objective, with stopping rules, a
//! truncated-SVD pseudoinverse fallback, and outcome classification.
//!
//! Each iteration recomputes the eigenbasis at the current point, solves
//! `J s = -F` and moves to `r + s`. Near a non-degenerate multiplicity the
//! iteration contracts quadratically; near an avoided crossing the gap
//! bottoms out and the step norms stop shrinking, which a windowed
//! oscillation detector turns into an `AvoidedCrossing` verdict.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{MatrixFamily, ParameterPoint};
use crate::reduction::{reduce, MultiplicityMode, ReducedSystem, ReductionError};

/// Iterates whose gap plateaus below this fraction of the starting gap are
/// classified as avoided crossings rather than plain non-convergence.
pub const AVOIDED_PLATEAU_FRACTION: f64 = 1e-2;

/// Errors below this distance are considered saturated by floating-point
/// noise and excluded from convergence-order fits.
pub const ORDER_FIT_FLOOR: f64 = 100.0 * f64::EPSILON;

/// Errors above this distance are outside the asymptotic regime and excluded
/// from convergence-order fits.
pub const ORDER_FIT_CAP: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("not enough iterates in the asymptotic window to fit a convergence order")]
    InsufficientTrace,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Iteration budget (Newton updates).
    pub max_iter: usize,
    /// Absolute tolerance on eigenvalue gaps, scaled by `1 + ||A(r)||`.
    pub gap_tol: f64,
    /// Absolute tolerance on the step norm, scaled by `1 + ||r||`.
    pub step_tol: f64,
    /// Singular values below this fraction of the largest are truncated when
    /// the Jacobian is too ill-conditioned for a direct solve.
    pub pinv_rel_threshold: f64,
    /// Number of trailing steps compared against the preceding window by the
    /// oscillation detector.
    pub oscillation_window: usize,
    /// The trailing window must shrink below this factor times the preceding
    /// window's mean step, otherwise the run is flagged as oscillating.
    pub oscillation_factor: f64,
    /// Optional cap on the Newton step length; off by default to preserve
    /// the raw quadratic behavior.
    pub max_step_norm: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 50,
            gap_tol: 1e-12,
            step_tol: 1e-12,
            pinv_rel_threshold: 1e-8,
            oscillation_window: 6,
            oscillation_factor: 0.9,
            max_step_norm: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_iter == 0 {
            return Err(SolverError::InvalidConfig("max_iter must be >= 1".into()));
        }
        for (name, v) in [
            ("gap_tol", self.gap_tol),
            ("step_tol", self.step_tol),
            ("pinv_rel_threshold", self.pinv_rel_threshold),
        ] {
            if !(v > 0.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.oscillation_window == 0 {
            return Err(SolverError::InvalidConfig(
                "oscillation_window must be >= 1".into(),
            ));
        }
        if !(self.oscillation_factor > 0.0 && self.oscillation_factor < 1.0) {
            return Err(SolverError::InvalidConfig(
                "oscillation_factor must lie in (0, 1)".into(),
            ));
        }
        if let Some(cap) = self.max_step_norm {
            if !(cap > 0.0) {
                return Err(SolverError::InvalidConfig(
                    "max_step_norm must be positive when set".into(),
                ));
            }
        }
        Ok(())
    }
}

/// State recorded at each visited iterate. `det_j`/`cond_j` are `None` for
/// methods that never form a Jacobian (the quasi-Newton baseline).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub point: ParameterPoint,
    pub gap: f64,
    pub gap2: Option<f64>,
    pub step_norm: f64,
    pub det_j: Option<f64>,
    pub cond_j: Option<f64>,
    pub used_pseudoinverse: bool,
    /// Eigenvalue computations performed for this iterate.
    pub evals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Converged,
    AvoidedCrossing,
    NotConverging,
    BudgetExhausted,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Outcome::Converged => "converged",
            Outcome::AvoidedCrossing => "avoided-crossing",
            Outcome::NotConverging => "not-converging",
            Outcome::BudgetExhausted => "budget-exhausted",
        };
        f.write_str(s)
    }
}

/// Jacobian-derived certificate data at a converged point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegeneracyDiagnostics {
    pub det_j: f64,
    pub cond_j: f64,
    /// Eigenvalues of `2 J^T J`, the leading Hessian of the squared gap.
    pub hessian_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub trace: Vec<IterationRecord>,
    pub final_point: ParameterPoint,
    pub final_gap: f64,
    /// Present when the run converged.
    pub degeneracy: Option<DegeneracyDiagnostics>,
}

impl SolveReport {
    /// Number of Newton updates actually taken.
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |rec| rec.index)
    }

    pub fn min_gap(&self) -> f64 {
        self.trace.iter().fold(f64::INFINITY, |m, rec| {
            m.min(rec.gap.max(rec.gap2.unwrap_or(0.0)))
        })
    }

    pub fn total_evals(&self) -> usize {
        self.trace.iter().map(|rec| rec.evals).sum()
    }
}

/// Solves `J s = -F`, preferring the exact inverse and falling back to a
/// truncated-SVD least-squares solve when the Jacobian is rank-deficient to
/// within `rel_threshold`. Returns the step and whether the pseudoinverse
/// path was taken.
fn newton_direction(
    jacobian: &DMatrix<f64>,
    objective: &DVector<f64>,
    rel_threshold: f64,
) -> (DVector<f64>, bool) {
    let svd = jacobian.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |m, &s| m.min(s));
    if smax > 0.0 && smin >= rel_threshold * smax {
        if let Some(step) = jacobian.clone().lu().solve(&(-objective)) {
            return (step, false);
        }
    }
    // Truncated pseudoinverse: drop singular directions below the threshold.
    let d = jacobian.ncols();
    let u = svd.u.as_ref().expect("svd computed with u");
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");
    let cutoff = rel_threshold * smax;
    let mut step = DVector::zeros(d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coeff = -u.column(i).dot(objective) / s;
            step += vt.row(i).transpose() * coeff;
        }
    }
    (step, true)
}

fn record_from(
    index: usize,
    red: &ReducedSystem,
    step_norm: f64,
    used_pseudoinverse: bool,
) -> IterationRecord {
    IterationRecord {
        index,
        point: red.eigen.point().clone(),
        gap: red.gap,
        gap2: red.gap2,
        step_norm,
        det_j: Some(red.det_j),
        cond_j: Some(red.conditioning),
        used_pseudoinverse,
        evals: 1,
    }
}

/// One update of the iteration: `r' = r - J^+ F`, or a zero step when the
/// gap is already below tolerance at `r`.
pub fn step(
    family: &MatrixFamily,
    r: &ParameterPoint,
    mode: &MultiplicityMode,
    config: &SolverConfig,
) -> Result<(ParameterPoint, IterationRecord), SolverError> {
    config.validate()?;
    let mode = mode.resolved(family, r)?;
    let red = reduce(family, r, &mode)?;
    if red.gap_measure() <= config.gap_tol * red.tolerance_scale() {
        return Ok((r.clone(), record_from(0, &red, 0.0, false)));
    }
    let (mut direction, pinv) =
        newton_direction(&red.jacobian, &red.objective, config.pinv_rel_threshold);
    if let Some(cap) = config.max_step_norm {
        let norm = direction.norm();
        if norm > cap {
            direction.scale_mut(cap / norm);
        }
    }
    let step_norm = direction.norm();
    let next = r.translated(&direction);
    Ok((next, record_from(0, &red, step_norm, pinv)))
}

fn oscillating(step_history: &[f64], config: &SolverConfig) -> bool {
    let w = config.oscillation_window;
    if step_history.len() < 2 * w {
        return false;
    }
    let recent: f64 = step_history[step_history.len() - w..].iter().sum::<f64>() / w as f64;
    let previous: f64 = step_history[step_history.len() - 2 * w..step_history.len() - w]
        .iter()
        .sum::<f64>()
        / w as f64;
    recent > config.oscillation_factor * previous
}

/// Full iteration from `start` until convergence, oscillation, divergence or
/// budget exhaustion. Abnormal behavior after the first successful reduction
/// is encoded in the outcome rather than returned as an error.
pub fn solve(
    family: &MatrixFamily,
    start: &ParameterPoint,
    mode: &MultiplicityMode,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    config.validate()?;
    let mode = mode.resolved(family, start)?;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut r = start.clone();
    let mut steps_taken = 0usize;
    let mut prev_step: Option<f64> = None;
    let mut step_history: Vec<f64> = Vec::new();
    let mut initial_gap = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut last_jacobian: Option<DMatrix<f64>> = None;
    let mut last_det_cond = (f64::NAN, f64::NAN);

    let outcome = loop {
        let red = match reduce(family, &r, &mode) {
            Ok(red) => red,
            Err(err) => {
                if trace.is_empty() {
                    return Err(err.into());
                }
                break Outcome::NotConverging;
            }
        };
        let scale = red.tolerance_scale();
        let gap_measure = red.gap_measure();
        if trace.is_empty() {
            initial_gap = gap_measure;
        }
        min_gap = min_gap.min(gap_measure);
        last_jacobian = Some(red.jacobian.clone());
        last_det_cond = (red.det_j, red.conditioning);

        let by_gap = gap_measure <= config.gap_tol * scale;
        let by_step = prev_step.is_some_and(|s| s <= config.step_tol * (1.0 + r.norm()));
        if by_gap || by_step {
            trace.push(record_from(steps_taken, &red, 0.0, false));
            break Outcome::Converged;
        }
        if steps_taken >= config.max_iter {
            trace.push(record_from(steps_taken, &red, 0.0, false));
            break Outcome::BudgetExhausted;
        }
        if oscillating(&step_history, config) {
            trace.push(record_from(steps_taken, &red, 0.0, false));
            break if min_gap < AVOIDED_PLATEAU_FRACTION * initial_gap {
                Outcome::AvoidedCrossing
            } else {
                Outcome::NotConverging
            };
        }

        let (mut direction, pinv) =
            newton_direction(&red.jacobian, &red.objective, config.pinv_rel_threshold);
        if !direction.iter().all(|x| x.is_finite()) {
            trace.push(record_from(steps_taken, &red, 0.0, pinv));
            break Outcome::NotConverging;
        }
        if let Some(cap) = config.max_step_norm {
            let norm = direction.norm();
            if norm > cap {
                direction.scale_mut(cap / norm);
            }
        }
        let step_norm = direction.norm();
        trace.push(record_from(steps_taken, &red, step_norm, pinv));
        r = r.translated(&direction);
        steps_taken += 1;
        prev_step = Some(step_norm);
        step_history.push(step_norm);
        if !r.is_finite() {
            break Outcome::NotConverging;
        }
    };

    // The final point is the last finite iterate we recorded state for.
    let last = trace.last().expect("trace has at least one record");
    let (final_point, final_gap) = (last.point.clone(), last.gap.max(last.gap2.unwrap_or(0.0)));
    let degeneracy = if outcome == Outcome::Converged {
        last_jacobian.map(|j| {
            let hessian = 2.0 * j.transpose() * &j;
            let eig = hessian.symmetric_eigen();
            let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            DegeneracyDiagnostics {
                det_j: last_det_cond.0,
                cond_j: last_det_cond.1,
                hessian_eigenvalues: ev,
            }
        })
    } else {
        None
    };

    Ok(SolveReport {
        outcome,
        trace,
        final_point,
        final_gap,
        degeneracy,
    })
}

/// Least-squares slope of `log e_{i+1}` against `log e_i` over the window of
/// iterates inside the asymptotic regime. `target = None` substitutes step
/// norms for distances when the true degeneracy location is unknown.
pub fn convergence_order(
    trace: &[IterationRecord],
    target: Option<&ParameterPoint>,
) -> Result<f64, SolverError> {
    let errors: Vec<f64> = match target {
        Some(alpha) => trace.iter().map(|rec| rec.point.distance(alpha)).collect(),
        None => trace
            .iter()
            .filter(|rec| rec.step_norm > 0.0)
            .map(|rec| rec.step_norm)
            .collect(),
    };
    let pairs: Vec<(f64, f64)> = errors
        .windows(2)
        .filter(|w| w.iter().all(|&e| e > ORDER_FIT_FLOOR && e < ORDER_FIT_CAP))
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    if pairs.len() < 2 {
        return Err(SolverError::InsufficientTrace);
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &pairs {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(SolverError::InsufficientTrace);
    }
    Ok(sxy / sxx)
}
