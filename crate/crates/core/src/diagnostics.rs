//! Degeneracy certification and Berry-phase detection.
//!
//! A located multiplicity point is certified non-degenerate by checking
//! `det J != 0` and verifying that the finite-difference Hessian of the
//! squared eigenvalue gap equals `2 J^T J`. Conical points are detected on
//! loops by transporting an eigenvector around the loop: the accumulated
//! holonomy is `pi` (the vector returns negated) exactly when the loop
//! encloses an odd number of conical points.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::family::{MatrixFamily, ParameterPoint, SymmetryClass};
use crate::reduction::{
    eigensystem, reduce, reduced_block, ModeKind, MultiplicityMode, PairChoice, ReductionError,
};

/// A point whose group gap exceeds this (times `1 + ||A||`) is not accepted
/// as a degeneracy for certification.
pub const DEGENERACY_GAP_TOL: f64 = 1e-8;

/// Samples per cell edge used by the grid scan (doubled for the stability
/// check).
const EDGE_SAMPLES: usize = 16;

/// Transport overlaps below this magnitude mean the loop is undersampled or
/// grazes a degeneracy; the result is inconclusive rather than wrong.
const MIN_TRANSPORT_OVERLAP: f64 = 0.5;

/// Accumulated holonomy must land within this angle of 0 or pi.
const PHASE_TOL: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("point is not a degeneracy to tolerance: gap {gap:.3e} > {tol:.3e}")]
    NotADegeneracy { gap: f64, tol: f64 },
    #[error(
        "gap collapsed to {gap:.3e} at loop sample {sample}; the loop passes through a degeneracy"
    )]
    GapCollapse { sample: usize, gap: f64 },
    #[error("transport inconclusive: {0}")]
    Inconclusive(String),
    #[error(
        "eigenvector transport requires a real symmetric or inversion-symmetric family, got {0}"
    )]
    UnsupportedClass(SymmetryClass),
    #[error("invalid loop: {0}")]
    BadLoop(String),
    #[error("invalid region: {0}")]
    BadRegion(String),
}

/// Circular loop in a 2-parameter space.
#[derive(Clone, Debug, Serialize)]
pub struct LoopSpec {
    pub center: ParameterPoint,
    pub radius: f64,
    pub samples: usize,
}

impl LoopSpec {
    pub fn new(
        center: ParameterPoint,
        radius: f64,
        samples: usize,
    ) -> Result<Self, DiagnosticsError> {
        if center.dim() != 2 {
            return Err(DiagnosticsError::BadLoop(
                "loop center must have 2 coordinates".into(),
            ));
        }
        if !(radius > 0.0) {
            return Err(DiagnosticsError::BadLoop(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if samples < 16 {
            return Err(DiagnosticsError::BadLoop(format!(
                "at least 16 samples required, got {samples}"
            )));
        }
        Ok(LoopSpec {
            center,
            radius,
            samples,
        })
    }

    fn points(&self, samples: usize) -> Vec<ParameterPoint> {
        (0..samples)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                ParameterPoint::new(vec![
                    self.center[0] + self.radius * theta.cos(),
                    self.center[1] + self.radius * theta.sin(),
                ])
                .expect("loop samples are finite")
            })
            .collect()
    }
}

/// Holonomy class of an eigenvector transported around a closed loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationClass {
    /// The eigenvector returns to itself: no enclosed conical point (or an
    /// even number of them).
    Zero,
    /// The eigenvector returns negated: an odd number of enclosed conical
    /// points.
    Pi,
}

/// Certificate of (non-)degeneracy at a multiplicity point.
#[derive(Clone, Debug)]
pub struct DegeneracyCertificate {
    pub point: ParameterPoint,
    pub pair_index: usize,
    /// Distance from the coalescing group to the rest of the spectrum at
    /// the point (`None` when the group spans it); near zero the pair is
    /// itself degenerate with a third eigenvalue and the certificate should
    /// be read with suspicion.
    pub group_isolation: Option<f64>,
    pub det_j: f64,
    pub cond_j: f64,
    /// `2 J^T J`: the Hessian of the squared gap at the point.
    pub hessian: DMatrix<f64>,
    /// Ascending eigenvalues of the Hessian (all non-negative).
    pub hessian_eigenvalues: Vec<f64>,
    /// Relative Frobenius residual between the finite-difference Hessian of
    /// the squared gap and `2 J^T J`.
    pub fd_hessian_residual: f64,
}

impl DegeneracyCertificate {
    /// Non-degenerate means the Jacobian is invertible within conditioning
    /// tolerance, so the eigenvalue surfaces separate linearly along every
    /// ray.
    pub fn is_nondegenerate(&self, cond_tol: f64) -> bool {
        self.det_j != 0.0 && self.cond_j > cond_tol
    }

    pub fn hessian_rows(&self) -> Vec<Vec<f64>> {
        (0..self.hessian.nrows())
            .map(|i| self.hessian.row(i).iter().copied().collect())
            .collect()
    }
}

impl Serialize for DegeneracyCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DegeneracyCertificate", 8)?;
        st.serialize_field("point", &self.point)?;
        st.serialize_field("pair_index", &self.pair_index)?;
        st.serialize_field("group_isolation", &self.group_isolation)?;
        st.serialize_field("det_j", &self.det_j)?;
        st.serialize_field("cond_j", &self.cond_j)?;
        st.serialize_field("hessian", &self.hessian_rows())?;
        st.serialize_field("hessian_eigenvalues", &self.hessian_eigenvalues)?;
        st.serialize_field("fd_hessian_residual", &self.fd_hessian_residual)?;
        st.end()
    }
}

/// Squared-gap discriminant of a real symmetric 2x2 matrix:
/// `(M11 - M22)^2 + 4 M12^2 = (l1 - l2)^2`.
pub fn discriminant2x2(m: &Matrix2<f64>) -> f64 {
    debug_assert!((m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * (1.0 + m.norm()));
    let diff = m[(0, 0)] - m[(1, 1)];
    diff * diff + 4.0 * m[(0, 1)] * m[(0, 1)]
}

/// Squared-gap function whose Hessian the certificate checks. For the pair
/// modes this is `(l_k - l_{k+1})^2` from the full-matrix eigenvalues; the
/// triple mode uses the squared objective norm of the reduced block in the
/// fixed eigenbasis of `alpha`, since no two-eigenvalue discriminant exists.
fn disc_value(
    family: &MatrixFamily,
    alpha: &ParameterPoint,
    r: &ParameterPoint,
    mode: &MultiplicityMode,
    pair: usize,
) -> Result<f64, ReductionError> {
    if mode.kind.group_size() == 2 {
        let es = eigensystem(family, r)?;
        let gap = es.values()[pair] - es.values()[pair - 1];
        Ok(gap * gap)
    } else {
        let block = reduced_block(family, alpha, r, mode)?;
        let d01 = (block[(0, 0)] - block[(1, 1)]).re;
        let d12 = (block[(1, 1)] - block[(2, 2)]).re;
        let off =
            4.0 * (block[(0, 1)].norm_sqr() + block[(0, 2)].norm_sqr() + block[(1, 2)].norm_sqr());
        Ok(d01 * d01 + d12 * d12 + off)
    }
}

/// Certifies a degeneracy at `alpha`: records `det J`, conditioning, the
/// Hessian `2 J^T J` of the squared gap, and its agreement with a central
/// finite-difference Hessian.
pub fn certify(
    family: &MatrixFamily,
    alpha: &ParameterPoint,
    mode: &MultiplicityMode,
) -> Result<DegeneracyCertificate, DiagnosticsError> {
    let mode = mode.resolved(family, alpha)?;
    let red = reduce(family, alpha, &mode)?;
    let tol = DEGENERACY_GAP_TOL * red.tolerance_scale();
    if red.gap_measure() > tol {
        return Err(DiagnosticsError::NotADegeneracy {
            gap: red.gap_measure(),
            tol,
        });
    }
    let pair = red.pair_index;
    let hessian = 2.0 * red.jacobian.transpose() * &red.jacobian;
    let eig = hessian.clone().symmetric_eigen();
    let mut hessian_eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    hessian_eigenvalues.sort_by(f64::total_cmp);

    // Central second differences of the squared gap, step eps^{1/4} scaled
    // per coordinate.
    let d = family.d();
    let h: Vec<f64> = (0..d)
        .map(|a| f64::EPSILON.powf(0.25) * (1.0 + alpha[a].abs()))
        .collect();
    let eval = |dx: &[f64]| -> Result<f64, ReductionError> {
        let delta = DVector::from_row_slice(dx);
        disc_value(family, alpha, &alpha.translated(&delta), &mode, pair)
    };
    let f0 = eval(&vec![0.0; d])?;
    let mut fd = DMatrix::zeros(d, d);
    for a in 0..d {
        let mut dx = vec![0.0; d];
        dx[a] = h[a];
        let fp = eval(&dx)?;
        dx[a] = -h[a];
        let fm = eval(&dx)?;
        fd[(a, a)] = (fp - 2.0 * f0 + fm) / (h[a] * h[a]);
        for b in (a + 1)..d {
            let mut dx = vec![0.0; d];
            dx[a] = h[a];
            dx[b] = h[b];
            let fpp = eval(&dx)?;
            dx[b] = -h[b];
            let fpm = eval(&dx)?;
            dx[a] = -h[a];
            dx[b] = h[b];
            let fmp = eval(&dx)?;
            dx[b] = -h[b];
            let fmm = eval(&dx)?;
            let mixed = (fpp - fpm - fmp + fmm) / (4.0 * h[a] * h[b]);
            fd[(a, b)] = mixed;
            fd[(b, a)] = mixed;
        }
    }
    let fd_hessian_residual = (&fd - &hessian).norm() / hessian.norm();

    Ok(DegeneracyCertificate {
        point: alpha.clone(),
        pair_index: pair,
        group_isolation: red.isolation,
        det_j: red.det_j,
        cond_j: red.conditioning,
        hessian,
        hessian_eigenvalues,
        fd_hessian_residual,
    })
}

/// Transports eigenvector `k` (1-based) along a closed polygon of sample
/// points and classifies the accumulated holonomy. The product of successive
/// overlaps `<v_i, v_{i+1}>` is gauge invariant, so the per-point phase
/// convention does not matter.
pub(crate) fn transport_class(
    family: &MatrixFamily,
    points: &[ParameterPoint],
    pair_index: usize,
) -> Result<RotationClass, DiagnosticsError> {
    let n = family.n();
    if pair_index == 0 || pair_index >= n + 1 {
        return Err(DiagnosticsError::BadLoop(format!(
            "pair index {pair_index} out of range for dimension {n}"
        )));
    }
    let k = pair_index - 1;
    let mut previous: Option<nalgebra::DVector<Complex64>> = None;
    let mut first: Option<nalgebra::DVector<Complex64>> = None;
    let mut holonomy = Complex64::ONE;
    for (i, p) in points.iter().enumerate() {
        let es = eigensystem(family, p)?;
        // Gap of eigenvalue k to its nearest neighbor; the transported band
        // must stay isolated along the loop.
        let vals = es.values();
        let mut gap = f64::INFINITY;
        if k > 0 {
            gap = gap.min(vals[k] - vals[k - 1]);
        }
        if k + 1 < n {
            gap = gap.min(vals[k + 1] - vals[k]);
        }
        let scale = 1.0 + es.spectral_norm();
        if gap <= 1e-12 * scale {
            return Err(DiagnosticsError::GapCollapse { sample: i, gap });
        }
        let v = es.vectors().column(k).into_owned();
        if let Some(prev) = &previous {
            let overlap = prev.dotc(&v);
            if overlap.norm() < MIN_TRANSPORT_OVERLAP {
                return Err(DiagnosticsError::Inconclusive(format!(
                    "overlap magnitude {:.3} at sample {i}; refine the sampling",
                    overlap.norm()
                )));
            }
            holonomy *= overlap / overlap.norm();
        } else {
            first = Some(v.clone());
        }
        previous = Some(v);
    }
    // Close the loop.
    let (first, last) = (
        first.expect("nonempty loop"),
        previous.expect("nonempty loop"),
    );
    let overlap = last.dotc(&first);
    if overlap.norm() < MIN_TRANSPORT_OVERLAP {
        return Err(DiagnosticsError::Inconclusive(
            "loop closure overlap too small; refine the sampling".into(),
        ));
    }
    holonomy *= overlap / overlap.norm();

    let angle = holonomy.arg().abs();
    if angle < PHASE_TOL {
        Ok(RotationClass::Zero)
    } else if (std::f64::consts::PI - angle).abs() < PHASE_TOL {
        Ok(RotationClass::Pi)
    } else {
        Err(DiagnosticsError::Inconclusive(format!(
            "holonomy angle {angle:.3} rad is neither 0 nor pi"
        )))
    }
}

fn check_transport_class_supported(family: &MatrixFamily) -> Result<(), DiagnosticsError> {
    match family.symmetry() {
        SymmetryClass::RealSymmetric | SymmetryClass::InversionSymmetricHermitian => Ok(()),
        class => Err(DiagnosticsError::UnsupportedClass(class)),
    }
}

/// Transports eigenvector `pair_index` around the loop and reports the
/// rotation class. The classification is recomputed at twice the sample
/// count; disagreement is reported as inconclusive.
pub fn berry_loop(
    family: &MatrixFamily,
    loop_spec: &LoopSpec,
    pair_index: usize,
) -> Result<RotationClass, DiagnosticsError> {
    check_transport_class_supported(family)?;
    if family.d() != 2 {
        return Err(DiagnosticsError::BadLoop(
            "eigenvector transport requires a 2-parameter family".into(),
        ));
    }
    let coarse = transport_class(family, &loop_spec.points(loop_spec.samples), pair_index)?;
    let fine = transport_class(family, &loop_spec.points(loop_spec.samples * 2), pair_index)?;
    if coarse != fine {
        return Err(DiagnosticsError::Inconclusive(
            "classification changed under sample doubling".into(),
        ));
    }
    Ok(coarse)
}

/// Rectangular scan region in a 2-parameter space.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Region2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region2D {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, DiagnosticsError> {
        if !(x_min < x_max && y_min < y_max)
            || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
        {
            return Err(DiagnosticsError::BadRegion(format!(
                "degenerate bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Region2D {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }
}

/// One cell of the scan grid.
#[derive(Clone, Debug, Serialize)]
pub struct GridCell {
    pub ix: usize,
    pub iy: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl GridCell {
    pub fn center(&self) -> ParameterPoint {
        ParameterPoint::new(vec![
            0.5 * (self.x_range.0 + self.x_range.1),
            0.5 * (self.y_range.0 + self.y_range.1),
        ])
        .expect("cell centers are finite")
    }

    /// Boundary polygon, counterclockwise, `samples` points per edge.
    ///
    /// The rectangle is shifted down-left by `shift`, which gives cells
    /// half-open semantics: a degeneracy sitting exactly on a shared grid
    /// line or corner is enclosed by exactly one cell's loop and stays at a
    /// resolvable distance from every sample point.
    fn boundary(&self, samples: usize, shift: f64) -> Vec<ParameterPoint> {
        let (x0, x1) = (self.x_range.0 - shift, self.x_range.1 - shift);
        let (y0, y1) = (self.y_range.0 - shift, self.y_range.1 - shift);
        let mut pts = Vec::with_capacity(4 * samples);
        for i in 0..samples {
            let t = i as f64 / samples as f64;
            pts.push(vec![x0 + t * (x1 - x0), y0]);
        }
        for i in 0..samples {
            let t = i as f64 / samples as f64;
            pts.push(vec![x1, y0 + t * (y1 - y0)]);
        }
        for i in 0..samples {
            let t = i as f64 / samples as f64;
            pts.push(vec![x1 - t * (x1 - x0), y1]);
        }
        for i in 0..samples {
            let t = i as f64 / samples as f64;
            pts.push(vec![x0, y1 - t * (y1 - y0)]);
        }
        pts.into_iter()
            .map(|c| ParameterPoint::new(c).expect("boundary points are finite"))
            .collect()
    }
}

/// Outcome of a grid scan: cells whose boundary holonomy is `pi` (candidate
/// conical points) and cells where the transport was inconclusive.
#[derive(Clone, Debug, Serialize)]
pub struct GridScanReport {
    pub candidates: Vec<GridCell>,
    pub inconclusive: Vec<GridCell>,
}

/// Partitions the region into `resolution x resolution` cells and classifies
/// each cell boundary by eigenvector transport. Cells are processed
/// concurrently; the output order is deterministic (row-major).
pub fn grid_scan(
    family: &MatrixFamily,
    region: &Region2D,
    resolution: usize,
    pair_index: usize,
) -> Result<GridScanReport, DiagnosticsError> {
    check_transport_class_supported(family)?;
    if family.d() != 2 {
        return Err(DiagnosticsError::BadRegion(
            "grid scan requires a 2-parameter family".into(),
        ));
    }
    if resolution == 0 {
        return Err(DiagnosticsError::BadRegion(
            "resolution must be >= 1".into(),
        ));
    }
    let dx = (region.x_max - region.x_min) / resolution as f64;
    let dy = (region.y_max - region.y_min) / resolution as f64;
    let cells: Vec<GridCell> = (0..resolution * resolution)
        .map(|idx| {
            let ix = idx % resolution;
            let iy = idx / resolution;
            GridCell {
                ix,
                iy,
                x_range: (
                    region.x_min + ix as f64 * dx,
                    region.x_min + (ix + 1) as f64 * dx,
                ),
                y_range: (
                    region.y_min + iy as f64 * dy,
                    region.y_min + (iy + 1) as f64 * dy,
                ),
            }
        })
        .collect();

    // Half a sample spacing keeps on-gridline degeneracies resolvable.
    let shift = dx.min(dy) / (2.0 * EDGE_SAMPLES as f64);
    let classified: Vec<(GridCell, Option<RotationClass>)> = cells
        .into_par_iter()
        .map(|cell| {
            let coarse = transport_class(family, &cell.boundary(EDGE_SAMPLES, shift), pair_index);
            let class = match coarse {
                Ok(c) => {
                    match transport_class(
                        family,
                        &cell.boundary(2 * EDGE_SAMPLES, shift),
                        pair_index,
                    ) {
                        Ok(f) if f == c => Some(c),
                        _ => None,
                    }
                }
                Err(_) => None,
            };
            (cell, class)
        })
        .collect();

    let mut report = GridScanReport {
        candidates: Vec::new(),
        inconclusive: Vec::new(),
    };
    for (cell, class) in classified {
        match class {
            Some(RotationClass::Pi) => report.candidates.push(cell),
            Some(RotationClass::Zero) => {}
            None => report.inconclusive.push(cell),
        }
    }
    Ok(report)
}

/// Convenience: natural pair index for loop transport, the lower band of the
/// group with the smallest spread at a representative point.
pub fn default_scan_pair(
    family: &MatrixFamily,
    at: &ParameterPoint,
) -> Result<usize, ReductionError> {
    let kind = ModeKind::default_for(family).unwrap_or(ModeKind::Double2D);
    let mode = MultiplicityMode::new(kind).resolved(family, at)?;
    Ok(match mode.pair {
        PairChoice::Index(k) => k,
        PairChoice::Auto => 1,
    })
}
