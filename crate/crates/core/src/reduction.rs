//! Eigen-systems and the reduced objective/Jacobian at a parameter point.
//!
//! For a family `A(r)` and a chosen group of consecutive eigenvalues, the
//! reduced block at base point `p` is `V* A(r) V` with `V` the fixed group
//! eigenvectors of `A(p)`. The objective `F` collects the diagonal gaps and
//! (scaled) off-diagonal couplings of that block, so `F = 0` exactly at an
//! eigenvalue multiplicity. Its Jacobian rows are built from the sesquilinear
//! forms `<v_i, dA/dr_a v_j>`.
//!
//! Mode summary (objective listed first, then the Jacobian row built from
//! the derivative forms `T_a[i][j] = <v_i, dA/dr_a v_j>`):
//!
//! * `Double2D`:             `(l1 - l2, 0)`;        rows `Re(T[00] - T[11])`, `2 Re T[01]`
//! * `HermitianDouble3D`:    `(l1 - l2, 0, 0)`;     rows as above plus `2 Im T[01]`
//! * `InversionSymmetric2D`: `(l1 - l2, 0)`;        rows `Re(T[00] - T[11])`, `2 Im T[01]`
//! * `Triple5D`:             `(l1 - l2, l2 - l3, 0, 0, 0)`; diagonal
//!   differences then `2 T[01]`, `2 T[02]`, `2 T[12]`
//!
//! where `l1 <= l2 (<= l3)` are the group eigenvalues at the point itself.
//! The non-gap objective components vanish identically because the block is
//! diagonal in its own eigenbasis; this is what makes the Newton step
//! invariant under the sign/phase gauge freedom of the eigenvectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::family::{CMatrix, FamilyError, MatrixFamily, ParameterPoint, SymmetryClass};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("eigensolver failed at {point}: {detail}")]
    EigenFailure { point: String, detail: String },
    #[error("mode {mode:?} requires {expected} parameters, family `{family}` has {got}")]
    DimensionMismatch {
        mode: ModeKind,
        family: String,
        expected: usize,
        got: usize,
    },
    #[error("mode {mode:?} is incompatible with symmetry class {class} of family `{family}`")]
    ClassMismatch {
        mode: ModeKind,
        family: String,
        class: SymmetryClass,
    },
    #[error("pair index {pair} with group size {group} exceeds matrix dimension {n}")]
    PairOutOfRange { pair: usize, group: usize, n: usize },
}

/// Which multiplicity is being located, and in how many parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    /// Double eigenvalue of a real symmetric (or effectively real) family in
    /// two parameters.
    Double2D,
    /// Double eigenvalue of a complex Hermitian family in three parameters.
    HermitianDouble3D,
    /// Double eigenvalue of an inversion-symmetric Hermitian family in two
    /// parameters; the off-diagonal coupling is purely imaginary in the
    /// canonical eigenvector gauge, so its imaginary part replaces the real
    /// one in the objective.
    InversionSymmetric2D,
    /// Triple eigenvalue of a real symmetric family in five parameters.
    Triple5D,
}

impl ModeKind {
    pub fn param_dim(self) -> usize {
        match self {
            ModeKind::Double2D | ModeKind::InversionSymmetric2D => 2,
            ModeKind::HermitianDouble3D => 3,
            ModeKind::Triple5D => 5,
        }
    }

    pub fn group_size(self) -> usize {
        match self {
            ModeKind::Triple5D => 3,
            _ => 2,
        }
    }

    /// Natural mode for a family, judged by parameter count and symmetry.
    pub fn default_for(family: &MatrixFamily) -> Option<ModeKind> {
        match (family.d(), family.symmetry()) {
            (2, SymmetryClass::InversionSymmetricHermitian) => Some(ModeKind::InversionSymmetric2D),
            (2, _) => Some(ModeKind::Double2D),
            (3, _) => Some(ModeKind::HermitianDouble3D),
            (5, SymmetryClass::RealSymmetric) => Some(ModeKind::Triple5D),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModeKind::Double2D => "double-2d",
            ModeKind::HermitianDouble3D => "hermitian-double-3d",
            ModeKind::InversionSymmetric2D => "inversion-symmetric-2d",
            ModeKind::Triple5D => "triple-5d",
        };
        f.write_str(s)
    }
}

/// First eigenvalue of the coalescing group (1-based), or automatic
/// selection of the group with the smallest spread at the point of interest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairChoice {
    #[default]
    Auto,
    Index(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiplicityMode {
    pub kind: ModeKind,
    pub pair: PairChoice,
}

impl MultiplicityMode {
    pub fn new(kind: ModeKind) -> Self {
        MultiplicityMode {
            kind,
            pair: PairChoice::Auto,
        }
    }

    pub fn with_pair(kind: ModeKind, pair_index: usize) -> Self {
        MultiplicityMode {
            kind,
            pair: PairChoice::Index(pair_index),
        }
    }

    fn validate(&self, family: &MatrixFamily) -> Result<(), ReductionError> {
        if family.d() != self.kind.param_dim() {
            return Err(ReductionError::DimensionMismatch {
                mode: self.kind,
                family: family.name().to_string(),
                expected: self.kind.param_dim(),
                got: family.d(),
            });
        }
        let class_ok = match self.kind {
            // The 2-parameter double mode covers real symmetric families and
            // the real part of plainly Hermitian ones (used to probe avoided
            // crossings); an inversion-symmetric family should use the
            // dedicated mode instead.
            ModeKind::Double2D => family.symmetry() != SymmetryClass::InversionSymmetricHermitian,
            ModeKind::HermitianDouble3D => true,
            ModeKind::InversionSymmetric2D => {
                family.symmetry() == SymmetryClass::InversionSymmetricHermitian
            }
            ModeKind::Triple5D => family.symmetry() == SymmetryClass::RealSymmetric,
        };
        if !class_ok {
            return Err(ReductionError::ClassMismatch {
                mode: self.kind,
                family: family.name().to_string(),
                class: family.symmetry(),
            });
        }
        if let PairChoice::Index(k) = self.pair {
            let g = self.kind.group_size();
            if k == 0 || k + g - 1 > family.n() {
                return Err(ReductionError::PairOutOfRange {
                    pair: k,
                    group: g,
                    n: family.n(),
                });
            }
        }
        Ok(())
    }

    /// Resolves an automatic pair choice to the group with the smallest
    /// eigenvalue spread at `r` (deterministic: lowest index wins ties).
    pub fn resolved(
        &self,
        family: &MatrixFamily,
        r: &ParameterPoint,
    ) -> Result<MultiplicityMode, ReductionError> {
        self.validate(family)?;
        match self.pair {
            PairChoice::Index(_) => Ok(*self),
            PairChoice::Auto => {
                let eigen = eigensystem(family, r)?;
                let k = auto_pair(&eigen, self.kind.group_size());
                Ok(MultiplicityMode {
                    kind: self.kind,
                    pair: PairChoice::Index(k),
                })
            }
        }
    }
}

fn auto_pair(eigen: &EigenSystem, group: usize) -> usize {
    let values = eigen.values();
    let n = values.len();
    let mut best = 1usize;
    let mut best_spread = f64::INFINITY;
    for k in 0..=(n - group) {
        let spread = values[k + group - 1] - values[k];
        if spread < best_spread {
            best_spread = spread;
            best = k + 1;
        }
    }
    best
}

/// Eigendecomposition at a point: ascending eigenvalues, orthonormal
/// eigenvectors with a deterministic phase convention (the largest-magnitude
/// component of each column is made real and positive; near-ties resolve to
/// the lowest index).
#[derive(Clone, Debug)]
pub struct EigenSystem {
    values: DVector<f64>,
    vectors: CMatrix,
    point: ParameterPoint,
}

impl EigenSystem {
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn point(&self) -> &ParameterPoint {
        &self.point
    }

    /// Spectral norm of `A` at the point, read off the eigenvalues.
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Columns `k-1 .. k-1+g` as a fresh matrix (1-based `k`).
    pub fn group_vectors(&self, pair_index: usize, group: usize) -> CMatrix {
        self.vectors.columns(pair_index - 1, group).into_owned()
    }

    /// Replaces one eigenvector column by a unit-phase multiple of itself.
    /// The result no longer follows the phase convention; it is intended for
    /// gauge-invariance experiments.
    pub fn with_gauge(&self, column: usize, phase: Complex64) -> EigenSystem {
        let mut vectors = self.vectors.clone();
        for i in 0..vectors.nrows() {
            vectors[(i, column)] *= phase;
        }
        EigenSystem {
            values: self.values.clone(),
            vectors,
            point: self.point.clone(),
        }
    }
}

/// Eigendecomposition of `A(r)` with sorted eigenvalues and the phase
/// convention applied.
pub fn eigensystem(
    family: &MatrixFamily,
    r: &ParameterPoint,
) -> Result<EigenSystem, ReductionError> {
    let a = family.evaluate(r)?;
    eigensystem_of(a, r.clone())
}

fn eigensystem_of(a: CMatrix, point: ParameterPoint) -> Result<EigenSystem, ReductionError> {
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(ReductionError::EigenFailure {
            point: point.to_string(),
            detail: "matrix has non-finite entries".into(),
        });
    }
    let n = a.nrows();
    let se = nalgebra::SymmetricEigen::try_new(a, f64::EPSILON, 0).ok_or_else(|| {
        ReductionError::EigenFailure {
            point: point.to_string(),
            detail: "iteration did not converge".into(),
        }
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    for c in 0..n {
        fix_phase(&mut vectors, c);
    }
    Ok(EigenSystem {
        values,
        vectors,
        point,
    })
}

/// Rotates a column so its largest-magnitude component is real positive.
/// Magnitudes within a relative slack of the maximum count as ties and the
/// lowest index wins, keeping the convention stable when two components have
/// equal modulus by symmetry.
fn fix_phase(vectors: &mut CMatrix, column: usize) {
    const TIE_SLACK: f64 = 1e-9;
    let n = vectors.nrows();
    let mut max_mag = 0.0f64;
    for i in 0..n {
        max_mag = max_mag.max(vectors[(i, column)].norm());
    }
    if max_mag == 0.0 {
        return;
    }
    let mut idx = 0;
    for i in 0..n {
        if vectors[(i, column)].norm() >= max_mag * (1.0 - TIE_SLACK) {
            idx = i;
            break;
        }
    }
    let c = vectors[(idx, column)];
    let phase = c.conj() / c.norm();
    for i in 0..n {
        vectors[(i, column)] *= phase;
    }
}

/// Objective, Jacobian and degeneracy measures for one multiplicity mode at
/// one point.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    /// Objective vector; the non-gap components are exactly zero by
    /// construction.
    pub objective: DVector<f64>,
    /// `d x d` real Jacobian; row order matches the objective components.
    pub jacobian: DMatrix<f64>,
    /// `l_{k+1} - l_k` (non-negative).
    pub gap: f64,
    /// `l_{k+2} - l_{k+1}` for the triple mode.
    pub gap2: Option<f64>,
    /// Distance from the group to the rest of the spectrum; `None` when the
    /// group spans it. Near zero the group eigenspace is not isolated and
    /// the reduction is reported as unreliable rather than rejected.
    pub isolation: Option<f64>,
    pub det_j: f64,
    /// Smallest over largest singular value of the Jacobian.
    pub conditioning: f64,
    /// Resolved 1-based index of the first group eigenvalue.
    pub pair_index: usize,
    /// The eigendecomposition the reduction was built from.
    pub eigen: EigenSystem,
}

impl ReducedSystem {
    /// Largest eigenvalue spread within the group; zero exactly at the
    /// sought multiplicity.
    pub fn gap_measure(&self) -> f64 {
        self.gap.max(self.gap2.unwrap_or(0.0))
    }

    /// Scale factor `1 + ||A(r)||` used by absolute tolerances.
    pub fn tolerance_scale(&self) -> f64 {
        1.0 + self.eigen.spectral_norm()
    }
}

/// Reduces the family at `r`: eigendecomposition plus objective/Jacobian.
pub fn reduce(
    family: &MatrixFamily,
    r: &ParameterPoint,
    mode: &MultiplicityMode,
) -> Result<ReducedSystem, ReductionError> {
    mode.validate(family)?;
    let eigen = eigensystem(family, r)?;
    reduce_with_eigensystem(family, &eigen, mode)
}

/// Builds the reduced system from an existing eigendecomposition. The
/// eigenvectors may carry any unit-phase gauge; the resulting Newton step is
/// unchanged as long as the group vectors span the same eigenspaces.
pub fn reduce_with_eigensystem(
    family: &MatrixFamily,
    eigen: &EigenSystem,
    mode: &MultiplicityMode,
) -> Result<ReducedSystem, ReductionError> {
    mode.validate(family)?;
    let g = mode.kind.group_size();
    let k = match mode.pair {
        PairChoice::Index(k) => k,
        PairChoice::Auto => auto_pair(eigen, g),
    };
    if k == 0 || k + g - 1 > family.n() {
        return Err(ReductionError::PairOutOfRange {
            pair: k,
            group: g,
            n: family.n(),
        });
    }
    let r = eigen.point();
    let d = family.d();
    let values = eigen.values();
    let group = eigen.group_vectors(k, g);

    // Derivative forms T_a = V* (dA/dr_a) V, one g x g block per axis.
    let mut forms: Vec<CMatrix> = Vec::with_capacity(d);
    for axis in 0..d {
        let da = family.derivative(r, axis)?;
        forms.push(group.adjoint() * da * &group);
    }

    let gap = values[k] - values[k - 1];
    let (objective, jacobian, gap2) = match mode.kind {
        ModeKind::Double2D => {
            let mut j = DMatrix::zeros(2, d);
            for (a, t) in forms.iter().enumerate() {
                j[(0, a)] = (t[(0, 0)] - t[(1, 1)]).re;
                j[(1, a)] = 2.0 * t[(0, 1)].re;
            }
            let f = DVector::from_vec(vec![values[k - 1] - values[k], 0.0]);
            (f, j, None)
        }
        ModeKind::InversionSymmetric2D => {
            let mut j = DMatrix::zeros(2, d);
            for (a, t) in forms.iter().enumerate() {
                j[(0, a)] = (t[(0, 0)] - t[(1, 1)]).re;
                j[(1, a)] = 2.0 * t[(0, 1)].im;
            }
            let f = DVector::from_vec(vec![values[k - 1] - values[k], 0.0]);
            (f, j, None)
        }
        ModeKind::HermitianDouble3D => {
            let mut j = DMatrix::zeros(3, d);
            for (a, t) in forms.iter().enumerate() {
                j[(0, a)] = (t[(0, 0)] - t[(1, 1)]).re;
                j[(1, a)] = 2.0 * t[(0, 1)].re;
                j[(2, a)] = 2.0 * t[(0, 1)].im;
            }
            let f = DVector::from_vec(vec![values[k - 1] - values[k], 0.0, 0.0]);
            (f, j, None)
        }
        ModeKind::Triple5D => {
            let mut j = DMatrix::zeros(5, d);
            for (a, t) in forms.iter().enumerate() {
                j[(0, a)] = (t[(0, 0)] - t[(1, 1)]).re;
                j[(1, a)] = (t[(1, 1)] - t[(2, 2)]).re;
                j[(2, a)] = 2.0 * t[(0, 1)].re;
                j[(3, a)] = 2.0 * t[(0, 2)].re;
                j[(4, a)] = 2.0 * t[(1, 2)].re;
            }
            let f = DVector::from_vec(vec![
                values[k - 1] - values[k],
                values[k] - values[k + 1],
                0.0,
                0.0,
                0.0,
            ]);
            let gap2 = values[k + 1] - values[k];
            (f, j, Some(gap2))
        }
    };

    let det_j = jacobian.determinant();
    let sv = jacobian.clone().svd(false, false).singular_values;
    let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    let conditioning = if smax > 0.0 { smin / smax } else { 0.0 };
    let n = family.n();
    let (lo, hi) = (k - 1, k - 1 + g - 1);
    let mut isolation: Option<f64> = None;
    if lo > 0 {
        let below = values[lo] - values[lo - 1];
        isolation = Some(isolation.map_or(below, |v: f64| v.min(below)));
    }
    if hi + 1 < n {
        let above = values[hi + 1] - values[hi];
        isolation = Some(isolation.map_or(above, |v: f64| v.min(above)));
    }

    Ok(ReducedSystem {
        objective,
        jacobian,
        gap,
        gap2,
        isolation,
        det_j,
        conditioning,
        pair_index: k,
        eigen: eigen.clone(),
    })
}

/// Reduced block `V* A(r) V` where `V` holds the fixed group eigenvectors of
/// `A(p)`. At `r = p` this is the diagonal of group eigenvalues.
pub fn reduced_block(
    family: &MatrixFamily,
    p: &ParameterPoint,
    r: &ParameterPoint,
    mode: &MultiplicityMode,
) -> Result<CMatrix, ReductionError> {
    let mode = mode.resolved(family, p)?;
    let eigen = eigensystem(family, p)?;
    let k = match mode.pair {
        PairChoice::Index(k) => k,
        PairChoice::Auto => unreachable!("resolved above"),
    };
    let group = eigen.group_vectors(k, mode.kind.group_size());
    let a = family.evaluate(r)?;
    Ok(group.adjoint() * a * &group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{builtin, TermSpec};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn point(coords: &[f64]) -> ParameterPoint {
        ParameterPoint::new(coords.to_vec()).unwrap()
    }

    fn cone() -> MatrixFamily {
        builtin("canonical-cone", &BTreeMap::new()).unwrap()
    }

    #[test]
    fn cone_eigensystem_at_east_point() {
        // A(1, 0) = diag(1, -1): closed-form decomposition.
        let es = eigensystem(&cone(), &point(&[1.0, 0.0])).unwrap();
        assert!((es.values()[0] + 1.0).abs() < 1e-14);
        assert!((es.values()[1] - 1.0).abs() < 1e-14);
        // column 0 = (0, 1), column 1 = (1, 0) under the phase convention
        assert!((es.vectors()[(0, 0)].norm()) < 1e-14);
        assert!((es.vectors()[(1, 0)] - Complex64::ONE).norm() < 1e-14);
        assert!((es.vectors()[(0, 1)] - Complex64::ONE).norm() < 1e-14);
        assert!((es.vectors()[(1, 1)].norm()) < 1e-14);
    }

    #[test]
    fn constant_diagonal_family_eigensystem() {
        let fam = MatrixFamily::from_terms(
            "diag-123",
            3,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                TermSpec::constant(1, 1, 1.0, 0.0),
                TermSpec::constant(2, 2, 2.0, 0.0),
                TermSpec::constant(3, 3, 3.0, 0.0),
            ],
        )
        .unwrap();
        let es = eigensystem(&fam, &point(&[0.3, 0.4])).unwrap();
        assert_eq!(es.values().as_slice(), &[1.0, 2.0, 3.0]);
        let eye = CMatrix::identity(3, 3);
        assert!((es.vectors() - eye).norm() < 1e-14);
    }

    #[test]
    fn rank_one_has_double_eigenvalue_at_pi_thirds() {
        let fam = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
        let es = eigensystem(&fam, &point(&[PI / 3.0, PI / 3.0])).unwrap();
        // spectrum is {1 - sqrt(3), 1, 1, 1 + sqrt(3)}
        assert!((es.values()[1] - 1.0).abs() < 1e-12);
        assert!((es.values()[2] - 1.0).abs() < 1e-12);
        assert!((es.values()[2] - es.values()[1]).abs() < 1e-12);
    }

    #[test]
    fn eigen_residual_invariant() {
        let fam = builtin("magnetic-graph-10x10", &BTreeMap::new()).unwrap();
        let r = point(&[0.7, -1.3, 0.4]);
        let es = eigensystem(&fam, &r).unwrap();
        let a = fam.evaluate(&r).unwrap();
        let lambda = CMatrix::from_diagonal(&es.values().map(|v| Complex64::new(v, 0.0)));
        let resid = (&a * es.vectors() - es.vectors() * lambda).norm();
        assert!(resid <= 1e-10 * (1.0 + a.norm()), "residual {resid:e}");
        let gram = es.vectors().adjoint() * es.vectors();
        assert!((gram - CMatrix::identity(10, 10)).norm() < 1e-12);
    }

    #[test]
    fn cone_reduction_matches_hand_computation() {
        // Eigenvectors at (1,0) are (0,1) and (1,0); forms give
        // J = [[-2, 0], [0, 2]] and objective (-2, 0).
        let mode = MultiplicityMode::with_pair(ModeKind::Double2D, 1);
        let red = reduce(&cone(), &point(&[1.0, 0.0]), &mode).unwrap();
        assert!((red.objective[0] + 2.0).abs() < 1e-14);
        assert_eq!(red.objective[1], 0.0);
        assert!((red.jacobian[(0, 0)] + 2.0).abs() < 1e-14);
        assert!(red.jacobian[(0, 1)].abs() < 1e-14);
        assert!(red.jacobian[(1, 0)].abs() < 1e-14);
        assert!((red.jacobian[(1, 1)] - 2.0).abs() < 1e-14);
        assert!((red.det_j + 4.0).abs() < 1e-13);
        assert!((red.gap - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_objective_vanishes_at_degeneracy() {
        let fam = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
        let mode = MultiplicityMode::new(ModeKind::Double2D);
        let red = reduce(&fam, &point(&[PI / 3.0, PI / 3.0]), &mode).unwrap();
        assert_eq!(red.pair_index, 2);
        assert!(red.objective.norm() < 1e-12);
    }

    #[test]
    fn triple_objective_vanishes_at_origin() {
        let fam = builtin("triple-5param", &BTreeMap::new()).unwrap();
        let mode = MultiplicityMode::new(ModeKind::Triple5D);
        let red = reduce(&fam, &point(&[0.0; 5]), &mode).unwrap();
        assert!(red.objective.norm() < 1e-12);
        assert!(red.gap_measure() < 1e-12);
    }

    #[test]
    fn reduced_block_is_diagonal_at_base_point() {
        let fam = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
        let p = point(&[0.9, 1.2]);
        let mode = MultiplicityMode::new(ModeKind::Double2D);
        let block = reduced_block(&fam, &p, &p, &mode).unwrap();
        let es = eigensystem(&fam, &p).unwrap();
        let red = reduce(&fam, &p, &mode).unwrap();
        let k = red.pair_index;
        assert!((block[(0, 0)].re - es.values()[k - 1]).abs() < 1e-12);
        assert!((block[(1, 1)].re - es.values()[k]).abs() < 1e-12);
        assert!(block[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn reduced_block_constant_family_is_constant() {
        let fam = MatrixFamily::from_terms(
            "diag-12",
            2,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                TermSpec::constant(1, 1, 1.0, 0.0),
                TermSpec::constant(2, 2, 2.0, 0.0),
            ],
        )
        .unwrap();
        let mode = MultiplicityMode::with_pair(ModeKind::Double2D, 1);
        let p = point(&[0.0, 0.0]);
        for r in [[0.5, -0.25], [3.0, 1.0]] {
            let block = reduced_block(&fam, &p, &point(&r), &mode).unwrap();
            assert!((block[(0, 0)].re - 1.0).abs() < 1e-14);
            assert!((block[(1, 1)].re - 2.0).abs() < 1e-14);
            assert!(block[(0, 1)].norm() < 1e-14);
        }
    }

    #[test]
    fn cone_reduced_block_across_points() {
        // With V = [(0,1), (1,0)] fixed at p = (1,0) and A(0,1) = [[0,1],[1,0]]:
        // V* A V = [[0, 1], [1, 0]].
        let mode = MultiplicityMode::with_pair(ModeKind::Double2D, 1);
        let block =
            reduced_block(&cone(), &point(&[1.0, 0.0]), &point(&[0.0, 1.0]), &mode).unwrap();
        assert!(block[(0, 0)].norm() < 1e-14);
        assert!((block[(0, 1)] - Complex64::ONE).norm() < 1e-14);
        assert!((block[(1, 0)] - Complex64::ONE).norm() < 1e-14);
        assert!(block[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn isolation_flags_group_contact_with_third_eigenvalue() {
        let fam = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
        let mode = MultiplicityMode::new(ModeKind::Double2D);
        let red = reduce(&fam, &point(&[PI / 3.0, PI / 3.0]), &mode).unwrap();
        // spectrum {1 - sqrt(3), 1, 1, 1 + sqrt(3)}: the pair is isolated
        assert!((red.isolation.unwrap() - 3.0f64.sqrt()).abs() < 1e-10);

        // all three eigenvalues coincide: the pair is not isolated
        let scalar = MatrixFamily::from_terms(
            "triple-degenerate",
            3,
            2,
            SymmetryClass::RealSymmetric,
            vec![TermSpec::monomial(1, 1, 0.0, vec![1, 0])],
        )
        .unwrap();
        let red = reduce(&scalar, &point(&[0.3, 0.4]), &mode).unwrap();
        assert_eq!(red.isolation, Some(0.0));

        // 2x2 group spans the whole spectrum: no isolation to measure
        let cone = builtin("canonical-cone", &BTreeMap::new()).unwrap();
        let red = reduce(&cone, &point(&[1.0, 0.0]), &mode).unwrap();
        assert_eq!(red.isolation, None);
    }

    #[test]
    fn mode_family_mismatch_is_rejected() {
        let fam = builtin("magnetic-graph-10x10", &BTreeMap::new()).unwrap();
        let mode = MultiplicityMode::new(ModeKind::Double2D);
        assert!(matches!(
            reduce(&fam, &point(&[0.0, 0.0, 0.0]), &mode),
            Err(ReductionError::DimensionMismatch { .. })
        ));
        let graphene =
            builtin("graphene", &[("p".to_string(), 0.6)].into_iter().collect()).unwrap();
        assert!(matches!(
            reduce(
                &graphene,
                &point(&[1.0, 1.0]),
                &MultiplicityMode::new(ModeKind::Double2D)
            ),
            Err(ReductionError::ClassMismatch { .. })
        ));
    }

    #[test]
    fn jacobian_matches_finite_difference_jacobian() {
        let fam = builtin("paper-2x2-trig", &BTreeMap::new()).unwrap();
        let r = point(&[0.8, -0.4]);
        let mode = MultiplicityMode::with_pair(ModeKind::Double2D, 1);
        let red = reduce(&fam, &r, &mode).unwrap();
        // Rebuild J with finite-difference derivative matrices; agreement is
        // O(h^2) with h = 1e-5.
        let es = eigensystem(&fam, &r).unwrap();
        let group = es.group_vectors(1, 2);
        let h = 1e-5;
        for axis in 0..2 {
            let da = fam.fd_derivative(&r, axis, h).unwrap();
            let t = group.adjoint() * da * &group;
            let fd_row0 = (t[(0, 0)] - t[(1, 1)]).re;
            let fd_row1 = 2.0 * t[(0, 1)].re;
            assert!((fd_row0 - red.jacobian[(0, axis)]).abs() < 1e-9);
            assert!((fd_row1 - red.jacobian[(1, axis)]).abs() < 1e-9);
        }
    }

    #[test]
    fn gauge_flip_keeps_newton_step() {
        let fam = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
        let r = point(&[1.2, 0.7]);
        let mode = MultiplicityMode::new(ModeKind::Double2D);
        let mode = mode.resolved(&fam, &r).unwrap();
        let es = eigensystem(&fam, &r).unwrap();
        let base = reduce_with_eigensystem(&fam, &es, &mode).unwrap();
        let k = base.pair_index;
        let flipped = es.with_gauge(k - 1, Complex64::new(-1.0, 0.0));
        let alt = reduce_with_eigensystem(&fam, &flipped, &mode).unwrap();
        let step_base = base.jacobian.clone().lu().solve(&base.objective).unwrap();
        let step_alt = alt.jacobian.clone().lu().solve(&alt.objective).unwrap();
        assert!((step_base - step_alt).norm() < 1e-12);
    }
}
