//! Parametric matrix families: definition, evaluation and differentiation.
//!
//! A [`MatrixFamily`] is a smooth map `r -> A(r)` from a low-dimensional real
//! parameter space (d = 2, 3 or 5) into the real symmetric or complex
//! Hermitian matrices of a fixed size. Families are either assembled from
//! closed-form [`TermSpec`] entries, which differentiate exactly, or wrap a
//! native callback with an optional analytic derivative and a central
//! finite-difference fallback.
//!
//! Matrices are stored as dense complex matrices regardless of class; the
//! real symmetric case simply carries zero imaginary parts.

use std::fmt;
use std::ops::Index;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

mod builtins;
mod document;
mod term;

pub use builtins::{builtin, builtin_catalog, BuiltinInfo, ParamSpec};
pub use document::{load_family, FamilyDocument};
pub use term::{TermKind, TermSpec};

/// Dense complex matrix used for every family evaluation.
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for structural matrix checks (symmetry residuals).
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("parameter point has {got} coordinates, family expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter coordinates must be finite")]
    NonFinitePoint,
    #[error("derivative axis {axis} out of range for {d} parameters")]
    AxisOutOfRange { axis: usize, d: usize },
    #[error("family `{0}` provides no analytic derivative and finite differences are disabled")]
    NoAnalyticDerivative(String),
    #[error("family file is invalid: {0}")]
    Schema(String),
    #[error("family `{name}` violates its declared symmetry class: {detail}")]
    SymmetryViolation { name: String, detail: String },
    #[error("unknown builtin family `{0}`")]
    UnknownBuiltin(String),
    #[error("builtin `{family}` requires parameter `{param}`")]
    MissingParam { family: String, param: String },
    #[error("builtin `{family}` does not accept parameter `{param}`")]
    UnknownParam { family: String, param: String },
    #[error("parameter `{param}` = {value} is invalid: {reason}")]
    InvalidParam {
        param: String,
        value: f64,
        reason: String,
    },
    #[error("family `{0}` is callback-backed and cannot be serialized to a term list")]
    NotSerializable(String),
    #[error("failed to parse family file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A point in the family's parameter space. Coordinates are finite by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPoint {
    coords: DVector<f64>,
}

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, FamilyError> {
        if !coords.iter().all(|x| x.is_finite()) {
            return Err(FamilyError::NonFinitePoint);
        }
        Ok(ParameterPoint {
            coords: DVector::from_vec(coords),
        })
    }

    /// Builds a point without the finite check; intended for arithmetic on
    /// already-validated data. Non-finite coordinates are reported by
    /// [`ParameterPoint::is_finite`].
    pub fn from_vector(coords: DVector<f64>) -> Self {
        ParameterPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|x| x.is_finite())
    }

    pub fn translated(&self, delta: &DVector<f64>) -> ParameterPoint {
        ParameterPoint {
            coords: &self.coords + delta,
        }
    }

    pub fn distance(&self, other: &ParameterPoint) -> f64 {
        (&self.coords - &other.coords).norm()
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }
}

impl Index<usize> for ParameterPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl fmt::Display for ParameterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for ParameterPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParameterPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        ParameterPoint::new(coords).map_err(D::Error::custom)
    }
}

/// Matrix symmetry classes recognised by the reduction and solver layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    /// `A(r) = A(r)^T` with real entries.
    RealSymmetric,
    /// `A(r) = A(r)^*` (conjugate transpose).
    Hermitian,
    /// Hermitian with the additional inversion symmetry
    /// `conj(A(-r)) = A(r)`.
    InversionSymmetricHermitian,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymmetryClass::RealSymmetric => "real-symmetric",
            SymmetryClass::Hermitian => "hermitian",
            SymmetryClass::InversionSymmetricHermitian => "inversion-symmetric-hermitian",
        };
        f.write_str(s)
    }
}

type EvalFn = dyn Fn(&[f64]) -> CMatrix + Send + Sync;
type DerivFn = dyn Fn(&[f64], usize) -> CMatrix + Send + Sync;

#[derive(Clone)]
enum FamilyRepr {
    Terms(Vec<TermSpec>),
    Callback {
        eval: Arc<EvalFn>,
        derivative: Option<Arc<DerivFn>>,
    },
}

/// A smooth parametric matrix family with a declared symmetry class.
///
/// Values are immutable after construction and cheap to clone; they can be
/// shared freely across threads. All evaluation methods are pure functions
/// of their inputs.
#[derive(Clone)]
pub struct MatrixFamily {
    name: String,
    n: usize,
    d: usize,
    symmetry: SymmetryClass,
    repr: FamilyRepr,
    fd_fallback: bool,
}

impl fmt::Debug for MatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFamily")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("symmetry", &self.symmetry)
            .field(
                "repr",
                &match &self.repr {
                    FamilyRepr::Terms(t) => format!("{} terms", t.len()),
                    FamilyRepr::Callback { derivative, .. } => {
                        format!("callback (analytic derivative: {})", derivative.is_some())
                    }
                },
            )
            .finish()
    }
}

impl MatrixFamily {
    /// Builds a family from closed-form terms. Terms are validated
    /// structurally and the declared symmetry class is verified numerically
    /// at sampled points.
    pub fn from_terms(
        name: impl Into<String>,
        n: usize,
        d: usize,
        symmetry: SymmetryClass,
        terms: Vec<TermSpec>,
    ) -> Result<Self, FamilyError> {
        let name = name.into();
        if n == 0 || !matches!(d, 2 | 3 | 5) {
            return Err(FamilyError::Schema(format!(
                "family `{name}`: n must be positive and d one of 2, 3, 5 (got n={n}, d={d})"
            )));
        }
        for t in &terms {
            t.validate(n, d, symmetry)?;
        }
        let fam = MatrixFamily {
            name,
            n,
            d,
            symmetry,
            repr: FamilyRepr::Terms(terms),
            fd_fallback: true,
        };
        fam.verify_symmetry_class()?;
        Ok(fam)
    }

    /// Wraps native evaluation callbacks. `derivative(r, axis)` should return
    /// the exact partial derivative matrix; when absent, central finite
    /// differences are used unless disabled via [`with_fd_fallback`].
    ///
    /// Smoothness of the callbacks is a caller obligation; only the symmetry
    /// class is verified (at sampled points).
    ///
    /// [`with_fd_fallback`]: MatrixFamily::with_fd_fallback
    pub fn from_callback(
        name: impl Into<String>,
        n: usize,
        d: usize,
        symmetry: SymmetryClass,
        eval: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static,
        derivative: Option<Box<DerivFn>>,
    ) -> Result<Self, FamilyError> {
        let name = name.into();
        if n == 0 || !matches!(d, 2 | 3 | 5) {
            return Err(FamilyError::Schema(format!(
                "family `{name}`: n must be positive and d one of 2, 3, 5 (got n={n}, d={d})"
            )));
        }
        let fam = MatrixFamily {
            name,
            n,
            d,
            symmetry,
            repr: FamilyRepr::Callback {
                eval: Arc::new(eval),
                derivative: derivative.map(Arc::from),
            },
            fd_fallback: true,
        };
        fam.verify_symmetry_class()?;
        Ok(fam)
    }

    pub fn with_fd_fallback(mut self, enabled: bool) -> Self {
        self.fd_fallback = enabled;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    pub fn has_analytic_derivative(&self) -> bool {
        match &self.repr {
            FamilyRepr::Terms(_) => true,
            FamilyRepr::Callback { derivative, .. } => derivative.is_some(),
        }
    }

    pub fn terms(&self) -> Option<&[TermSpec]> {
        match &self.repr {
            FamilyRepr::Terms(t) => Some(t),
            FamilyRepr::Callback { .. } => None,
        }
    }

    fn check_point(&self, r: &ParameterPoint) -> Result<(), FamilyError> {
        if r.dim() != self.d {
            return Err(FamilyError::DimensionMismatch {
                expected: self.d,
                got: r.dim(),
            });
        }
        if !r.is_finite() {
            return Err(FamilyError::NonFinitePoint);
        }
        Ok(())
    }

    /// Evaluates `A(r)`.
    pub fn evaluate(&self, r: &ParameterPoint) -> Result<CMatrix, FamilyError> {
        self.check_point(r)?;
        Ok(match &self.repr {
            FamilyRepr::Terms(terms) => assemble(self.n, terms, r.as_slice(), None),
            FamilyRepr::Callback { eval, .. } => eval(r.as_slice()),
        })
    }

    /// Evaluates the exact partial derivative `dA/dr_axis`.
    ///
    /// Term families differentiate analytically. Callback families use the
    /// provided derivative, or a central difference with the default step
    /// when finite-difference fallback is enabled.
    pub fn derivative(&self, r: &ParameterPoint, axis: usize) -> Result<CMatrix, FamilyError> {
        self.check_point(r)?;
        if axis >= self.d {
            return Err(FamilyError::AxisOutOfRange { axis, d: self.d });
        }
        match &self.repr {
            FamilyRepr::Terms(terms) => Ok(assemble(self.n, terms, r.as_slice(), Some(axis))),
            FamilyRepr::Callback { derivative, .. } => {
                if let Some(df) = derivative {
                    Ok(df(r.as_slice(), axis))
                } else if self.fd_fallback {
                    self.fd_derivative(r, axis, Self::fd_default_step(r[axis]))
                } else {
                    Err(FamilyError::NoAnalyticDerivative(self.name.clone()))
                }
            }
        }
    }

    /// Central difference `(A(r + h e_axis) - A(r - h e_axis)) / 2h`.
    pub fn fd_derivative(
        &self,
        r: &ParameterPoint,
        axis: usize,
        h: f64,
    ) -> Result<CMatrix, FamilyError> {
        self.check_point(r)?;
        if axis >= self.d {
            return Err(FamilyError::AxisOutOfRange { axis, d: self.d });
        }
        if !(h > 0.0) {
            return Err(FamilyError::Schema(format!(
                "finite-difference step must be positive, got {h}"
            )));
        }
        let mut delta = DVector::zeros(self.d);
        delta[axis] = h;
        let plus = self.evaluate(&r.translated(&delta))?;
        delta[axis] = -h;
        let minus = self.evaluate(&r.translated(&delta))?;
        Ok((plus - minus).unscale(2.0 * h))
    }

    /// Default central-difference step: cube root of machine epsilon scaled
    /// by the coordinate magnitude, balancing truncation against roundoff.
    pub fn fd_default_step(coord: f64) -> f64 {
        f64::EPSILON.cbrt() * (1.0 + coord.abs())
    }

    /// The family `r -> U* A(r) U` for a constant unitary `U`.
    ///
    /// Real orthogonal `U` preserves the symmetry class; a genuinely complex
    /// `U` downgrades real symmetric and inversion-symmetric classes to
    /// plain Hermitian.
    pub fn conjugated(&self, u: &CMatrix) -> Result<MatrixFamily, FamilyError> {
        if u.nrows() != self.n || u.ncols() != self.n {
            return Err(FamilyError::Schema(format!(
                "conjugation matrix must be {0}x{0}",
                self.n
            )));
        }
        let unitary_residual = (u.adjoint() * u - CMatrix::identity(self.n, self.n)).norm();
        if unitary_residual > 1e-10 * (1.0 + u.norm()) {
            return Err(FamilyError::Schema(format!(
                "conjugation matrix is not unitary (residual {unitary_residual:.3e})"
            )));
        }
        let u_is_real = u.iter().all(|z| z.im == 0.0);
        let symmetry = if u_is_real {
            self.symmetry
        } else {
            SymmetryClass::Hermitian
        };
        let base = self.clone();
        let base_d = self.clone();
        let u_eval = u.clone();
        let u_deriv = u.clone();
        MatrixFamily::from_callback(
            format!("{}~conjugated", self.name),
            self.n,
            self.d,
            symmetry,
            move |r| {
                let p = ParameterPoint::new(r.to_vec()).expect("finite point");
                let a = base.evaluate(&p).expect("evaluation of conjugated base");
                u_eval.adjoint() * a * &u_eval
            },
            Some(Box::new(move |r, axis| {
                let p = ParameterPoint::new(r.to_vec()).expect("finite point");
                let da = base_d
                    .derivative(&p, axis)
                    .expect("derivative of conjugated base");
                u_deriv.adjoint() * da * &u_deriv
            })),
        )
    }

    /// Verifies the declared symmetry class numerically at a fixed set of
    /// sampled points.
    fn verify_symmetry_class(&self) -> Result<(), FamilyError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5a_17e5);
        let mut points: Vec<Vec<f64>> = vec![vec![0.0; self.d]];
        for _ in 0..7 {
            points.push(
                (0..self.d)
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect(),
            );
        }
        for coords in points {
            let p = ParameterPoint::new(coords.clone()).expect("sample point is finite");
            let a = match &self.repr {
                FamilyRepr::Terms(terms) => assemble(self.n, terms, p.as_slice(), None),
                FamilyRepr::Callback { eval, .. } => eval(p.as_slice()),
            };
            if a.nrows() != self.n || a.ncols() != self.n {
                return Err(FamilyError::SymmetryViolation {
                    name: self.name.clone(),
                    detail: format!("evaluation returned a {}x{} matrix", a.nrows(), a.ncols()),
                });
            }
            if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(FamilyError::SymmetryViolation {
                    name: self.name.clone(),
                    detail: format!("non-finite entries at sample point {:?}", coords),
                });
            }
            let scale = 1.0 + a.norm();
            let herm = (&a - a.adjoint()).norm();
            if herm > SYMMETRY_TOL * scale {
                return Err(FamilyError::SymmetryViolation {
                    name: self.name.clone(),
                    detail: format!("Hermitian residual {herm:.3e} at {:?}", coords),
                });
            }
            if self.symmetry == SymmetryClass::RealSymmetric {
                let imag: f64 = a.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
                if imag > SYMMETRY_TOL * scale {
                    return Err(FamilyError::SymmetryViolation {
                        name: self.name.clone(),
                        detail: format!("imaginary part {imag:.3e} at {:?}", coords),
                    });
                }
            }
            if self.symmetry == SymmetryClass::InversionSymmetricHermitian {
                let neg = ParameterPoint::new(coords.iter().map(|x| -x).collect::<Vec<_>>())
                    .expect("sample point is finite");
                let a_neg = match &self.repr {
                    FamilyRepr::Terms(terms) => assemble(self.n, terms, neg.as_slice(), None),
                    FamilyRepr::Callback { eval, .. } => eval(neg.as_slice()),
                };
                let inv = (a_neg.map(|z| z.conj()) - &a).norm();
                if inv > SYMMETRY_TOL * scale {
                    return Err(FamilyError::SymmetryViolation {
                        name: self.name.clone(),
                        detail: format!("inversion residual {inv:.3e} at {:?}", coords),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Sums term values (or derivatives) into a Hermitian matrix, mirroring the
/// implied lower triangle by conjugation.
fn assemble(n: usize, terms: &[TermSpec], r: &[f64], axis: Option<usize>) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for t in terms {
        let v = match axis {
            None => t.value(r),
            Some(axis) => t.derivative(r, axis),
        };
        let (i, j) = (t.row - 1, t.col - 1);
        a[(i, j)] += v;
        if i != j {
            a[(j, i)] += v.conj();
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(coords: &[f64]) -> ParameterPoint {
        ParameterPoint::new(coords.to_vec()).unwrap()
    }

    fn affine_family() -> MatrixFamily {
        // A0 + x A1 + y A2 with distinct constants for easy checks.
        MatrixFamily::from_terms(
            "affine",
            2,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                TermSpec::constant(1, 1, 0.25, 0.0),
                TermSpec::constant(1, 2, -0.5, 0.0),
                TermSpec::constant(2, 2, 1.5, 0.0),
                TermSpec::monomial(1, 1, 2.0, vec![1, 0]),
                TermSpec::monomial(1, 2, 0.75, vec![1, 0]),
                TermSpec::monomial(2, 2, -1.0, vec![0, 1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn affine_family_at_origin_is_constant_part() {
        let a = affine_family().evaluate(&point(&[0.0, 0.0])).unwrap();
        assert_eq!(a[(0, 0)].re, 0.25);
        assert_eq!(a[(0, 1)].re, -0.5);
        assert_eq!(a[(1, 0)].re, -0.5);
        assert_eq!(a[(1, 1)].re, 1.5);
    }

    #[test]
    fn affine_derivative_is_constant_coefficient_matrix() {
        let fam = affine_family();
        let d0 = fam.derivative(&point(&[0.4, -0.7]), 0).unwrap();
        assert_eq!(d0[(0, 0)].re, 2.0);
        assert_eq!(d0[(0, 1)].re, 0.75);
        assert_eq!(d0[(1, 1)].re, 0.0);
        // central differences are exact for affine families
        let fd = fam.fd_derivative(&point(&[0.4, -0.7]), 0, 0.37).unwrap();
        assert!((d0 - fd).norm() < 1e-13);
    }

    #[test]
    fn fd_matches_analytic_on_trig_family() {
        let fam = builtin("graphene", &[("p".to_string(), 0.6)].into_iter().collect()).unwrap();
        let r = point(&[1.0, 1.0]);
        for axis in 0..2 {
            let exact = fam.derivative(&r, axis).unwrap();
            let fd = fam.fd_derivative(&r, axis, 1e-5).unwrap();
            assert!((exact - fd).norm() < 1e-9, "axis {axis}");
        }
    }

    #[test]
    fn fd_error_is_second_order() {
        let fam = builtin("paper-2x2-trig", &Default::default()).unwrap();
        let r = point(&[0.35, -0.8]);
        let exact = fam.derivative(&r, 1).unwrap();
        let err = |h: f64| (fam.fd_derivative(&r, 1, h).unwrap() - &exact).norm();
        let (e1, e2) = (err(1e-3), err(5e-4));
        let ratio = e1 / e2;
        assert!(
            (2.5..6.0).contains(&ratio),
            "halving h shrinks the error by {ratio:.2}, expected ~4"
        );
    }

    #[test]
    fn derivative_axis_out_of_range() {
        let fam = affine_family();
        assert!(matches!(
            fam.derivative(&point(&[0.0, 0.0]), 2),
            Err(FamilyError::AxisOutOfRange { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let fam = affine_family();
        assert!(matches!(
            fam.evaluate(&point(&[0.0, 0.0, 0.0])),
            Err(FamilyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn callback_family_without_derivative_uses_fd() {
        let base = affine_family();
        let inner = base.clone();
        let fam = MatrixFamily::from_callback(
            "affine-cb",
            2,
            2,
            SymmetryClass::RealSymmetric,
            move |r| inner.evaluate(&point(r)).unwrap(),
            None,
        )
        .unwrap();
        let r = point(&[0.3, 0.9]);
        let got = fam.derivative(&r, 0).unwrap();
        let want = base.derivative(&r, 0).unwrap();
        assert!((got - want).norm() < 1e-9);

        let strict = fam.with_fd_fallback(false);
        assert!(matches!(
            strict.derivative(&r, 0),
            Err(FamilyError::NoAnalyticDerivative(_))
        ));
    }

    #[test]
    fn symmetry_violation_detected_at_construction() {
        // Callback returning a non-symmetric matrix must be rejected.
        let result = MatrixFamily::from_callback(
            "broken",
            2,
            2,
            SymmetryClass::RealSymmetric,
            |r| {
                let mut a = CMatrix::zeros(2, 2);
                a[(0, 1)] = num_complex::Complex64::new(r[0], 0.0);
                a
            },
            None,
        );
        assert!(matches!(result, Err(FamilyError::SymmetryViolation { .. })));
    }

    #[test]
    fn conjugated_family_tracks_base() {
        let fam = affine_family();
        // rotation by 30 degrees
        let (c, s) = (0.5f64.sqrt(), 0.5f64.sqrt());
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[
                num_complex::Complex64::new(c, 0.0),
                num_complex::Complex64::new(-s, 0.0),
                num_complex::Complex64::new(s, 0.0),
                num_complex::Complex64::new(c, 0.0),
            ],
        );
        let conj = fam.conjugated(&u).unwrap();
        assert_eq!(conj.symmetry(), SymmetryClass::RealSymmetric);
        let r = point(&[0.2, 0.8]);
        let want = u.adjoint() * fam.evaluate(&r).unwrap() * &u;
        assert!((conj.evaluate(&r).unwrap() - want).norm() < 1e-14);
        let want_d = u.adjoint() * fam.derivative(&r, 1).unwrap() * &u;
        assert!((conj.derivative(&r, 1).unwrap() - want_d).norm() < 1e-14);
    }

    #[test]
    fn symmetry_residual_invariant_on_builtins() {
        use rand::{RngExt, SeedableRng};
        let mut params = std::collections::BTreeMap::new();
        params.insert("p".to_string(), 0.6);
        let mut eps_params = std::collections::BTreeMap::new();
        eps_params.insert("eps".to_string(), 1e-4);
        let mut seed_params = std::collections::BTreeMap::new();
        seed_params.insert("seed".to_string(), 2.0);
        let families = vec![
            builtin("canonical-cone", &Default::default()).unwrap(),
            builtin("paper-2x2-trig", &Default::default()).unwrap(),
            builtin("rank-one-4x4", &Default::default()).unwrap(),
            builtin("avoided-2x2", &eps_params).unwrap(),
            builtin("graphene", &params).unwrap(),
            builtin("magnetic-graph-10x10", &Default::default()).unwrap(),
            builtin("triple-5param", &Default::default()).unwrap(),
            builtin("linear-random", &seed_params).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for fam in &families {
            for _ in 0..100 {
                let coords: Vec<f64> = (0..fam.d())
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect();
                let p = point(&coords);
                let a = fam.evaluate(&p).unwrap();
                let scale = 1.0 + a.norm();
                assert!(
                    (&a - a.adjoint()).norm() <= SYMMETRY_TOL * scale,
                    "{}",
                    fam.name()
                );
                if fam.symmetry() == SymmetryClass::InversionSymmetricHermitian {
                    let neg = point(&coords.iter().map(|x| -x).collect::<Vec<_>>());
                    let a_neg = fam.evaluate(&neg).unwrap();
                    assert!(
                        (a_neg.map(|z| z.conj()) - &a).norm() <= SYMMETRY_TOL * scale,
                        "inversion symmetry of {}",
                        fam.name()
                    );
                }
            }
        }
    }
}
