//! Closed-form matrix entry terms and their exact derivatives.
//!
//! A family built from terms is differentiated analytically, which keeps the
//! Jacobian of the reduced objective exact instead of finite-difference
//! approximate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FamilyError, SymmetryClass};

/// Functional form of a single matrix entry contribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    /// `c`
    Constant,
    /// `c * cos(<m, r> + phase)`
    Cos,
    /// `c * sin(<m, r> + phase)`
    Sin,
    /// `c * exp(i (<m, r> + phase))`
    Cis,
    /// `c * prod_a r_a^{e_a}`
    Monomial,
}

/// One additive contribution to an upper-triangular matrix entry.
///
/// Indices are 1-based. The mirrored `(col, row)` entry is implied by the
/// family's symmetry class: the complex conjugate for Hermitian classes,
/// which reduces to an equal value for real symmetric families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub row: usize,
    pub col: usize,
    /// Real part of the coefficient `c`.
    pub re: f64,
    /// Imaginary part of the coefficient `c`.
    #[serde(default)]
    pub im: f64,
    pub kind: TermKind,
    /// Integer frequency vector `m` for `cos`/`sin`/`cis`. Empty means zero.
    #[serde(default)]
    pub wavevector: Vec<i64>,
    /// Phase offset added to `<m, r>`.
    #[serde(default)]
    pub phase: f64,
    /// Exponent vector for `monomial`. Empty means zero (a constant).
    #[serde(default)]
    pub exponents: Vec<u32>,
}

impl TermSpec {
    pub fn constant(row: usize, col: usize, re: f64, im: f64) -> Self {
        Self::raw(row, col, re, im, TermKind::Constant, vec![], 0.0, vec![])
    }

    pub fn cos(row: usize, col: usize, coeff: f64, wavevector: Vec<i64>) -> Self {
        Self::raw(row, col, coeff, 0.0, TermKind::Cos, wavevector, 0.0, vec![])
    }

    pub fn sin(row: usize, col: usize, coeff: f64, wavevector: Vec<i64>) -> Self {
        Self::raw(row, col, coeff, 0.0, TermKind::Sin, wavevector, 0.0, vec![])
    }

    pub fn cis(row: usize, col: usize, coeff: f64, wavevector: Vec<i64>) -> Self {
        Self::raw(row, col, coeff, 0.0, TermKind::Cis, wavevector, 0.0, vec![])
    }

    pub fn monomial(row: usize, col: usize, coeff: f64, exponents: Vec<u32>) -> Self {
        Self::raw(
            row,
            col,
            coeff,
            0.0,
            TermKind::Monomial,
            vec![],
            0.0,
            exponents,
        )
    }

    fn raw(
        row: usize,
        col: usize,
        re: f64,
        im: f64,
        kind: TermKind,
        wavevector: Vec<i64>,
        phase: f64,
        exponents: Vec<u32>,
    ) -> Self {
        TermSpec {
            row,
            col,
            re,
            im,
            kind,
            wavevector,
            phase,
            exponents,
        }
    }

    pub fn coefficient(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Angle `<m, r> + phase`. An empty wavevector acts as the zero vector.
    fn angle(&self, r: &[f64]) -> f64 {
        let dot: f64 = self
            .wavevector
            .iter()
            .zip(r)
            .map(|(&m, &x)| m as f64 * x)
            .sum();
        dot + self.phase
    }

    /// Value of the term at parameter point `r`.
    pub fn value(&self, r: &[f64]) -> Complex64 {
        let c = self.coefficient();
        match self.kind {
            TermKind::Constant => c,
            TermKind::Cos => c * self.angle(r).cos(),
            TermKind::Sin => c * self.angle(r).sin(),
            TermKind::Cis => c * Complex64::new(0.0, self.angle(r)).exp(),
            TermKind::Monomial => {
                let mut p = 1.0;
                for (&e, &x) in self.exponents.iter().zip(r) {
                    p *= x.powi(e as i32);
                }
                c * p
            }
        }
    }

    /// Exact partial derivative of the term with respect to `r[axis]`.
    pub fn derivative(&self, r: &[f64], axis: usize) -> Complex64 {
        let c = self.coefficient();
        match self.kind {
            TermKind::Constant => Complex64::ZERO,
            TermKind::Cos => {
                let m = *self.wavevector.get(axis).unwrap_or(&0) as f64;
                -c * m * self.angle(r).sin()
            }
            TermKind::Sin => {
                let m = *self.wavevector.get(axis).unwrap_or(&0) as f64;
                c * m * self.angle(r).cos()
            }
            TermKind::Cis => {
                let m = *self.wavevector.get(axis).unwrap_or(&0) as f64;
                Complex64::new(0.0, m) * c * Complex64::new(0.0, self.angle(r)).exp()
            }
            TermKind::Monomial => {
                let e_axis = *self.exponents.get(axis).unwrap_or(&0);
                if e_axis == 0 {
                    return Complex64::ZERO;
                }
                let mut p = e_axis as f64;
                for (a, (&e, &x)) in self.exponents.iter().zip(r).enumerate() {
                    if a == axis {
                        p *= x.powi(e as i32 - 1);
                    } else {
                        p *= x.powi(e as i32);
                    }
                }
                c * p
            }
        }
    }

    /// Structural checks against the host family's shape and symmetry class.
    pub fn validate(&self, n: usize, d: usize, symmetry: SymmetryClass) -> Result<(), FamilyError> {
        if self.row == 0 || self.col == 0 || self.row > n || self.col > n {
            return Err(FamilyError::Schema(format!(
                "term entry ({}, {}) outside 1..={}",
                self.row, self.col, n
            )));
        }
        if self.row > self.col {
            return Err(FamilyError::Schema(format!(
                "term entry ({}, {}) must satisfy row <= col; the lower triangle is implied",
                self.row, self.col
            )));
        }
        if !(self.wavevector.is_empty() || self.wavevector.len() == d) {
            return Err(FamilyError::Schema(format!(
                "wavevector length {} does not match parameter dimension {}",
                self.wavevector.len(),
                d
            )));
        }
        if !(self.exponents.is_empty() || self.exponents.len() == d) {
            return Err(FamilyError::Schema(format!(
                "exponents length {} does not match parameter dimension {}",
                self.exponents.len(),
                d
            )));
        }
        if !(self.re.is_finite() && self.im.is_finite() && self.phase.is_finite()) {
            return Err(FamilyError::Schema(
                "term coefficient and phase must be finite".into(),
            ));
        }
        if symmetry == SymmetryClass::RealSymmetric {
            if self.kind == TermKind::Cis {
                return Err(FamilyError::Schema(
                    "cis terms are only legal under Hermitian symmetry classes".into(),
                ));
            }
            if self.im != 0.0 {
                return Err(FamilyError::Schema(
                    "real symmetric families require real coefficients".into(),
                ));
            }
        } else if self.row == self.col {
            // Diagonal entries of a Hermitian family must be real for every r.
            if self.kind == TermKind::Cis {
                return Err(FamilyError::Schema(
                    "cis terms on the diagonal are not real-valued".into(),
                ));
            }
            if self.im != 0.0 {
                return Err(FamilyError::Schema(format!(
                    "diagonal entry ({}, {}) has an imaginary coefficient",
                    self.row, self.col
                )));
            }
        }
        Ok(())
    }
}
