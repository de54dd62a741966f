//! Family-file schema: a JSON object with fields `n`, `d`, `symmetry`,
//! `name` and `terms`. Entry indices are 1-based; complex coefficients are
//! given as `re`/`im`; omitted `wavevector`/`exponents` default to zero
//! vectors. Loading validates the term list against the declared symmetry
//! class, and serialization round-trips term lists bit-exactly.

use serde::{Deserialize, Serialize};

use super::term::TermSpec;
use super::{FamilyError, MatrixFamily, SymmetryClass};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FamilyDocument {
    pub n: usize,
    pub d: usize,
    pub symmetry: SymmetryClass,
    pub name: String,
    pub terms: Vec<TermSpec>,
}

/// Parses a family file and builds the validated family.
pub fn load_family(text: &str) -> Result<MatrixFamily, FamilyError> {
    let doc: FamilyDocument = serde_json::from_str(text)?;
    MatrixFamily::from_document(doc)
}

impl MatrixFamily {
    pub fn from_document(doc: FamilyDocument) -> Result<Self, FamilyError> {
        MatrixFamily::from_terms(doc.name, doc.n, doc.d, doc.symmetry, doc.terms)
    }

    /// Document form of a term-based family. Callback families have no
    /// closed-form representation and cannot be serialized.
    pub fn to_document(&self) -> Result<FamilyDocument, FamilyError> {
        let terms = self
            .terms()
            .ok_or_else(|| FamilyError::NotSerializable(self.name().to_string()))?;
        Ok(FamilyDocument {
            n: self.n(),
            d: self.d(),
            symmetry: self.symmetry(),
            name: self.name().to_string(),
            terms: terms.to_vec(),
        })
    }

    pub fn to_json(&self) -> Result<String, FamilyError> {
        Ok(serde_json::to_string_pretty(&self.to_document()?)?)
    }
}
