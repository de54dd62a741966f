//! Registry of built-in matrix families.
//!
//! Each entry reproduces a model with a known degeneracy structure, from the
//! canonical 2x2 cone to a two-band tight-binding model whose Dirac points
//! merge and annihilate as a hopping amplitude crosses 1/2.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::term::TermSpec;
use super::{FamilyError, MatrixFamily, SymmetryClass};

/// Declared parameter of a builtin family.
#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: Option<f64>,
    pub doc: &'static str,
}

/// Catalog entry describing one builtin family.
#[derive(Clone, Copy, Debug)]
pub struct BuiltinInfo {
    pub name: &'static str,
    pub n: usize,
    pub d: usize,
    pub symmetry: SymmetryClass,
    pub params: &'static [ParamSpec],
    pub summary: &'static str,
}

const CATALOG: &[BuiltinInfo] = &[
    BuiltinInfo {
        name: "canonical-cone",
        n: 2,
        d: 2,
        symmetry: SymmetryClass::RealSymmetric,
        params: &[],
        summary: "A(x,y) = [[x, y], [y, -x]]; single conical degeneracy at the origin",
    },
    BuiltinInfo {
        name: "paper-2x2-trig",
        n: 2,
        d: 2,
        symmetry: SymmetryClass::RealSymmetric,
        params: &[],
        summary: "trigonometric 2x2 family with three conical points in [-pi, pi]^2",
    },
    BuiltinInfo {
        name: "rank-one-4x4",
        n: 4,
        d: 2,
        symmetry: SymmetryClass::RealSymmetric,
        params: &[],
        summary: "rank-one perturbation of diag(2cos x, 0.5 + cos y, 1, 1); double eigenvalue 1 at (pi/3, pi/3)",
    },
    BuiltinInfo {
        name: "avoided-2x2",
        n: 2,
        d: 2,
        symmetry: SymmetryClass::Hermitian,
        params: &[ParamSpec {
            name: "eps",
            default: None,
            doc: "imaginary off-diagonal perturbation; 0 keeps the conical point at (0,0), nonzero lifts it to an avoided crossing",
        }],
        summary: "2x2 family whose conical point at (0,0) is destroyed by a complex perturbation",
    },
    BuiltinInfo {
        name: "graphene",
        n: 2,
        d: 2,
        symmetry: SymmetryClass::InversionSymmetricHermitian,
        params: &[ParamSpec {
            name: "p",
            default: None,
            doc: "anisotropic hopping amplitude; two Dirac points for p > 1/2, merged at p = 1/2, none below",
        }],
        summary: "two-band tight-binding model with off-diagonal -1 - e^{ix}/2 - p e^{iy}",
    },
    BuiltinInfo {
        name: "magnetic-graph-10x10",
        n: 10,
        d: 3,
        symmetry: SymmetryClass::Hermitian,
        params: &[],
        summary: "discrete graph Laplacian with two magnetic phases (x, y) and an artificial coupling z",
    },
    BuiltinInfo {
        name: "triple-5param",
        n: 3,
        d: 5,
        symmetry: SymmetryClass::RealSymmetric,
        params: &[],
        summary: "5-parameter 3x3 family with a triple eigenvalue 1 at the origin",
    },
    BuiltinInfo {
        name: "linear-random",
        n: 2,
        d: 2,
        symmetry: SymmetryClass::RealSymmetric,
        params: &[
            ParamSpec {
                name: "seed",
                default: None,
                doc: "non-negative integer seed for the coefficient matrices",
            },
            ParamSpec {
                name: "n",
                default: Some(2.0),
                doc: "matrix dimension (2..=12)",
            },
        ],
        summary: "random affine family A0 + x A1 + y A2 with symmetric coefficient matrices",
    },
];

/// Catalog of all builtin families in a stable order.
pub fn builtin_catalog() -> &'static [BuiltinInfo] {
    CATALOG
}

/// Instantiates a builtin family by name.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<MatrixFamily, FamilyError> {
    let info = CATALOG
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| FamilyError::UnknownBuiltin(name.to_string()))?;
    for key in params.keys() {
        if !info.params.iter().any(|p| p.name == key) {
            return Err(FamilyError::UnknownParam {
                family: name.to_string(),
                param: key.clone(),
            });
        }
    }
    let get = |param: &'static str| -> Result<f64, FamilyError> {
        if let Some(&v) = params.get(param) {
            return Ok(v);
        }
        info.params
            .iter()
            .find(|p| p.name == param)
            .and_then(|p| p.default)
            .ok_or_else(|| FamilyError::MissingParam {
                family: name.to_string(),
                param: param.to_string(),
            })
    };

    match name {
        "canonical-cone" => MatrixFamily::from_terms(
            name,
            2,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                TermSpec::monomial(1, 1, 1.0, vec![1, 0]),
                TermSpec::monomial(1, 2, 1.0, vec![0, 1]),
                TermSpec::monomial(2, 2, -1.0, vec![1, 0]),
            ],
        ),
        "paper-2x2-trig" => MatrixFamily::from_terms(
            name,
            2,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                // cos(y) sin(x) = (sin(x + y) + sin(x - y)) / 2
                TermSpec::sin(1, 1, 0.5, vec![1, 1]),
                TermSpec::sin(1, 1, 0.5, vec![1, -1]),
                TermSpec::constant(1, 2, 2.0, 0.0),
                TermSpec::sin(1, 2, -3.0, vec![-1, 1]),
                TermSpec::cos(2, 2, 2.0, vec![0, 1]),
                TermSpec::sin(2, 2, -1.0, vec![1, 0]),
            ],
        ),
        "rank-one-4x4" => MatrixFamily::from_terms(
            name,
            4,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                TermSpec::cos(1, 1, 2.0, vec![1, 0]),
                TermSpec::constant(2, 2, 0.5, 0.0),
                TermSpec::cos(2, 2, 1.0, vec![0, 1]),
                TermSpec::constant(3, 3, 1.0, 0.0),
                TermSpec::constant(4, 4, 1.0, 0.0),
                TermSpec::constant(1, 4, 1.0, 0.0),
                TermSpec::constant(2, 4, 1.0, 0.0),
                TermSpec::constant(3, 4, 1.0, 0.0),
            ],
        ),
        "avoided-2x2" => {
            let eps = get("eps")?;
            let symmetry = if eps == 0.0 {
                SymmetryClass::RealSymmetric
            } else {
                SymmetryClass::Hermitian
            };
            let mut terms = vec![
                TermSpec::monomial(1, 1, 1.0, vec![1, 0]),
                TermSpec::sin(1, 1, 3.0, vec![0, 1]),
                TermSpec::monomial(1, 2, 1.0, vec![0, 1]),
                TermSpec::monomial(2, 2, -1.0, vec![1, 0]),
                TermSpec::monomial(2, 2, -1.0, vec![2, 0]),
            ];
            if eps != 0.0 {
                terms.push(TermSpec::constant(1, 2, 0.0, eps));
            }
            MatrixFamily::from_terms(name, 2, 2, symmetry, terms)
        }
        "graphene" => {
            let p = get("p")?;
            MatrixFamily::from_terms(
                name,
                2,
                2,
                SymmetryClass::InversionSymmetricHermitian,
                vec![
                    TermSpec::constant(1, 2, -1.0, 0.0),
                    TermSpec::cis(1, 2, -0.5, vec![1, 0]),
                    TermSpec::cis(1, 2, -p, vec![0, 1]),
                ],
            )
        }
        "magnetic-graph-10x10" => {
            let mut terms = Vec::new();
            for &(i, v) in &[
                (1, 1.0),
                (2, 3.0),
                (3, 2.0),
                (4, 3.0),
                (5, 3.0),
                (6, 3.0),
                (7, 3.0),
                (8, 2.0),
                (9, 3.0),
                (10, 1.0),
            ] {
                terms.push(TermSpec::constant(i, i, v, 0.0));
            }
            for &(i, j) in &[
                (1usize, 2usize),
                (2, 4),
                (3, 4),
                (4, 5),
                (5, 6),
                (5, 7),
                (7, 8),
                (7, 9),
                (9, 10),
            ] {
                terms.push(TermSpec::constant(i, j, 1.0, 0.0));
            }
            terms.push(TermSpec::cis(2, 3, 1.0, vec![1, 0, 0]));
            terms.push(TermSpec::cis(8, 9, 1.0, vec![0, 1, 0]));
            terms.push(TermSpec::monomial(1, 10, 1.0, vec![0, 0, 1]));
            MatrixFamily::from_terms(name, 10, 3, SymmetryClass::Hermitian, terms)
        }
        "triple-5param" => {
            // Parameters ordered (x, y, z, u, v).
            let m = |row, col, c, exps: [u32; 5]| TermSpec::monomial(row, col, c, exps.to_vec());
            MatrixFamily::from_terms(
                name,
                3,
                5,
                SymmetryClass::RealSymmetric,
                vec![
                    TermSpec::constant(1, 1, 1.0, 0.0),
                    m(1, 1, 1.0, [0, 0, 0, 1, 0]),
                    m(1, 1, 1.0, [0, 0, 0, 0, 1]),
                    m(1, 1, 1.0, [1, 0, 0, 0, 0]),
                    m(1, 1, -3.0, [0, 1, 0, 0, 0]),
                    m(1, 1, -1.0, [0, 0, 1, 0, 0]),
                    m(1, 2, 2.0, [1, 0, 0, 0, 0]),
                    m(1, 2, 1.0, [0, 1, 0, 0, 0]),
                    m(1, 2, 2.0, [0, 0, 1, 0, 0]),
                    m(1, 3, 1.0, [1, 0, 0, 0, 0]),
                    m(1, 3, 1.0, [1, 0, 1, 0, 0]),
                    m(1, 3, 1.0, [0, 1, 0, 0, 0]),
                    TermSpec::constant(2, 2, 1.0, 0.0),
                    m(2, 2, 1.0, [1, 0, 0, 0, 0]),
                    m(2, 2, 1.0, [0, 1, 1, 0, 0]),
                    m(2, 3, 2.0, [0, 0, 0, 1, 0]),
                    m(2, 3, -1.0, [0, 0, 0, 0, 1]),
                    m(2, 3, 1.0, [0, 0, 1, 0, 0]),
                    TermSpec::constant(3, 3, 1.0, 0.0),
                    m(3, 3, 1.0, [0, 0, 0, 1, 1]),
                ],
            )
        }
        "linear-random" => {
            let seed = get("seed")?;
            if seed < 0.0 || seed.fract() != 0.0 {
                return Err(FamilyError::InvalidParam {
                    param: "seed".into(),
                    value: seed,
                    reason: "must be a non-negative integer".into(),
                });
            }
            let n = get("n")?;
            if n.fract() != 0.0 || !(2.0..=12.0).contains(&n) {
                return Err(FamilyError::InvalidParam {
                    param: "n".into(),
                    value: n,
                    reason: "must be an integer in 2..=12".into(),
                });
            }
            let n = n as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut terms = Vec::new();
            // Three symmetric coefficient matrices sampled upper triangle first.
            for which in 0..3usize {
                for i in 1..=n {
                    for j in i..=n {
                        let c: f64 = rng.random_range(-1.0..1.0);
                        terms.push(match which {
                            0 => TermSpec::constant(i, j, c, 0.0),
                            1 => TermSpec::monomial(i, j, c, vec![1, 0]),
                            _ => TermSpec::monomial(i, j, c, vec![0, 1]),
                        });
                    }
                }
            }
            MatrixFamily::from_terms(
                format!("linear-random-{}", seed as u64),
                n,
                2,
                SymmetryClass::RealSymmetric,
                terms,
            )
        }
        _ => unreachable!("catalog and dispatch are in sync"),
    }
}
