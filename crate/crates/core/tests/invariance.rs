//! Property tests for the structural invariants of families and reductions.

use conical_core::*;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn point(coords: &[f64]) -> ParameterPoint {
    ParameterPoint::new(coords.to_vec()).unwrap()
}

/// Strategy: a random real symmetric trigonometric family of size `n` in two
/// parameters, entrywise `c0 + c1 cos(<m1, r>) + c2 sin(<m2, r>)`.
fn trig_family(n: usize) -> impl Strategy<Value = MatrixFamily> {
    let entries = n * (n + 1) / 2;
    let coeff = -1.0..1.0f64;
    let wave = -2i64..=2;
    proptest::collection::vec(
        (
            coeff,
            (wave.clone(), wave.clone()),
            -1.0..1.0f64,
            (-2i64..=2, -2i64..=2),
        ),
        entries,
    )
    .prop_map(move |data| {
        let mut terms = Vec::new();
        let mut it = data.into_iter();
        for i in 1..=n {
            for j in i..=n {
                let (c0, (m1x, m1y), c1, (m2x, m2y)) = it.next().unwrap();
                terms.push(TermSpec::constant(i, j, c0, 0.0));
                terms.push(TermSpec::cos(i, j, c1, vec![m1x, m1y]));
                terms.push(TermSpec::sin(i, j, c0 - c1, vec![m2x, m2y]));
            }
        }
        MatrixFamily::from_terms("prop-trig", n, 2, SymmetryClass::RealSymmetric, terms)
            .expect("structurally valid by construction")
    })
}

fn in_square() -> impl Strategy<Value = ParameterPoint> {
    (-PI..PI, -PI..PI).prop_map(|(x, y)| point(&[x, y]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Evaluation respects the declared symmetry class everywhere.
    #[test]
    fn evaluation_stays_symmetric(fam in trig_family(3), r in in_square()) {
        let a = fam.evaluate(&r).unwrap();
        let scale = 1.0 + a.norm();
        prop_assert!((&a - a.adjoint()).norm() <= 1e-12 * scale);
        let imag: f64 = a.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        prop_assert!(imag <= 1e-12 * scale);
    }

    /// Central differences agree with the exact term derivative at O(h^2).
    #[test]
    fn finite_difference_consistency(fam in trig_family(3), r in in_square(), axis in 0usize..2) {
        let exact = fam.derivative(&r, axis).unwrap();
        let fd = fam.fd_derivative(&r, axis, 1e-5).unwrap();
        prop_assert!((exact - fd).norm() <= 1e-8 * (1.0 + fam.evaluate(&r).unwrap().norm()));
    }

    /// Family files round-trip exactly through serialization.
    #[test]
    fn family_document_round_trip(fam in trig_family(2)) {
        let text = fam.to_json().unwrap();
        let reloaded = load_family(&text).unwrap();
        prop_assert_eq!(fam.terms().unwrap(), reloaded.terms().unwrap());
    }

    /// The non-gap objective components vanish identically and the gap is
    /// the sorted eigenvalue difference.
    #[test]
    fn objective_structure(fam in trig_family(4), r in in_square()) {
        let mode = MultiplicityMode::new(ModeKind::Double2D).resolved(&fam, &r).unwrap();
        let red = reduce(&fam, &r, &mode).unwrap();
        prop_assert!(red.gap >= 0.0);
        prop_assert_eq!(red.objective[1], 0.0);
        prop_assert!((red.objective[0] + red.gap).abs() <= 1e-14 * (1.0 + red.gap));
    }

    /// |det J| is invariant under constant orthogonal conjugation of the
    /// family (the sign may flip).
    #[test]
    fn det_j_conjugation_invariance(fam in trig_family(3), r in in_square(), angle in 0.0..(2.0 * PI)) {
        let mode = MultiplicityMode::new(ModeKind::Double2D).resolved(&fam, &r).unwrap();
        // A 3x3 rotation mixing all coordinates, built from a Givens pair.
        let (c, s) = (angle.cos(), angle.sin());
        let mut u = CMatrix::identity(3, 3);
        u[(0, 0)] = Complex64::new(c, 0.0);
        u[(0, 1)] = Complex64::new(-s, 0.0);
        u[(1, 0)] = Complex64::new(s, 0.0);
        u[(1, 1)] = Complex64::new(c, 0.0);
        let conjugated = fam.conjugated(&u).unwrap();
        let base = reduce(&fam, &r, &mode).unwrap();
        let alt = reduce(&conjugated, &r, &mode).unwrap();
        let scale = 1.0 + base.det_j.abs();
        prop_assert!((base.det_j.abs() - alt.det_j.abs()).abs() <= 1e-10 * scale);
    }

    /// Identical inputs produce identical traces, bit for bit.
    #[test]
    fn deterministic_replay(fam in trig_family(3), r in in_square()) {
        let mode = MultiplicityMode::new(ModeKind::Double2D);
        let cfg = SolverConfig { max_iter: 6, max_step_norm: Some(1.0), ..SolverConfig::default() };
        let a = solve(&fam, &r, &mode, &cfg).unwrap();
        let b = solve(&fam, &r, &mode, &cfg).unwrap();
        prop_assert_eq!(a.outcome, b.outcome);
        prop_assert_eq!(a.trace.len(), b.trace.len());
        for (x, y) in a.trace.iter().zip(&b.trace) {
            prop_assert_eq!(x.point.as_slice(), y.point.as_slice());
            prop_assert!(x.gap.to_bits() == y.gap.to_bits());
            prop_assert!(x.step_norm.to_bits() == y.step_norm.to_bits());
        }
    }

    /// Transport around a loop far from any degeneracy of a gapped constant
    /// family is always trivial.
    #[test]
    fn transport_trivial_without_degeneracy(cx in -1.0..1.0f64, cy in -1.0..1.0f64, radius in 0.05..0.4f64) {
        let fam = MatrixFamily::from_terms(
            "gapped",
            2,
            2,
            SymmetryClass::RealSymmetric,
            vec![
                TermSpec::constant(1, 1, 2.0, 0.0),
                TermSpec::constant(2, 2, -2.0, 0.0),
                TermSpec::sin(1, 2, 0.3, vec![1, 0]),
                TermSpec::cos(1, 2, 0.3, vec![0, 1]),
            ],
        )
        .unwrap();
        let spec = LoopSpec::new(point(&[cx, cy]), radius, 32).unwrap();
        prop_assert_eq!(berry_loop(&fam, &spec, 1).unwrap(), RotationClass::Zero);
    }
}

/// Eigenvalue ordering and orthonormality on the builtin registry at fixed
/// representative points.
#[test]
fn eigensystems_sorted_and_orthonormal() {
    let graphene = builtin("graphene", &[("p".to_string(), 0.7)].into_iter().collect()).unwrap();
    let magnetic = builtin("magnetic-graph-10x10", &Default::default()).unwrap();
    let cases: Vec<(MatrixFamily, ParameterPoint)> = vec![
        (graphene, point(&[0.4, -2.0])),
        (magnetic, point(&[1.0, 2.0, -0.5])),
    ];
    for (fam, r) in cases {
        let es = eigensystem(&fam, &r).unwrap();
        for w in es.values().as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
        let n = fam.n();
        let gram = es.vectors().adjoint() * es.vectors();
        assert!((gram - CMatrix::identity(n, n)).norm() <= 1e-12);
        // residual against the matrix itself
        let a = fam.evaluate(&r).unwrap();
        let lambda = CMatrix::from_diagonal(&DVector::from_iterator(
            n,
            es.values().iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        assert!((&a * es.vectors() - es.vectors() * lambda).norm() <= 1e-10 * (1.0 + a.norm()));
    }
}
