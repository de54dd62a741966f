//! Locates isolated eigenvalue-multiplicity points (conical / Dirac points)
//! of smooth parametric matrix families.
//!
//! The core idea: at each iterate, express the family in the fixed
//! eigenvector basis computed at that point, reduce to the block of the
//! coalescing eigenvalue group, and take one Newton step on the objective
//! built from the block's diagonal gaps and off-diagonal couplings. Near a
//! non-degenerate conical point this converges quadratically. Unlike
//! minimization of the squared gap, it does not converge to avoided
//! crossings, so the failure mode itself is informative.
//!
//! Module map:
//!
//! * [`family`]: parametric matrix families (term-based or callback),
//!   exact derivatives, builtin registry, JSON family files
//! * [`reduction`]: eigen-systems, the reduced objective `F` and Jacobian
//!   `J` for each multiplicity mode
//! * [`solver`]: the Newton iteration, pseudoinverse fallback, stopping
//!   rules and outcome classification
//! * [`diagnostics`]: non-degeneracy certificates (Hessian `2 J^T J`),
//!   eigenvector-transport loops and the Berry grid scan
//! * [`baseline`]: BFGS minimization of the squared gap for comparison

pub mod baseline;
pub mod diagnostics;
pub mod family;
pub mod reduction;
pub mod solver;

pub use baseline::{gap_squared, minimize_gap_squared, BaselineConfig};
pub use diagnostics::{
    berry_loop, certify, discriminant2x2, grid_scan, DegeneracyCertificate, DiagnosticsError,
    GridCell, GridScanReport, LoopSpec, Region2D, RotationClass,
};
pub use family::{
    builtin, builtin_catalog, load_family, BuiltinInfo, CMatrix, FamilyDocument, FamilyError,
    MatrixFamily, ParamSpec, ParameterPoint, SymmetryClass, TermKind, TermSpec,
};
pub use reduction::{
    eigensystem, reduce, reduce_with_eigensystem, reduced_block, EigenSystem, ModeKind,
    MultiplicityMode, PairChoice, ReducedSystem, ReductionError,
};
pub use solver::{
    convergence_order, solve, step, IterationRecord, Outcome, SolveReport, SolverConfig,
    SolverError,
};
