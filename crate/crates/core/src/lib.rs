//! Finite discrete measured groupoids and their (twisted) von Neumann algebras.
//!
//! The crate models a finite groupoid with a probability measure on its unit
//! space, realizes the left and right (projective) regular representations as
//! concrete complex matrices on `l2(G, mu_s)`, and cross-checks the
//! structural factoriality deciders (icc, central sets, Kleppner's condition)
//! against numerically computed centers.
//!
//! Module map:
//!
//! - [`groupoid`]: data model, validation, isotropy, orbits, measures, restriction.
//! - [`basis`]: decompositions into disjoint bisections.
//! - [`conjugacy`]: conjugacy classes of isotropy sets and the icc decider.
//! - [`cocycle`]: 2-cocycles, normalization, central sets and Kleppner's condition.
//! - [`vna`]: operators, matrix *-algebras, commutants, centers, Fourier data, reports.
//! - [`constructors`]: group bundles, transformation groupoids, partial actions,
//!   Deaconu-Renault systems and seeded random instances.
//! - [`format`]: the plain-text interchange format.
//! - [`cli`]: the command surface used by the `gvna` binary.

pub mod basis;
pub mod cli;
pub mod cocycle;
pub mod conjugacy;
pub mod constructors;
pub mod format;
pub mod groupoid;
pub mod phase;
mod sparse;
pub mod vna;

pub use basis::Basis;
pub use cocycle::Cocycle;
pub use groupoid::{ArrowId, ArrowSet, Bisection, MeasuredGroupoid, RawGroupoid, Side, UnitId};
pub use phase::Phase;
pub use vna::{factoriality_report, FactorialityReport, MatrixStarAlgebra, Operator, SpectralInfo, Tolerances, TwistedVna};
