//! Quantum invariants of 3-manifolds presented by plumbing trees and
//! surgeries on built-in knots.
//!
//! The crate computes non-semisimple CGP invariants `N_r(M, omega)`, GPPV
//! q-series invariants `Zhat_s(M, q)`, WRT invariants (plain and
//! mod-2-cohomology refined), and sign-refined Reidemeister torsion, and
//! numerically verifies the linear relations between them through twisted
//! Gauss sums, Laplace transforms, and root-of-unity limits.
//!
//! Exact rational arithmetic is used for every exponent and series
//! coefficient; complex `f64` enters only when a phase is finally
//! exponentiated or a finite sum is evaluated.

pub mod cgp;
pub mod correspondence;
pub mod cyclotomic;
pub mod lattice;
pub mod matrix;
pub mod phase;
pub mod plumbing;
pub mod qseries;
pub mod rmatrix;
pub mod wrt;
pub mod zhat;

pub use lattice::{HomologyData, LinkingMatrix, TwoTorusClass};
pub use plumbing::{FCoefficients, PlumbingPresentation};
pub use qseries::{PeriodicCoefficient, QSeries};

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input fails a structural precondition (non-tree graph, bad braid, ...).
    InvalidInput(String),
    /// A value hit a pole or an undefined parameter (integral color, r = 0 mod 4, ...).
    Undefined(String),
    /// A numerical procedure failed to converge or a consistency assertion tripped.
    Numerical(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Undefined(m) => write!(f, "undefined: {m}"),
            Error::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
