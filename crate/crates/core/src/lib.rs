//! Spectral toolkit for Dirac-Krein operators on compact star graphs.
//!
//! Each edge carries the canonical system `-J f' + V f = z f` with
//! `J = [[0,-1],[1,0]]` and `V = [[p,q],[q,-p]]`, a boundary angle at the
//! outer vertex, and the edges are coupled at the central vertex by a
//! self-adjoint matching condition.

pub mod cli;
pub mod dislocation;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod matching;
pub mod ode;
pub mod oracle;
pub mod propagator;
pub mod quadrature;
pub mod resolvent;
pub mod roots;
pub mod spectrum;
pub mod weyl;

pub use error::{Error, Result};
pub use graph::{
    Angle, EdgeSpec, ExtReal, GridFunction, MatchingCondition, PotentialSample, SolverSettings,
    StarGraph,
};
pub use num_complex::Complex64 as C64;
