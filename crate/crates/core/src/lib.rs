//! Douglas–Rachford splitting for possibly inconsistent problems
//! `0 ∈ Ax + Bx`: shadow tracking, estimation of the minimal displacement
//! vector `v = v_D + v_R`, and the normal problem
//! `0 ∈ −v + Ax + B(x − v)`.

pub mod displacement;
pub mod engine;
pub mod error;
pub mod identities;
pub mod model;
pub mod oracles;
pub mod par;
pub mod prox;
pub mod scenario;
pub mod vector;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::{
    DisplacementEstimate, EstimationMethod, IterateRecord, OperatorHandle, ProblemSpec, CONVERGENCE_TOL, IDENTITY_TOL,
};
pub use par::Execution;
pub use vector::{make_vector, Vector};
