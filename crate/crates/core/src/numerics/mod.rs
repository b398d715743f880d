//! Dense linear algebra and ODE integration.

pub mod linalg;
pub mod ode;

pub use linalg::{
    annihilation, hermitian_eig, identity, kron, operator_function, solve_linear, CMatrix,
    CVector, EigenSystem, LinearSolution,
};
pub use ode::{integrate_ode, OdeOptions, OdeState, Trajectory};
