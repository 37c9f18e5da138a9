//! Zeroing-neural-dynamics solvers for the time-variant Sylvester-conjugate
//! equation `X(t) F(t) - A(t) conj(X(t)) = C(t)`.

pub mod linalg;
pub mod models;
pub mod ode;
pub mod problem;
pub mod texpr;
pub mod harness;
