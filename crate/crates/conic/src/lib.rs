//! Dense interior-point solver for linear conic programs
//!
//! ```txt
//!     minimize    cᵀz
//!     subject to  A z = b,   z ∈ K₁ × … × K_p
//! ```
//!
//! where each `K_i` is a free block, a nonnegative orthant or a cone of
//! symmetric positive semidefinite matrices stored in svec form. Programs are
//! assembled with [`ProgramBuilder`] and solved with [`solve`].

pub mod linalg;
pub mod program;

mod error;
mod presolve;
mod solver;

pub use error::SolverError;
pub use program::{svec_index, svec_len, Cone, ConicProgram, ProgramBuilder, PsdBlock, RowBuilder, SparseRow, VectorBlock};
pub use solver::{residuals, solve, IterationLog, Residuals, SolverOptions, SolverResult, Status};
