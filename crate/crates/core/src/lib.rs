//! Optimal anisotropy functions of planar Jordan curves.
//!
//! A closed curve `Γ` is reduced to its tangent-angle spectrum ([`curve`]).
//! Anisotropies are truncated Fourier series ([`anisotropy`]) restricted to
//! the cone of nonnegative functions with nonnegative `σ + σ″`, which has an
//! exact semidefinite description ([`trigcone`]). Maximizing the Wulff area
//! at fixed interface energy is a nonconvex quadratic program, solved
//! through an enhanced semidefinite relaxation with a tightness certificate
//! ([`qcqp`], [`pipeline`]).

pub mod anisotropy;
pub mod curve;
mod error;
pub mod pipeline;
pub mod qcqp;
pub mod trigcone;

pub use error::{Error, Result};
