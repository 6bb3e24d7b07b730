//! Coordinate charts on discretized Hilbert spaces of functions.
//!
//! A [`CoordinateSpace`](spaces::CoordinateSpace) is a uniform grid with a
//! quadrature rule and a Hermitian positive-definite metric. Abstract
//! elements ("strings") are represented by their coefficients in one chart
//! and moved between charts by invertible linear maps
//! ([`LinearCoordTransform`](transforms::LinearCoordTransform)) or by local
//! nonlinear diffeomorphisms ([`manifold`]). Every quantity that must not
//! depend on the chart (pairings, inner products, spectra, tensor values)
//! can be checked by computing it in two charts.
//!
//! Conventions used throughout:
//!
//! * `inner(φ, ψ) = ψᴴ G φ`, conjugate-linear in the second slot.
//! * Dual vectors carry "pairing-ready" components: `pair(f, φ) = Σ f_k φ_k`,
//!   with no weights and no conjugation. Consequently
//!   `to_dual(ψ) = conj(G ψ)` and `pair(to_dual(ψ), φ) = inner(φ, ψ)`.
//! * A transform `T: from → to` acts on coefficients by `φ = T φ̃`, on dual
//!   vectors by the transpose `f̃ = Tᵀ f`, and pulls metrics back by
//!   `G̃ = Tᴴ G T`.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod discretization;
pub mod eigen;
pub mod error;
pub mod gauss;
pub mod linalg;
pub mod manifold;
pub mod spaces;
pub mod transforms;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};

/// Condition-number ceiling above which an operator is treated as
/// numerically singular when it has to be inverted.
pub const CONDITION_LIMIT: f64 = 1e12;
