//! Bellman functions of the maximal operator on probability trees.
//!
//! This crate computes, at desk scale and in exact piecewise arithmetic
//! wherever possible, the quantities attached to the maximal operator
//!
//! ```text
//! M_T φ(x) = sup { (1/μ(I)) ∫_I |φ| dμ : x ∈ I ∈ T }
//! ```
//!
//! on a finite probability tree `T`:
//!
//! * [`tree`] — finite probability trees and simple functions on their atoms;
//! * [`step`] — non-increasing step functions on `(0,1]`, decreasing
//!   rearrangements, Hardy averages `(1/t)∫_0^t g` and level crossings;
//! * [`maximal`] — the operator `M_T` itself, the weak type `(1,1)`
//!   inequality and Doob's `L^p` bound;
//! * [`bellman`] — the scalar layer: `H_p`, its inverse `ω_p`, and the
//!   closed-form Bellman functions of two and three variables;
//! * [`symmetrize`] — both sides of the symmetrization identity
//!   `sup ∫_K G1(M_T φ) G2(φ) dμ = ∫_0^k G1(Av g) G2(g)`, a brute-force
//!   oracle for the left side, and the chain extremizer family `φ_a`;
//! * [`extremal`] — the functionals `v_g(L)`, `u_g(L)`, their linking
//!   identity, the exact power-law extremizer for `L < p/(p-1)·f`, and the
//!   sharpness sequence for `L ≥ p/(p-1)·f`.
//!
//! All types are immutable after construction and every operation is a pure
//! function, so values can be shared freely across threads.
//!
//! The crate is `no_std`-compatible (the `std` feature, on by default, only
//! switches float intrinsics and adds `std::error::Error` impls).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bellman;
mod error;
pub mod extremal;
pub(crate) mod math;
pub mod maximal;
pub mod quad;
pub mod step;
pub mod symmetrize;
pub mod tree;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;

/// Relative tolerance used by structural validity checks (measure sums,
/// probability normalization).
pub const STRUCTURAL_REL_TOL: f64 = 1e-12;
