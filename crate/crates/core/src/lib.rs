//! Certified upper bounds on the success probability of two-step sequential
//! measurements on ternary phase-shift-keyed coherent states.
//!
//! Each state `|a_m>` is split into two halves `|b_m> (x) |b_m>`. The first
//! receiver (Alice) measures one half and passes a classical outcome to the
//! second (Bob). The pipeline:
//!
//! 1. [`qregion`] bounds Bob's achievable conditional successes by certified
//!    halfspaces from minimum-error discrimination ([`mem`]).
//! 2. [`vertexenum`] lists the vertices of that polytope.
//! 3. [`dpsolver`] minimizes a trace subject to one semidefinite constraint per
//!    vertex, giving an upper bound on sequential success.
//! 4. [`primal`] builds explicit strategies for a matching lower bound.
//! 5. [`sweep`] runs all of it over a photon-number grid.
//!
//! The small linear-algebra layer ([`smallmat`], [`lp`], [`hull`], [`dense`]) is
//! generic over `f32`/`f64` through [`Real`]; the physics runs in `f64`.

// index loops mirror the matrix formulas; `!(x > y)` comparisons deliberately reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod dpsolver;
pub mod ensemble;
pub mod error;
pub mod hull;
pub mod lp;
pub mod mem;
pub mod primal;
pub mod qregion;
pub mod scalar;
pub mod smallmat;
pub mod sweep;
pub mod tol;
pub mod vertexenum;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tol::{Tolerances, TOL};

pub type Complex64 = num_complex::Complex<f64>;
pub type HermitianMatrix = smallmat::Hermitian<f64>;
pub type EigenDecomposition = smallmat::EigenDecomposition<f64>;
