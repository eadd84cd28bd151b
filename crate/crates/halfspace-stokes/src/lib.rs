//! Pointwise evaluation of the unsteady Stokes flow in the half space
//! `R^{n-1} x (0, inf)` (n = 2, 3) driven by a localized boundary influx
//! `g(y', s) = psi(y') phi(s) e_n`, together with the machinery needed to
//! detect and quantify flow reversal:
//!
//! - closed-form heat and Newtonian kernels with derivatives ([`kernels`]),
//! - adaptive deterministic quadrature with support for algebraic endpoint
//!   singularities and principal-value integrals ([`quad`]),
//! - the Green-tensor components `L_ij`, `B_in`, `Ltilde_ij` and the regular
//!   part of the Poisson kernel ([`green`]),
//! - assembly of the velocity components and an independent direct
//!   convolution cross-check ([`velocity`]),
//! - two-sided ratio-band verification of every auxiliary integral estimate
//!   ([`estimates`]),
//! - sign-interval scans, zero location and separation/reversal-point
//!   classification ([`reversal`]),
//! - region classification and power-law exponent fitting for the predicted
//!   zero asymptotics ([`scaling`]).
//!
//! All computations are deterministic: identical inputs give bit-identical
//! outputs regardless of thread count.

pub mod boundary;
pub mod estimates;
pub mod green;
pub mod kernels;
pub mod quad;
pub mod reversal;
pub mod scaling;
pub mod special;
pub mod util;
pub mod velocity;

pub use boundary::BoundaryProfile;
pub use kernels::SpacePoint;
pub use quad::{EvalResult, QuadError, QuadSpec};
