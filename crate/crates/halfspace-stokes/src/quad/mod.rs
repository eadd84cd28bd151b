//! Adaptive deterministic quadrature.
//!
//! One-dimensional integration uses an embedded Gauss-Kronrod 7/15 pair on
//! each panel with recursive bisection; panels are visited left to right and
//! accumulation order is fixed, so identical inputs give bit-identical
//! results regardless of thread count. Algebraic endpoint singularities
//! `(b-s)^alpha` (or `(s-a)^alpha`), alpha in (-1, 0), are removed by the
//! substitution `u = (b-s)^{1+alpha}` before refinement. Principal-value
//! integrals over the tangential plane are handled by antisymmetrizing the
//! integrand on a ball around the singular point.

mod adaptive;
mod disk;
mod gk;
mod plane;

pub use adaptive::{integrate_1d, integrate_1d_vec, integrate_1d_vec_active, set_trace_label, VecResult};
pub use disk::integrate_disk;
pub use plane::{integrate_plane_gaussian, integrate_pv_antisym, PlaneJob};

/// The embedded rule's nodes and weights, for callers that build their own
/// fixed panel grids.
pub mod gk_nodes {
    pub use super::gk::{WG, WGK, XGK};
}

/// Where on the interval an algebraic singularity sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

/// Declared algebraic endpoint singularity `(distance to endpoint)^exponent`.
#[derive(Debug, Clone, Copy)]
pub struct Singularity {
    pub endpoint: Endpoint,
    pub exponent: f64,
}

/// Tolerances and limits for one integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub singularity: Option<Singularity>,
    /// Relative jitter of the integrand itself (nonzero when the integrand
    /// is produced by another quadrature). Panels are accepted once their
    /// error estimate is at the jitter level; without this, refinement
    /// chases noise it can never resolve.
    pub noise_floor: f64,
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_depth: 40,
            singularity: None,
            noise_floor: 0.0,
        }
    }

    pub fn with_noise_floor(mut self, floor: f64) -> Self {
        self.noise_floor = floor;
        self
    }

    pub fn with_singularity(mut self, endpoint: Endpoint, exponent: f64) -> Self {
        self.singularity = Some(Singularity { endpoint, exponent });
        self
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        assert!(depth <= 60);
        self.max_depth = depth;
        self
    }

    /// Tighter spec for an inner integral of a nested computation.
    pub fn inner(&self, share: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * share,
            rel_tol: (self.rel_tol * share).max(1e-14),
            max_depth: self.max_depth,
            singularity: None,
            noise_floor: self.noise_floor,
        }
    }

    /// Default tolerances: tight enough that downstream sign decisions keep
    /// a tenfold error margin.
    pub fn default_tols() -> Self {
        Self::new(1e-10, 1e-8)
    }

    pub(crate) fn tolerance_for(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude.abs())
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self::default_tols()
    }
}

/// Value and certified error estimate of one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: u32,
}

impl EvalResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 0,
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: c * self.value,
            error_estimate: c.abs() * self.error_estimate,
            subdivisions: self.subdivisions,
        }
    }

    pub fn plus(self, other: EvalResult) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            subdivisions: self.subdivisions + other.subdivisions,
        }
    }
}

#[derive(Debug, Clone)]
pub enum QuadError {
    /// The error estimate was still above tolerance when `max_depth` was
    /// reached. The partial result is attached so callers can widen the
    /// tolerance or report it.
    NonConvergence(EvalResult),
    /// The integrand returned NaN.
    EvaluationFailure { at: f64 },
    BadInterval { a: f64, b: f64 },
}

impl std::fmt::Display for QuadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuadError::NonConvergence(r) => write!(
                f,
                "quadrature did not converge: value {:e}, error estimate {:e} after {} subdivisions",
                r.value, r.error_estimate, r.subdivisions
            ),
            QuadError::EvaluationFailure { at } => {
                write!(f, "integrand returned NaN at {at:e}")
            }
            QuadError::BadInterval { a, b } => write!(f, "bad interval [{a:e}, {b:e}]"),
        }
    }
}

impl std::error::Error for QuadError {}
