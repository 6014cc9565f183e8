//! Numerical toolkit for linear processes driven by dependent innovations.
//!
//! The crate simulates moving averages `X_k = Σ_i a_i ξ_{k-i}` whose
//! innovations `ξ` may themselves be dependent (causal linear filters,
//! functions of a Markov chain), computes the window sums `c_{n,j}` and the
//! normalizer sequences `v_n²`, `s_n²` attached to the partial sums, couples
//! the partial sums with their martingale surrogate, and verifies the moment
//! and maximal inequalities that control them. A fractional-Brownian-motion
//! lab provides the reference laws for the scaling limits, and an isotonic
//! regression module applies the machinery to monotone regression with
//! dependent errors.
//!
//! Core numeric kernels are generic over the scalar type via [`num::Real`];
//! the Monte Carlo layers run in `f64`. Concrete `f64` aliases for the main
//! model types live at the crate root.

pub mod coeffs;
pub mod fbm;
pub mod harness;
pub mod ineq;
pub mod innovations;
pub mod isotone;
pub mod linproc;
pub mod num;
pub mod orlicz;
pub mod rates;
pub mod stats;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit taxonomy:
/// configuration problems exit 1, statistical verdict failures exit 2 and
/// numerical failures (truncation, convergence, boundary hits) exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "coefficient window truncation failed: achieved tail bound {achieved_tail:.6e} \
         exceeds target {target:.6e} within the cap of {cap} retained indices"
    )]
    TruncationFailure {
        achieved_tail: f64,
        target: f64,
        cap: usize,
    },
    #[error("fixed point iteration stalled: residual {residual:.3e} after {iters} iterations")]
    FixedPointDiverged { residual: f64, iters: usize },
    #[error("moment order q={q} exceeds the model's guaranteed maximum {max_q}")]
    MomentOrderExceeded { q: f64, max_q: f64 },
    #[error("argmin landed on the boundary |s| = {half_width}; enlarge the search window")]
    BoundaryHit { half_width: f64 },
    #[error("size {n} exceeds the cap {cap} for {what}")]
    SizeCap { n: usize, cap: usize, what: &'static str },
    #[error("{0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use coeffs::{CoefficientKind, CoefficientModel, Truncation, WindowSums};
pub use fbm::{FbmMethod, FbmPath};
pub use innovations::{InnovationKind, InnovationModel};
pub use isotone::IsotonicFit;
pub use linproc::{Normalizer, SamplePath};
pub use orlicz::OrliczFunction;
pub use rates::RateSchedule;

/// `f64` instantiations of the generic model types.
pub type CoeffModel = coeffs::CoefficientModel<f64>;
pub type Windows = coeffs::WindowSums<f64>;
pub type IsoFit = isotone::IsotonicFit<f64>;
pub type Orlicz = orlicz::OrliczFunction<f64>;
pub type Schedule = rates::RateSchedule<f64>;
