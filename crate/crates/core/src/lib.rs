//! Lyapunov exponents and Hodge invariants of hypergeometric local systems
//! on the thrice-punctured sphere.
//!
//! The pipeline is: [`params`] and [`monodromy`] turn exponents into matrices,
//! [`geodesic`] draws continued-fraction digits of a random geodesic,
//! [`winding`] converts the cutting sequence into cusp loops, and
//! [`lyapunov`] accumulates the resulting matrix cocycle. [`hodge`] computes
//! the combinatorial side that the exponents are compared against, and
//! [`experiments`] ties both sides together.

pub mod experiments;
pub mod geodesic;
pub mod hodge;
pub mod linalg;
pub mod lyapunov;
pub mod monodromy;
pub mod params;
pub mod winding;
