//! B-splines on arbitrary knots and their Gaussian local limit.
//!
//! The library evaluates `B(t) = sum_k (x_k - t)_+^{n-2} / prod_{j != k}(x_k - x_j)`
//! for normalized knots (`sum x = 0`, `sum x^2 = 1`), compares `B(t/n)` and
//! its derivatives with the Gaussian density and Hermite functions in
//! weighted sup norms, and checks the surrounding characteristic-function,
//! Laguerre and simplex identities numerically.

pub mod charprob;
pub mod error;
pub mod harness;
pub mod knotset;
pub mod montecarlo;
pub mod quad;
pub mod real;
pub mod seminorm;
pub mod specfun;
pub mod splinecore;
pub mod validate;

pub use error::{Error, Result};
pub use knotset::{family, m3, normalize, x_l3_cubed, Family, KnotVector};
pub use real::{DoubleDouble, Real};
