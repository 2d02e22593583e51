//! Jost functions of half-line Jacobi matrices.
//!
//! For `J` with off-diagonal `a_n > 0` and diagonal `b_n`, and `z` in the unit
//! disk with `E = z + 1/z`, the crate computes the Weyl m-function, the Jost
//! function `u(z)` and the Szegő-type limit of the orthonormal polynomials
//! through independent routes:
//!
//! * [`weyl`]: backward continued fractions and the Weyl solution,
//!   `u = 1 / lim z^{-n} w_n`;
//! * [`recursions`]: a coupled two-term recursion whose second component is
//!   the Jost function of the truncated matrix;
//! * [`determinants`]: a renormalized Hilbert-Schmidt determinant;
//! * [`lab::jost_via_factorization`]: an explicit product over eigenvalues and
//!   a renormalized Poisson integral of `log(Im M / sin)`.
//!
//! [`lab`] cross-checks these routes and runs the sum-rule and asymptotic
//! experiments.

pub mod blaschke;
pub mod determinants;
pub mod error;
pub mod jacobi;
pub mod lab;
pub mod poisson;
pub mod quad;
pub mod recursions;
pub mod spectrum;
pub mod util;
pub mod weyl;

pub use error::{JostError, Result};
pub use jacobi::{section9_family, strip, truncate_gc, JacobiParams, ParamFile, Verdict};
pub use num_complex::Complex64;
pub use weyl::DiskPoint;
