//! Scalar numerical building blocks shared by the physics modules.

pub mod ode;
pub mod quad;
pub mod roots;
pub mod tridiag;

pub use ode::{Gbs, OdeSystem};
pub use quad::{GaussLegendre, Quad, TanhSinh};
pub use roots::{brent, newton_bracketed};
pub use tridiag::{symmetric_tridiagonal_eigenvalues, Tridiagonal};
