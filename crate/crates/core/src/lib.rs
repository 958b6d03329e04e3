pub mod analysis;
pub mod bargmann;
pub mod classical;
pub mod error;
pub mod geometry;
pub mod io;
pub mod normalform;
pub mod numerics;
pub mod observable;
pub mod quantization;
pub mod scalar;
pub mod spectra;

pub use error::{Error, Result};
pub use scalar::Real;

/// f64 instantiations of the generic types.
pub type Surface = geometry::SurfaceProfile<f64>;
pub type Obs = observable::Observable<f64>;
pub type Lattice = quantization::Lattice<f64>;
pub type QuasiEigenvalue = quantization::QuasiEigenvalue<f64>;
pub type Torus = classical::Torus<f64>;
