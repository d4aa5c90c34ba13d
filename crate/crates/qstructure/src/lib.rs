//! Structure theory of finite-dimensional quantum channels: fixed points,
//! multiplicative domains, decoherence-free algebras, peripheral spectra,
//! cyclic decompositions and open quantum random walks.

pub mod algebra;
pub mod channel;
pub mod checks;
pub mod cycles;
pub mod error;
pub mod format;
pub mod linalg;
pub mod numerics;
pub mod oqrw;
pub mod random;
pub mod structure;

pub use error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMat = nalgebra::DMatrix<C64>;
