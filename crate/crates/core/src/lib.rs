//! Eigenpairs of real tensors and certificates of their nondegeneracy.
//!
//! The crate covers Z-eigenpairs of symmetric tensors ([`zeigen`]),
//! singular vector tuples of general tensors ([`svt`]), closed-form
//! eigenpairs of orthogonally decomposable tensors ([`odeco`]),
//! H-eigenpairs ([`heigen`]) and Monte Carlo censuses that check generic
//! nondegeneracy and root counts at small sizes ([`census`]).

pub mod census;
pub mod error;
pub mod heigen;
pub mod io;
pub mod linalg;
pub mod odeco;
pub mod poly;
pub mod svt;
pub mod tensor;
pub mod zeigen;

pub use error::{Result, TensorError};
pub use tensor::{
    random_symmetric, random_tensor, segre, veronese, BlockVector, DenseTensor, OrthogonalMatrix,
    SymmetricTensor, SymmetryMode,
};
