//! Dense linear algebra and seeded sampling shared by every other module.

mod lstsq;
mod matrix;
mod rng;
mod svd;

pub use lstsq::{cholesky_solve, min_norm_lstsq, pinv, weighted_min_norm_lstsq, DEFAULT_TOL_FACTOR};
pub use matrix::{axpy, dot, mean, norm1, norm2, norm_inf, sample_variance, sub, Matrix};
pub use rng::{derive_stream_id, RngStream};
pub use svd::{svd, Svd};
