// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the block formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod kernels2d;
pub mod linalg;
pub mod onebody;
pub mod operator_algebra;
pub mod quadrature;
pub mod separation;
pub mod special;

/// Version of this library, for run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
