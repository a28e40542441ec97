//! Exact computation on finite product spaces Σⁿ: discrete measures and their
//! conditionals, metric families and Lipschitz machinery, eta/phi mixing
//! coefficients with the Δ/Γ matrices, the Ψ/Φ functionals (the Φ-norm is
//! computed as a linear program over the Lipschitz class), martingale
//! differences of the coordinate filtration, and closed-form deviation bounds
//! together with the brute-force concentration function.
//!
//! Everything is dense and exact at desk scale: tables are capped at 2²⁴
//! entries and all quantities are enumerated rather than sampled. Monte Carlo
//! estimation lives in the companion CLI crate.

pub mod bounds;
pub mod error;
pub mod functionals;
pub(crate) mod index;
pub mod martingale;
pub mod measure;
pub mod metric;
pub mod mixing;
pub(crate) mod simplex;

pub use error::{Error, Result};
pub use functionals::WeightedSpace;
pub use measure::{DiscreteMeasure, MeasureFamily, MeasureSpec, SignedDensity};
pub use metric::{FunctionTable, MetricKind, MetricSpec};
pub use mixing::{MatrixKind, MixingMatrix};
