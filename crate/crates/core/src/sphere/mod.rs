//! Function calculus on the round unit sphere.

pub mod calculus;
pub mod field;
pub mod grid;
pub(crate) mod legendre;
pub mod transform;

pub use calculus::{
    angles_from_vector, first_harmonics, gradient, hessian, integrate, laplacian, unit_vector, Derivatives,
};
pub use field::{ScalarField, SpectralField, SpectralFieldJson, SymTensorField, TangentField};
pub use grid::{GridSpec, MIN_BANDLIMIT};
pub use transform::{analyze, analyze_to, evaluate_at, synthesize};

use crate::error::Result;

/// Analysis grid for degree-`L` fields.
pub fn make_grid(bandlimit: usize) -> Result<GridSpec> {
    GridSpec::new(bandlimit)
}

/// Grid exact for products of two degree-`L` fields.
pub fn make_grid_oversampled(bandlimit: usize) -> Result<GridSpec> {
    GridSpec::oversampled(bandlimit)
}

pub fn project_degrees(c: &SpectralField, degrees: &std::collections::BTreeSet<usize>) -> SpectralField {
    c.project_degrees(degrees)
}
