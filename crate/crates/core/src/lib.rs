//! Spacelike cross sections of the Minkowski lightcone, represented by their
//! conformal factor on the round sphere.

pub mod cli;
pub mod cross_section;
pub mod error;
pub mod estimates;
pub mod families;
pub mod flow;
pub mod io;
pub mod lorentz;
pub mod sphere;
pub mod suites;

pub use cross_section::{CrossSection, GeometryReport};
pub use error::{Error, Result};
