//! Plane strain Mohr-Coulomb finite element model with quadratic triangles.

pub mod element;
pub mod material;
pub mod mesh;
pub mod model;
pub mod return_mapping;
pub mod slope;
pub mod vtk;

pub use material::MohrCoulomb;
pub use mesh::Mesh;
pub use model::FemModel;
pub use slope::{build_slope_fixture, SlopeGeometry};
