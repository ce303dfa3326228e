//! Triangulated periodic tubes: discrete geometry, deformation, adaptation and I/O.

pub mod adapt;
pub mod deform;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;

pub use adapt::{adapt, mesh_quality, normalized_quality, AdaptOptions, AdaptReport};
pub use error::SurfaceError;
pub use geometry::{geometry_report, GeometryFields, GeometryReport};
pub use mesh::{build_cylinder_mesh, cylinder_grid, DofMap, SurfaceMesh};
