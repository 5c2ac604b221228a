//! Triangulations: conforming coarse meshes, red refinement and the
//! nonconforming two-level mesh with its face skeleton.

mod coarse;
mod triangle;
mod two_level;

pub use coarse::{build_unit_square_mesh, unit_square_tag, BoundaryTag, CoarseMesh, MeshEdge};
pub use triangle::Triangle;
pub use two_level::{Face, FaceKind, Leaf, Side, TwoLevelMesh};
