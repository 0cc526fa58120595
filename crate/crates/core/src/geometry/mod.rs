//! Scene geometry: meshes, the head model, planar targets and voxel grids.

mod head;
mod mask;
mod mesh;
mod stl;
mod target;
mod voxel;

pub use head::{build_head_model, sphere_triangle_count, HeadModel, HeadParams, DEFAULT_HEAD_RADIUS};
pub use mask::ShapeMask;
pub use mesh::{Pose, TriangleMesh, Vec3};
pub use stl::{parse_stl, write_ascii_stl, write_binary_stl};
pub use target::{cell_centers, default_library, target_panel, TargetRole, TargetSpec, DEFAULT_CELL_SIZE, DEFAULT_PANEL_THICKNESS};
pub use voxel::{voxelize, voxelize_into, GridSpec, VoxelGrid, INWARD_NUDGE};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("STL parse error at byte {offset}: {message}")]
    Stl { offset: usize, message: String },
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("invalid head: {0}")]
    InvalidHead(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("mesh '{mesh}' extends outside the grid along {axes}")]
    OutOfBounds { mesh: String, axes: String },
}
