//! Parametric head used as the acoustic source/receiver carrier.
//!
//! The default head is a sphere tessellated from an octahedron: each octant
//! face is cut into `f²` triangles on a barycentric lattice with `f = 2^level`,
//! so the mesh has `8·4^level` triangles and `4f² + 2` vertices. Because every
//! octant is built from the same integer lattice with only sign flips, the
//! mesh is exactly mirror-symmetric about the three coordinate planes through
//! its center.
//!
//! Axes: x points to the right ear, y forward (toward the target), z up.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{GeometryError, TriangleMesh, Vec3};

pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub radius: f64,
    pub subdivision_level: u32,
    pub center: Vec3,
}

impl Default for HeadParams {
    fn default() -> Self {
        Self { radius: DEFAULT_HEAD_RADIUS, subdivision_level: 3, center: Vec3::ZERO }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    pub id: String,
    pub mesh: TriangleMesh,
    pub center: Vec3,
    pub mouth: Vec3,
    pub ear_left: Vec3,
    pub ear_right: Vec3,
}

/// Triangle count of the sphere tessellation at `level`.
pub fn sphere_triangle_count(level: u32) -> usize {
    8 * 4usize.pow(level)
}

pub fn build_head_model(params: &HeadParams) -> Result<HeadModel, GeometryError> {
    if !(params.radius > 0.0) || !params.radius.is_finite() {
        return Err(GeometryError::InvalidHead(format!("radius must be positive, got {}", params.radius)));
    }
    if params.subdivision_level > 8 {
        return Err(GeometryError::InvalidHead(format!(
            "subdivision level {} is too fine (max 8)",
            params.subdivision_level
        )));
    }
    if !params.center.is_finite() {
        return Err(GeometryError::InvalidHead("center is not finite".into()));
    }
    let mesh = octasphere(params.radius, params.subdivision_level, params.center);
    let c = params.center;
    let r = params.radius;
    Ok(HeadModel {
        id: format!("sphere-r{:.4}-l{}", r, params.subdivision_level),
        mesh,
        center: c,
        mouth: c + Vec3::Y * r,
        ear_left: c - Vec3::X * r,
        ear_right: c + Vec3::X * r,
    })
}

fn octasphere(radius: f64, level: u32, center: Vec3) -> TriangleMesh {
    let f = 1i32 << level;
    let mut index: HashMap<(i32, i32, i32), u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(sphere_triangle_count(level));

    let mut vertex = |key: (i32, i32, i32)| -> u32 {
        *index.entry(key).or_insert_with(|| {
            let d = Vec3::new(key.0 as f64, key.1 as f64, key.2 as f64);
            let n = d.norm();
            vertices.push(center + Vec3::new(d.x / n, d.y / n, d.z / n) * radius);
            (vertices.len() - 1) as u32
        })
    };

    for sx in [1i32, -1] {
        for sy in [1i32, -1] {
            for sz in [1i32, -1] {
                let flip = sx * sy * sz < 0;
                let key = |i: i32, j: i32| (sx * i, sy * j, sz * (f - i - j));
                for i in 0..f {
                    for j in 0..(f - i) {
                        let a = vertex(key(i, j));
                        let b = vertex(key(i + 1, j));
                        let c = vertex(key(i, j + 1));
                        triangles.push(if flip { [a, c, b] } else { [a, b, c] });
                        if i + j < f - 1 {
                            let a = vertex(key(i + 1, j));
                            let b = vertex(key(i + 1, j + 1));
                            let c = vertex(key(i, j + 1));
                            triangles.push(if flip { [a, c, b] } else { [a, b, c] });
                        }
                    }
                }
            }
        }
    }
    TriangleMesh { name: "head".into(), vertices, triangles }
}

impl HeadModel {
    /// Arbitrary head mesh (e.g. from STL) with user-supplied acoustic markers.
    pub fn from_mesh(
        id: impl Into<String>,
        mesh: TriangleMesh,
        mouth: Vec3,
        ear_left: Vec3,
        ear_right: Vec3,
    ) -> Result<Self, GeometryError> {
        mesh.validate()?;
        let (lo, hi) = mesh.bounds().ok_or_else(|| GeometryError::InvalidHead("head mesh has no vertices".into()))?;
        for (name, p) in [("mouth", mouth), ("ear_left", ear_left), ("ear_right", ear_right)] {
            if !p.is_finite() {
                return Err(GeometryError::InvalidHead(format!("{name} is not finite")));
            }
        }
        Ok(Self { id: id.into(), mesh, center: (lo + hi) * 0.5, mouth, ear_left, ear_right })
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            id: self.id.clone(),
            mesh: self.mesh.translated(offset),
            center: self.center + offset,
            mouth: self.mouth + offset,
            ear_left: self.ear_left + offset,
            ear_right: self.ear_right + offset,
        }
    }

    /// Direction from the head center through `marker`; used to step markers
    /// off the rigid surface.
    pub fn outward(&self, marker: Vec3) -> Vec3 {
        (marker - self.center).normalized()
    }
}
