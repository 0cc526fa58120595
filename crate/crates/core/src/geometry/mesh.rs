use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// A point or direction in world space, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rigid placement of a local frame in world space.
///
/// Local coordinates `(u, v, w)` map to `origin + u·u_axis + v·v_axis + w·normal`.
/// The axes are expected to be orthonormal and right-handed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub origin: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub normal: Vec3,
}

impl Pose {
    /// Panel plane spanned by world x (columns) and world z (rows, up), facing +y.
    pub fn facing_y(origin: Vec3) -> Self {
        Self { origin, u_axis: Vec3::X, v_axis: Vec3::Z, normal: Vec3::Y }
    }

    /// `facing_y` rotated about the world z axis by `yaw` radians.
    pub fn facing_y_yawed(origin: Vec3, yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        let rot = |v: Vec3| Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
        Self { origin, u_axis: rot(Vec3::X), v_axis: Vec3::Z, normal: rot(Vec3::Y) }
    }

    pub fn apply(&self, local: Vec3) -> Vec3 {
        self.origin + self.u_axis * local.x + self.v_axis * local.y + self.normal * local.z
    }

    pub fn is_orthonormal(&self) -> bool {
        let unit = |v: Vec3| (v.norm() - 1.0).abs() < 1e-9;
        unit(self.u_axis)
            && unit(self.v_axis)
            && unit(self.normal)
            && self.u_axis.dot(self.v_axis).abs() < 1e-9
            && self.u_axis.dot(self.normal).abs() < 1e-9
            && self.v_axis.dot(self.normal).abs() < 1e-9
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::facing_y(Vec3::ZERO)
    }
}

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(name: impl Into<String>, vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, GeometryError> {
        let mesh = Self { name: name.into(), vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self { name: name.into(), vertices: Vec::new(), triangles: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidMesh(format!("vertex {i} has a non-finite coordinate")));
        }
        let n = self.vertices.len() as u32;
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(GeometryError::InvalidMesh(format!("triangle {t} references a vertex out of range")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangles_iter(&self) -> impl Iterator<Item = [Vec3; 3]> + '_ {
        (0..self.triangles.len()).map(move |t| self.triangle(t))
    }

    /// Axis-aligned bounds, `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles_iter().map(|[a, b, c]| 0.5 * (b - a).cross(c - a).norm()).sum()
    }

    /// Appends `other`, re-indexing its triangles.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }

    /// Closed in the mod-2 sense: every undirected edge is used by an even
    /// number of triangles. This is what parity-based solid fill needs.
    pub fn is_closed(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        edges.values().all(|&n| n % 2 == 0)
    }

    /// Merges vertices with bit-identical coordinates.
    pub fn weld(&mut self) {
        let mut index: HashMap<[u64; 3], u32> = HashMap::new();
        let mut vertices = Vec::new();
        let mut remap = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            let id = *index.entry(key).or_insert_with(|| {
                vertices.push(*v);
                (vertices.len() - 1) as u32
            });
            remap.push(id);
        }
        for t in &mut self.triangles {
            for i in t.iter_mut() {
                *i = remap[*i as usize];
            }
        }
        self.vertices = vertices;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriangleMesh {
        TriangleMesh::new(
            "sq",
            vec![Vec3::ZERO, Vec3::X, Vec3::new(1.0, 1.0, 0.0), Vec3::Y],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = TriangleMesh::new("bad", vec![Vec3::ZERO], vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidMesh(_)));
    }

    #[test]
    fn rejects_nan() {
        let err = TriangleMesh::new("bad", vec![Vec3::new(f64::NAN, 0.0, 0.0)], vec![]).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidMesh(_)));
    }

    #[test]
    fn open_square_is_not_closed() {
        let sq = unit_square();
        assert!((sq.surface_area() - 1.0).abs() < 1e-12);
        assert!(!sq.is_closed());
    }

    #[test]
    fn yawed_pose_is_orthonormal() {
        let p = Pose::facing_y_yawed(Vec3::new(0.0, 1.0, 0.0), 0.3);
        assert!(p.is_orthonormal());
        assert!(Pose::default().is_orthonormal());
    }
}
