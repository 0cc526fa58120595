//! Uniform occupancy grids and mesh voxelization.
//!
//! Voxel `(i, j, k)` covers `origin + [i, i+1)·h × [j, j+1)·h × [k, k+1)·h`
//! and is stored z-fastest: `index = (i·ny + j)·nz + k`.
//!
//! Surface voxels are found with a separating-axis test of each triangle
//! against the open voxel cube, after nudging the triangle by
//! [`INWARD_NUDGE`] voxels against its winding normal. A face lying exactly on
//! a voxel boundary therefore lands in the voxel on its solid side, and an
//! edge lying on a boundary line does not mark the voxels it merely touches.
//! Closed meshes are then filled by counting crossings of a z-directed ray
//! through each voxel centre.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GeometryError, TriangleMesh, Vec3};

/// Fraction of a voxel by which triangles are pushed inward before testing.
pub const INWARD_NUDGE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: Vec3,
}

impl GridSpec {
    pub fn new(dims: [usize; 3], spacing: f64, origin: Vec3) -> Result<Self, GeometryError> {
        if dims.contains(&0) {
            return Err(GeometryError::InvalidGrid(format!("dims must be positive, got {dims:?}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(GeometryError::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if !origin.is_finite() {
            return Err(GeometryError::InvalidGrid("origin is not finite".into()));
        }
        Ok(Self { dims, spacing, origin })
    }

    /// Grid of `round(extent / spacing)` voxels per axis centred on `center`.
    pub fn centered(extent: [f64; 3], spacing: f64, center: Vec3) -> Result<Self, GeometryError> {
        let dims = extent.map(|e| (e / spacing).round().max(0.0) as usize);
        let half = Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * (spacing / 2.0);
        Self::new(dims, spacing, center - half)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let k = index % self.dims[2];
        let j = (index / self.dims[2]) % self.dims[1];
        let i = index / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    /// World position of a voxel centre.
    pub fn center_of(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.spacing
    }

    /// Continuous grid coordinates (voxel units from the origin corner).
    pub fn to_grid(&self, p: Vec3) -> Vec3 {
        (p - self.origin) * (1.0 / self.spacing)
    }

    pub fn upper(&self) -> Vec3 {
        self.origin + Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.spacing
    }

    /// Voxel containing `p`, if inside the grid.
    pub fn voxel_of(&self, p: Vec3) -> Option<[usize; 3]> {
        let g = self.to_grid(p);
        let mut out = [0; 3];
        for a in 0..3 {
            let v = g.component(a).floor();
            if v < 0.0 || v >= self.dims[a] as f64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub spec: GridSpec,
    pub occupancy: BitVec<u64, Lsb0>,
}

impl VoxelGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Self { occupancy: bitvec![u64, Lsb0; 0; spec.len()], spec }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.spec.dims
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.spec.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: bool) {
        let idx = self.spec.index(i, j, k);
        self.occupancy.set(idx, v);
    }

    pub fn count(&self) -> usize {
        self.occupancy.count_ones()
    }

    /// True if `p` lies in an occupied voxel.
    pub fn is_solid_at(&self, p: Vec3) -> bool {
        self.spec.voxel_of(p).is_some_and(|[i, j, k]| self.get(i, j, k))
    }

    pub fn union_with(&mut self, other: &VoxelGrid) -> Result<(), GeometryError> {
        if self.spec != other.spec {
            return Err(GeometryError::InvalidGrid("cannot merge grids with different specs".into()));
        }
        self.occupancy |= other.occupancy.as_bitslice();
        Ok(())
    }

    pub fn overlaps(&self, other: &VoxelGrid) -> bool {
        self.spec == other.spec && self.occupancy.iter_ones().any(|i| other.occupancy[i])
    }

    /// Occupancy as one byte per voxel (0 or 1), z-fastest.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.occupancy.iter().map(|b| *b as u8).collect()
    }
}

/// Rasterizes `mesh` into a fresh grid. Closed meshes are filled solid; open
/// ones keep only their surface voxels and a warning is logged.
pub fn voxelize(mesh: &TriangleMesh, grid: &GridSpec) -> Result<VoxelGrid, GeometryError> {
    let mut out = VoxelGrid::empty(*grid);
    voxelize_into(mesh, &mut out)?;
    Ok(out)
}

/// Rasterizes `mesh` and ORs the result into `target`.
pub fn voxelize_into(mesh: &TriangleMesh, target: &mut VoxelGrid) -> Result<(), GeometryError> {
    mesh.validate()?;
    if mesh.is_empty() {
        return Ok(());
    }
    let grid = target.spec;
    check_bounds(mesh, &grid)?;
    let local: Vec<Vec3> = mesh.vertices.iter().map(|&v| grid.to_grid(v)).collect();
    let tris: Vec<[Vec3; 3]> =
        mesh.triangles.iter().map(|t| [local[t[0] as usize], local[t[1] as usize], local[t[2] as usize]]).collect();

    for tri in &tris {
        rasterize_triangle(tri, &grid, &mut target.occupancy);
    }
    if mesh.is_closed() {
        fill_solid(&tris, &grid, &mut target.occupancy);
    } else {
        log::warn!("mesh '{}' is not closed; voxelizing its surface only", mesh.name);
    }
    Ok(())
}

fn check_bounds(mesh: &TriangleMesh, grid: &GridSpec) -> Result<(), GeometryError> {
    let (lo, hi) = mesh.bounds().expect("non-empty mesh");
    let (glo, ghi) = (grid.origin, grid.upper());
    let names = ["x", "y", "z"];
    let bad: Vec<&str> = (0..3)
        .filter(|&a| lo.component(a) < glo.component(a) || hi.component(a) > ghi.component(a))
        .map(|a| names[a])
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(GeometryError::OutOfBounds { mesh: mesh.name.clone(), axes: bad.join(",") })
    }
}

fn rasterize_triangle(tri: &[Vec3; 3], grid: &GridSpec, occ: &mut BitSlice<u64, Lsb0>) {
    let n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    let shift = n.normalized() * (-INWARD_NUDGE);
    let t = [tri[0] + shift, tri[1] + shift, tri[2] + shift];
    let lo = t[0].min(t[1]).min(t[2]);
    let hi = t[0].max(t[1]).max(t[2]);
    let mut range = [(0usize, 0usize); 3];
    for a in 0..3 {
        // voxels whose open interval (v, v+1) can meet [lo, hi]
        let first = (lo.component(a).ceil() - 1.0).max(0.0) as usize;
        let last = (hi.component(a).floor()).min(grid.dims[a] as f64 - 1.0);
        if last < 0.0 {
            return;
        }
        range[a] = (first, last as usize);
    }
    for i in range[0].0..=range[0].1 {
        for j in range[1].0..=range[1].1 {
            for k in range[2].0..=range[2].1 {
                let c = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5);
                if triangle_meets_open_box(&t, c, 0.5) {
                    occ.set(grid.index(i, j, k), true);
                }
            }
        }
    }
}

/// Separating-axis test between a closed triangle and the open cube of
/// half-size `h` centred at `c`. Touching counts as separated.
fn triangle_meets_open_box(tri: &[Vec3; 3], c: Vec3, h: f64) -> bool {
    let v = [tri[0] - c, tri[1] - c, tri[2] - c];
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    let separated = |axis: Vec3| -> bool {
        let r = h * (axis.x.abs() + axis.y.abs() + axis.z.abs());
        if r == 0.0 {
            return false;
        }
        let p = [axis.dot(v[0]), axis.dot(v[1]), axis.dot(v[2])];
        let min = p[0].min(p[1]).min(p[2]);
        let max = p[0].max(p[1]).max(p[2]);
        min >= r || max <= -r
    };

    for a in [Vec3::X, Vec3::Y, Vec3::Z] {
        if separated(a) {
            return false;
        }
    }
    let n = e[0].cross(e[1]);
    if n.dot(n) > 0.0 && separated(n) {
        return false;
    }
    for edge in e {
        for a in [Vec3::X, Vec3::Y, Vec3::Z] {
            if separated(a.cross(edge)) {
                return false;
            }
        }
    }
    true
}

fn edge_fn(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Tie-break for points on an edge of a counter-clockwise triangle: each
/// shared edge is claimed by exactly one of the two triangles using it.
fn owns_edge(a: (f64, f64), b: (f64, f64)) -> bool {
    let dy = b.1 - a.1;
    dy < 0.0 || (dy == 0.0 && b.0 < a.0)
}

fn fill_solid(tris: &[[Vec3; 3]], grid: &GridSpec, occ: &mut BitSlice<u64, Lsb0>) {
    let [nx, ny, nz] = grid.dims;
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); nx * ny];
    for t in tris {
        let mut p = [(t[0].x, t[0].y), (t[1].x, t[1].y), (t[2].x, t[2].y)];
        let mut z = [t[0].z, t[1].z, t[2].z];
        let area = edge_fn(p[0], p[1], p[2]);
        if area == 0.0 {
            continue;
        }
        if area < 0.0 {
            p.swap(1, 2);
            z.swap(1, 2);
        }
        let lo_x = p[0].0.min(p[1].0).min(p[2].0);
        let hi_x = p[0].0.max(p[1].0).max(p[2].0);
        let lo_y = p[0].1.min(p[1].1).min(p[2].1);
        let hi_y = p[0].1.max(p[1].1).max(p[2].1);
        let i0 = (lo_x - 0.5).ceil().max(0.0) as usize;
        let i1 = (hi_x - 0.5).floor().min(nx as f64 - 1.0);
        let j0 = (lo_y - 0.5).ceil().max(0.0) as usize;
        let j1 = (hi_y - 0.5).floor().min(ny as f64 - 1.0);
        if i1 < 0.0 || j1 < 0.0 {
            continue;
        }
        let area = edge_fn(p[0], p[1], p[2]);
        for i in i0..=i1 as usize {
            for j in j0..=j1 as usize {
                let q = (i as f64 + 0.5, j as f64 + 0.5);
                let w = [edge_fn(p[1], p[2], q), edge_fn(p[2], p[0], q), edge_fn(p[0], p[1], q)];
                let edges = [(p[1], p[2]), (p[2], p[0]), (p[0], p[1])];
                let inside = w.iter().zip(edges).all(|(&wi, (a, b))| wi > 0.0 || (wi == 0.0 && owns_edge(a, b)));
                if inside {
                    let zc = (w[0] * z[0] + w[1] * z[1] + w[2] * z[2]) / area;
                    crossings[i * ny + j].push(zc);
                }
            }
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let col = &mut crossings[i * ny + j];
            if col.len() < 2 {
                continue;
            }
            col.sort_by(|a, b| a.total_cmp(b));
            let mut below = 0;
            for k in 0..nz {
                let zc = k as f64 + 0.5;
                while below < col.len() && col[below] < zc {
                    below += 1;
                }
                if below % 2 == 1 {
                    occ.set(grid.index(i, j, k), true);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{target_panel, Pose, ShapeMask, TargetRole, TargetSpec};

    fn cube(lo: Vec3, side: f64) -> TriangleMesh {
        let spec = TargetSpec {
            id: "cube".into(),
            mask: ShapeMask::full(1, 1),
            cell_size: side,
            panel_thickness: side,
            placement: Pose::facing_y(lo + Vec3::new(side / 2.0, 0.0, side / 2.0)),
            role: TargetRole::Trained,
        };
        target_panel(&spec).unwrap()
    }

    fn grid(n: usize, h: f64) -> GridSpec {
        GridSpec::new([n; 3], h, Vec3::ZERO).unwrap()
    }

    #[test]
    fn empty_mesh_leaves_grid_empty() {
        let v = voxelize(&TriangleMesh::empty("e"), &grid(8, 0.125)).unwrap();
        assert_eq!(v.count(), 0);
    }

    #[test]
    fn aligned_cube_volume() {
        let h = 0.125;
        let mesh = cube(Vec3::new(3.0, 3.0, 3.0) * h, 10.0 * h);
        let v = voxelize(&mesh, &grid(16, h)).unwrap();
        let n = v.count() as f64;
        assert!((n - 1000.0).abs() / 1000.0 <= 0.02, "count {n}");
    }

    #[test]
    fn thin_plate_is_one_voxel_thick() {
        let h = 0.125;
        // plate 0.1h thick in z, well inside layer 4, spanning 6x6 voxels in x/y
        let spec = TargetSpec {
            id: "plate".into(),
            mask: ShapeMask::full(1, 1),
            cell_size: 6.0 * h,
            panel_thickness: 0.1 * h,
            placement: Pose { origin: Vec3::new(5.0 * h, 5.0 * h, 4.45 * h), u_axis: Vec3::X, v_axis: Vec3::Y, normal: Vec3::Z },
            role: TargetRole::Trained,
        };
        let v = voxelize(&target_panel(&spec).unwrap(), &grid(12, h)).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let layers: Vec<usize> = (0..12).filter(|&k| v.get(i, j, k)).collect();
                assert!(layers.is_empty() || layers == vec![4], "column ({i},{j}) -> {layers:?}");
            }
        }
        assert_eq!(v.count(), 36);
    }

    #[test]
    fn out_of_bounds_names_axis() {
        let h = 0.125;
        let mesh = cube(Vec3::new(0.5, 0.5, 1.5), 0.25);
        let err = voxelize(&mesh, &grid(12, h)).unwrap_err();
        match err {
            GeometryError::OutOfBounds { axes, .. } => assert_eq!(axes, "z"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn open_mesh_surface_only() {
        let h = 0.125;
        let tri = TriangleMesh::new(
            "tri",
            vec![Vec3::new(0.1, 0.1, 0.3), Vec3::new(0.9, 0.1, 0.3), Vec3::new(0.1, 0.9, 0.3)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let v = voxelize(&tri, &grid(8, h)).unwrap();
        assert!(v.count() > 0);
        for k in 0..8 {
            if k != 2 {
                assert!((0..8).all(|i| (0..8).all(|j| !v.get(i, j, k))));
            }
        }
    }

    #[test]
    fn sphere_volume_close_to_analytic() {
        use crate::geometry::{build_head_model, HeadParams};
        let h = 0.01;
        let head = build_head_model(&HeadParams { radius: 0.1, subdivision_level: 5, center: Vec3::new(0.16, 0.16, 0.16) }).unwrap();
        let v = voxelize(&head.mesh, &grid(32, h)).unwrap();
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 0.1f64.powi(3) / h.powi(3);
        let n = v.count() as f64;
        // surface layer inflates the count by at most about one voxel shell
        assert!(n > analytic * 0.97 && n < analytic * 1.35, "{n} vs {analytic}");
    }
}
