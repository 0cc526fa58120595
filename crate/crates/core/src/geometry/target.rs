use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose, ShapeMask, TriangleMesh, Vec3};

pub const DEFAULT_CELL_SIZE: f64 = 0.05;
/// Two voxels at the default 1.5 mm spacing.
pub const DEFAULT_PANEL_THICKNESS: f64 = 0.003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRole {
    Trained,
    Untrained,
}

/// Rigid planar target made of square cells.
///
/// The mask grid is centred on `placement.origin` in the panel plane; column
/// index grows along `u_axis`, row index grows against `v_axis` (row 0 on top).
/// The front face lies in the plane `w = 0` and the panel extends
/// `panel_thickness` along `placement.normal`, away from the listener.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub id: String,
    pub mask: ShapeMask,
    pub cell_size: f64,
    pub panel_thickness: f64,
    pub placement: Pose,
    pub role: TargetRole,
}

impl TargetSpec {
    pub fn new(id: impl Into<String>, mask: ShapeMask, role: TargetRole) -> Self {
        Self {
            id: id.into(),
            mask,
            cell_size: DEFAULT_CELL_SIZE,
            panel_thickness: DEFAULT_PANEL_THICKNESS,
            placement: Pose::default(),
            role,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.mask.any() {
            return Err(GeometryError::InvalidTarget(format!("target '{}' has an empty mask", self.id)));
        }
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(GeometryError::InvalidTarget(format!("cell_size must be positive, got {}", self.cell_size)));
        }
        if !(self.panel_thickness > 0.0) || !self.panel_thickness.is_finite() {
            return Err(GeometryError::InvalidTarget(format!(
                "panel_thickness must be positive, got {}",
                self.panel_thickness
            )));
        }
        if !self.placement.is_orthonormal() || !self.placement.origin.is_finite() {
            return Err(GeometryError::InvalidTarget("placement axes must be orthonormal".into()));
        }
        Ok(())
    }

    fn line_u(&self, iu: usize) -> f64 {
        (iu as f64 - self.mask.cols() as f64 / 2.0) * self.cell_size
    }

    fn line_v(&self, ir: usize) -> f64 {
        (self.mask.rows() as f64 / 2.0 - ir as f64) * self.cell_size
    }

    /// World position of the front-face centre of cell `index`.
    pub fn cell_center(&self, index: usize) -> Vec3 {
        let (c, r) = self.mask.position(index);
        let u = (self.line_u(c) + self.line_u(c + 1)) / 2.0;
        let v = (self.line_v(r) + self.line_v(r + 1)) / 2.0;
        self.placement.apply(Vec3::new(u, v, 0.0))
    }
}

/// One `(cell_index, centre)` per occupied cell, in row-major order.
pub fn cell_centers(spec: &TargetSpec) -> Result<Vec<(usize, Vec3)>, GeometryError> {
    spec.validate()?;
    Ok(spec.mask.occupied().map(|i| (i, spec.cell_center(i))).collect())
}

/// Closed panel surface: front and back faces for each occupied cell plus
/// side walls wherever an occupied cell borders an empty or off-grid cell.
/// Shared lattice corners are welded so neighbouring cells join seamlessly.
pub fn target_panel(spec: &TargetSpec) -> Result<TriangleMesh, GeometryError> {
    spec.validate()?;
    let mask = &spec.mask;
    let mut index: HashMap<(usize, usize, usize), u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut corner = |iu: usize, ir: usize, iw: usize| -> (u32, Vec3) {
        let w = if iw == 0 { 0.0 } else { spec.panel_thickness };
        let p = spec.placement.apply(Vec3::new(spec.line_u(iu), spec.line_v(ir), w));
        let id = *index.entry((iu, ir, iw)).or_insert_with(|| {
            vertices.push(p);
            (vertices.len() - 1) as u32
        });
        (id, p)
    };
    let pose = spec.placement;
    let mut quad = |q: [(u32, Vec3); 4], outward: Vec3| {
        let [a, b, c, d] = q;
        let n = (b.1 - a.1).cross(c.1 - a.1);
        if n.dot(outward) >= 0.0 {
            triangles.push([a.0, b.0, c.0]);
            triangles.push([a.0, c.0, d.0]);
        } else {
            triangles.push([a.0, c.0, b.0]);
            triangles.push([a.0, d.0, c.0]);
        }
    };

    for idx in mask.occupied() {
        let (c, r) = mask.position(idx);
        let (ci, ri) = (c as isize, r as isize);
        for (iw, outward) in [(0, -pose.normal), (1, pose.normal)] {
            quad([corner(c, r, iw), corner(c + 1, r, iw), corner(c + 1, r + 1, iw), corner(c, r + 1, iw)], outward);
        }
        if !mask.get_signed(ci - 1, ri) {
            quad([corner(c, r, 0), corner(c, r + 1, 0), corner(c, r + 1, 1), corner(c, r, 1)], -pose.u_axis);
        }
        if !mask.get_signed(ci + 1, ri) {
            quad([corner(c + 1, r, 0), corner(c + 1, r + 1, 0), corner(c + 1, r + 1, 1), corner(c + 1, r, 1)], pose.u_axis);
        }
        if !mask.get_signed(ci, ri - 1) {
            quad([corner(c, r, 0), corner(c + 1, r, 0), corner(c + 1, r, 1), corner(c, r, 1)], pose.v_axis);
        }
        if !mask.get_signed(ci, ri + 1) {
            quad([corner(c, r + 1, 0), corner(c + 1, r + 1, 0), corner(c + 1, r + 1, 1), corner(c, r + 1, 1)], -pose.v_axis);
        }
    }
    Ok(TriangleMesh { name: spec.id.clone(), vertices, triangles })
}

const LIBRARY: [(&str, TargetRole, &str); 13] = [
    ("T1", TargetRole::Trained, ".....\n#####\n#####\n#####\n....."),
    ("T2", TargetRole::Trained, "#....\n#....\n#....\n#....\n#####"),
    ("T3", TargetRole::Trained, "#####\n..#..\n..#..\n..#..\n..#.."),
    ("T4", TargetRole::Trained, "..#..\n..#..\n#####\n..#..\n..#.."),
    ("T5", TargetRole::Trained, "#....\n##...\n###..\n####.\n#####"),
    ("T6", TargetRole::Trained, "#...#\n#...#\n#...#\n#...#\n#####"),
    ("T7", TargetRole::Trained, "#####\n#....\n#####\n....#\n#####"),
    ("T8", TargetRole::Trained, "#...#\n#...#\n#####\n#...#\n#...#"),
    ("U1", TargetRole::Untrained, "..#..\n.###.\n#####\n.###.\n..#.."),
    ("U2", TargetRole::Untrained, "#####\n#...#\n#...#\n#...#\n#####"),
    ("U3", TargetRole::Untrained, "#####\n...#.\n..#..\n.#...\n#####"),
    ("U4", TargetRole::Untrained, "#####\n#....\n####.\n#....\n#####"),
    ("U5", TargetRole::Untrained, "..#..\n.###.\n#####\n..#..\n..#.."),
];

/// The thirteen stock targets on a 5×5 grid: eight trained shapes
/// (rectangle, L, T, cross, staircase triangle, U, S, H) and five novel
/// ones (diamond, ring, Z, E, arrow). Editable defaults, not measured data.
pub fn default_library() -> Vec<TargetSpec> {
    LIBRARY
        .iter()
        .map(|&(id, role, text)| TargetSpec::new(id, ShapeMask::parse(text).expect("library masks are valid"), role))
        .collect()
}
