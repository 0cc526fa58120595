//! Voxelization and STL properties over random meshes.

use echotrain::geometry::{
    parse_stl, target_panel, voxelize, write_binary_stl, GridSpec, Pose, ShapeMask, TargetRole, TargetSpec, TriangleMesh,
    Vec3,
};
use proptest::prelude::*;

const H: f64 = 0.25;

/// Dyadic coordinates (multiples of 1/1024) so shifts by whole voxels are exact.
fn dyadic(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo * 1024..hi * 1024).prop_map(|n| n as f64 / 1024.0)
}

fn point() -> impl Strategy<Value = Vec3> {
    (dyadic(1, 5), dyadic(1, 5), dyadic(1, 5)).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Closed tetrahedron with outward faces.
fn tetra(p: [Vec3; 4]) -> Option<TriangleMesh> {
    let vol = (p[1] - p[0]).dot((p[2] - p[0]).cross(p[3] - p[0]));
    if vol.abs() < 1e-3 {
        return None;
    }
    let tris = if vol > 0.0 { [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]] } else { [[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]] };
    Some(TriangleMesh::new("tet", p.to_vec(), tris.to_vec()).unwrap())
}

fn grid() -> GridSpec {
    GridSpec::new([40, 40, 40], H, Vec3::ZERO).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_by_whole_voxels_shifts_occupancy(
        p in [point(), point(), point(), point()],
        (a, b, c) in (0usize..8, 0usize..8, 0usize..8),
    ) {
        let Some(mesh) = tetra(p) else { return Ok(()) };
        let base = voxelize(&mesh, &grid()).unwrap();
        let moved = voxelize(&mesh.translated(Vec3::new(a as f64 * H, b as f64 * H, c as f64 * H)), &grid()).unwrap();
        prop_assert_eq!(base.count(), moved.count());
        for idx in base.occupancy.iter_ones() {
            let [i, j, k] = base.spec.coords(idx);
            prop_assert!(moved.get(i + a, j + b, k + c));
        }
    }

    #[test]
    fn surface_points_lie_in_occupied_voxels(
        p in [point(), point(), point(), point()],
        samples in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 16),
    ) {
        let Some(mesh) = tetra(p) else { return Ok(()) };
        let vox = voxelize(&mesh, &grid()).unwrap();
        let tol = 1e-6;
        for tri in mesh.triangles_iter() {
            for &(u, v) in &samples {
                let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
                let q = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v;
                let g = q * (1.0 / H);
                // every voxel whose slightly grown closed cube holds q
                let range = |x: f64| ((x - tol).floor() as usize)..=((x + tol).floor() as usize);
                let covered = range(g.x).any(|i| range(g.y).any(|j| range(g.z).any(|k| vox.get(i, j, k))));
                prop_assert!(covered, "point {:?} not covered", q);
            }
        }
    }

    #[test]
    fn full_panel_extent_matches_mask(cols in 1usize..6, rows in 1usize..6, cell in 0.02f64..0.06) {
        let h = 0.005;
        let mut spec = TargetSpec::new("r", ShapeMask::full(cols, rows), TargetRole::Trained);
        spec.cell_size = cell;
        spec.panel_thickness = 2.0 * h;
        spec.placement = Pose::facing_y(Vec3::new(0.0011, 0.02, -0.0007));
        let g = GridSpec::centered([0.4, 0.1, 0.4], h, Vec3::ZERO).unwrap();
        let vox = voxelize(&target_panel(&spec).unwrap(), &g).unwrap();
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for idx in vox.occupancy.iter_ones() {
            let c = g.coords(idx);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        // each face within one voxel of the exact panel edge
        let o = spec.placement.origin;
        let edges = [
            (0, o.x - cols as f64 * cell / 2.0, o.x + cols as f64 * cell / 2.0),
            (2, o.z - rows as f64 * cell / 2.0, o.z + rows as f64 * cell / 2.0),
        ];
        for (a, want_lo, want_hi) in edges {
            let got_lo = g.origin.component(a) + lo[a] as f64 * h;
            let got_hi = g.origin.component(a) + (hi[a] + 1) as f64 * h;
            prop_assert!((got_lo - want_lo).abs() <= h, "axis {} low {} vs {}", a, got_lo, want_lo);
            prop_assert!((got_hi - want_hi).abs() <= h, "axis {} high {} vs {}", a, got_hi, want_hi);
        }
        // solid cuboid: every voxel in the bounding box is set
        let boxed = (hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1);
        prop_assert_eq!(vox.count(), boxed);
    }

    #[test]
    fn binary_stl_round_trip_is_bit_exact(
        coords in prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 9..60),
    ) {
        let verts: Vec<Vec3> = coords.chunks_exact(3).map(|c| Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64)).collect();
        let tris: Vec<[u32; 3]> = (0..verts.len() as u32 / 3).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
        let mesh = TriangleMesh::new("m", verts, tris).unwrap();
        let back = parse_stl(&write_binary_stl(&mesh)).unwrap();
        prop_assert_eq!(back.triangles.len(), mesh.triangles.len());
        for t in 0..mesh.triangles.len() {
            let (a, b) = (mesh.triangle(t), back.triangle(t));
            for k in 0..3 {
                prop_assert_eq!(a[k].to_array().map(f64::to_bits), b[k].to_array().map(f64::to_bits));
            }
        }
    }
}
