//! Sphere head, STL round trip, and the voxel scene for one target cell,
//! drawn as a text slice through the mouth.
//!
//! ```text
//! cargo run --release --example voxelize_head
//! ```

use echotrain::cli::Scenario;
use echotrain::geometry::{
    build_head_model, default_library, parse_stl, sphere_triangle_count, voxelize, write_binary_stl, HeadParams,
};
use echotrain::irbank::cell_scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let head = build_head_model(&HeadParams::default())?;
    println!(
        "head: {} triangles (level 3 formula {}), mouth {:?}",
        head.mesh.triangles.len(),
        sphere_triangle_count(3),
        head.mouth.to_array()
    );

    let stl = write_binary_stl(&head.mesh);
    let back = parse_stl(&stl)?;
    println!("binary STL: {} bytes, {} triangles read back", stl.len(), back.triangles.len());

    let scenario = Scenario::desk();
    let config = scenario.sim_config();
    let head = scenario.head_model()?;
    let vox = voxelize(&head.mesh, &config.grid_spec()?)?;
    println!("desk head alone: {} solid voxels of {}", vox.count(), vox.spec.len());

    let target = scenario.place(default_library().into_iter().find(|t| t.id == "T4").unwrap());
    let cell = 12;
    let scene = cell_scene(&target, &head, &config, cell)?;
    println!("T4 cell {cell}: {} solid voxels, source {:?}", scene.scene.count(), scene.source.to_array());

    // x across, y down the page (away from the head at the top)
    let spec = &scene.scene.spec;
    let k = spec.to_grid(scene.source).z.floor() as usize;
    for j in 0..spec.dims[1] {
        let row: String = (0..spec.dims[0]).map(|i| if scene.scene.get(i, j, k) { '#' } else { '.' }).collect();
        println!("{row}");
    }
    Ok(())
}
