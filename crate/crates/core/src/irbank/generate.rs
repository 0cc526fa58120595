use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ImpulseResponsePair, IrBank, IrBankError};
use crate::fdtd::{run, FdtdError, SimConfig, SourceSignal};
use crate::geometry::{target_panel, voxelize, GeometryError, HeadModel, TargetSpec, Vec3, VoxelGrid};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BankOptions {
    pub source: SourceSignal,
}

/// Everything needed to simulate one cell.
#[derive(Debug, Clone)]
pub struct CellScene {
    pub head: HeadModel,
    /// Head and target.
    pub scene: VoxelGrid,
    /// Head alone, for direct-path removal.
    pub free_scene: VoxelGrid,
    pub source: Vec3,
    pub ear_left: Vec3,
    pub ear_right: Vec3,
}

fn fit_error(cell: u32, e: GeometryError) -> IrBankError {
    match e {
        GeometryError::OutOfBounds { .. } => IrBankError::DoesNotFit { cell, message: e.to_string() },
        other => IrBankError::Geometry(other),
    }
}

fn solver_error(cell: u32, e: FdtdError) -> IrBankError {
    match e {
        FdtdError::RigidInPml { .. } | FdtdError::OutsideInterior { .. } => {
            IrBankError::DoesNotFit { cell, message: e.to_string() }
        }
        source => IrBankError::Solver { cell, source },
    }
}

/// True when every node carrying trilinear weight at `q` exists and is free.
fn trilinear_free(scene: &VoxelGrid, q: Vec3) -> bool {
    let spec = &scene.spec;
    let g = spec.to_grid(q) - Vec3::new(0.5, 0.5, 0.5);
    let mut base = [0usize; 3];
    let mut span = [0usize; 3];
    for a in 0..3 {
        let x = g.component(a);
        let f = x.floor();
        if !(f >= 0.0 && f < spec.dims[a] as f64) {
            return false;
        }
        base[a] = f as usize;
        span[a] = usize::from(x > f);
        if base[a] + span[a] >= spec.dims[a] {
            return false;
        }
    }
    (0..=span[0]).all(|di| {
        (0..=span[1]).all(|dj| (0..=span[2]).all(|dk| !scene.get(base[0] + di, base[1] + dj, base[2] + dk)))
    })
}

/// Steps `p` outward in quarter-voxel increments (up to four voxels) until
/// it no longer touches a rigid node.
fn standoff(scene: &VoxelGrid, p: Vec3, outward: Vec3) -> Option<Vec3> {
    let step = scene.spec.spacing / 4.0;
    (0..=16).map(|s| p + outward * (s as f64 * step)).find(|&q| trilinear_free(scene, q))
}

/// Translates the head so the mouth lines up with cell `cell` in x and z,
/// voxelizes head and target, and places the markers off the surface.
pub fn cell_scene(target: &TargetSpec, head: &HeadModel, config: &SimConfig, cell: u32) -> Result<CellScene, IrBankError> {
    let spec = config.grid_spec().map_err(|e| solver_error(cell, e))?;
    let centre = target.cell_center(cell as usize);
    let head = head.translated(Vec3::new(centre.x - head.mouth.x, 0.0, centre.z - head.mouth.z));
    let free_scene = voxelize(&head.mesh, &spec).map_err(|e| fit_error(cell, e))?;
    let panel = voxelize(&target_panel(target)?, &spec).map_err(|e| fit_error(cell, e))?;
    if free_scene.overlaps(&panel) {
        return Err(IrBankError::HeadIntersectsTarget { cell });
    }
    let mut scene = free_scene.clone();
    scene.union_with(&panel)?;

    let place = |marker: Vec3, name: &str| {
        standoff(&scene, marker, head.outward(marker))
            .ok_or_else(|| IrBankError::MarkerBlocked { cell, marker: name.to_string() })
    };
    let source = place(head.mouth, "mouth")?;
    let ear_left = place(head.ear_left, "left ear")?;
    let ear_right = place(head.ear_right, "right ear")?;
    Ok(CellScene { head, scene, free_scene, source, ear_left, ear_right })
}

/// Echo impulse responses for one cell: the head+target run minus the
/// head-only run, at both ears.
pub fn generate_cell(
    target: &TargetSpec,
    head: &HeadModel,
    config: &SimConfig,
    options: &BankOptions,
    cell: u32,
) -> Result<ImpulseResponsePair, IrBankError> {
    let cs = cell_scene(target, head, config, cell)?;
    let mut cfg = config.clone();
    cfg.source = cs.source;
    cfg.receivers = vec![cs.ear_left, cs.ear_right];
    let signal = options.source.samples();
    let full = run(&cs.scene, &cfg, &signal).map_err(|e| solver_error(cell, e))?;
    let free = run(&cs.free_scene, &cfg, &signal).map_err(|e| solver_error(cell, e))?;
    let diff = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f32>>();
    Ok(ImpulseResponsePair {
        cell_index: cell,
        left: diff(&full.traces[0], &free.traces[0]),
        right: diff(&full.traces[1], &free.traces[1]),
        sample_rate: full.sample_rate,
    })
}

pub fn generate_ir_bank(target: &TargetSpec, head: &HeadModel, config: &SimConfig) -> Result<IrBank, IrBankError> {
    generate_ir_bank_with(target, head, config, &BankOptions::default())
}

/// Simulates every occupied cell (concurrently) and assembles the bank in
/// cell order.
pub fn generate_ir_bank_with(
    target: &TargetSpec,
    head: &HeadModel,
    config: &SimConfig,
    options: &BankOptions,
) -> Result<IrBank, IrBankError> {
    target.validate()?;
    config.validate().map_err(|e| solver_error(0, e))?;
    let cells: Vec<u32> = target.mask.occupied().map(|i| i as u32).collect();
    let pairs = cells
        .par_iter()
        .map(|&cell| generate_cell(target, head, config, options, cell))
        .collect::<Result<Vec<_>, _>>()?;
    let entries: BTreeMap<u32, ImpulseResponsePair> = pairs.into_iter().map(|p| (p.cell_index, p)).collect();
    Ok(IrBank {
        target_id: target.id.clone(),
        grid: (target.mask.cols() as u32, target.mask.rows() as u32),
        cell_size: target.cell_size,
        head_id: head.id.clone(),
        sim_fingerprint: sim_fingerprint(target, head, config, options),
        sample_rate: config.sample_rate(),
        entries,
    })
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    format: &'static str,
    sound_speed: f64,
    spacing: f64,
    cfl: f64,
    domain_extent: [f64; 3],
    pml_layers: usize,
    pml_peak_damping: f64,
    duration: f64,
    mask: String,
    cell_size: f64,
    panel_thickness: f64,
    placement: &'a crate::geometry::Pose,
    head_id: &'a str,
    head_markers: [[f64; 3]; 4],
    head_mesh_sha256: String,
    source: &'a SourceSignal,
}

/// SHA-256 of every input that affects the simulated samples. Source and
/// receiver positions in `config` are ignored (they are set per cell).
pub fn sim_fingerprint(target: &TargetSpec, head: &HeadModel, config: &SimConfig, options: &BankOptions) -> [u8; 32] {
    let mut mesh_hash = Sha256::new();
    for v in &head.mesh.vertices {
        for c in v.to_array() {
            mesh_hash.update(c.to_le_bytes());
        }
    }
    for t in &head.mesh.triangles {
        for i in t {
            mesh_hash.update(i.to_le_bytes());
        }
    }
    let mesh_sha: String = mesh_hash.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let input = FingerprintInput {
        format: "eirb-v1 solver-2",
        sound_speed: config.sound_speed,
        spacing: config.spacing,
        cfl: config.cfl,
        domain_extent: config.domain_extent,
        pml_layers: config.pml_layers,
        pml_peak_damping: config.peak_damping(),
        duration: config.duration,
        mask: target.mask.to_text(),
        cell_size: target.cell_size,
        panel_thickness: target.panel_thickness,
        placement: &target.placement,
        head_id: &head.id,
        head_markers: [head.center, head.mouth, head.ear_left, head.ear_right].map(|p| p.to_array()),
        head_mesh_sha256: mesh_sha,
        source: &options.source,
    };
    let json = serde_json::to_vec(&input).expect("fingerprint input serializes");
    let mut out = [0u8; 32];
    out.copy_from_slice(&Sha256::digest(&json));
    out
}
