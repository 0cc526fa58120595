//! Time stepping.
//!
//! Interior nodes use the second-order wave-equation stencil
//! `p⁺ = 2p − p⁻ + C²(Σ₆ − 6p)`. Nodes inside the absorbing slabs carry a
//! split pressure `p = pₓ + p_y + p_z` and the particle velocities (scaled by
//! ρc) on their six faces, advanced with a staggered damped scheme. Where the
//! damping vanishes the staggered scheme reduces exactly to the stencil above,
//! so the two regions join without an interface reflection.
//!
//! Rigid nodes hold zero pressure; a free node next to one substitutes its own
//! value for the rigid neighbour, which puts a zero-velocity wall on the
//! shared face. Nodes outside the grid count as zero pressure.

use rayon::prelude::*;

use super::{FdtdError, SimConfig};
use crate::geometry::{GridSpec, VoxelGrid};

const RIGID: u8 = 1 << 6;
const PML: u8 = 1 << 7;

/// Per-node state inside the absorbing slabs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PmlCell {
    /// Split pressure components along x, y, z.
    pub p: [f32; 3],
    /// Scaled velocities on the (−x, +x, −y, +y, −z, +z) faces.
    pub v: [f32; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub dims: [usize; 3],
    pub p_prev: Vec<f32>,
    pub p_curr: Vec<f32>,
    pub step_index: u64,
    pub pml_aux: Vec<PmlCell>,
}

impl FieldState {
    pub fn len(&self) -> usize {
        self.p_curr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_curr.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.p_curr.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f32 {
        self.p_curr.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

/// Damping coefficients along one axis.
#[derive(Debug, Clone)]
struct AxisProfile {
    node_a: Vec<f32>,
    node_b: Vec<f32>,
    /// Face `f` sits between nodes `f − 1` and `f`; `n + 1` faces.
    face_a: Vec<f32>,
    face_b: Vec<f32>,
}

impl AxisProfile {
    fn new(n: usize, layers: usize, sigma_max: f64, dt: f64, courant: f64) -> Self {
        let sigma = |x: f64| -> f64 {
            if layers == 0 {
                return 0.0;
            }
            let l = layers as f64;
            let lo = (l - 0.5) - x;
            let hi = x - (n as f64 - l - 0.5);
            let d = lo.max(hi).max(0.0);
            sigma_max * (d / l).powi(2)
        };
        let coef = |s: f64| {
            let h = s * dt / 2.0;
            (((1.0 - h) / (1.0 + h)) as f32, (courant / (1.0 + h)) as f32)
        };
        let (node_a, node_b) = (0..n).map(|i| coef(sigma(i as f64))).unzip();
        let (face_a, face_b) = (0..=n).map(|f| coef(sigma(f as f64 - 0.5))).unzip();
        Self { node_a, node_b, face_a, face_b }
    }
}

/// Precomputed, immutable description of one scene under one configuration.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: GridSpec,
    flags: Vec<u8>,
    courant_sq: f32,
    profiles: [AxisProfile; 3],
    /// Start of each x-plane's run in `FieldState::pml_aux`; `nx + 1` entries.
    pml_offsets: Vec<usize>,
    /// Per z index: −face a, b, +face a, b, node a, b.
    z_coefs: Vec<[f32; 6]>,
    zeros: Vec<f32>,
}

impl Kernel {
    pub fn new(scene: &VoxelGrid, config: &SimConfig) -> Result<Self, FdtdError> {
        config.validate()?;
        let spec = config.grid_spec()?;
        if scene.spec.dims != spec.dims {
            return Err(FdtdError::DimensionMismatch { expected: spec.dims, found: scene.spec.dims });
        }
        let [nx, ny, nz] = spec.dims;
        let l = config.pml_layers;
        let in_pml = |c: usize, n: usize| c < l || c >= n - l;
        let mut flags = vec![0u8; spec.len()];
        let mut pml_offsets = Vec::with_capacity(nx + 1);
        let mut pml_count = 0;
        for i in 0..nx {
            pml_offsets.push(pml_count);
            for j in 0..ny {
                for k in 0..nz {
                    let idx = spec.index(i, j, k);
                    if in_pml(i, nx) || in_pml(j, ny) || in_pml(k, nz) {
                        flags[idx] |= PML;
                        pml_count += 1;
                    }
                    if scene.occupancy[idx] {
                        flags[idx] |= RIGID;
                    }
                }
            }
        }
        pml_offsets.push(pml_count);

        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let idx = spec.index(i, j, k);
                    let c = [i, j, k];
                    for (bit, (a, dir)) in [(0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)].into_iter().enumerate() {
                        let nb = c[a] as isize + dir;
                        let special = if nb < 0 || nb >= spec.dims[a] as isize {
                            true
                        } else {
                            let mut cc = c;
                            cc[a] = nb as usize;
                            let f = flags[spec.index(cc[0], cc[1], cc[2])];
                            if f & RIGID != 0 && flags[idx] & (PML | RIGID) == PML {
                                return Err(FdtdError::RigidInPml { voxel: cc });
                            }
                            f & RIGID != 0
                        };
                        if special {
                            flags[idx] |= 1 << bit;
                        }
                    }
                    if flags[idx] & (PML | RIGID) == PML | RIGID {
                        return Err(FdtdError::RigidInPml { voxel: c });
                    }
                }
            }
        }

        let dt = config.time_step();
        let sigma_max = config.peak_damping();
        let profiles = spec.dims.map(|n| AxisProfile::new(n, l, sigma_max, dt, config.cfl));
        let pz = &profiles[2];
        let z_coefs = (0..nz)
            .map(|k| [pz.face_a[k], pz.face_b[k], pz.face_a[k + 1], pz.face_b[k + 1], pz.node_a[k], pz.node_b[k]])
            .collect();
        Ok(Self {
            spec,
            flags,
            courant_sq: (config.cfl * config.cfl) as f32,
            profiles,
            pml_offsets,
            z_coefs,
            zeros: vec![0.0; nz],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.spec
    }

    pub fn is_rigid(&self, idx: usize) -> bool {
        self.flags[idx] & RIGID != 0
    }

    pub fn is_pml(&self, idx: usize) -> bool {
        self.flags[idx] & PML != 0
    }

    pub fn new_state(&self) -> FieldState {
        let n = self.spec.len();
        FieldState {
            dims: self.spec.dims,
            p_prev: vec![0.0; n],
            p_curr: vec![0.0; n],
            step_index: 0,
            pml_aux: vec![PmlCell::default(); *self.pml_offsets.last().unwrap()],
        }
    }

    fn check_state(&self, state: &FieldState) -> Result<(), FdtdError> {
        let n = self.spec.len();
        if state.dims != self.spec.dims || state.p_curr.len() != n || state.p_prev.len() != n {
            return Err(FdtdError::DimensionMismatch { expected: self.spec.dims, found: state.dims });
        }
        if state.pml_aux.len() != *self.pml_offsets.last().unwrap() {
            return Err(FdtdError::InvalidConfig("absorbing-layer state does not match the configured layers".into()));
        }
        Ok(())
    }

    /// Advances `state` by one time step.
    pub fn step(&self, state: &mut FieldState) -> Result<(), FdtdError> {
        self.check_state(state)?;
        let [_, ny, nz] = self.spec.dims;
        let plane = ny * nz;

        let mut aux_planes: Vec<&mut [PmlCell]> = Vec::with_capacity(self.spec.dims[0]);
        let mut rest = state.pml_aux.as_mut_slice();
        for w in self.pml_offsets.windows(2) {
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(w[1] - w[0]);
            aux_planes.push(head);
            rest = tail;
        }

        let curr = &state.p_curr;
        state
            .p_prev
            .par_chunks_mut(plane)
            .zip(aux_planes.into_par_iter())
            .enumerate()
            .for_each(|(i, (out, aux))| self.update_plane(i, curr, out, aux));

        std::mem::swap(&mut state.p_prev, &mut state.p_curr);
        state.step_index += 1;
        #[cfg(debug_assertions)]
        if !state.all_finite() {
            return Err(FdtdError::Unstable { step: state.step_index });
        }
        Ok(())
    }

    fn update_plane(&self, i: usize, curr: &[f32], out: &mut [f32], aux: &mut [PmlCell]) {
        let [_, ny, nz] = self.spec.dims;
        let plane = ny * nz;
        let base = i * plane;
        let c2 = self.courant_sq;
        let mut cursor = 0;
        for j in 0..ny {
            let row = j * nz;
            let flags = &self.flags[base + row..base + row + nz];
            let mut k = 0;
            while k < nz {
                if flags[k] == 0 {
                    let start = k;
                    while k < nz && flags[k] == 0 {
                        k += 1;
                    }
                    // flags == 0 guarantees all six neighbours exist
                    let n = k - start;
                    let g = base + row + start;
                    let zm = &curr[g - 1..g - 1 + n];
                    let p0 = &curr[g..g + n];
                    let zp = &curr[g + 1..g + 1 + n];
                    let xm = &curr[g - plane..g - plane + n];
                    let xp = &curr[g + plane..g + plane + n];
                    let ym = &curr[g - nz..g - nz + n];
                    let yp = &curr[g + nz..g + nz + n];
                    let o = &mut out[row + start..row + start + n];
                    for t in 0..n {
                        let p = p0[t];
                        let sum = xm[t] + xp[t] + ym[t] + yp[t] + zm[t] + zp[t];
                        o[t] = 2.0 * p - o[t] + c2 * (sum - 6.0 * p);
                    }
                    continue;
                }
                let f = flags[k];
                let idx = base + row + k;
                if f & RIGID != 0 {
                    out[row + k] = 0.0;
                } else if f & PML != 0 {
                    let start = k;
                    while k < nz && flags[k] & PML != 0 {
                        k += 1;
                    }
                    let n = k - start;
                    self.update_pml_run([i, j, start], curr, &mut out[row + start..row + k], &mut aux[cursor..cursor + n]);
                    cursor += n;
                    continue;
                } else {
                    let p = curr[idx];
                    let nb = |bit: u8, offset: isize| -> f32 {
                        if f & (1 << bit) == 0 {
                            curr[(idx as isize + offset) as usize]
                        } else if self.neighbour_exists([i, j, k], bit) {
                            p
                        } else {
                            0.0
                        }
                    };
                    let (sp, sr) = (plane as isize, nz as isize);
                    let sum = nb(0, -sp) + nb(1, sp) + nb(2, -sr) + nb(3, sr) + nb(4, -1) + nb(5, 1);
                    out[row + k] = 2.0 * p - out[row + k] + c2 * (sum - 6.0 * p);
                }
                k += 1;
            }
        }
        debug_assert_eq!(cursor, aux.len());
    }

    fn neighbour_exists(&self, c: [usize; 3], bit: u8) -> bool {
        let a = (bit / 2) as usize;
        if bit % 2 == 0 {
            c[a] > 0
        } else {
            c[a] + 1 < self.spec.dims[a]
        }
    }

    /// Updates a run of consecutive absorbing-layer nodes along z starting
    /// at `c`; x and y coefficients are constant along the run.
    fn update_pml_run(&self, c: [usize; 3], curr: &[f32], out: &mut [f32], cells: &mut [PmlCell]) {
        let [nx, ny, nz] = self.spec.dims;
        let [i, j, k0] = c;
        let n = out.len();
        let plane = ny * nz;
        let g = (i * ny + j) * nz + k0;
        let [px, py, _] = &self.profiles;
        let (xam, xbm, xap, xbp, xna, xnb) =
            (px.face_a[i], px.face_b[i], px.face_a[i + 1], px.face_b[i + 1], px.node_a[i], px.node_b[i]);
        let (yam, ybm, yap, ybp, yna, ynb) =
            (py.face_a[j], py.face_b[j], py.face_a[j + 1], py.face_b[j + 1], py.node_a[j], py.node_b[j]);
        let zeros = &self.zeros[..n];
        let row = |cond: bool, start: usize| if cond { &curr[start..start + n] } else { zeros };
        let p0 = &curr[g..g + n];
        let xm = row(i > 0, g.wrapping_sub(plane));
        let xp = row(i + 1 < nx, g + plane);
        let ym = row(j > 0, g.wrapping_sub(nz));
        let yp = row(j + 1 < ny, g + nz);
        let zc = &self.z_coefs[k0..k0 + n];
        let cells = &mut cells[..n];
        let mut pzm = if k0 > 0 { curr[g - 1] } else { 0.0 };
        let last_next = if k0 + n < nz { curr[g + n] } else { 0.0 };

        for t in 0..n {
            let pc = p0[t];
            let pzp = if t + 1 < n { p0[t + 1] } else { last_next };
            let z = &zc[t];
            let PmlCell { p, v } = &mut cells[t];
            v[0] = xam * v[0] - xbm * (pc - xm[t]);
            v[1] = xap * v[1] - xbp * (xp[t] - pc);
            v[2] = yam * v[2] - ybm * (pc - ym[t]);
            v[3] = yap * v[3] - ybp * (yp[t] - pc);
            v[4] = z[0] * v[4] - z[1] * (pc - pzm);
            v[5] = z[2] * v[5] - z[3] * (pzp - pc);
            p[0] = xna * p[0] - xnb * (v[1] - v[0]);
            p[1] = yna * p[1] - ynb * (v[3] - v[2]);
            p[2] = z[4] * p[2] - z[5] * (v[5] - v[4]);
            out[t] = p[0] + p[1] + p[2];
            pzm = pc;
        }
    }
}

/// Single-step entry point for callers that manage their own state.
/// Rebuilds the kernel each call; use [`Kernel`] directly in loops.
pub fn step(state: &mut FieldState, scene: &VoxelGrid, config: &SimConfig) -> Result<(), FdtdError> {
    Kernel::new(scene, config)?.step(state)
}
