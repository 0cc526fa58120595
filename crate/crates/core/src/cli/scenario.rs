//! Scenario files: simulation, head, target placement and stimulus settings
//! in one TOML document. Keys carry their unit as a suffix.
//!
//! ```toml
//! [sim]
//! sound_speed_m_per_s = 344.0
//! spacing_m = 0.005
//! cfl = 0.5
//! domain_extent_m = [0.32, 0.32, 0.32]
//! pml_layers = 8
//! duration_s = 0.003
//!
//! [source]
//! kind = "impulse"
//!
//! [head]
//! radius_m = 0.06
//! center_m = [0.0, -0.03, 0.0]
//!
//! [target]
//! cell_size_m = 0.03
//! panel_thickness_m = 0.01
//! origin_m = [0.0, 0.07, 0.0]
//!
//! [stimulus.chirp]
//! f_start_hz = 7000.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fdtd::{default_duration, SimConfig, SourceSignal};
use crate::geometry::{build_head_model, parse_stl, HeadModel, HeadParams, Pose, TargetSpec, Vec3};
use crate::irbank::BankOptions;
use crate::synth::StimulusConfig;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub sound_speed_m_per_s: f64,
    pub spacing_m: f64,
    pub cfl: f64,
    pub domain_extent_m: [f64; 3],
    pub pml_layers: usize,
    pub pml_peak_damping_per_s: Option<f64>,
    /// Two domain diagonals of travel when absent.
    pub duration_s: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            sound_speed_m_per_s: d.sound_speed,
            spacing_m: d.spacing,
            cfl: d.cfl,
            domain_extent_m: d.domain_extent,
            pml_layers: d.pml_layers,
            pml_peak_damping_per_s: None,
            duration_s: None,
        }
    }
}

impl SimSection {
    pub fn to_config(&self) -> SimConfig {
        SimConfig {
            sound_speed: self.sound_speed_m_per_s,
            spacing: self.spacing_m,
            cfl: self.cfl,
            domain_extent: self.domain_extent_m,
            pml_layers: self.pml_layers,
            pml_peak_damping: self.pml_peak_damping_per_s,
            duration: self.duration_s.unwrap_or_else(|| default_duration(self.domain_extent_m, self.sound_speed_m_per_s)),
            ..SimConfig::default()
        }
    }
}

/// Spherical head by default; a mesh file replaces the sphere and then needs
/// explicit marker positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadSection {
    pub radius_m: f64,
    pub subdivision_level: u32,
    pub center_m: [f64; 3],
    /// STL path, relative to the scenario file.
    pub stl: Option<PathBuf>,
    pub mouth_m: Option<[f64; 3]>,
    pub ear_left_m: Option<[f64; 3]>,
    pub ear_right_m: Option<[f64; 3]>,
}

impl Default for HeadSection {
    fn default() -> Self {
        let p = HeadParams::default();
        Self {
            radius_m: p.radius,
            subdivision_level: p.subdivision_level,
            center_m: [0.0, -0.3, 0.0],
            stl: None,
            mouth_m: None,
            ear_left_m: None,
            ear_right_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub cell_size_m: f64,
    pub panel_thickness_m: f64,
    /// Centre of the front face.
    pub origin_m: [f64; 3],
    /// Rotation about the vertical axis.
    pub yaw_rad: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            cell_size_m: crate::geometry::DEFAULT_CELL_SIZE,
            panel_thickness_m: crate::geometry::DEFAULT_PANEL_THICKNESS,
            origin_m: [0.0, 0.2, 0.0],
            yaw_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub sim: SimSection,
    pub source: SourceSignal,
    pub head: HeadSection,
    pub target: TargetSection,
    pub stimulus: StimulusConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    /// 64³ cells at 5 mm with a small head and a 3 cm mesh: every cell of a
    /// 3×3 target simulates in well under a second.
    pub fn desk() -> Self {
        Self {
            sim: SimSection {
                spacing_m: 0.005,
                domain_extent_m: [0.32; 3],
                pml_layers: 8,
                duration_s: Some(0.003),
                ..SimSection::default()
            },
            head: HeadSection { radius_m: 0.06, center_m: [0.0, -0.03, 0.0], ..HeadSection::default() },
            target: TargetSection { cell_size_m: 0.03, panel_thickness_m: 0.01, origin_m: [0.0, 0.07, 0.0], yaw_rad: 0.0 },
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn sim_config(&self) -> SimConfig {
        self.sim.to_config()
    }

    pub fn bank_options(&self) -> BankOptions {
        BankOptions { source: self.source }
    }

    pub fn head_model(&self) -> Result<HeadModel, CliError> {
        let h = &self.head;
        let Some(stl) = &h.stl else {
            return Ok(build_head_model(&HeadParams {
                radius: h.radius_m,
                subdivision_level: h.subdivision_level,
                center: Vec3::from_array(h.center_m),
            })?);
        };
        let need = |v: Option<[f64; 3]>, name: &str| {
            v.map(Vec3::from_array).ok_or_else(|| CliError::Config(format!("head.{name} is required with head.stl")))
        };
        let (mouth, left, right) = (need(h.mouth_m, "mouth_m")?, need(h.ear_left_m, "ear_left_m")?, need(h.ear_right_m, "ear_right_m")?);
        let path = self.base_dir.join(stl);
        let bytes = std::fs::read(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "head".into());
        Ok(HeadModel::from_mesh(id, parse_stl(&bytes)?, mouth, left, right)?)
    }

    /// `spec` placed as this scenario describes.
    pub fn place(&self, mut spec: TargetSpec) -> TargetSpec {
        let t = &self.target;
        spec.cell_size = t.cell_size_m;
        spec.panel_thickness = t.panel_thickness_m;
        spec.placement = Pose::facing_y_yawed(Vec3::from_array(t.origin_m), t.yaw_rad);
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_paper_scale() {
        let s = Scenario::parse("").unwrap();
        let c = s.sim_config();
        assert_eq!(c.spacing, 0.0015);
        assert_eq!(c.cfl, 0.5);
        assert_eq!(c.sound_speed, 344.0);
        assert_eq!(c.domain_extent, [1.5; 3]);
        assert_eq!(s.stimulus, StimulusConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::desk();
        let back = Scenario::parse(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn shipped_desk_file_matches_preset() {
        let s = Scenario::parse(include_str!("../../examples/desk.toml")).unwrap();
        assert_eq!(s, Scenario::desk());
    }

    #[test]
    fn unit_keys_parse() {
        let s = Scenario::parse(
            "[sim]\nspacing_m = 0.004\nduration_s = 0.002\n[source]\nkind = \"gaussian\"\nsigma_samples = 3.0\n\
             [target]\nyaw_rad = 0.1\n[stimulus.chirp]\nf_start_hz = 6000.0\n[stimulus.buzz]\nrepeat_count = 4\n",
        )
        .unwrap();
        assert_eq!(s.sim_config().spacing, 0.004);
        assert_eq!(s.sim_config().duration, 0.002);
        assert_eq!(s.source, SourceSignal::Gaussian { sigma_samples: 3.0 });
        assert_eq!(s.stimulus.chirp.f_start, 6000.0);
        assert_eq!(s.stimulus.buzz.repeat_count, 4);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(Scenario::parse("[sim]\nspacing = 0.004\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn stl_head_needs_markers() {
        let s = Scenario::parse("[head]\nstl = \"h.stl\"\n").unwrap();
        assert!(matches!(s.head_model(), Err(CliError::Config(m)) if m.contains("mouth_m")));
    }

    #[test]
    fn desk_target_clears_head() {
        let s = Scenario::desk();
        let head = s.head_model().unwrap();
        let spec = s.place(crate::geometry::default_library().remove(0));
        assert!(spec.cell_center(0).y - head.mouth.y > 0.03);
    }
}
