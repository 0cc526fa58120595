//! Command-line entry points: `voxelize`, `bank`, `synth`, `serve`,
//! `score`, `report` and `replay` over a [`WorkspaceLayout`].
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Diagnostics go to
//! standard error; results are JSON lines on standard output or files.

mod scenario;
mod workspace;

pub use scenario::{HeadSection, Scenario, SimSection, TargetSection};
pub use workspace::{read_mask, WorkspaceLayout, SUBDIRS};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analytics::{read_trials_csv, report_summary, shape_difference_with, write_trials_csv, AnalyticsError, HuMetric, MomentRegion, ShapeConfig, DEFAULT_MATCH_THRESHOLD};
use crate::fdtd::FdtdError;
use crate::geometry::{parse_stl, target_panel, voxelize, GeometryError, ShapeMask, VoxelGrid};
use crate::irbank::{cell_scene, generate_ir_bank_with, load_bank, save_bank, sim_fingerprint, IrBankError};
use crate::session::{parse_log, replay, server, trial_records, ProtocolConfig, Session, SessionError};
use crate::synth::{write_assets, EchoRenderer, Normalization, SynthError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path} {reason}; pass --force to overwrite")]
    BankExists { path: PathBuf, reason: String },
    #[error("replay of {0} diverged from the recorded log")]
    ReplayMismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fdtd(#[from] FdtdError),
    #[error(transparent)]
    IrBank(#[from] IrBankError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "echotrain", version, about = "Echo simulation, stimulus rendering and gaze-driven training sessions")]
pub struct Cli {
    /// Workspace root holding targets/, banks/, assets/, logs/ and reports/
    #[arg(long, env = "ECHOTRAIN_ROOT", default_value = ".", global = true)]
    pub root: PathBuf,
    /// Validate inputs and print the plan without writing anything
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Voxelize a target scene (head and panel for one cell) or an STL mesh
    Voxelize(VoxelizeArgs),
    /// Simulate the echo impulse-response bank of one or more targets
    Bank(BankArgs),
    /// Render per-cell buzz echoes from built banks into assets/
    Synth(SynthArgs),
    /// Run the HTTP/WebSocket session service
    Serve(ServeArgs),
    /// Shape difference between a drawn mask and a target mask
    Score(ScoreArgs),
    /// Collect scored trials from session logs into a CSV report
    Report(ReportArgs),
    /// Re-run a logged session through the engine and compare
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Published settings: 1.5 m domain at 1.5 mm
    Paper,
    /// 64³ cells at 5 mm with a small head
    Desk,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file; overrides the preset
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Settings used when no scenario file is given
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    /// Grid spacing in meters
    #[arg(long, value_name = "M")]
    pub spacing: Option<f64>,
    /// Courant number c·Δt/h
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Speed of sound in m/s
    #[arg(long, value_name = "M_PER_S")]
    pub sound_speed: Option<f64>,
    /// Edge of the cubic domain in meters
    #[arg(long, value_name = "M")]
    pub extent: Option<f64>,
    /// Absorbing layer thickness in cells
    #[arg(long)]
    pub pml_layers: Option<usize>,
    /// Simulated time per run in seconds
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Spherical head radius in meters
    #[arg(long, value_name = "M")]
    pub head_radius: Option<f64>,
    /// Target cell edge in meters
    #[arg(long, value_name = "M")]
    pub cell_size: Option<f64>,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let mut s = match (&self.scenario, self.preset) {
            (Some(p), _) => Scenario::load(p)?,
            (None, Preset::Paper) => Scenario::default(),
            (None, Preset::Desk) => Scenario::desk(),
        };
        let sim = &mut s.sim;
        set(&mut sim.spacing_m, self.spacing);
        set(&mut sim.cfl, self.cfl);
        set(&mut sim.sound_speed_m_per_s, self.sound_speed);
        if let Some(e) = self.extent {
            sim.domain_extent_m = [e; 3];
        }
        set(&mut sim.pml_layers, self.pml_layers);
        if self.duration.is_some() {
            sim.duration_s = self.duration;
        }
        set(&mut s.head.radius_m, self.head_radius);
        set(&mut s.target.cell_size_m, self.cell_size);
        Ok(s)
    }
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Bank,
    Cell,
}

#[derive(Debug, Args)]
pub struct StimulusArgs {
    /// Chirp start frequency in Hz
    #[arg(long, value_name = "HZ")]
    pub f_start: Option<f64>,
    /// Chirp end frequency in Hz
    #[arg(long, value_name = "HZ")]
    pub f_end: Option<f64>,
    /// Chirp length in seconds
    #[arg(long, value_name = "S")]
    pub chirp_duration: Option<f64>,
    /// Output sample rate in Hz
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<f64>,
    /// Peak level as a fraction of full scale
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Chirps per buzz
    #[arg(long)]
    pub repeat_count: Option<usize>,
    /// Chirp onset spacing in seconds
    #[arg(long, value_name = "S")]
    pub onset_interval: Option<f64>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
}

impl StimulusArgs {
    fn apply(&self, s: &mut Scenario) {
        let st = &mut s.stimulus;
        set(&mut st.chirp.f_start, self.f_start);
        set(&mut st.chirp.f_end, self.f_end);
        set(&mut st.chirp.duration, self.chirp_duration);
        set(&mut st.chirp.sample_rate, self.sample_rate);
        set(&mut st.chirp.amplitude, self.amplitude);
        set(&mut st.buzz.repeat_count, self.repeat_count);
        set(&mut st.buzz.onset_interval, self.onset_interval);
        if let Some(n) = self.normalization {
            st.normalization = match n {
                NormalizationArg::Bank => Normalization::Bank,
                NormalizationArg::Cell => Normalization::Cell,
            };
        }
    }
}

#[derive(Debug, Args)]
pub struct TargetSelection {
    /// Target id (repeatable); masks come from targets/<id>.mask or the stock library
    #[arg(long = "target", value_name = "ID", required_unless_present = "all")]
    pub targets: Vec<String>,
    /// Every known target
    #[arg(long, conflicts_with = "targets")]
    pub all: bool,
}

impl TargetSelection {
    fn ids(&self, ws: &WorkspaceLayout) -> Result<Vec<String>, CliError> {
        if self.all {
            Ok(ws.targets()?.into_iter().map(|t| t.id).collect())
        } else {
            Ok(self.targets.clone())
        }
    }
}

#[derive(Debug, Args)]
pub struct VoxelizeArgs {
    /// Target id whose cell scene (head plus panel) is voxelized
    #[arg(long, required_unless_present = "stl", conflicts_with = "stl")]
    pub target: Option<String>,
    /// Cell the head is aligned with; defaults to the first occupied cell
    #[arg(long)]
    pub cell: Option<u32>,
    /// Voxelize this STL mesh instead of a target scene
    #[arg(long)]
    pub stl: Option<PathBuf>,
    /// Occupancy output (one byte per voxel, z fastest) with a .json sidecar;
    /// defaults to reports/<name>.vox
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct BankArgs {
    #[command(flatten)]
    pub select: TargetSelection,
    /// Rebuild even when an up-to-date bank exists, and replace banks built
    /// from other inputs
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub select: TargetSelection,
    /// Scenario TOML file supplying the [stimulus] section
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub stimulus: StimulusArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address; port 0 picks a free port
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Default protocol config (TOML, or JSON by .json extension)
    #[arg(long)]
    pub protocol: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    I1,
    I2,
    I3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Filled,
    Outline,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Drawn mask file
    #[arg(long)]
    pub drawn: PathBuf,
    /// Target mask file, or a target id
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum, default_value_t = MetricArg::I1)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = RegionArg::Filled)]
    pub region: RegionArg,
    /// Same-shape threshold (strictly below matches)
    #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of session logs (*.jsonl); defaults to logs/
    #[arg(long)]
    pub logs: Option<PathBuf>,
    /// CSV output; defaults to reports/trials.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Session log (JSON lines)
    #[arg(long)]
    pub log: PathBuf,
    /// Write the regenerated log here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs it, printing results to
/// standard output. Returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_to(argv, &mut std::io::stdout().lock())
}

/// [`run_cli`] with results written to `out`.
pub fn run_cli_to<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // help and version land here with exit code 0
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{value}")?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let ws = WorkspaceLayout::new(&cli.root);
    let dry = cli.dry_run;
    match &cli.command {
        Command::Voxelize(a) => cmd_voxelize(&ws, a, dry, out),
        Command::Bank(a) => cmd_bank(&ws, a, dry, out),
        Command::Synth(a) => cmd_synth(&ws, a, dry, out),
        Command::Serve(a) => cmd_serve(&ws, a, dry, out),
        Command::Score(a) => cmd_score(&ws, a, dry, out),
        Command::Report(a) => cmd_report(&ws, a, dry, out),
        Command::Replay(a) => cmd_replay(&ws, a, dry, out),
    }
}

fn write_voxels(grid: &VoxelGrid, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, grid.to_bytes())?;
    let meta = json!({
        "dims": grid.spec.dims,
        "spacing": grid.spec.spacing,
        "origin": grid.spec.origin.to_array(),
        "order": "z_fastest",
    });
    std::fs::write(path.with_extension("json"), serde_json::to_vec_pretty(&meta).expect("json"))?;
    Ok(())
}

fn cmd_voxelize(ws: &WorkspaceLayout, a: &VoxelizeArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = a.scenario.resolve()?;
    let config = scenario.sim_config();
    config.validate()?;
    let spec = config.grid_spec()?;
    let (name, grid, extra) = if let Some(stl) = &a.stl {
        let bytes = std::fs::read(stl).map_err(|e| CliError::Config(format!("{}: {e}", stl.display())))?;
        let mesh = parse_stl(&bytes)?;
        let name = stl.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mesh".into());
        let grid = voxelize(&mesh, &spec)?;
        (name, grid, json!({ "triangles": mesh.triangles.len() }))
    } else {
        let id = a.target.as_deref().expect("clap requires target or stl");
        let target = scenario.place(ws.target(id)?);
        target.validate()?;
        let cell = match a.cell {
            Some(c) => c,
            None => target.mask.occupied().next().expect("validated mask is non-empty") as u32,
        };
        if cell as usize >= target.mask.len() {
            return Err(CliError::Config(format!("cell {cell} is outside the {}-cell grid", target.mask.len())));
        }
        let head = scenario.head_model()?;
        let cs = cell_scene(&target, &head, &config, cell)?;
        let panel = voxelize(&target_panel(&target)?, &spec)?;
        let extra = json!({
            "cell": cell,
            "head_voxels": cs.free_scene.count(),
            "target_voxels": panel.count(),
            "source": cs.source.to_array(),
            "ear_left": cs.ear_left.to_array(),
            "ear_right": cs.ear_right.to_array(),
        });
        (format!("{id}_cell{cell}"), cs.scene, extra)
    };
    let path = a.out.clone().unwrap_or_else(|| ws.reports_dir().join(format!("{name}.vox")));
    if !dry {
        ws.ensure()?;
        write_voxels(&grid, &path)?;
    }
    let mut v = json!({
        "command": "voxelize",
        "name": name,
        "dims": grid.dims(),
        "spacing": grid.spec.spacing,
        "solid_voxels": grid.count(),
        "path": path,
        "written": !dry,
    });
    v.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    emit(out, v)
}

fn cmd_bank(ws: &WorkspaceLayout, a: &BankArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = a.scenario.resolve()?;
    let config = scenario.sim_config();
    config.validate()?;
    let head = scenario.head_model()?;
    let options = scenario.bank_options();
    if !dry {
        ws.ensure()?;
    }
    for id in a.select.ids(ws)? {
        let target = scenario.place(ws.target(&id)?);
        target.validate()?;
        let fingerprint = sim_fingerprint(&target, &head, &config, &options);
        let path = ws.bank_path(&id);
        let cells: Vec<u32> = target.mask.occupied().map(|c| c as u32).collect();
        let existing = path.exists().then(|| load_bank(&path));
        let up_to_date = matches!(&existing, Some(Ok(b)) if b.sim_fingerprint == fingerprint && b.check_complete(&target.mask).is_ok());
        if !a.force {
            match &existing {
                Some(Err(e)) => return Err(CliError::BankExists { path, reason: format!("exists but cannot be read ({e})") }),
                Some(Ok(_)) if !up_to_date => {
                    return Err(CliError::BankExists { path, reason: "exists and was built from different inputs".into() })
                }
                _ => {}
            }
        }
        let status = if up_to_date && !a.force {
            "unchanged"
        } else if dry {
            for &c in &cells {
                cell_scene(&target, &head, &config, c)?;
            }
            "planned"
        } else {
            let start = std::time::Instant::now();
            let bank = generate_ir_bank_with(&target, &head, &config, &options)?;
            save_bank(&bank, &path)?;
            log::info!("{id}: {} cells in {:.1} s", cells.len(), start.elapsed().as_secs_f64());
            "written"
        };
        let fp_hex: String = fingerprint.iter().map(|b| format!("{b:02x}")).collect();
        emit(
            out,
            json!({
                "command": "bank",
                "target": id,
                "path": path,
                "cells": cells.len(),
                "grid": config.grid_spec()?.dims,
                "steps": config.step_count(),
                "sample_rate": config.sample_rate(),
                "fingerprint": fp_hex,
                "status": status,
            }),
        )?;
    }
    Ok(())
}

fn cmd_synth(ws: &WorkspaceLayout, a: &SynthArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let mut scenario = match &a.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    a.stimulus.apply(&mut scenario);
    scenario.stimulus.validate()?;
    for id in a.select.ids(ws)? {
        let target = ws.target(&id)?;
        let path = ws.bank_path(&id);
        if !path.exists() {
            return Err(CliError::Config(format!("no bank for '{id}' at {}; run `bank` first", path.display())));
        }
        let bank = load_bank(&path)?;
        bank.check_complete(&target.mask)?;
        let renderer = EchoRenderer::new(&bank, &scenario.stimulus)?;
        let files = if dry {
            0
        } else {
            ws.ensure()?;
            write_assets(&renderer, ws.assets_dir(), &id, target.mask.len())?.len()
        };
        emit(
            out,
            json!({
                "command": "synth",
                "target": id,
                "dir": ws.assets_dir().join(&id),
                "cells": target.mask.len(),
                "files_written": files,
                "sample_rate": scenario.stimulus.chirp.sample_rate,
            }),
        )?;
    }
    Ok(())
}

fn load_protocol(path: &Path) -> Result<ProtocolConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn cmd_serve(ws: &WorkspaceLayout, a: &ServeArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &a.protocol {
        Some(p) => load_protocol(p)?,
        None => ProtocolConfig::default(),
    };
    let catalog = ws.serving_catalog()?;
    // fails early on unknown targets or missing banks and assets
    let probe = Session::new("probe", config.clone(), &catalog)?;
    if dry {
        return emit(out, json!({ "command": "serve", "bind": a.bind, "trials": probe.trials().len(), "ready": true }));
    }
    ws.ensure()?;
    let state = server::AppState::with_config(catalog, Some(ws.logs_dir()), config);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.bind).await?;
        let addr = listener.local_addr()?;
        emit(out, json!({ "command": "serve", "listening": addr.to_string() }))?;
        out.flush()?;
        log::info!("serving on http://{addr}");
        tokio::select! {
            r = server::serve(listener, state) => r?,
            _ = tokio::signal::ctrl_c() => log::info!("shutting down"),
        }
        Ok(())
    })
}

fn mask_or_target(ws: &WorkspaceLayout, s: &str) -> Result<ShapeMask, CliError> {
    let p = Path::new(s);
    if p.is_file() {
        read_mask(p)
    } else {
        ws.target(s).map(|t| t.mask).map_err(|_| CliError::Config(format!("{s} is neither a mask file nor a known target")))
    }
}

fn cmd_score(ws: &WorkspaceLayout, a: &ScoreArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let drawn = read_mask(&a.drawn)?;
    let target = mask_or_target(ws, &a.target)?;
    if !(a.threshold > 0.0 && a.threshold.is_finite()) {
        return Err(CliError::Usage(format!("threshold must be positive, got {}", a.threshold)));
    }
    let config = ShapeConfig {
        threshold: a.threshold,
        metric: match a.metric {
            MetricArg::I1 => HuMetric::I1,
            MetricArg::I2 => HuMetric::I2,
            MetricArg::I3 => HuMetric::I3,
        },
        region: match a.region {
            RegionArg::Filled => MomentRegion::Filled,
            RegionArg::Outline => MomentRegion::Outline,
        },
    };
    if dry {
        return emit(out, json!({ "command": "score", "drawn_cells": drawn.count(), "target_cells": target.count(), "valid": drawn.any() && target.any() }));
    }
    let d = shape_difference_with(&drawn, &target, &config)?;
    emit(out, json!({ "command": "score", "difference": d.value, "threshold": d.threshold, "matched": d.matched() }))
}

fn cmd_report(ws: &WorkspaceLayout, a: &ReportArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = a.logs.clone().unwrap_or_else(|| ws.logs_dir());
    let mut logs: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    logs.sort();
    let mut records = Vec::new();
    for p in &logs {
        let text = std::fs::read_to_string(p)?;
        let recs = parse_log(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        records.extend(trial_records(&recs));
    }
    let path = a.out.clone().unwrap_or_else(|| ws.reports_dir().join("trials.csv"));
    if records.is_empty() {
        return Err(CliError::Config(format!("no scored trials in {} ({} logs)", dir.display(), logs.len())));
    }
    let summary = report_summary(&records)?;
    if !dry {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("csv.tmp");
        write_trials_csv(&records, std::fs::File::create(&tmp)?)?;
        std::fs::rename(&tmp, &path)?;
        // read back so a malformed write fails here rather than in analysis
        read_trials_csv(std::fs::File::open(&path)?)?;
    }
    emit(
        out,
        json!({
            "command": "report",
            "logs": logs.len(),
            "trials": records.len(),
            "path": path,
            "written": !dry,
            "summary": summary,
        }),
    )
}

fn cmd_replay(ws: &WorkspaceLayout, a: &ReplayArgs, dry: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.log).map_err(|e| CliError::Config(format!("{}: {e}", a.log.display())))?;
    let records = parse_log(&text)?;
    let session = replay(&records, &ws.catalog()?)?;
    let again = session.export_log();
    let identical = again == text;
    if let (Some(p), false) = (&a.out, dry) {
        std::fs::write(p, &again)?;
    }
    emit(
        out,
        json!({
            "command": "replay",
            "session_id": session.id(),
            "records": session.records().len(),
            "triggers": session.trigger_log().len(),
            "results": session.results().len(),
            "identical": identical,
        }),
    )?;
    if identical {
        Ok(())
    } else {
        Err(CliError::ReplayMismatch(a.log.display().to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run_cli_to(std::iter::once("echotrain").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["score", "--drawn"]).0, 2);
        assert_eq!(run(&["bank"]).0, 2);
        assert_eq!(run(&["bank", "--target", "T1", "--bogus"]).0, 2);
    }

    #[test]
    fn help_exits_0() {
        for sub in ["voxelize", "bank", "synth", "serve", "score", "report", "replay"] {
            assert_eq!(run(&[sub, "--help"]).0, 0, "{sub}");
        }
    }

    #[test]
    fn score_identical_is_zero() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("a.mask");
        std::fs::write(&m, "##.\n.##\n").unwrap();
        let ms = m.to_str().unwrap();
        let (code, text) = run(&["--root", dir.path().to_str().unwrap(), "score", "--drawn", ms, "--target", ms]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["difference"], 0.0);
        assert_eq!(v["matched"], true);
    }

    #[test]
    fn score_against_library_id() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("d.mask");
        std::fs::write(&m, ShapeMask::full(5, 5).to_text()).unwrap();
        let (code, text) = run(&["--root", dir.path().to_str().unwrap(), "score", "--drawn", m.to_str().unwrap(), "--target", "U2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert!(v["difference"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn domain_errors_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_str().unwrap();
        assert_eq!(run(&["--root", root, "score", "--drawn", "/nonexistent.mask", "--target", "T1"]).0, 1);
        assert_eq!(run(&["--root", root, "synth", "--target", "T1"]).0, 1);
        assert_eq!(run(&["--root", root, "bank", "--target", "nope", "--preset", "desk"]).0, 1);
        assert_eq!(run(&["--root", root, "bank", "--target", "T1", "--preset", "desk", "--cfl", "0.9"]).0, 1);
    }

    #[test]
    fn dry_run_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("ws");
        let r = root.to_str().unwrap();
        let (code, text) = run(&["--root", r, "--dry-run", "bank", "--target", "T1", "--preset", "desk", "--cell-size", "0.02"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("\"planned\""));
        let (code, _) = run(&["--root", r, "voxelize", "--target", "T1", "--preset", "desk", "--cell-size", "0.02", "--dry-run"]);
        assert_eq!(code, 0);
        assert!(!root.exists());
    }
}
