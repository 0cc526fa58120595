use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::log::LogRecord;
use super::{map_pog_to_cell, GazeSample, GridLayout, ScreenRect, SessionError};
use crate::analytics::{analyze_gaze, shape_difference_with, Condition, ShapeConfig, TrialRecord};
use crate::geometry::{default_library, ShapeMask, TargetRole, TargetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetriggerPolicy {
    /// Trigger when the gazed cell differs from the previous sample's cell.
    OnCellChange,
    /// As above, and again after every `dwell_ms` spent in the same cell.
    OnDwell { dwell_ms: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub training_trials: Vec<String>,
    pub test_trials: Vec<String>,
    pub feedback_in_training: bool,
    pub pog_rate_hint_hz: f64,
    pub retrigger_policy: RetriggerPolicy,
    pub screen: ScreenRect,
    pub shape: ShapeConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            training_trials: ids(&["T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"]),
            test_trials: ids(&["U1", "T3", "U2", "T6", "U3", "T1", "U4"]),
            feedback_in_training: true,
            pog_rate_hint_hz: 150.0,
            retrigger_policy: RetriggerPolicy::OnCellChange,
            screen: ScreenRect::default(),
            shape: ShapeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Sensing,
    Drawing,
    Scored,
    Finished,
}

/// Targets available to sessions, plus where their rendered assets and
/// banks live.
#[derive(Debug, Clone, Default)]
pub struct TargetCatalog {
    targets: BTreeMap<String, TargetSpec>,
    assets_dir: Option<PathBuf>,
    banks_dir: Option<PathBuf>,
}

impl TargetCatalog {
    pub fn new(targets: impl IntoIterator<Item = TargetSpec>) -> Self {
        Self { targets: targets.into_iter().map(|t| (t.id.clone(), t)).collect(), ..Default::default() }
    }

    pub fn default_library() -> Self {
        Self::new(default_library())
    }

    /// Requires `<dir>/<target>/<cell>.wav` for every grid cell.
    pub fn with_assets(mut self, dir: impl Into<PathBuf>) -> Self {
        self.assets_dir = Some(dir.into());
        self
    }

    /// Requires `<dir>/<target>.eirb`.
    pub fn with_banks(mut self, dir: impl Into<PathBuf>) -> Self {
        self.banks_dir = Some(dir.into());
        self
    }

    pub fn get(&self, id: &str) -> Option<&TargetSpec> {
        self.targets.get(id)
    }

    pub fn targets(&self) -> impl Iterator<Item = &TargetSpec> {
        self.targets.values()
    }

    pub fn assets_dir(&self) -> Option<&Path> {
        self.assets_dir.as_deref()
    }

    pub fn asset_path(&self, target: &str, cell: usize) -> Option<PathBuf> {
        self.assets_dir.as_ref().map(|d| d.join(target).join(format!("{cell}.wav")))
    }

    /// Missing bank or asset files for `id`, if any.
    pub fn missing_artifacts(&self, id: &str) -> Vec<PathBuf> {
        let Some(t) = self.targets.get(id) else { return vec![] };
        let mut missing = vec![];
        if let Some(b) = &self.banks_dir {
            let p = b.join(format!("{id}.eirb"));
            if !p.is_file() {
                missing.push(p);
            }
        }
        if self.assets_dir.is_some() {
            missing.extend((0..t.mask.len()).filter_map(|c| self.asset_path(id, c)).filter(|p| !p.is_file()));
        }
        missing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub index: usize,
    pub target_id: String,
    pub condition: Condition,
    pub feedback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub t: f64,
    pub cell: usize,
    pub asset: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub target_id: String,
    pub condition: Condition,
    pub difference: f64,
    pub threshold: f64,
    pub matched: bool,
    pub sensing_time: f64,
    pub edge_dwell_fraction: f64,
    pub outside_fraction: f64,
    pub dwell_seconds: Vec<f64>,
    pub outside_grid_seconds: f64,
}

impl TrialResult {
    pub fn to_record(&self, session: &str) -> TrialRecord {
        TrialRecord {
            session: session.to_string(),
            trial: self.trial,
            condition: self.condition,
            target: self.target_id.clone(),
            difference: self.difference,
            matched: self.matched,
            sensing_time: self.sensing_time,
            edge_dwell_fraction: self.edge_dwell_fraction,
        }
    }
}

/// What `submit_drawing` returns: the score, the true mask on feedback
/// trials, and where the session moved next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub result: TrialResult,
    pub feedback: Option<String>,
    pub phase: Phase,
    pub next_trial: Option<usize>,
}

/// One trainee's run through the trial queue.
#[derive(Debug)]
pub struct Session {
    id: String,
    config: ProtocolConfig,
    masks: BTreeMap<String, ShapeMask>,
    trials: Vec<TrialPlan>,
    phase: Phase,
    trial_index: usize,
    sensing_start: Option<f64>,
    sensing_end: Option<f64>,
    gaze_log: Vec<GazeSample>,
    trial_gaze_start: usize,
    trigger_log: Vec<TriggerEvent>,
    last_cell: Option<usize>,
    last_trigger: Option<(f64, usize)>,
    drawing: Option<ShapeMask>,
    results: Vec<TrialResult>,
    records: Vec<LogRecord>,
    started: Instant,
    last_t: f64,
}

fn condition_for(training: bool, role: TargetRole) -> Condition {
    match (training, role) {
        (true, _) => Condition::Training,
        (false, TargetRole::Trained) => Condition::TestTrained,
        (false, TargetRole::Untrained) => Condition::TestUntrained,
    }
}

impl Session {
    /// Validates the configuration against `catalog` and queues training
    /// trials then test trials.
    pub fn new(id: impl Into<String>, config: ProtocolConfig, catalog: &TargetCatalog) -> Result<Self, SessionError> {
        if config.training_trials.is_empty() && config.test_trials.is_empty() {
            return Err(SessionError::Config("no trials configured".into()));
        }
        if let RetriggerPolicy::OnDwell { dwell_ms } = config.retrigger_policy {
            if !(dwell_ms > 0.0) {
                return Err(SessionError::Config(format!("dwell_ms must be positive, got {dwell_ms}")));
            }
        }
        if !(config.screen.width > 0.0 && config.screen.height > 0.0) {
            return Err(SessionError::Config("screen rectangle must have positive size".into()));
        }
        let all: Vec<&String> = config.training_trials.iter().chain(&config.test_trials).collect();
        let mut unknown: Vec<String> = all.iter().filter(|id| catalog.get(id).is_none()).map(|s| s.to_string()).collect();
        unknown.dedup();
        if !unknown.is_empty() {
            return Err(SessionError::UnknownTargets(unknown));
        }
        let mut missing: Vec<String> =
            all.iter().filter(|id| !catalog.missing_artifacts(id).is_empty()).map(|s| s.to_string()).collect();
        missing.sort();
        missing.dedup();
        if !missing.is_empty() {
            return Err(SessionError::MissingArtifacts(missing));
        }

        let n_train = config.training_trials.len();
        let trials = all
            .iter()
            .enumerate()
            .map(|(index, id)| {
                let training = index < n_train;
                TrialPlan {
                    index,
                    target_id: id.to_string(),
                    condition: condition_for(training, catalog.get(id).unwrap().role),
                    feedback: training && config.feedback_in_training,
                }
            })
            .collect();
        let masks = all.iter().map(|id| (id.to_string(), catalog.get(id).unwrap().mask.clone())).collect();
        let id = id.into();
        let records = vec![LogRecord::Created { t: 0.0, session_id: id.clone(), config: config.clone() }];
        Ok(Self {
            id,
            config,
            masks,
            trials,
            phase: Phase::Idle,
            trial_index: 0,
            sensing_start: None,
            sensing_end: None,
            gaze_log: vec![],
            trial_gaze_start: 0,
            trigger_log: vec![],
            last_cell: None,
            last_trigger: None,
            drawing: None,
            results: vec![],
            records,
            started: Instant::now(),
            last_t: 0.0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn trial_index(&self) -> usize {
        self.trial_index
    }

    pub fn trials(&self) -> &[TrialPlan] {
        &self.trials
    }

    pub fn current_trial(&self) -> Option<&TrialPlan> {
        (self.phase != Phase::Finished).then(|| &self.trials[self.trial_index])
    }

    pub fn layout(&self) -> Option<GridLayout> {
        let trial = self.current_trial()?;
        let mask = &self.masks[&trial.target_id];
        Some(GridLayout::new(self.config.screen, mask.cols(), mask.rows()))
    }

    pub fn gaze_log(&self) -> &[GazeSample] {
        &self.gaze_log
    }

    pub fn trigger_log(&self) -> &[TriggerEvent] {
        &self.trigger_log
    }

    pub fn sensing_window(&self) -> (Option<f64>, Option<f64>) {
        (self.sensing_start, self.sensing_end)
    }

    pub fn drawing(&self) -> Option<&ShapeMask> {
        self.drawing.as_ref()
    }

    pub fn results(&self) -> &[TrialResult] {
        &self.results
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    /// JSON lines, one record per line.
    pub fn export_log(&self) -> String {
        super::log::to_json_lines(&self.records)
    }

    /// Seconds since creation, from the caller or the wall clock; never
    /// earlier than anything already logged.
    fn timestamp(&self, t: Option<f64>) -> Result<f64, SessionError> {
        match t {
            Some(t) if !t.is_finite() => Err(SessionError::Config(format!("timestamp {t} is not finite"))),
            Some(t) if t < self.last_t => Err(SessionError::NonMonotonic { t, last: self.last_t }),
            Some(t) => Ok(t),
            None => Ok(self.started.elapsed().as_secs_f64().max(self.last_t)),
        }
    }

    fn expect_phase(&self, op: &'static str, phase: Phase) -> Result<(), SessionError> {
        if self.phase != phase {
            return Err(SessionError::WrongPhase { op, phase: self.phase });
        }
        Ok(())
    }

    fn set_phase(&mut self, phase: Phase, t: f64) {
        self.phase = phase;
        self.last_t = t;
        self.records.push(LogRecord::Phase { t, trial: self.trial_index, phase });
    }

    /// Idle → Sensing for the current trial.
    pub fn begin(&mut self, t: Option<f64>) -> Result<Phase, SessionError> {
        self.expect_phase("begin", Phase::Idle)?;
        let t = self.timestamp(t)?;
        self.sensing_start = Some(t);
        self.sensing_end = None;
        self.trial_gaze_start = self.gaze_log.len();
        self.last_cell = None;
        self.last_trigger = None;
        self.drawing = None;
        self.set_phase(Phase::Sensing, t);
        Ok(self.phase)
    }

    /// Logs the sample and returns a trigger when the retrigger policy fires.
    pub fn ingest_gaze(&mut self, sample: GazeSample) -> Result<Option<TriggerEvent>, SessionError> {
        self.expect_phase("ingest_gaze", Phase::Sensing)?;
        let t = self.timestamp(Some(sample.t))?;
        self.last_t = t;
        self.gaze_log.push(sample);
        self.records.push(LogRecord::Gaze { t, x: sample.x, y: sample.y, valid: sample.valid });

        let layout = self.layout().expect("sensing implies a current trial");
        let cell = map_pog_to_cell(&sample, &layout);
        let previous = std::mem::replace(&mut self.last_cell, cell);
        let Some(cell) = cell else { return Ok(None) };
        let fire = match (self.config.retrigger_policy, self.last_trigger) {
            _ if previous != Some(cell) => true,
            (RetriggerPolicy::OnDwell { dwell_ms }, Some((t0, c0))) => c0 == cell && t - t0 >= dwell_ms / 1000.0,
            _ => false,
        };
        if !fire {
            return Ok(None);
        }
        let target = &self.trials[self.trial_index].target_id;
        let event = TriggerEvent { t, cell, asset: format!("/assets/{target}/{cell}.wav") };
        self.last_trigger = Some((t, cell));
        self.trigger_log.push(event.clone());
        self.records.push(LogRecord::Trigger {
            t,
            trial: self.trial_index,
            cell,
            asset: event.asset.clone(),
        });
        Ok(Some(event))
    }

    /// Sensing → Drawing; returns the sensing time.
    pub fn end_sensing(&mut self, t: Option<f64>) -> Result<f64, SessionError> {
        self.expect_phase("end_sensing", Phase::Sensing)?;
        let t = self.timestamp(t)?;
        self.sensing_end = Some(t);
        self.set_phase(Phase::Drawing, t);
        Ok(t - self.sensing_start.expect("set by begin"))
    }

    /// Scores the drawing, then advances to the next trial or finishes.
    pub fn submit_drawing(&mut self, drawing: ShapeMask, t: Option<f64>) -> Result<SubmitOutcome, SessionError> {
        self.expect_phase("submit_drawing", Phase::Drawing)?;
        let trial = self.trials[self.trial_index].clone();
        let target = &self.masks[&trial.target_id];
        if drawing.dims() != target.dims() {
            return Err(SessionError::DimensionMismatch { expected: target.dims(), found: drawing.dims() });
        }
        if !drawing.any() {
            return Err(SessionError::EmptyDrawing);
        }
        let t = self.timestamp(t)?;
        let score = shape_difference_with(&drawing, target, &self.config.shape)?;
        let sensing_time = self.sensing_end.unwrap() - self.sensing_start.unwrap();
        let layout = self.layout().unwrap();
        let gaze = analyze_gaze(&self.gaze_log[self.trial_gaze_start..], target, &layout, sensing_time)?;
        let result = TrialResult {
            trial: trial.index,
            target_id: trial.target_id.clone(),
            condition: trial.condition,
            difference: score.value,
            threshold: score.threshold,
            matched: score.matched(),
            sensing_time,
            edge_dwell_fraction: gaze.edge_dwell_fraction,
            outside_fraction: gaze.outside_fraction,
            dwell_seconds: gaze.dwell_seconds,
            outside_grid_seconds: gaze.outside_grid_seconds,
        };
        let feedback = trial.feedback.then(|| target.to_text());

        self.set_phase(Phase::Scored, t);
        self.records.push(LogRecord::Result { t, drawing: drawing.to_text(), result: result.clone() });
        self.results.push(result.clone());
        self.drawing = Some(drawing);

        if self.trial_index + 1 < self.trials.len() {
            self.trial_index += 1;
            self.set_phase(Phase::Idle, t);
        } else {
            self.set_phase(Phase::Finished, t);
        }
        Ok(SubmitOutcome {
            result,
            feedback,
            phase: self.phase,
            next_trial: (self.phase == Phase::Idle).then_some(self.trial_index),
        })
    }

    pub fn trial_records(&self) -> Vec<TrialRecord> {
        self.results.iter().map(|r| r.to_record(&self.id)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> TargetCatalog {
        TargetCatalog::default_library()
    }

    fn session() -> Session {
        Session::new("s1", ProtocolConfig::default(), &catalog()).unwrap()
    }

    fn at(s: &Session, cell: usize, t: f64) -> GazeSample {
        let (x, y) = s.layout().unwrap().cell_center(cell);
        GazeSample::new(t, x, y)
    }

    #[test]
    fn default_queue_has_fifteen_trials() {
        let s = session();
        assert_eq!(s.trials().len(), 15);
        assert!(s.trials()[..8].iter().all(|t| t.condition == Condition::Training && t.feedback));
        assert!(s.trials()[8..].iter().all(|t| t.condition != Condition::Training && !t.feedback));
        assert_eq!(s.phase(), Phase::Idle);
        assert_eq!(s.records().len(), 1);
    }

    #[test]
    fn config_errors() {
        let empty = ProtocolConfig { training_trials: vec![], test_trials: vec![], ..Default::default() };
        assert!(matches!(Session::new("x", empty, &catalog()), Err(SessionError::Config(_))));
        let unknown = ProtocolConfig { training_trials: vec!["T1".into(), "Q9".into()], ..Default::default() };
        match Session::new("x", unknown, &catalog()) {
            Err(SessionError::UnknownTargets(ids)) => assert_eq!(ids, vec!["Q9".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_assets_listed() {
        let dir = tempfile::tempdir().unwrap();
        let cat = catalog().with_assets(dir.path());
        match Session::new("x", ProtocolConfig::default(), &cat) {
            Err(SessionError::MissingArtifacts(ids)) => assert!(ids.contains(&"T1".to_string()) && ids.contains(&"U4".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cell_change_policy() {
        let mut s = session();
        s.begin(Some(0.0)).unwrap();
        let e = s.ingest_gaze(at(&s, 5, 0.1)).unwrap().unwrap();
        assert_eq!((e.cell, e.asset.as_str()), (5, "/assets/T1/5.wav"));
        assert!(s.ingest_gaze(at(&s, 5, 0.2)).unwrap().is_none());
        assert!(s.ingest_gaze(GazeSample::new(0.3, 2.0, 2.0)).unwrap().is_none());
        assert_eq!(s.ingest_gaze(at(&s, 5, 0.4)).unwrap().unwrap().cell, 5);
        assert_eq!(s.ingest_gaze(at(&s, 6, 0.5)).unwrap().unwrap().cell, 6);
    }

    #[test]
    fn dwell_policy_repeats() {
        let cfg = ProtocolConfig { retrigger_policy: RetriggerPolicy::OnDwell { dwell_ms: 250.0 }, ..Default::default() };
        let mut s = Session::new("d", cfg, &catalog()).unwrap();
        s.begin(Some(0.0)).unwrap();
        let fired: Vec<bool> =
            [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6].iter().map(|&t| s.ingest_gaze(at(&s, 2, t)).unwrap().is_some()).collect();
        assert_eq!(fired, vec![true, false, false, true, false, false, true]);
    }

    #[test]
    fn wrong_phase_errors() {
        let mut s = session();
        assert!(matches!(s.end_sensing(Some(1.0)), Err(SessionError::WrongPhase { phase: Phase::Idle, .. })));
        assert!(s.ingest_gaze(GazeSample::new(0.0, 0.5, 0.5)).is_err());
        s.begin(Some(0.0)).unwrap();
        assert!(s.begin(Some(0.0)).is_err());
        assert_eq!(s.end_sensing(Some(10.0)).unwrap(), 10.0);
        assert!(matches!(s.end_sensing(Some(11.0)), Err(SessionError::WrongPhase { phase: Phase::Drawing, .. })));
    }

    #[test]
    fn timestamps_must_not_go_back() {
        let mut s = session();
        s.begin(Some(1.0)).unwrap();
        s.ingest_gaze(GazeSample::new(2.0, 0.5, 0.5)).unwrap();
        assert!(matches!(s.ingest_gaze(GazeSample::new(1.5, 0.5, 0.5)), Err(SessionError::NonMonotonic { .. })));
    }

    #[test]
    fn drawing_validation_and_scoring() {
        let mut s = session();
        s.begin(Some(0.0)).unwrap();
        s.end_sensing(Some(5.0)).unwrap();
        assert!(matches!(s.submit_drawing(ShapeMask::full(4, 4), Some(6.0)), Err(SessionError::DimensionMismatch { .. })));
        assert!(matches!(s.submit_drawing(ShapeMask::empty(5, 5), Some(6.0)), Err(SessionError::EmptyDrawing)));
        let truth = catalog().get("T1").unwrap().mask.clone();
        let out = s.submit_drawing(truth.clone(), Some(6.0)).unwrap();
        assert_eq!(out.result.difference, 0.0);
        assert!(out.result.matched);
        assert_eq!(out.result.sensing_time, 5.0);
        assert_eq!(out.feedback.as_deref(), Some(truth.to_text().as_str()));
        assert_eq!((out.phase, out.next_trial), (Phase::Idle, Some(1)));
    }

    #[test]
    fn feedback_only_in_training() {
        let cfg = ProtocolConfig { training_trials: vec!["T2".into()], test_trials: vec!["T2".into()], ..Default::default() };
        let mut s = Session::new("f", cfg, &catalog()).unwrap();
        let drawing = ShapeMask::parse("##...\n##...\n.....\n.....\n.....").unwrap();
        let mut outs = vec![];
        for k in 0..2 {
            let t = k as f64 * 10.0;
            s.begin(Some(t)).unwrap();
            s.end_sensing(Some(t + 3.0)).unwrap();
            outs.push(s.submit_drawing(drawing.clone(), Some(t + 4.0)).unwrap());
        }
        assert_eq!(outs[0].result.difference, outs[1].result.difference);
        assert!(outs[0].feedback.is_some());
        assert!(outs[1].feedback.is_none());
        assert_eq!(outs[1].result.condition, Condition::TestTrained);
        assert_eq!(outs[1].phase, Phase::Finished);
        assert!(s.current_trial().is_none());
        assert!(s.begin(None).is_err());
    }
}
