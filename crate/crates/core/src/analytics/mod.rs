//! Shape scoring, gaze dwell analysis and per-condition summaries.

mod gaze;
mod hu;
mod report;

pub use gaze::{analyze_gaze, dwell_heatmap, edge_dwell_fraction, DwellMap, GazeAnalysis};
pub use hu::{
    classify_match, hu_distance, hu_moments, outline, shape_difference, shape_difference_with, DifferenceScore,
    HuMetric, HuVector, MomentRegion, ShapeConfig, DEFAULT_MATCH_THRESHOLD, NEGLIGIBLE_INVARIANT,
};
pub use report::{
    read_trials_csv, report_summary, session_stats, write_trials_csv, Condition, ConditionSummary, PublishedMeans,
    ReportSummary, Summary, TrialRecord, PUBLISHED_MEANS,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("mask has no occupied cells")]
    EmptyMask,
    #[error("no trials to summarize")]
    EmptyInput,
    #[error("gaze timestamps decrease at sample {index}")]
    UnorderedTimestamps { index: usize },
    #[error("mask is {found:?} but the layout is {expected:?} (cols, rows)")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
