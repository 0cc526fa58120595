use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::geometry::ShapeMask;
use crate::session::{map_pog_to_cell, GazeSample, GridLayout};

/// Seconds of gaze per grid cell plus the off-grid remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellMap {
    pub cols: usize,
    pub rows: usize,
    pub cells: Vec<f64>,
    /// Off-grid or invalid samples.
    pub outside: f64,
}

impl DwellMap {
    pub fn total(&self) -> f64 {
        self.cells.iter().sum::<f64>() + self.outside
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    /// One line per grid row, comma-separated seconds.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.cells.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Each inter-sample interval goes to the cell of its earlier sample.
pub fn dwell_heatmap(log: &[GazeSample], layout: &GridLayout) -> Result<DwellMap, AnalyticsError> {
    let mut map = DwellMap { cols: layout.cols, rows: layout.rows, cells: vec![0.0; layout.cell_count()], outside: 0.0 };
    for (i, w) in log.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if !(dt >= 0.0) {
            return Err(AnalyticsError::UnorderedTimestamps { index: i + 1 });
        }
        match map_pog_to_cell(&w[0], layout) {
            Some(c) => map.cells[c] += dt,
            None => map.outside += dt,
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeAnalysis {
    pub dwell_seconds: Vec<f64>,
    pub outside_grid_seconds: f64,
    /// (edge cells + empty grid cells) / all dwell.
    pub edge_dwell_fraction: f64,
    /// Dwell not on any target cell (empty grid cells and off-grid) / all dwell.
    pub outside_fraction: f64,
    pub sensing_time: f64,
}

fn check_dims(target: &ShapeMask, layout: &GridLayout) -> Result<(), AnalyticsError> {
    if target.dims() != (layout.cols, layout.rows) {
        return Err(AnalyticsError::DimensionMismatch {
            expected: (layout.cols, layout.rows),
            found: target.dims(),
        });
    }
    Ok(())
}

fn fractions(map: &DwellMap, target: &ShapeMask) -> (f64, f64) {
    let total = map.total();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let mut edge_or_empty = 0.0;
    let mut off_target = map.outside;
    for (i, &d) in map.cells.iter().enumerate() {
        if !target.cells()[i] {
            edge_or_empty += d;
            off_target += d;
        } else if target.is_edge(i) {
            edge_or_empty += d;
        }
    }
    ((edge_or_empty / total).clamp(0.0, 1.0), (off_target / total).clamp(0.0, 1.0))
}

pub fn edge_dwell_fraction(log: &[GazeSample], target: &ShapeMask, layout: &GridLayout) -> Result<f64, AnalyticsError> {
    check_dims(target, layout)?;
    Ok(fractions(&dwell_heatmap(log, layout)?, target).0)
}

pub fn analyze_gaze(
    log: &[GazeSample],
    target: &ShapeMask,
    layout: &GridLayout,
    sensing_time: f64,
) -> Result<GazeAnalysis, AnalyticsError> {
    check_dims(target, layout)?;
    let map = dwell_heatmap(log, layout)?;
    let (edge, outside) = fractions(&map, target);
    Ok(GazeAnalysis {
        dwell_seconds: map.cells,
        outside_grid_seconds: map.outside,
        edge_dwell_fraction: edge,
        outside_fraction: outside,
        sensing_time,
    })
}
