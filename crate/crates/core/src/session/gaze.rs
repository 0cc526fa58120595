use serde::{Deserialize, Serialize};

/// One point-of-gaze sample. `t` is seconds since session start; `x`, `y`
/// are normalized screen coordinates with the origin at the top left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_valid")]
    pub valid: bool,
}

fn default_valid() -> bool {
    true
}

impl GazeSample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y, valid: true }
    }

    pub fn invalid(t: f64) -> Self {
        Self { t, x: 0.0, y: 0.0, valid: false }
    }
}

/// On-screen rectangle of the mesh guideline, in normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenRect {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for ScreenRect {
    fn default() -> Self {
        Self { left: 0.0, top: 0.0, width: 1.0, height: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub rect: ScreenRect,
    pub cols: usize,
    pub rows: usize,
}

impl GridLayout {
    pub fn new(rect: ScreenRect, cols: usize, rows: usize) -> Self {
        Self { rect, cols, rows }
    }

    pub fn full_screen(cols: usize, rows: usize) -> Self {
        Self::new(ScreenRect::default(), cols, rows)
    }

    pub fn cell_count(&self) -> usize {
        self.cols * self.rows
    }

    /// Normalized screen coordinates of the centre of `cell`.
    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        let (c, r) = (cell % self.cols, cell / self.cols);
        (
            self.rect.left + (c as f64 + 0.5) * self.rect.width / self.cols as f64,
            self.rect.top + (r as f64 + 0.5) * self.rect.height / self.rows as f64,
        )
    }
}

/// Row-major cell under the sample, or `None` when the sample is invalid or
/// off the grid. Cells are half-open: [left, right) × [top, bottom).
pub fn map_pog_to_cell(pog: &GazeSample, layout: &GridLayout) -> Option<usize> {
    if !pog.valid || !pog.x.is_finite() || !pog.y.is_finite() {
        return None;
    }
    let u = (pog.x - layout.rect.left) / layout.rect.width;
    let v = (pog.y - layout.rect.top) / layout.rect.height;
    if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
        return None;
    }
    let c = ((u * layout.cols as f64) as usize).min(layout.cols - 1);
    let r = ((v * layout.rows as f64) as usize).min(layout.rows - 1);
    Some(r * layout.cols + c)
}
