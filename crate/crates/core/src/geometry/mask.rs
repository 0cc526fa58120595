use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GeometryError;

/// Binary silhouette on a cell grid, row-major, row 0 at the top.
///
/// Text form: one line per row, `#` for an occupied cell and `.` for an empty
/// one. Rows must all have the same length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShapeMask {
    cols: usize,
    rows: usize,
    cells: Vec<bool>,
}

impl ShapeMask {
    pub fn new(cols: usize, rows: usize, cells: Vec<bool>) -> Result<Self, GeometryError> {
        if cols == 0 || rows == 0 {
            return Err(GeometryError::InvalidMask("mask must have at least one row and one column".into()));
        }
        if cols * rows != cells.len() {
            return Err(GeometryError::InvalidMask(format!(
                "{cols}x{rows} mask needs {} cells, got {}",
                cols * rows,
                cells.len()
            )));
        }
        Ok(Self { cols, rows, cells })
    }

    pub fn empty(cols: usize, rows: usize) -> Self {
        assert!(cols > 0 && rows > 0);
        Self { cols, rows, cells: vec![false; cols * rows] }
    }

    pub fn full(cols: usize, rows: usize) -> Self {
        assert!(cols > 0 && rows > 0);
        Self { cols, rows, cells: vec![true; cols * rows] }
    }

    pub fn from_fn(cols: usize, rows: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let cells = (0..rows).flat_map(|r| (0..cols).map(move |c| (c, r))).map(|(c, r)| f(c, r)).collect();
        Self { cols, rows, cells }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        col < self.cols && row < self.rows && self.cells[row * self.cols + col]
    }

    /// Like `get` but accepts coordinates outside the grid (reported empty).
    pub fn get_signed(&self, col: isize, row: isize) -> bool {
        col >= 0 && row >= 0 && self.get(col as usize, row as usize)
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.cells[row * self.cols + col] = value;
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    pub fn position(&self, index: usize) -> (usize, usize) {
        (index % self.cols, index / self.cols)
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn any(&self) -> bool {
        self.cells.iter().any(|&c| c)
    }

    /// Row-major indices of occupied cells.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i)
    }

    /// Occupied cell with at least one 4-neighbour that is empty or off-grid.
    pub fn is_edge(&self, index: usize) -> bool {
        if !self.cells[index] {
            return false;
        }
        let (c, r) = self.position(index);
        let (c, r) = (c as isize, r as isize);
        [(c - 1, r), (c + 1, r), (c, r - 1), (c, r + 1)].iter().any(|&(cc, rr)| !self.get_signed(cc, rr))
    }

    /// Quarter turn clockwise (as drawn, row 0 on top).
    pub fn rotated_cw(&self) -> ShapeMask {
        let (cols, rows) = (self.rows, self.cols);
        ShapeMask::from_fn(cols, rows, |c, r| self.get(r, self.rows - 1 - c))
    }

    /// Each cell replaced by a `factor`×`factor` block.
    pub fn upsampled(&self, factor: usize) -> ShapeMask {
        assert!(factor > 0);
        ShapeMask::from_fn(self.cols * factor, self.rows * factor, |c, r| self.get(c / factor, r / factor))
    }

    /// Copy placed at `(dc, dr)` inside a larger empty canvas.
    pub fn padded(&self, cols: usize, rows: usize, dc: usize, dr: usize) -> ShapeMask {
        assert!(dc + self.cols <= cols && dr + self.rows <= rows);
        ShapeMask::from_fn(cols, rows, |c, r| {
            c >= dc && r >= dr && self.get(c - dc, r - dr)
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.cols + 1) * self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.push(if self.get(c, r) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty()).collect();
        if lines.is_empty() {
            return Err(GeometryError::InvalidMask("no rows".into()));
        }
        let cols = lines[0].trim().chars().count();
        let mut cells = Vec::with_capacity(cols * lines.len());
        for (r, line) in lines.iter().enumerate() {
            let line = line.trim();
            if line.chars().count() != cols {
                return Err(GeometryError::InvalidMask(format!(
                    "row {r} has {} cells, expected {cols}",
                    line.chars().count()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => cells.push(true),
                    '.' => cells.push(false),
                    other => {
                        return Err(GeometryError::InvalidMask(format!("row {r} column {c}: unexpected '{other}'")));
                    }
                }
            }
        }
        ShapeMask::new(cols, lines.len(), cells)
    }
}

impl fmt::Display for ShapeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ShapeMask {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeMask::parse(s)
    }
}

impl Serialize for ShapeMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for ShapeMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        ShapeMask::parse(&text).map_err(serde::de::Error::custom)
    }
}
