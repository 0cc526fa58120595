//! Hu invariant moments of cell masks and the log-scaled shape distance.
//!
//! Each occupied cell is treated as a unit square centred on (col, row), and
//! moments are integrated exactly over the squares. Block-upsampling a mask
//! then scales the continuous shape exactly, so scale invariance holds to
//! rounding error rather than only asymptotically.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::geometry::ShapeMask;

/// h1..h7 stored as `h[0]..h[6]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuVector(pub [f64; 7]);

impl HuVector {
    pub fn h(&self, i: usize) -> f64 {
        self.0[i - 1]
    }
}

/// Comparison formula over m = sign(h)·log10|h|.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HuMetric {
    /// Σ |1/mA − 1/mB|
    #[default]
    I1,
    /// Σ |mA − mB|
    I2,
    /// max |mA − mB| / |mA|
    I3,
}

/// Which cells the moments are taken over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentRegion {
    /// Every occupied cell.
    #[default]
    Filled,
    /// Occupied cells 4-adjacent to an empty or out-of-grid cell.
    Outline,
}

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.02;
/// Pairs with both |h| below this are left out of the distance.
pub const NEGLIGIBLE_INVARIANT: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeConfig {
    pub threshold: f64,
    pub metric: HuMetric,
    pub region: MomentRegion,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_MATCH_THRESHOLD, metric: HuMetric::I1, region: MomentRegion::Filled }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceScore {
    pub value: f64,
    pub threshold: f64,
}

impl DifferenceScore {
    pub fn matched(&self) -> bool {
        classify_match(self)
    }
}

/// Same shape iff the value is strictly below the threshold.
pub fn classify_match(score: &DifferenceScore) -> bool {
    score.value < score.threshold
}

/// ∫ x^p over a unit interval centred on u, for p = 0..=3.
fn unit_moments(u: f64) -> [f64; 4] {
    [1.0, u, u * u + 1.0 / 12.0, u * u * u + u / 4.0]
}

/// Central moments μ_pq (p + q ≤ 3) indexed `[p][q]`.
fn central_moments(mask: &ShapeMask) -> Result<[[f64; 4]; 4], AnalyticsError> {
    let cells: Vec<(f64, f64)> = mask
        .occupied()
        .map(|i| {
            let (c, r) = mask.position(i);
            (c as f64, r as f64)
        })
        .collect();
    if cells.is_empty() {
        return Err(AnalyticsError::EmptyMask);
    }
    let n = cells.len() as f64;
    let cx = cells.iter().map(|c| c.0).sum::<f64>() / n;
    let cy = cells.iter().map(|c| c.1).sum::<f64>() / n;
    let mut mu = [[0.0; 4]; 4];
    for &(x, y) in &cells {
        let ix = unit_moments(x - cx);
        let iy = unit_moments(y - cy);
        for p in 0..4 {
            for q in 0..4 - p {
                mu[p][q] += ix[p] * iy[q];
            }
        }
    }
    Ok(mu)
}

/// Cells of `mask` touching an empty or out-of-grid cell along an edge.
pub fn outline(mask: &ShapeMask) -> ShapeMask {
    ShapeMask::from_fn(mask.cols(), mask.rows(), |c, r| mask.is_edge(mask.index(c, r)))
}

pub fn hu_moments(mask: &ShapeMask) -> Result<HuVector, AnalyticsError> {
    let mu = central_moments(mask)?;
    let m00 = mu[0][0];
    let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;
    Ok(HuVector([
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]))
}

fn log_scaled(h: f64) -> f64 {
    h.signum() * h.abs().log10()
}

/// Distance between two invariant vectors under `metric`.
pub fn hu_distance(a: &HuVector, b: &HuVector, metric: HuMetric) -> f64 {
    let mut total = 0.0f64;
    for i in 0..7 {
        let (ha, hb) = (a.0[i], b.0[i]);
        if ha.abs() < NEGLIGIBLE_INVARIANT && hb.abs() < NEGLIGIBLE_INVARIANT {
            continue;
        }
        let (ma, mb) = (log_scaled(ha), log_scaled(hb));
        let inv = |h: f64, m: f64| if h == 0.0 || m == 0.0 { 0.0 } else { 1.0 / m };
        match metric {
            HuMetric::I1 => total += (inv(ha, ma) - inv(hb, mb)).abs(),
            HuMetric::I2 => {
                let ma = if ha == 0.0 { 0.0 } else { ma };
                let mb = if hb == 0.0 { 0.0 } else { mb };
                total += (ma - mb).abs();
            }
            HuMetric::I3 => {
                if ha != 0.0 && ma != 0.0 {
                    let mb = if hb == 0.0 { 0.0 } else { mb };
                    total = total.max((ma - mb).abs() / ma.abs());
                }
            }
        }
    }
    total
}

pub fn shape_difference(a: &ShapeMask, b: &ShapeMask) -> Result<DifferenceScore, AnalyticsError> {
    shape_difference_with(a, b, &ShapeConfig::default())
}

pub fn shape_difference_with(a: &ShapeMask, b: &ShapeMask, config: &ShapeConfig) -> Result<DifferenceScore, AnalyticsError> {
    let region = |m: &ShapeMask| match config.region {
        MomentRegion::Filled => m.clone(),
        MomentRegion::Outline => outline(m),
    };
    let ha = hu_moments(&region(a))?;
    let hb = hu_moments(&region(b))?;
    Ok(DifferenceScore { value: hu_distance(&ha, &hb, config.metric), threshold: config.threshold })
}
