//! Piecewise-linear penalty on leftover old stock.
//!
//! Batches are ordered newest first, so consuming stock drains the oldest
//! batches before the newest and the penalty is convex in the quantity
//! that remains.

use crate::model::StockBatch;

#[derive(Debug, Clone, PartialEq)]
pub struct PwlBreakpoints {
    /// `(x, y)` pairs starting at the origin; empty when there is no stock.
    pub points: Vec<(f64, f64)>,
    /// Segment slopes `e^{-life/scale}`, one per batch, newest first.
    pub slopes: Vec<f64>,
}

/// `slope * s_old - r <= rhs`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwlCut {
    pub slope: f64,
    pub rhs: f64,
}

impl PwlCut {
    pub fn value(&self, s_old: f64) -> f64 {
        self.slope * s_old - self.rhs
    }
}

pub fn pwl_breakpoints(batches: &[StockBatch], exponent_scale: f64) -> PwlBreakpoints {
    if batches.is_empty() {
        return PwlBreakpoints {
            points: Vec::new(),
            slopes: Vec::new(),
        };
    }
    let mut sorted: Vec<&StockBatch> = batches.iter().collect();
    sorted.sort_by(|a, b| b.remaining_shelf_life.total_cmp(&a.remaining_shelf_life));
    let mut points = Vec::with_capacity(sorted.len() + 1);
    let mut slopes = Vec::with_capacity(sorted.len());
    points.push((0.0, 0.0));
    let (mut x, mut y) = (0.0, 0.0);
    for b in sorted {
        let slope = (-b.remaining_shelf_life / exponent_scale).exp();
        x += b.quantity;
        y += b.quantity * slope;
        points.push((x, y));
        slopes.push(slope);
    }
    PwlBreakpoints { points, slopes }
}

impl PwlBreakpoints {
    pub fn is_empty(&self) -> bool {
        self.points.len() < 2
    }

    pub fn num_segments(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// Linear interpolation between breakpoints; beyond the last point the
    /// last segment is extended.
    pub fn evaluate(&self, x: f64) -> f64 {
        if self.is_empty() || x <= 0.0 {
            return 0.0;
        }
        let k = self
            .points
            .windows(2)
            .position(|w| x <= w[1].0)
            .unwrap_or(self.points.len() - 2);
        let (x0, y0) = self.points[k];
        let (x1, y1) = self.points[k + 1];
        y0 + (x - x0) * (y1 - y0) / (x1 - x0)
    }
}

/// One cut per segment; their upper envelope equals the breakpoint
/// interpolation on `[0, h]`.
pub fn pwl_cuts(bp: &PwlBreakpoints) -> Vec<PwlCut> {
    bp.points
        .iter()
        .skip(1)
        .zip(&bp.slopes)
        .map(|(&(x, y), &slope)| PwlCut {
            slope,
            rhs: slope * x - y,
        })
        .collect()
}

/// Largest cut value at `s_old`, or 0 without cuts.
pub fn envelope(cuts: &[PwlCut], s_old: f64) -> f64 {
    cuts.iter()
        .map(|c| c.value(s_old))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .unwrap_or(0.0)
}
