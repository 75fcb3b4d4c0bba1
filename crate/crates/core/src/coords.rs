//! Normalized space-time coordinate grids.
//!
//! Canonical grids sample the unit cube with H*W points per frame and T
//! frames; sub-grids extend the ranges for zoom-out and extrapolation.
//! Layout is (t, y, x)-major so each frame occupies a contiguous block of
//! points, which is what per-frame parallel decoding relies on.

use crate::error::{Error, Result};

/// Uniform grid of (x, y, t) sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateGrid {
    points: Vec<[f64; 3]>,
    shape: (usize, usize, usize), // (H, W, T)
    ranges: [(f64, f64); 3],      // per axis (x, y, t)
}

/// Axis positions: n uniform samples over [lo, hi], both ends inclusive.
/// A degenerate axis (n == 1) sits at lo.
fn axis_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64) / ((n - 1) as f64))
        .collect()
}

impl CoordinateGrid {
    /// Canonical unit-cube grid: point (i, j, k) sits at
    /// (i/(H-1), j/(W-1), k/(T-1)), with degenerate axes at 0.
    pub fn make_grid(h: usize, w: usize, t: usize) -> Result<Self> {
        Self::make_subgrid(h, w, t, (0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
    }

    /// Uniform grid spanning the requested per-axis ranges inclusively.
    pub fn make_subgrid(
        h: usize,
        w: usize,
        t: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        t_range: (f64, f64),
    ) -> Result<Self> {
        if h < 1 || w < 1 || t < 1 {
            return Err(Error::invalid(format!(
                "grid dimensions must be >= 1, got ({h}, {w}, {t})"
            )));
        }
        for (name, (lo, hi)) in [("x", x_range), ("y", y_range), ("t", t_range)] {
            if lo > hi {
                return Err(Error::invalid(format!(
                    "{name} range is inverted: {lo} > {hi}"
                )));
            }
        }
        let xs = axis_points(x_range.0, x_range.1, w);
        let ys = axis_points(y_range.0, y_range.1, h);
        let ts = axis_points(t_range.0, t_range.1, t);
        let mut points = Vec::with_capacity(h * w * t);
        for &tv in &ts {
            for &yv in &ys {
                for &xv in &xs {
                    points.push([xv, yv, tv]);
                }
            }
        }
        Ok(CoordinateGrid {
            points,
            shape: (h, w, t),
            ranges: [x_range, y_range, t_range],
        })
    }

    /// Resample the time axis to factor*(T-1)+1 uniform samples over the same
    /// range, so every original time sample reappears in the output.
    pub fn refine_time(&self, factor: usize) -> Result<Self> {
        if factor < 1 {
            return Err(Error::invalid(format!("refine factor must be >= 1, got {factor}")));
        }
        let (h, w, t) = self.shape;
        let new_t = factor * (t - 1) + 1;
        Self::make_subgrid(h, w, new_t, self.ranges[0], self.ranges[1], self.ranges[2])
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn ranges(&self) -> [(f64, f64); 3] {
        self.ranges
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The T distinct time values, in order.
    pub fn times(&self) -> Vec<f64> {
        let (h, w, t) = self.shape;
        (0..t).map(|k| self.points[k * h * w][2]).collect()
    }

    /// Points of frame k (contiguous by construction).
    pub fn frame_points(&self, k: usize) -> &[[f64; 3]] {
        let (h, w, _) = self.shape;
        &self.points[k * h * w..(k + 1) * h * w]
    }

    /// Single-frame grid over the same spatial axes at time tv.
    pub fn frame_grid(&self, tv: f64) -> CoordinateGrid {
        let (h, w, _) = self.shape;
        CoordinateGrid::make_subgrid(h, w, 1, self.ranges[0], self.ranges[1], (tv, tv))
            .expect("frame grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_2x2x2_hits_cube_corners() {
        let g = CoordinateGrid::make_grid(2, 2, 2).unwrap();
        assert_eq!(g.len(), 8);
        // (t, y, x)-major order
        let expect = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        assert_eq!(g.points(), &expect);
    }

    #[test]
    fn degenerate_grid_is_origin() {
        let g = CoordinateGrid::make_grid(1, 1, 1).unwrap();
        assert_eq!(g.points(), &[[0.0, 0.0, 0.0]]);
    }

    #[test]
    fn grid_3x3x2_spacing() {
        let g = CoordinateGrid::make_grid(3, 3, 2).unwrap();
        assert_eq!(g.len(), 18);
        let mut xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(g.times(), vec![0.0, 1.0]);
    }

    #[test]
    fn nonpositive_dimension_rejected() {
        assert!(CoordinateGrid::make_grid(0, 2, 2).is_err());
        assert!(CoordinateGrid::make_subgrid(2, 0, 2, (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)).is_err());
    }

    #[test]
    fn inverted_range_rejected() {
        assert!(
            CoordinateGrid::make_subgrid(2, 2, 2, (1.0, 0.0), (0.0, 1.0), (0.0, 1.0)).is_err()
        );
    }

    #[test]
    fn zoom_out_grid_spans_requested_range() {
        let g = CoordinateGrid::make_subgrid(
            192,
            192,
            16,
            (-0.25, 1.25),
            (-0.25, 1.25),
            (0.0, 1.0),
        )
        .unwrap();
        assert_eq!(g.len(), 192 * 192 * 16);
        let first = g.points()[0];
        let last = g.points()[g.len() - 1];
        assert_eq!(first, [-0.25, -0.25, 0.0]);
        assert_eq!(last, [1.25, 1.25, 1.0]);
    }

    #[test]
    fn single_frame_subgrid_matches_canonical_at_t0() {
        let sub = CoordinateGrid::make_subgrid(4, 4, 1, (0.0, 1.0), (0.0, 1.0), (0.0, 0.0))
            .unwrap();
        let full = CoordinateGrid::make_grid(4, 4, 1).unwrap();
        assert_eq!(sub.points(), full.points());
    }

    #[test]
    fn time_extrapolation_subgrid() {
        let g = CoordinateGrid::make_subgrid(2, 2, 64, (0.0, 1.0), (0.0, 1.0), (0.0, 4.0))
            .unwrap();
        let ts = g.times();
        assert_eq!(ts.len(), 64);
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[63], 4.0);
    }

    #[test]
    fn canonical_grid_equals_unit_subgrid() {
        let a = CoordinateGrid::make_grid(5, 4, 3).unwrap();
        let b = CoordinateGrid::make_subgrid(5, 4, 3, (0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
            .unwrap();
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn refine_time_counts_and_contains_originals_bitwise() {
        let g = CoordinateGrid::make_grid(2, 2, 16).unwrap();
        let r = g.refine_time(4).unwrap();
        let (_, _, t) = r.shape();
        assert_eq!(t, 61);
        let coarse = g.times();
        let fine = r.times();
        for (k, tv) in coarse.iter().enumerate() {
            assert_eq!(fine[4 * k].to_bits(), tv.to_bits(), "time sample {k}");
        }
    }

    #[test]
    fn refine_time_identity_and_midpoint() {
        let g = CoordinateGrid::make_grid(3, 3, 2).unwrap();
        assert_eq!(g.refine_time(1).unwrap(), g);
        let r = g.refine_time(2).unwrap();
        assert_eq!(r.times(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn refine_factor_zero_rejected() {
        let g = CoordinateGrid::make_grid(2, 2, 2).unwrap();
        assert!(g.refine_time(0).is_err());
    }

    #[test]
    fn axes_strictly_increasing_uniform() {
        let g = CoordinateGrid::make_subgrid(7, 5, 3, (-1.0, 2.0), (0.0, 1.0), (0.5, 0.75))
            .unwrap();
        let ts = g.times();
        for w in ts.windows(2) {
            assert!(w[1] > w[0]);
        }
        let step = ts[1] - ts[0];
        for w in ts.windows(2) {
            assert!(((w[1] - w[0]) - step).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_points_are_contiguous_blocks() {
        let g = CoordinateGrid::make_grid(3, 2, 4).unwrap();
        for k in 0..4 {
            let f = g.frame_points(k);
            assert_eq!(f.len(), 6);
            for p in f {
                assert_eq!(p[2], g.times()[k]);
            }
        }
    }
}
