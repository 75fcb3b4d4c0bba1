//! Discrete video clips decoded from INRs or loaded from disk.

use crate::error::{Error, Result};
use ndarray::{Array3, Array4};

/// H x W x T x 3 RGB video with values in [-1, 1], stored frame-major as
/// (T, H, W, 3) so a frame is one contiguous block.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoClip {
    data: Array4<f32>, // (T, H, W, 3)
}

impl VideoClip {
    pub fn new(data: Array4<f32>) -> Self {
        debug_assert_eq!(data.shape()[3], 3, "clips are RGB");
        VideoClip { data }
    }

    pub fn zeros(h: usize, w: usize, t: usize) -> Self {
        VideoClip {
            data: Array4::zeros((t, h, w, 3)),
        }
    }

    /// (H, W, T) shape triple.
    pub fn shape(&self) -> (usize, usize, usize) {
        let s = self.data.shape();
        (s[1], s[2], s[0])
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn data(&self) -> &Array4<f32> {
        &self.data
    }

    pub fn into_data(self) -> Array4<f32> {
        self.data
    }

    /// Frame k as (H, W, 3).
    pub fn frame(&self, k: usize) -> Array3<f32> {
        self.data.index_axis(ndarray::Axis(0), k).to_owned()
    }

    /// Frame k as channel-first (3, H, W) for discriminator input.
    pub fn frame_chw(&self, k: usize) -> Array3<f32> {
        self.data
            .index_axis(ndarray::Axis(0), k)
            .permuted_axes([2, 0, 1])
            .to_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in self.data.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn max_abs_diff(&self, other: &VideoClip) -> f32 {
        assert_eq!(self.data.shape(), other.data.shape());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    /// Per-pixel absolute difference scaled into [0, 1].
    pub fn diff_clip(&self, other: &VideoClip) -> Result<VideoClip> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::shape(format!(
                "diff_clip shapes {:?} vs {:?}",
                self.data.shape(),
                other.data.shape()
            )));
        }
        let mut out = self.data.clone();
        out.zip_mut_with(&other.data, |a, &b| *a = (*a - b).abs() * 0.5);
        Ok(VideoClip { data: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_reports_hwt() {
        let c = VideoClip::zeros(4, 6, 3);
        assert_eq!(c.shape(), (4, 6, 3));
        assert_eq!(c.frames(), 3);
    }

    #[test]
    fn diff_with_self_is_zero() {
        let mut c = VideoClip::zeros(2, 2, 2);
        c.data[[0, 0, 0, 0]] = 0.7;
        let d = c.diff_clip(&c).unwrap();
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diff_requires_matching_shapes() {
        let a = VideoClip::zeros(2, 2, 2);
        let b = VideoClip::zeros(2, 3, 2);
        assert!(a.diff_clip(&b).is_err());
    }

    #[test]
    fn frame_chw_transposes_channels() {
        let mut c = VideoClip::zeros(2, 3, 1);
        c.data[[0, 1, 2, 0]] = 0.5;
        let f = c.frame_chw(0);
        assert_eq!(f.shape(), &[3, 2, 3]);
        assert_eq!(f[[0, 1, 2]], 0.5);
    }
}
