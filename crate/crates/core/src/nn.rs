//! Network building blocks on top of the autodiff tape.

use crate::autodiff::{matmul, Tensor};
use ndarray::{ArrayD, IxDyn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::sync::Arc;

pub fn randn(rng: &mut ChaCha8Rng, shape: &[usize], std: f32) -> ArrayD<f32> {
    let dist = Normal::new(0.0f32, std).expect("normal std");
    let n: usize = shape.iter().product();
    let vals: Vec<f32> = (0..n).map(|_| dist.sample(rng)).collect();
    ArrayD::from_shape_vec(IxDyn(shape), vals).unwrap()
}

/// He-style init for leaky-ReLU fan-in.
pub fn he_std(fan_in: usize) -> f32 {
    (2.0 / fan_in as f32).sqrt()
}

pub const LEAKY_SLOPE: f32 = 0.2;

/// Fully connected layer computing x · Wᵀ + b for row-major batches.
pub struct Linear {
    pub w: Tensor, // (out, in)
    pub b: Option<Tensor>,
}

impl Linear {
    pub fn new(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, w_std: f32, bias: bool) -> Self {
        Linear {
            w: Tensor::var(randn(rng, &[fan_out, fan_in], w_std)),
            b: bias.then(|| Tensor::var(ArrayD::zeros(IxDyn(&[fan_out])))),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let y = matmul(x, &self.w.transpose2());
        match &self.b {
            Some(b) => y.add(b),
            None => y,
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        f(format!("{prefix}.w"), &self.w);
        if let Some(b) = &self.b {
            f(format!("{prefix}.b"), b);
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        f(format!("{prefix}.w"), &mut self.w);
        if let Some(b) = &mut self.b {
            f(format!("{prefix}.b"), b);
        }
    }
}

fn window_gather_indices_2d(
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
) -> (Arc<Vec<u32>>, usize, usize) {
    let oh = (h - kh) / stride + 1;
    let ow = (w - kw) / stride + 1;
    let mut idx = Vec::with_capacity(n * oh * ow * c * kh * kw);
    for ni in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ci in 0..c {
                    for ky in 0..kh {
                        let row = ((ni * c + ci) * h + oy * stride + ky) * w;
                        for kx in 0..kw {
                            idx.push((row + ox * stride + kx) as u32);
                        }
                    }
                }
            }
        }
    }
    (Arc::new(idx), oh, ow)
}

/// 3x3-style 2-D convolution over (N, C, H, W) input.
pub struct Conv2d {
    pub w: Tensor, // (out_c, in_c, kh, kw)
    pub b: Tensor, // (out_c)
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    pub fn new(
        rng: &mut ChaCha8Rng,
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let std = he_std(in_c * k * k);
        Conv2d {
            w: Tensor::var(randn(rng, &[out_c, in_c, k, k], std)),
            b: Tensor::var(ArrayD::zeros(IxDyn(&[out_c]))),
            stride,
            pad,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (oc, kh, kw) = (self.w.shape()[0], self.w.shape()[2], self.w.shape()[3]);
        assert_eq!(c, self.w.shape()[1], "conv input channels");
        let padded = if self.pad > 0 {
            x.pad_axis_zeros(2, self.pad, self.pad)
                .pad_axis_zeros(3, self.pad, self.pad)
        } else {
            x.clone()
        };
        let (hp, wp) = (h + 2 * self.pad, w + 2 * self.pad);
        let (idx, oh, ow) = window_gather_indices_2d(n, c, hp, wp, kh, kw, self.stride);
        let cols = padded.gather_flat(idx, &[n * oh * ow, c * kh * kw]);
        let wmat = self.w.reshape(&[oc, c * kh * kw]).transpose2();
        let out = matmul(&cols, &wmat).add(&self.b);
        out.reshape(&[n, oh, ow, oc]).permute(&[0, 3, 1, 2])
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        f(format!("{prefix}.w"), &self.w);
        f(format!("{prefix}.b"), &self.b);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        f(format!("{prefix}.w"), &mut self.w);
        f(format!("{prefix}.b"), &mut self.b);
    }
}

/// 2x2 average pooling with stride 2 over (N, C, H, W).
pub fn avg_pool2(x: &Tensor) -> Tensor {
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    assert!(h % 2 == 0 && w % 2 == 0, "avg_pool2 needs even spatial dims");
    let (idx, oh, ow) = window_gather_indices_2d(n, c, h, w, 2, 2, 2);
    // gather order is (n, oy, ox, c, window), so rows group cleanly by pixel
    x.gather_flat(idx, &[n * oh * ow * c, 4])
        .sum_axes(&[1])
        .scale(0.25)
        .reshape(&[n, oh, ow, c])
        .permute(&[0, 3, 1, 2])
}

/// 3-D convolution over (N, C, D, H, W) input, uniform kernel/stride/pad.
pub struct Conv3d {
    pub w: Tensor, // (out_c, in_c, kd, kh, kw)
    pub b: Tensor,
    pub stride: usize,
    pub pad: usize,
}

impl Conv3d {
    pub fn new(
        rng: &mut ChaCha8Rng,
        in_c: usize,
        out_c: usize,
        k: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let std = he_std(in_c * k * k * k);
        Conv3d {
            w: Tensor::var(randn(rng, &[out_c, in_c, k, k, k], std)),
            b: Tensor::var(ArrayD::zeros(IxDyn(&[out_c]))),
            stride,
            pad,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (n, c, d, h, w) = (
            x.shape()[0],
            x.shape()[1],
            x.shape()[2],
            x.shape()[3],
            x.shape()[4],
        );
        let (oc, k) = (self.w.shape()[0], self.w.shape()[2]);
        assert_eq!(c, self.w.shape()[1], "conv3d input channels");
        let p = self.pad;
        let padded = if p > 0 {
            x.pad_axis_zeros(2, p, p)
                .pad_axis_zeros(3, p, p)
                .pad_axis_zeros(4, p, p)
        } else {
            x.clone()
        };
        let (dp, hp, wp) = (d + 2 * p, h + 2 * p, w + 2 * p);
        let s = self.stride;
        let od = (dp - k) / s + 1;
        let oh = (hp - k) / s + 1;
        let ow = (wp - k) / s + 1;
        let mut idx = Vec::with_capacity(n * od * oh * ow * c * k * k * k);
        for ni in 0..n {
            for oz in 0..od {
                for oy in 0..oh {
                    for ox in 0..ow {
                        for ci in 0..c {
                            for kz in 0..k {
                                for ky in 0..k {
                                    let base = (((ni * c + ci) * dp + oz * s + kz) * hp
                                        + oy * s
                                        + ky)
                                        * wp;
                                    for kx in 0..k {
                                        idx.push((base + ox * s + kx) as u32);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let cols = padded.gather_flat(Arc::new(idx), &[n * od * oh * ow, c * k * k * k]);
        let wmat = self.w.reshape(&[oc, c * k * k * k]).transpose2();
        let out = matmul(&cols, &wmat).add(&self.b);
        out.reshape(&[n, od, oh, ow, oc]).permute(&[0, 4, 1, 2, 3])
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor)) {
        f(format!("{prefix}.w"), &self.w);
        f(format!("{prefix}.b"), &self.b);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Tensor)) {
        f(format!("{prefix}.w"), &mut self.w);
        f(format!("{prefix}.b"), &mut self.b);
    }
}

/// Bilinear 2x-style resize of per-frame features stored as (H*W, d) rows.
///
/// Interpolation runs over the continuous unit square with endpoints aligned,
/// so source pixel (i, j) of an H x W map sits at (i/(H-1), j/(W-1)).
pub fn bilinear_resize_rows(
    x: &Tensor,
    (h, w): (usize, usize),
    (h2, w2): (usize, usize),
) -> Tensor {
    let d = x.shape()[1];
    assert_eq!(x.shape()[0], h * w);
    let pos = |out_i: usize, n_out: usize, n_in: usize| -> (usize, usize, f32) {
        if n_out == 1 || n_in == 1 {
            return (0, 0.min(n_in - 1), 0.0);
        }
        let t = out_i as f32 * (n_in - 1) as f32 / (n_out - 1) as f32;
        let lo = (t.floor() as usize).min(n_in - 2);
        (lo, lo + 1, t - lo as f32)
    };
    let mut idx = [
        Vec::with_capacity(h2 * w2 * d),
        Vec::with_capacity(h2 * w2 * d),
        Vec::with_capacity(h2 * w2 * d),
        Vec::with_capacity(h2 * w2 * d),
    ];
    let mut weights = [
        Vec::with_capacity(h2 * w2 * d),
        Vec::with_capacity(h2 * w2 * d),
        Vec::with_capacity(h2 * w2 * d),
        Vec::with_capacity(h2 * w2 * d),
    ];
    for oy in 0..h2 {
        let (y0, y1, fy) = pos(oy, h2, h);
        for ox in 0..w2 {
            let (x0, x1, fx) = pos(ox, w2, w);
            let corners = [
                (y0 * w + x0, (1.0 - fy) * (1.0 - fx)),
                (y0 * w + x1, (1.0 - fy) * fx),
                (y1 * w + x0, fy * (1.0 - fx)),
                (y1 * w + x1, fy * fx),
            ];
            for (k, (row, wt)) in corners.iter().enumerate() {
                for col in 0..d {
                    idx[k].push((row * d + col) as u32);
                    weights[k].push(*wt);
                }
            }
        }
    }
    let mut out: Option<Tensor> = None;
    for k in 0..4 {
        let gathered = x.gather_flat(Arc::new(std::mem::take(&mut idx[k])), &[h2 * w2, d]);
        let wt = Tensor::constant(
            ArrayD::from_shape_vec(IxDyn(&[h2 * w2, d]), std::mem::take(&mut weights[k])).unwrap(),
        );
        let term = gathered.mul(&wt);
        out = Some(match out {
            Some(acc) => acc.add(&term),
            None => term,
        });
    }
    out.unwrap()
}

/// One Gaussian sample per call; convenience for latent draws.
pub fn sample_latent(rng: &mut ChaCha8Rng, dim: usize) -> ArrayD<f32> {
    let dist = Normal::new(0.0f32, 1.0).unwrap();
    ArrayD::from_shape_vec(IxDyn(&[dim]), (0..dim).map(|_| dist.sample(rng)).collect()).unwrap()
}

/// Uniform draw helper used by augmentation parameter sampling.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f32, hi: f32) -> f32 {
    rng.random_range(lo..hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn conv2d_matches_naive_loops() {
        let mut r = rng();
        let conv = Conv2d::new(&mut r, 2, 3, 3, 1, 1);
        let x = Tensor::constant(randn(&mut r, &[1, 2, 5, 5], 1.0));
        let y = conv.forward(&x);
        assert_eq!(y.shape(), &[1, 3, 5, 5]);
        // naive re-computation
        let xd = x.data();
        let wd = conv.w.data();
        let bd = conv.b.data();
        for ocx in 0..3 {
            for oy in 0..5i64 {
                for ox in 0..5i64 {
                    let mut acc = bd[[ocx]];
                    for ci in 0..2 {
                        for ky in -1..=1i64 {
                            for kx in -1..=1i64 {
                                let (iy, ix) = (oy + ky, ox + kx);
                                if iy < 0 || iy >= 5 || ix < 0 || ix >= 5 {
                                    continue;
                                }
                                acc += xd[[0, ci, iy as usize, ix as usize]]
                                    * wd[[ocx, ci, (ky + 1) as usize, (kx + 1) as usize]];
                            }
                        }
                    }
                    let got = y.data()[[0, ocx, oy as usize, ox as usize]];
                    assert!((got - acc).abs() < 1e-4, "{got} vs {acc}");
                }
            }
        }
    }

    #[test]
    fn conv2d_gradients_flow_to_weights() {
        let mut r = rng();
        let conv = Conv2d::new(&mut r, 1, 2, 3, 2, 1);
        let x = Tensor::constant(randn(&mut r, &[2, 1, 4, 4], 1.0));
        let y = conv.forward(&x).square().sum_all();
        let g = grad(&y, &[&conv.w, &conv.b], false);
        assert_eq!(g[0].shape(), conv.w.shape());
        assert!(g[0].data().iter().any(|&v| v != 0.0));
        assert!(g[1].data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn avg_pool_halves_and_averages() {
        let x = Tensor::constant(
            ArrayD::from_shape_vec(
                IxDyn(&[1, 1, 2, 2]),
                vec![1.0, 2.0, 3.0, 4.0],
            )
            .unwrap(),
        );
        let y = avg_pool2(&x);
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert!((y.item() - 2.5).abs() < 1e-6);
    }

    #[test]
    fn conv3d_shape_and_grad() {
        let mut r = rng();
        let conv = Conv3d::new(&mut r, 3, 4, 3, 2, 1);
        let x = Tensor::constant(randn(&mut r, &[1, 3, 4, 8, 8], 1.0));
        let y = conv.forward(&x);
        assert_eq!(y.shape(), &[1, 4, 2, 4, 4]);
        let s = y.square().sum_all();
        let g = grad(&s, &[&conv.w], false);
        assert!(g[0].data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn bilinear_identity_when_same_size() {
        let mut r = rng();
        let x = Tensor::constant(randn(&mut r, &[12, 5], 1.0));
        let y = bilinear_resize_rows(&x, (3, 4), (3, 4));
        for (a, b) in x.data().iter().zip(y.data().iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn bilinear_upsample_contains_endpoints() {
        let mut r = rng();
        let x = Tensor::constant(randn(&mut r, &[4, 2], 1.0));
        let y = bilinear_resize_rows(&x, (2, 2), (3, 3));
        // corners of the 3x3 output must equal corners of the 2x2 input
        for (o, i) in [(0usize, 0usize), (2, 1), (6, 2), (8, 3)] {
            for c in 0..2 {
                assert!((y.data()[[o, c]] - x.data()[[i, c]]).abs() < 1e-6);
            }
        }
    }
}
