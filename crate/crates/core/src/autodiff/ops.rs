use super::Tensor;
use ndarray::{concatenate, ArrayD, Axis, Ix2, IxDyn, Slice};
use std::sync::Arc;

fn broadcast_shape(a: &[usize], b: &[usize]) -> Vec<usize> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        assert!(
            da == db || da == 1 || db == 1,
            "incompatible broadcast shapes {:?} vs {:?}",
            a,
            b
        );
        out[i] = da.max(db);
    }
    out
}

fn bcast_apply(
    a: &ArrayD<f32>,
    b: &ArrayD<f32>,
    f: impl Fn(f32, f32) -> f32,
) -> ArrayD<f32> {
    if a.shape() == b.shape() {
        let mut out = a.clone();
        out.zip_mut_with(b, |x, &y| *x = f(*x, y));
        return out;
    }
    let shape = broadcast_shape(a.shape(), b.shape());
    let av = a.broadcast(IxDyn(&shape)).expect("broadcast lhs");
    let bv = b.broadcast(IxDyn(&shape)).expect("broadcast rhs");
    let mut out = av.to_owned();
    out.zip_mut_with(&bv, |x, &y| *x = f(*x, y));
    out
}

impl Tensor {
    /// Sum a cotangent down to `shape` (inverse of broadcasting).
    pub fn reduce_to(&self, shape: &[usize]) -> Tensor {
        if self.shape() == shape {
            return self.clone();
        }
        let rank = self.shape().len();
        let grow = rank - shape.len();
        let mut axes: Vec<usize> = (0..grow).collect();
        for (i, &d) in shape.iter().enumerate() {
            if d == 1 && self.shape()[grow + i] != 1 {
                axes.push(grow + i);
            }
        }
        let summed = if axes.is_empty() { self.clone() } else { self.sum_axes(&axes) };
        summed.reshape(shape)
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        let data = bcast_apply(self.data(), other.data(), |x, y| x + y);
        Tensor::from_op(
            data,
            vec![self.clone(), other.clone()],
            Box::new(|g, parents, _| {
                vec![
                    Some(g.reduce_to(parents[0].shape())),
                    Some(g.reduce_to(parents[1].shape())),
                ]
            }),
        )
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        let data = bcast_apply(self.data(), other.data(), |x, y| x * y);
        Tensor::from_op(
            data,
            vec![self.clone(), other.clone()],
            Box::new(|g, parents, _| {
                vec![
                    Some(g.mul(&parents[1]).reduce_to(parents[0].shape())),
                    Some(g.mul(&parents[0]).reduce_to(parents[1].shape())),
                ]
            }),
        )
    }

    pub fn neg(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(|x| -x),
            vec![self.clone()],
            Box::new(|g, _, _| vec![Some(g.neg())]),
        )
    }

    pub fn scale(&self, c: f32) -> Tensor {
        Tensor::from_op(
            self.data().mapv(|x| c * x),
            vec![self.clone()],
            Box::new(move |g, _, _| vec![Some(g.scale(c))]),
        )
    }

    pub fn add_scalar(&self, c: f32) -> Tensor {
        Tensor::from_op(
            self.data().mapv(|x| x + c),
            vec![self.clone()],
            Box::new(|g, _, _| vec![Some(g.clone())]),
        )
    }

    pub fn sin(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::sin),
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.mul(&parents[0].cos()))]),
        )
    }

    pub fn cos(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::cos),
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.mul(&parents[0].sin()).neg())]),
        )
    }

    pub fn tanh(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::tanh),
            vec![self.clone()],
            Box::new(|g, _, out| {
                vec![Some(g.mul(&out.square().neg().add_scalar(1.0)))]
            }),
        )
    }

    pub fn exp(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::exp),
            vec![self.clone()],
            Box::new(|g, _, out| vec![Some(g.mul(out))]),
        )
    }

    pub fn ln(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::ln),
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.mul(&parents[0].recip()))]),
        )
    }

    pub fn recip(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::recip),
            vec![self.clone()],
            Box::new(|g, _, out| vec![Some(g.mul(&out.square()).neg())]),
        )
    }

    pub fn sqrt(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(f32::sqrt),
            vec![self.clone()],
            Box::new(|g, _, out| vec![Some(g.mul(&out.recip()).scale(0.5))]),
        )
    }

    pub fn square(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(|x| x * x),
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.mul(&parents[0]).scale(2.0))]),
        )
    }

    pub fn leaky_relu(&self, slope: f32) -> Tensor {
        let mask = Tensor::constant(
            self.data().mapv(|x| if x > 0.0 { 1.0 } else { slope }),
        );
        Tensor::from_op(
            self.data().mapv(|x| if x > 0.0 { x } else { slope * x }),
            vec![self.clone()],
            Box::new(move |g, _, _| vec![Some(g.mul(&mask))]),
        )
    }

    pub fn sigmoid(&self) -> Tensor {
        let fwd = |x: f32| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        };
        Tensor::from_op(
            self.data().mapv(fwd),
            vec![self.clone()],
            Box::new(|g, _, out| {
                vec![Some(g.mul(out).mul(&out.neg().add_scalar(1.0)))]
            }),
        )
    }

    pub fn softplus(&self) -> Tensor {
        Tensor::from_op(
            self.data().mapv(|x| x.max(0.0) + (-x.abs()).exp().ln_1p()),
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.mul(&parents[0].sigmoid()))]),
        )
    }

    pub fn clamp(&self, lo: f32, hi: f32) -> Tensor {
        let mask = Tensor::constant(
            self.data()
                .mapv(|x| if x > lo && x < hi { 1.0 } else { 0.0 }),
        );
        Tensor::from_op(
            self.data().mapv(|x| x.clamp(lo, hi)),
            vec![self.clone()],
            Box::new(move |g, _, _| vec![Some(g.mul(&mask))]),
        )
    }

    pub fn reshape(&self, shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        assert_eq!(self.len(), n, "reshape {:?} -> {:?}", self.shape(), shape);
        if self.shape() == shape {
            return self.clone();
        }
        let data = self
            .data()
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order(IxDyn(shape))
            .expect("reshape");
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.reshape(parents[0].shape()))]),
        )
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Tensor {
        if self.shape() == shape {
            return self.clone();
        }
        let data = self
            .data()
            .broadcast(IxDyn(shape))
            .unwrap_or_else(|| panic!("broadcast {:?} -> {:?}", self.shape(), shape))
            .to_owned();
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(|g, parents, _| vec![Some(g.reduce_to(parents[0].shape()))]),
        )
    }

    /// Sum over `axes`, removing them from the shape.
    pub fn sum_axes(&self, axes: &[usize]) -> Tensor {
        let mut sorted: Vec<usize> = axes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut data = self.data().clone();
        for &ax in sorted.iter().rev() {
            data = data.sum_axis(Axis(ax));
        }
        let kept_shape: Vec<usize> = {
            let mut s = self.shape().to_vec();
            for &ax in sorted.iter() {
                s[ax] = 1;
            }
            s
        };
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(move |g, parents, _| {
                let g = g.reshape(&kept_shape).broadcast_to(parents[0].shape());
                vec![Some(g)]
            }),
        )
    }

    pub fn sum_all(&self) -> Tensor {
        let axes: Vec<usize> = (0..self.shape().len()).collect();
        self.sum_axes(&axes)
    }

    pub fn mean_all(&self) -> Tensor {
        self.sum_all().scale(1.0 / self.len() as f32)
    }

    pub fn transpose2(&self) -> Tensor {
        assert_eq!(self.shape().len(), 2);
        let data = self.data().view().reversed_axes().to_owned();
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(|g, _, _| vec![Some(g.transpose2())]),
        )
    }

    pub fn slice_axis_op(&self, axis: usize, start: usize, len: usize) -> Tensor {
        let dim = self.shape()[axis];
        assert!(start + len <= dim);
        let data = self
            .data()
            .slice_axis(
                Axis(axis),
                Slice::new(start as isize, Some((start + len) as isize), 1),
            )
            .to_owned();
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(move |g, _, _| {
                vec![Some(g.pad_axis_zeros(axis, start, dim - start - len))]
            }),
        )
    }

    pub fn pad_axis_zeros(&self, axis: usize, before: usize, after: usize) -> Tensor {
        let mut shape = self.shape().to_vec();
        let inner = shape[axis];
        shape[axis] += before + after;
        let mut data = ArrayD::<f32>::zeros(IxDyn(&shape));
        data.slice_axis_mut(
            Axis(axis),
            Slice::new(before as isize, Some((before + inner) as isize), 1),
        )
        .assign(self.data());
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(move |g, _, _| vec![Some(g.slice_axis_op(axis, before, inner))]),
        )
    }

    pub fn permute(&self, axes: &[usize]) -> Tensor {
        assert_eq!(axes.len(), self.shape().len());
        let data = self.data().view().permuted_axes(IxDyn(axes)).to_owned();
        let mut inverse = vec![0usize; axes.len()];
        for (i, &ax) in axes.iter().enumerate() {
            inverse[ax] = i;
        }
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(move |g, _, _| vec![Some(g.permute(&inverse))]),
        )
    }

    /// out[i] = flat(self)[idx[i]], reshaped to `out_shape`.
    pub fn gather_flat(&self, idx: Arc<Vec<u32>>, out_shape: &[usize]) -> Tensor {
        let n: usize = out_shape.iter().product();
        assert_eq!(idx.len(), n);
        let src = self.data().as_standard_layout();
        let src = src.as_slice().expect("standard layout");
        let out: Vec<f32> = idx.iter().map(|&i| src[i as usize]).collect();
        let data = ArrayD::from_shape_vec(IxDyn(out_shape), out).unwrap();
        let in_shape: Vec<usize> = self.shape().to_vec();
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(move |g, _, _| {
                vec![Some(g.scatter_add_flat(idx.clone(), &in_shape))]
            }),
        )
    }

    /// out[idx[i]] += flat(self)[i]; output has `out_shape`.
    pub fn scatter_add_flat(&self, idx: Arc<Vec<u32>>, out_shape: &[usize]) -> Tensor {
        assert_eq!(idx.len(), self.len());
        let src = self.data().as_standard_layout();
        let src = src.as_slice().expect("standard layout");
        let n: usize = out_shape.iter().product();
        let mut out = vec![0.0f32; n];
        for (&i, &v) in idx.iter().zip(src.iter()) {
            out[i as usize] += v;
        }
        let data = ArrayD::from_shape_vec(IxDyn(out_shape), out).unwrap();
        let in_shape: Vec<usize> = self.shape().to_vec();
        Tensor::from_op(
            data,
            vec![self.clone()],
            Box::new(move |g, _, _| vec![Some(g.gather_flat(idx.clone(), &in_shape))]),
        )
    }
}

/// 2-D matrix product.
pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(a.shape().len(), 2, "matmul lhs rank");
    assert_eq!(b.shape().len(), 2, "matmul rhs rank");
    assert_eq!(a.shape()[1], b.shape()[0], "matmul inner dim");
    let av = a.data().view().into_dimensionality::<Ix2>().unwrap();
    let bv = b.data().view().into_dimensionality::<Ix2>().unwrap();
    let data = av.dot(&bv).into_dyn();
    Tensor::from_op(
        data,
        vec![a.clone(), b.clone()],
        Box::new(|g, parents, _| {
            vec![
                Some(matmul(g, &parents[1].transpose2())),
                Some(matmul(&parents[0].transpose2(), g)),
            ]
        }),
    )
}

/// Concatenate along `axis`.
pub fn concat(axis: usize, parts: &[Tensor]) -> Tensor {
    assert!(!parts.is_empty());
    let views: Vec<_> = parts.iter().map(|p| p.data().view()).collect();
    let data = concatenate(Axis(axis), &views).expect("concat shapes");
    let lens: Vec<usize> = parts.iter().map(|p| p.shape()[axis]).collect();
    Tensor::from_op(
        data,
        parts.to_vec(),
        Box::new(move |g, _, _| {
            let mut out = Vec::with_capacity(lens.len());
            let mut start = 0;
            for &l in &lens {
                out.push(Some(g.slice_axis_op(axis, start, l)));
                start += l;
            }
            out
        }),
    )
}
