//! Minimal reverse-mode autodiff on `ndarray`.
//!
//! Every tensor is an immutable node in a DAG. Backward rules are written in
//! terms of the same differentiable ops, so gradients are themselves tensors
//! with history: calling [`grad`] with `create_graph = true` yields gradients
//! that can be differentiated again (needed for the R1 penalty, whose value
//! depends on input gradients of the discriminator).
//!
//! Structured ops (convolution, pooling, padding) are compositions of
//! `gather`/`scatter_add` index maps and matrix multiplies, which keeps the
//! primitive set small and every backward rule exact.

mod ops;

pub use ops::{concat, matmul};

use ndarray::{ArrayD, IxDyn};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Backward rule: given cotangent of the output, the parent tensors, and the
/// output itself, produce cotangents for each parent (None = no gradient).
type GradFn = Box<dyn Fn(&Tensor, &[Tensor], &Tensor) -> Vec<Option<Tensor>> + Send + Sync>;

pub(crate) struct Node {
    id: u64,
    data: ArrayD<f32>,
    parents: Vec<Tensor>,
    grad_fn: Option<GradFn>,
    requires_grad: bool,
}

/// Immutable autodiff tensor, cheap to clone (shared node).
#[derive(Clone)]
pub struct Tensor {
    inner: Arc<Node>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.shape())
            .field("requires_grad", &self.requires_grad())
            .finish()
    }
}

impl Tensor {
    /// A constant: never tracked by the tape.
    pub fn constant(data: ArrayD<f32>) -> Self {
        Tensor {
            inner: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                data,
                parents: Vec::new(),
                grad_fn: None,
                requires_grad: false,
            }),
        }
    }

    /// A leaf variable: gradients accumulate here.
    pub fn var(data: ArrayD<f32>) -> Self {
        Tensor {
            inner: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                data,
                parents: Vec::new(),
                grad_fn: None,
                requires_grad: true,
            }),
        }
    }

    pub(crate) fn from_op(
        data: ArrayD<f32>,
        parents: Vec<Tensor>,
        grad_fn: GradFn,
    ) -> Self {
        let requires_grad = parents.iter().any(|p| p.requires_grad());
        if !requires_grad {
            // Prune history: pure inference carries no tape.
            return Tensor::constant(data);
        }
        Tensor {
            inner: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                data,
                parents,
                grad_fn: Some(grad_fn),
                requires_grad: true,
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn data(&self) -> &ArrayD<f32> {
        &self.inner.data
    }

    pub fn shape(&self) -> &[usize] {
        self.inner.data.shape()
    }

    pub fn len(&self) -> usize {
        self.inner.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.data.is_empty()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    /// Scalar extraction; panics unless the tensor has exactly one element.
    pub fn item(&self) -> f32 {
        assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        *self.inner.data.iter().next().unwrap()
    }

    /// Same data, no history.
    pub fn detach(&self) -> Tensor {
        Tensor::constant(self.inner.data.clone())
    }

    /// Leaf copy of the same data (for optimizer-managed parameters).
    pub fn to_var(&self) -> Tensor {
        Tensor::var(self.inner.data.clone())
    }

    pub fn scalar(v: f32) -> Tensor {
        Tensor::constant(ArrayD::from_elem(IxDyn(&[]), v))
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::constant(ArrayD::zeros(IxDyn(shape)))
    }

    pub fn ones(shape: &[usize]) -> Tensor {
        Tensor::constant(ArrayD::from_elem(IxDyn(shape), 1.0))
    }
}

/// Reverse-mode gradient of a scalar `output` with respect to `wrt`.
///
/// With `create_graph` the returned gradients keep their own history and can
/// be differentiated again; otherwise they are detached constants.
pub fn grad(output: &Tensor, wrt: &[&Tensor], create_graph: bool) -> Vec<Tensor> {
    assert_eq!(output.len(), 1, "grad() needs a scalar output");

    // Topological order over the requires_grad subgraph.
    let mut order: Vec<Tensor> = Vec::new();
    let mut state: HashMap<u64, u8> = HashMap::new(); // 1 = in progress/queued, 2 = done
    let mut stack: Vec<(Tensor, usize)> = vec![(output.clone(), 0)];
    while let Some((node, child_idx)) = stack.pop() {
        if child_idx == 0 {
            match state.get(&node.id()) {
                Some(_) => continue,
                None => {
                    state.insert(node.id(), 1);
                }
            }
        }
        let parents = &node.inner.parents;
        if child_idx < parents.len() {
            let next = parents[child_idx].clone();
            stack.push((node, child_idx + 1));
            if next.requires_grad() && !state.contains_key(&next.id()) {
                stack.push((next, 0));
            }
        } else {
            state.insert(node.id(), 2);
            order.push(node);
        }
    }

    let mut cotangents: HashMap<u64, Tensor> = HashMap::new();
    cotangents.insert(output.id(), Tensor::ones(output.shape()));

    // `order` ends with `output`; walk it backwards.
    for node in order.iter().rev() {
        let Some(cot) = cotangents.get(&node.id()).cloned() else {
            continue;
        };
        let Some(grad_fn) = node.inner.grad_fn.as_ref() else {
            continue;
        };
        let parent_grads = grad_fn(&cot, &node.inner.parents, node);
        debug_assert_eq!(parent_grads.len(), node.inner.parents.len());
        for (parent, pg) in node.inner.parents.iter().zip(parent_grads) {
            let Some(pg) = pg else { continue };
            if !parent.requires_grad() {
                continue;
            }
            debug_assert_eq!(
                pg.shape(),
                parent.shape(),
                "cotangent shape mismatch for parent {}",
                parent.id()
            );
            match cotangents.remove(&parent.id()) {
                Some(acc) => {
                    cotangents.insert(parent.id(), acc.add(&pg));
                }
                None => {
                    cotangents.insert(parent.id(), pg);
                }
            }
        }
    }

    wrt.iter()
        .map(|t| {
            let g = cotangents
                .get(&t.id())
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(t.shape()));
            if create_graph {
                g
            } else {
                g.detach()
            }
        })
        .collect()
}
