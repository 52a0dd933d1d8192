use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }

    /// Node of this parameter in a graph produced by [`ParamStore::bind`].
    pub fn var(self) -> Var {
        Var(self.0)
    }
}

/// Named parameter tensors in creation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    /// Replaces every tensor from `other`, which must have identical names
    /// and shapes.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<()> {
        if self.names != other.names {
            return Err(Error::Checkpoint("parameter names do not match the model".into()));
        }
        for (i, (dst, src)) in self.tensors.iter_mut().zip(&other.tensors).enumerate() {
            if dst.shape() != src.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    self.names[i],
                    src.shape(),
                    dst.shape()
                )));
            }
            *dst = src.clone();
        }
        Ok(())
    }

    /// Starts a graph whose first nodes are the parameters, so that
    /// `ParamId(i)` corresponds to `Var(i)`.
    pub fn bind(&self, requires_grad: bool) -> Graph {
        let mut g = Graph::new();
        for t in &self.tensors {
            g.leaf(t.clone(), requires_grad);
        }
        g
    }
}

/// Seeded fan-in uniform initializer.
pub struct Initializer<'a> {
    pub store: &'a mut ParamStore,
    rng: ChaCha8Rng,
}

impl<'a> Initializer<'a> {
    pub fn new(store: &'a mut ParamStore, seed: u64) -> Self {
        Self {
            store,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, name: &str, shape: [usize; 4], bound: f64) -> ParamId {
        let t = Tensor::from_fn(shape, |_| self.rng.random_range(-bound..=bound));
        self.store.push(name, t)
    }

    pub fn constant(&mut self, name: &str, shape: [usize; 4], value: f64) -> ParamId {
        self.store.push(name, Tensor::full(shape, value))
    }

    pub fn conv(&mut self, name: &str, cin: usize, cout: usize, k: usize) -> Conv {
        let bound = 1.0 / ((cin * k * k) as f64).sqrt();
        Conv {
            w: self.uniform(&format!("{name}.w"), [cout, cin, k, k], bound),
            b: self.uniform(&format!("{name}.b"), [1, cout, 1, 1], bound),
        }
    }
}

/// Convolution weights `[cout, cin, k, k]` and bias `[1, cout, 1, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct Conv {
    pub w: ParamId,
    pub b: ParamId,
}

impl Conv {
    pub fn apply(&self, g: &mut Graph, x: Var) -> Var {
        g.conv2d(x, self.w.var(), Some(self.b.var()))
    }

    pub fn in_channels(&self, store: &ParamStore) -> usize {
        store.get(self.w).shape()[1]
    }

    pub fn out_channels(&self, store: &ParamStore) -> usize {
        store.get(self.w).shape()[0]
    }

    /// Sets the kernel to a channel passthrough of the first `cout` inputs
    /// (or zero-padded identity) and the bias to `bias`.
    pub fn set_identity(&self, store: &mut ParamStore, bias: f64) {
        let [cout, cin, k, _] = store.get(self.w).shape();
        let w = store.get_mut(self.w);
        *w = Tensor::from_fn([cout, cin, k, k], |[o, i, y, x]| {
            if o == i && y == k / 2 && x == k / 2 {
                1.0
            } else {
                0.0
            }
        });
        *store.get_mut(self.b) = Tensor::full([1, cout, 1, 1], bias);
    }

    pub fn set_zero(&self, store: &mut ParamStore, bias: f64) {
        let ws = store.get(self.w).shape();
        *store.get_mut(self.w) = Tensor::zeros(ws);
        let bs = store.get(self.b).shape();
        *store.get_mut(self.b) = Tensor::full(bs, bias);
    }
}
