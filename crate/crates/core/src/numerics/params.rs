use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::graph::{Graph, Var};
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Index of a tensor inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// How a freshly registered tensor is filled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform in `[-0.08, 0.08]`.
    Uniform,
    /// Standard normal scaled by 0.01.
    Embedding,
    /// Uniform in `±sqrt(6 / (rows + cols))` of a 2-D shape.
    Glorot,
    Zeros,
    /// LSTM bias `[1, 4H]`: forget-gate block 1, the rest 0.
    ForgetBias,
}

pub const UNIFORM_BOUND: f64 = 0.08;
pub const EMBEDDING_SCALE: f64 = 0.01;

/// Ordered, named collection of trainable tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<T>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::InvalidConfig(format!("duplicate parameter `{name}`")));
        }
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        Ok(ParamId(self.names.len() - 1))
    }

    pub fn register<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        shape: &[usize],
        init: Init,
        rng: &mut R,
    ) -> Result<ParamId> {
        let n: usize = shape.iter().product();
        let data: Vec<T> = match init {
            Init::Zeros => vec![T::zero(); n],
            Init::Uniform => {
                let dist = Uniform::new_inclusive(-UNIFORM_BOUND, UNIFORM_BOUND)
                    .expect("valid uniform bounds");
                (0..n).map(|_| T::lit(dist.sample(rng))).collect()
            }
            Init::Glorot => {
                let [rows, cols] = shape else {
                    return Err(Error::ShapeMismatch(format!("glorot init needs a 2-D shape, got {shape:?}")));
                };
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("valid uniform bounds");
                (0..n).map(|_| T::lit(dist.sample(rng))).collect()
            }
            Init::ForgetBias => {
                if !n.is_multiple_of(4) {
                    return Err(Error::ShapeMismatch(format!("LSTM bias of {n} entries is not 4 gates wide")));
                }
                let h = n / 4;
                (0..n).map(|i| if (h..2 * h).contains(&i) { T::one() } else { T::zero() }).collect()
            }
            Init::Embedding => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    T::lit(z * EMBEDDING_SCALE)
                })
                .collect(),
        };
        self.insert(name, Tensor::new(shape.to_vec(), data)?)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor<T>> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.id(name).map(|id| &mut self.tensors[id.0])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<T>)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            index: self.index.clone(),
        }
    }

    /// Places every parameter on `graph` as a trainable leaf.
    pub fn bind<'p>(&'p self, graph: &mut Graph<'p, T>) -> Bound {
        Bound {
            vars: self.tensors.iter().map(|t| graph.param(t)).collect(),
        }
    }

    /// Zero-filled tensors matching every parameter's shape.
    pub fn zeros_like(&self) -> Vec<Tensor<T>> {
        self.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect()
    }
}

/// Graph handles for every parameter of a store.
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl std::ops::Index<ParamId> for Bound {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.vars[id.0]
    }
}
