use serde::{Deserialize, Serialize};

use crate::autodiff::{glorot_init, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// What a parameter tensor is for; decides L2 membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamRole {
    /// Weight matrix of layer 1 or 2.
    Weight {
        layer: u8,
    },
    Bias,
    Attention,
    KernelMean,
    KernelLogSigma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry<T> {
    pub name: String,
    pub role: ParamRole,
    pub tensor: Tensor<T>,
}

/// Ordered, named collection of trainable tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    entries: Vec<ParamEntry<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamEntry<T>] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry<T>] {
        &mut self.entries
    }

    /// Total number of trainable scalars.
    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter named {name:?}")))
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        Ok(&self.entries[self.index_of(name)?].tensor)
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        let i = self.index_of(name)?;
        Ok(&mut self.entries[i].tensor)
    }

    pub fn insert(&mut self, name: impl Into<String>, role: ParamRole, tensor: Tensor<T>) {
        self.entries.push(ParamEntry {
            name: name.into(),
            role,
            tensor: tensor.with_grad(),
        });
    }

    pub(crate) fn glorot(
        &mut self,
        name: String,
        role: ParamRole,
        fan_in: usize,
        fan_out: usize,
        rng: &mut RngStream,
    ) -> Result<()> {
        let t = glorot_init(fan_in, fan_out, rng)?;
        self.insert(name, role, t);
        Ok(())
    }

    pub(crate) fn zeros(&mut self, name: String, rows: usize, cols: usize) {
        self.insert(name, ParamRole::Bias, Tensor::zeros(rows, cols));
    }

    /// Registers every tensor as a tape leaf, in store order.
    pub fn bind(&self, tape: &mut Tape<T>) -> Vec<Var> {
        self.entries.iter().map(|e| tape.leaf(e.tensor.clone())).collect()
    }

    /// Converts every tensor to another scalar type.
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    name: e.name.clone(),
                    role: e.role,
                    tensor: e.tensor.cast(),
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|e| e.tensor.all_finite())
    }
}
