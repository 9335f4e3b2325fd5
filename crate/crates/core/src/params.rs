//! Named parameter store with one gradient slot per parameter.
//!
//! Entries keep insertion order, which fixes the iteration order for the
//! optimizer, the checkpoint format, and every reduction over gradients.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Handle to one entry of a [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

/// Ordered collection of named parameters and their gradients.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    entries: Vec<ParamEntry>,
}

impl ParameterStore {
    pub fn new() -> Self {
        ParameterStore { entries: Vec::new() }
    }

    /// Registers a parameter; the gradient slot starts at zero with the
    /// same shape. Names must be unique.
    pub fn add(&mut self, name: &str, value: Matrix) -> Result<ParamId> {
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::config(format!("duplicate parameter name '{name}'")));
        }
        let grad = Matrix::zeros(value.rows(), value.cols());
        self.entries.push(ParamEntry { name: name.to_string(), value, grad });
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.entries[id.0].grad
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamEntry> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamEntry> {
        self.entries.iter_mut()
    }

    /// Adds `delta` into the gradient slot of `id`.
    pub fn accumulate_grad(&mut self, id: ParamId, delta: &Matrix) -> Result<()> {
        self.entries[id.0].grad.add_assign(delta)
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            for g in e.grad.data_mut() {
                *g = 0.0;
            }
        }
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.grad.scale_in_place(factor);
        }
    }

    /// Square root of the sum of squared gradient entries over all
    /// parameters.
    pub fn global_grad_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.grad.frobenius_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Square root of the sum of squared parameter values, for training
    /// diagnostics.
    pub fn global_value_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value.frobenius_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Total number of scalar parameter entries.
    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// Copies of all parameter values, in store order.
    pub fn snapshot_values(&self) -> Vec<Matrix> {
        self.entries.iter().map(|e| e.value.clone()).collect()
    }

    /// Restores values taken with [`snapshot_values`](Self::snapshot_values).
    pub fn restore_values(&mut self, values: &[Matrix]) -> Result<()> {
        if values.len() != self.entries.len() {
            return Err(Error::state(format!(
                "snapshot has {} entries, store has {}",
                values.len(),
                self.entries.len()
            )));
        }
        for (e, v) in self.entries.iter_mut().zip(values) {
            if e.value.shape() != v.shape() {
                return Err(Error::state(format!(
                    "snapshot shape mismatch for '{}'",
                    e.name
                )));
            }
            e.value = v.clone();
        }
        Ok(())
    }
}

/// Global L2 norm of all gradients in the store.
pub fn global_l2_norm(store: &ParameterStore) -> f64 {
    store.global_grad_norm()
}
