//! The GETD parameter bundle: embeddings plus a tensor-ring compressed core.

use super::ModelError;
use crate::tensor::{tr_reconstruct, DenseTensor, Mat, TensorRing};

/// Embeddings `E` (n_e x d_e), `R` (n_r x d_r) and a tensor ring over the
/// reshaped core modes `[n_1..n_k]` with `prod(n_i) = d_e^n * d_r`, `k >= n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GetdModel {
    arity: usize,
    pub(crate) entities: Mat,
    pub(crate) relations: Mat,
    pub(crate) ring: TensorRing,
    reshape_shape: Vec<usize>,
}

impl GetdModel {
    pub fn new(
        arity: usize,
        entities: Mat,
        relations: Mat,
        ring: TensorRing,
        reshape_shape: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if arity == 0 {
            return Err(ModelError::Config("arity must be at least 1".into()));
        }
        let d_e = entities.cols();
        let d_r = relations.cols();
        if ring.k() != reshape_shape.len() {
            return Err(ModelError::Config(format!(
                "ring has {} cores but reshape shape {:?} has {} modes",
                ring.k(),
                reshape_shape,
                reshape_shape.len()
            )));
        }
        if ring.k() < arity + 1 {
            return Err(ModelError::Config(format!(
                "reshaped order k = {} must be at least arity + 1 = {}",
                ring.k(),
                arity + 1
            )));
        }
        if ring.mode_sizes() != reshape_shape {
            return Err(ModelError::Config(format!(
                "ring mode sizes {:?} do not match reshape shape {:?}",
                ring.mode_sizes(),
                reshape_shape
            )));
        }
        let natural: usize = d_e.pow(arity as u32) * d_r;
        let reshaped: usize = reshape_shape.iter().product();
        if natural != reshaped {
            return Err(ModelError::Config(format!(
                "reshape shape {reshape_shape:?} holds {reshaped} elements, core needs d_e^n * d_r = {natural}"
            )));
        }
        Ok(Self {
            arity,
            entities,
            relations,
            ring,
            reshape_shape,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn n_entities(&self) -> usize {
        self.entities.rows()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.rows()
    }

    pub fn d_e(&self) -> usize {
        self.entities.cols()
    }

    pub fn d_r(&self) -> usize {
        self.relations.cols()
    }

    pub fn k(&self) -> usize {
        self.ring.k()
    }

    pub fn entities(&self) -> &Mat {
        &self.entities
    }

    pub fn relations(&self) -> &Mat {
        &self.relations
    }

    pub fn ring(&self) -> &TensorRing {
        &self.ring
    }

    pub fn reshape_shape(&self) -> &[usize] {
        &self.reshape_shape
    }

    /// Shape of the uncompressed core: `[d_r, d_e, ..., d_e]`.
    pub fn natural_core_shape(&self) -> Vec<usize> {
        let mut s = vec![self.d_r()];
        s.extend(std::iter::repeat(self.d_e()).take(self.arity));
        s
    }

    /// True when the reshape is the identity: k = n+1 and the ring modes are
    /// exactly `[d_r, d_e, ..., d_e]`. In that case each ring core lines up
    /// with one scoring mode and contractions can run on the ring directly.
    pub fn is_aligned(&self) -> bool {
        self.reshape_shape == self.natural_core_shape()
    }

    /// Materializes the ring and reshapes it back to the natural core shape.
    pub fn materialized_core(&self, cap: usize) -> Result<DenseTensor, ModelError> {
        let flat = tr_reconstruct(&self.ring, cap)?;
        Ok(flat.into_reshape(self.natural_core_shape())?)
    }

    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![self.entities.data_mut(), self.relations.data_mut()];
        v.extend(self.ring.cores_mut().iter_mut().map(|c| c.data_mut()));
        v
    }
}
