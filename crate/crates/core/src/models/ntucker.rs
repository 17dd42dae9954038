//! The n-TuckER parameter bundle: embeddings plus an explicit dense core.

use super::ModelError;
use crate::tensor::{DenseTensor, Mat};

/// Embeddings `E`, `R` and an (n+1)-order core of shape `[d_r, d_e, .., d_e]`.
/// One entity matrix is shared across all entity modes.
#[derive(Debug, Clone, PartialEq)]
pub struct NTuckerModel {
    arity: usize,
    pub(crate) entities: Mat,
    pub(crate) relations: Mat,
    pub(crate) core: DenseTensor,
}

impl NTuckerModel {
    pub fn new(
        arity: usize,
        entities: Mat,
        relations: Mat,
        core: DenseTensor,
    ) -> Result<Self, ModelError> {
        if arity == 0 {
            return Err(ModelError::Config("arity must be at least 1".into()));
        }
        if core.order() != arity + 1 {
            return Err(ModelError::Config(format!(
                "core has order {}, expected arity + 1 = {}",
                core.order(),
                arity + 1
            )));
        }
        if core.shape()[0] != relations.cols() {
            return Err(ModelError::Config(format!(
                "core relation mode is {}, relation embeddings have d_r = {}",
                core.shape()[0],
                relations.cols()
            )));
        }
        for (i, &s) in core.shape()[1..].iter().enumerate() {
            if s != entities.cols() {
                return Err(ModelError::Config(format!(
                    "core entity mode {} is {s}, entity embeddings have d_e = {}",
                    i + 1,
                    entities.cols()
                )));
            }
        }
        Ok(Self {
            arity,
            entities,
            relations,
            core,
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

    pub fn entities(&self) -> &Mat {
        &self.entities
    }

    pub fn relations(&self) -> &Mat {
        &self.relations
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.entities.data_mut(),
            self.relations.data_mut(),
            self.core.data_mut(),
        ]
    }
}
