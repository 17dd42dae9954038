//! The n-CP parameter bundle: a relation matrix and one entity matrix per
//! position, scored by the multilinear dot product.

use super::ModelError;
use crate::tensor::Mat;

/// `R` (n_r x d) plus per-position entity matrices `E^(1)..E^(n)` (n_e x d).
/// Unlike the shared-matrix models, an entity has a distinct embedding in
/// each entity domain.
#[derive(Debug, Clone, PartialEq)]
pub struct NCpModel {
    pub(crate) relations: Mat,
    pub(crate) entities_by_position: Vec<Mat>,
}

impl NCpModel {
    pub fn new(relations: Mat, entities_by_position: Vec<Mat>) -> Result<Self, ModelError> {
        if entities_by_position.is_empty() {
            return Err(ModelError::Config("arity must be at least 1".into()));
        }
        let d = relations.cols();
        let n_e = entities_by_position[0].rows();
        for (i, e) in entities_by_position.iter().enumerate() {
            if e.cols() != d {
                return Err(ModelError::Config(format!(
                    "entity matrix {} has {} columns, expected shared d = {d}",
                    i + 1,
                    e.cols()
                )));
            }
            if e.rows() != n_e {
                return Err(ModelError::Config(format!(
                    "entity matrix {} has {} rows, expected {n_e}",
                    i + 1,
                    e.rows()
                )));
            }
        }
        Ok(Self {
            relations,
            entities_by_position,
        })
    }

    pub fn arity(&self) -> usize {
        self.entities_by_position.len()
    }

    pub fn n_entities(&self) -> usize {
        self.entities_by_position[0].rows()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.rows()
    }

    /// The shared embedding width d.
    pub fn dim(&self) -> usize {
        self.relations.cols()
    }

    pub fn relations(&self) -> &Mat {
        &self.relations
    }

    pub fn entity_matrices(&self) -> &[Mat] {
        &self.entities_by_position
    }

    /// Entity matrix for a 1-based position.
    pub fn entities_at(&self, position: usize) -> &Mat {
        &self.entities_by_position[position - 1]
    }

    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![self.relations.data_mut()];
        v.extend(
            self.entities_by_position
                .iter_mut()
                .map(|e| e.data_mut()),
        );
        v
    }
}
