//! Scoring models: GETD (Tucker outer layer + tensor-ring core), n-TuckER
//! (explicit dense core) and n-CP (per-position multilinear product), with
//! parameter accounting and seeded initialization.

mod checkpoint;
mod getd;
mod init;
mod ncp;
mod ntucker;
mod scoring;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use getd::GetdModel;
pub use init::{choose_reshape_shape, init_model, InitSpec};
pub use ncp::NCpModel;
pub use ntucker::NTuckerModel;
pub use scoring::Prepared;

use crate::tensor::TensorError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("entity id {id} out of range (vocabulary has {n_entities})")]
    EntityOutOfRange { id: usize, n_entities: usize },
    #[error("relation id {id} out of range (vocabulary has {n_relations})")]
    RelationOutOfRange { id: usize, n_relations: usize },
    #[error("fact arity {actual} does not match model arity {expected}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("position {position} out of range for arity {arity}")]
    PositionOutOfRange { position: usize, arity: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// An n-ary relational fact: one relation id plus n entity ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub relation: usize,
    pub entities: Vec<usize>,
}

impl Fact {
    pub fn new(relation: usize, entities: Vec<usize>) -> Self {
        Self { relation, entities }
    }

    pub fn arity(&self) -> usize {
        self.entities.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Getd,
    NTucker,
    NCp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Getd => "getd",
            ModelKind::NTucker => "ntucker",
            ModelKind::NCp => "ncp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "getd" => Some(ModelKind::Getd),
            "ntucker" => Some(ModelKind::NTucker),
            "ncp" => Some(ModelKind::NCp),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter accounting split into embedding and core contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub embedding_params: usize,
    pub core_params: usize,
    pub total: usize,
}

/// A trainable model of any of the three kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Getd(GetdModel),
    NTucker(NTuckerModel),
    NCp(NCpModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Getd(_) => ModelKind::Getd,
            Model::NTucker(_) => ModelKind::NTucker,
            Model::NCp(_) => ModelKind::NCp,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Model::Getd(m) => m.arity(),
            Model::NTucker(m) => m.arity(),
            Model::NCp(m) => m.arity(),
        }
    }

    pub fn n_entities(&self) -> usize {
        match self {
            Model::Getd(m) => m.n_entities(),
            Model::NTucker(m) => m.n_entities(),
            Model::NCp(m) => m.n_entities(),
        }
    }

    pub fn n_relations(&self) -> usize {
        match self {
            Model::Getd(m) => m.n_relations(),
            Model::NTucker(m) => m.n_relations(),
            Model::NCp(m) => m.n_relations(),
        }
    }

    pub(crate) fn check_fact(&self, f: &Fact) -> Result<(), ModelError> {
        if f.arity() != self.arity() {
            return Err(ModelError::ArityMismatch {
                expected: self.arity(),
                actual: f.arity(),
            });
        }
        if f.relation >= self.n_relations() {
            return Err(ModelError::RelationOutOfRange {
                id: f.relation,
                n_relations: self.n_relations(),
            });
        }
        for &e in &f.entities {
            if e >= self.n_entities() {
                return Err(ModelError::EntityOutOfRange {
                    id: e,
                    n_entities: self.n_entities(),
                });
            }
        }
        Ok(())
    }

    /// Score of one fact. Convenience wrapper over [`Model::prepare`]; when
    /// scoring many facts against fixed parameters, prepare once instead.
    pub fn score(&self, f: &Fact) -> Result<f64, ModelError> {
        self.prepare()?.score(f)
    }

    /// Scores with the slot at `position` (0 = relation, 1..=n = entities)
    /// replaced by every candidate id. See [`Prepared::score_all`].
    pub fn score_all(&self, f: &Fact, position: usize) -> Result<Vec<f64>, ModelError> {
        self.prepare()?.score_all(f, position)
    }

    pub fn prepare(&self) -> Result<Prepared<'_>, ModelError> {
        self.prepare_with_cap(crate::tensor::DEFAULT_MATERIALIZE_CAP)
    }

    pub fn prepare_with_cap(&self, cap: usize) -> Result<Prepared<'_>, ModelError> {
        Prepared::new(self, cap)
    }

    pub fn param_count(&self) -> ParamCount {
        let (embedding, core) = match self {
            Model::Getd(m) => (
                m.n_entities() * m.d_e() + m.n_relations() * m.d_r(),
                m.ring().param_count(),
            ),
            Model::NTucker(m) => (
                m.n_entities() * m.d_e() + m.n_relations() * m.d_r(),
                m.core().len(),
            ),
            Model::NCp(m) => (
                m.arity() * m.n_entities() * m.dim() + m.n_relations() * m.dim(),
                0,
            ),
        };
        ParamCount {
            embedding_params: embedding,
            core_params: core,
            total: embedding + core,
        }
    }

    /// Parameter arrays in declaration order, the layout shared by
    /// checkpoints, gradients and optimizer state.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        match self {
            Model::Getd(m) => {
                let mut v: Vec<&[f64]> = vec![m.entities().data(), m.relations().data()];
                v.extend(m.ring().cores().iter().map(|c| c.data()));
                v
            }
            Model::NTucker(m) => vec![m.entities().data(), m.relations().data(), m.core().data()],
            Model::NCp(m) => {
                let mut v: Vec<&[f64]> = vec![m.relations().data()];
                v.extend(m.entity_matrices().iter().map(|e| e.data()));
                v
            }
        }
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Model::Getd(m) => m.param_slices_mut(),
            Model::NTucker(m) => m.param_slices_mut(),
            Model::NCp(m) => m.param_slices_mut(),
        }
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }
}
