//! GETD: n-ary relational link prediction with a Tucker outer layer whose
//! core tensor is compressed by a tensor ring.
//!
//! The crate covers the full experimental loop: dense tensor kernels, the
//! GETD / n-TuckER / n-CP scoring models, multiclass log-loss training with
//! Adam and early stopping, filtered MRR / Hits@k evaluation, n-ary tuple
//! dataset handling with a rank-1 synthetic generator, and exact
//! expressiveness constructions used as end-to-end oracles.

pub mod datasets;
pub mod evaluation;
pub mod expressiveness;
pub mod filter;
pub mod models;
pub mod tensor;
pub mod training;
pub mod verify;

pub use datasets::{generate_synthetic, load_kb, KnowledgeBase, SyntheticSpec};
pub use evaluation::{evaluate, rank_fact, EvalReport};
pub use filter::FilterIndex;
pub use models::{init_model, Fact, GetdModel, InitSpec, Model, ModelKind, NCpModel, NTuckerModel};
pub use tensor::{CpFactors, DenseTensor, TensorRing};
pub use training::{train, TrainConfig, TrainHistory};
