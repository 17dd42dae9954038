//! Scoring paths shared by evaluation and the loss.
//!
//! Aligned GETD models (identity reshape) contract the factor vectors
//! directly against the ring cores: each scoring mode mixes one core's
//! lateral slices and the score is the trace of the resulting matrix chain.
//! Everything else scores against a dense core, which for GETD means
//! materializing the ring once per `Prepared`.

use super::{Fact, GetdModel, Model, ModelError, NCpModel, NTuckerModel};
use crate::tensor::{dot, mode_product, multilinear_dot, DenseTensor, Mat};

/// A model fixed for scoring. Cheap for everything except dense-path GETD,
/// which materializes its core here; build it once per parameter state.
#[derive(Debug)]
pub struct Prepared<'a> {
    model: &'a Model,
    core: Option<DenseTensor>,
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(model: &'a Model, cap: usize) -> Result<Self, ModelError> {
        let core = match model {
            Model::Getd(g) if !chain_preferred(g, cap) => Some(g.materialized_core(cap)?),
            _ => None,
        };
        Ok(Self { model, core })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    #[cfg(test)]
    pub(crate) fn has_materialized_core(&self) -> bool {
        self.core.is_some()
    }

    /// Score of one fact under fixed parameters.
    pub fn score(&self, f: &Fact) -> Result<f64, ModelError> {
        self.model.check_fact(f)?;
        match (self.model, &self.core) {
            (Model::NCp(m), _) => ncp_score(m, f),
            (Model::NTucker(m), _) => Ok(dense_full_score(m.core(), m, f)),
            (Model::Getd(g), Some(core)) => Ok(dense_full_score(core, g, f)),
            (Model::Getd(g), None) => ring_full_score(g, f),
        }
    }

    /// Scores of the fact with the slot at `position` replaced by every
    /// candidate: entities for positions 1..=n, relations for position 0.
    ///
    /// All non-varied slots are contracted first; the result is one
    /// matrix-vector product against the full embedding matrix.
    pub fn score_all(&self, f: &Fact, position: usize) -> Result<Vec<f64>, ModelError> {
        let (q, candidates) = self.response(f, position)?;
        Ok(candidates.matvec(&q))
    }

    /// The contraction of every slot except `position`, paired with the
    /// candidate embedding matrix it is scored against.
    pub(crate) fn response(
        &self,
        f: &Fact,
        position: usize,
    ) -> Result<(Vec<f64>, &Mat), ModelError> {
        self.model.check_fact(f)?;
        if position > self.model.arity() {
            return Err(ModelError::PositionOutOfRange {
                position,
                arity: self.model.arity(),
            });
        }
        match (self.model, &self.core) {
            (Model::NCp(m), _) => {
                let q = ncp_response(m, f, position);
                let cand = if position == 0 {
                    m.relations()
                } else {
                    m.entities_at(position)
                };
                Ok((q, cand))
            }
            (Model::NTucker(m), _) => {
                let q = dense_response(m.core(), m, f, position)?;
                let cand = if position == 0 { m.relations() } else { m.entities() };
                Ok((q, cand))
            }
            (Model::Getd(g), Some(core)) => {
                let q = dense_response(core, g, f, position)?;
                let cand = if position == 0 { g.relations() } else { g.entities() };
                Ok((q, cand))
            }
            (Model::Getd(g), None) => {
                let q = ring_response(g, f, position)?;
                let cand = if position == 0 { g.relations() } else { g.entities() };
                Ok((q, cand))
            }
        }
    }
}

/// Whether an aligned model should skip materialization. The chain path costs
/// about `k * r_max^3` per score, a one-off materialization about
/// `N * r_1 * r_min`; the dense core pays off only when it amortizes fast,
/// as in the expressiveness constructions where ranks dwarf mode sizes.
fn chain_preferred(g: &GetdModel, cap: usize) -> bool {
    if !g.is_aligned() {
        return false;
    }
    let elements: usize = g.reshape_shape().iter().product();
    if elements > cap {
        return true;
    }
    let ranks = g.ring().ranks();
    let r_max = *ranks.iter().max().expect("k >= 2");
    let r_min = *ranks.iter().min().expect("k >= 2");
    let materialize = elements as u128 * (ranks[0] * r_min) as u128;
    let per_score = (g.k() * r_max * r_max * r_max) as u128;
    materialize > 16 * per_score
}

trait EmbeddingRows {
    fn relation_row(&self, id: usize) -> &[f64];
    fn entity_row(&self, id: usize) -> &[f64];
}

impl EmbeddingRows for GetdModel {
    fn relation_row(&self, id: usize) -> &[f64] {
        self.relations().row(id)
    }
    fn entity_row(&self, id: usize) -> &[f64] {
        self.entities().row(id)
    }
}

impl EmbeddingRows for NTuckerModel {
    fn relation_row(&self, id: usize) -> &[f64] {
        self.relations().row(id)
    }
    fn entity_row(&self, id: usize) -> &[f64] {
        self.entities().row(id)
    }
}

fn dense_full_score(core: &DenseTensor, m: &impl EmbeddingRows, f: &Fact) -> f64 {
    let mut acc = mode_product(core, m.relation_row(f.relation), 0).expect("core shape");
    for &e in &f.entities {
        acc = mode_product(&acc, m.entity_row(e), 0).expect("core shape");
    }
    acc.data()[0]
}

/// Dense response: contract the relation (unless varied) and every non-varied
/// entity slot, leaving the varied mode as a vector.
fn dense_response(
    core: &DenseTensor,
    m: &impl EmbeddingRows,
    f: &Fact,
    varied: usize,
) -> Result<Vec<f64>, ModelError> {
    let n = f.entities.len();
    if varied == 0 {
        let mut acc = mode_product(core, m.entity_row(f.entities[n - 1]), n)?;
        for j in (1..n).rev() {
            acc = mode_product(&acc, m.entity_row(f.entities[j - 1]), j)?;
        }
        Ok(acc.into_data())
    } else {
        let mut acc = mode_product(core, m.relation_row(f.relation), 0)?;
        for j in (1..=n).rev() {
            if j == varied {
                continue;
            }
            acc = mode_product(&acc, m.entity_row(f.entities[j - 1]), j - 1)?;
        }
        Ok(acc.into_data())
    }
}

/// Per-mode slice mixes for an aligned model: core 0 weighted by the relation
/// row, core j by the entity row in slot j.
pub(crate) fn mixed_matrices(g: &GetdModel, f: &Fact) -> Result<Vec<Mat>, ModelError> {
    let mut out = Vec::with_capacity(g.k());
    out.push(g.ring().mix_slices(0, g.relations().row(f.relation))?);
    for &e in &f.entities {
        out.push(g.ring().mix_slices(out.len(), g.entities().row(e))?);
    }
    Ok(out)
}

fn ring_full_score(g: &GetdModel, f: &Fact) -> Result<f64, ModelError> {
    let mixed = mixed_matrices(g, f)?;
    let mut acc = mixed[0].clone();
    for m in &mixed[1..] {
        acc = acc.matmul(m);
    }
    Ok(acc.trace())
}

/// Aligned response: the complement chain product around the varied core,
/// traced against that core's slices.
fn ring_response(g: &GetdModel, f: &Fact, varied: usize) -> Result<Vec<f64>, ModelError> {
    let mixed = mixed_matrices(g, f)?;
    let k = g.k();
    let mut chain: Option<Mat> = None;
    for step in 1..k {
        let j = (varied + step) % k;
        chain = Some(match chain {
            None => mixed[j].clone(),
            Some(c) => c.matmul(&mixed[j]),
        });
    }
    let complement = chain.expect("k >= 2");
    Ok(trace_against_slices(&g.ring().cores()[varied], &complement))
}

/// `q[i] = sum_{a,b} core[a, i, b] * complement[b, a]`.
pub(crate) fn trace_against_slices(core: &DenseTensor, complement: &Mat) -> Vec<f64> {
    let [r1, n, r2] = [core.shape()[0], core.shape()[1], core.shape()[2]];
    debug_assert_eq!(complement.rows(), r2);
    debug_assert_eq!(complement.cols(), r1);
    let ct = complement.transpose();
    let mut q = vec![0.0; n];
    let data = core.data();
    for a in 0..r1 {
        let crow = ct.row(a);
        for (i, qi) in q.iter_mut().enumerate() {
            let zrow = &data[(a * n + i) * r2..(a * n + i + 1) * r2];
            *qi += dot(zrow, crow);
        }
    }
    q
}

fn ncp_score(m: &NCpModel, f: &Fact) -> Result<f64, ModelError> {
    let mut rows: Vec<&[f64]> = Vec::with_capacity(f.arity() + 1);
    rows.push(m.relations().row(f.relation));
    for (j, &e) in f.entities.iter().enumerate() {
        rows.push(m.entities_at(j + 1).row(e));
    }
    Ok(multilinear_dot(&rows)?)
}

fn ncp_response(m: &NCpModel, f: &Fact, varied: usize) -> Vec<f64> {
    let d = m.dim();
    let mut q = vec![1.0; d];
    if varied != 0 {
        for (qi, &r) in q.iter_mut().zip(m.relations().row(f.relation)) {
            *qi *= r;
        }
    }
    for (j, &e) in f.entities.iter().enumerate() {
        if j + 1 == varied {
            continue;
        }
        for (qi, &x) in q.iter_mut().zip(m.entities_at(j + 1).row(e)) {
            *qi *= x;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{init_model, InitSpec, ModelKind};
    use crate::tensor::DEFAULT_MATERIALIZE_CAP;

    fn toy_getd(seed: u64) -> Model {
        init_model(&InitSpec {
            kind: ModelKind::Getd,
            arity: 3,
            n_entities: 6,
            n_relations: 3,
            d_e: 4,
            d_r: 2,
            k: 4,
            ranks: vec![3],
            seed,
        })
        .unwrap()
    }

    #[test]
    fn aligned_chain_and_materialized_core_agree() {
        let model = toy_getd(11);
        let Model::Getd(g) = &model else { unreachable!() };
        assert!(g.is_aligned());
        let chain = Prepared {
            model: &model,
            core: None,
        };
        let dense = Prepared {
            model: &model,
            core: Some(g.materialized_core(DEFAULT_MATERIALIZE_CAP).unwrap()),
        };
        let f = Fact::new(1, vec![0, 3, 5]);
        assert!((chain.score(&f).unwrap() - dense.score(&f).unwrap()).abs() < 1e-10);
        for pos in 0..=3 {
            let a = chain.score_all(&f, pos).unwrap();
            let b = dense.score_all(&f, pos).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn score_all_matches_independent_scores() {
        for (kind, d_r) in [
            (ModelKind::Getd, 2),
            (ModelKind::NTucker, 2),
            (ModelKind::NCp, 4),
        ] {
            let model = init_model(&InitSpec {
                kind,
                arity: 2,
                n_entities: 5,
                n_relations: 3,
                d_e: 4,
                d_r,
                k: 3,
                ranks: vec![2],
                seed: 5,
            })
            .unwrap();
            let p = model.prepare().unwrap();
            let f = Fact::new(2, vec![1, 4]);
            for pos in 0..=2 {
                let batch = p.score_all(&f, pos).unwrap();
                let expected_len = if pos == 0 { 3 } else { 5 };
                assert_eq!(batch.len(), expected_len);
                for cand in 0..expected_len {
                    let mut g = f.clone();
                    if pos == 0 {
                        g.relation = cand;
                    } else {
                        g.entities[pos - 1] = cand;
                    }
                    assert!(
                        (batch[cand] - p.score(&g).unwrap()).abs() < 1e-10,
                        "kind {kind} pos {pos} cand {cand}"
                    );
                }
            }
        }
    }

    #[test]
    fn score_all_self_consistency_at_true_slot() {
        let model = toy_getd(3);
        let p = model.prepare().unwrap();
        let f = Fact::new(0, vec![2, 2, 1]);
        for pos in 1..=3 {
            let scores = p.score_all(&f, pos).unwrap();
            assert!((scores[f.entities[pos - 1]] - p.score(&f).unwrap()).abs() < 1e-10);
        }
        let rel_scores = p.score_all(&f, 0).unwrap();
        assert!((rel_scores[f.relation] - p.score(&f).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn zero_ring_scores_zero() {
        let mut model = toy_getd(9);
        if let Model::Getd(g) = &mut model {
            for c in g.ring.cores_mut() {
                c.data_mut().fill(0.0);
            }
        }
        let p = model.prepare().unwrap();
        assert_eq!(p.score(&Fact::new(0, vec![0, 1, 2])).unwrap(), 0.0);
    }

    #[test]
    fn score_is_multilinear_in_entity_rows() {
        let mut model = toy_getd(17);
        let f = Fact::new(1, vec![4, 0, 2]);
        let base = model.score(&f).unwrap();
        if let Model::Getd(g) = &mut model {
            for v in g.entities.row_mut(4) {
                *v *= 2.0;
            }
        }
        // doubling is exact in binary floating point
        assert_eq!(model.score(&f).unwrap(), 2.0 * base);
    }

    #[test]
    fn ncp_dim_one_score_is_plain_product() {
        let model = init_model(&InitSpec {
            kind: ModelKind::NCp,
            arity: 2,
            n_entities: 3,
            n_relations: 2,
            d_e: 1,
            d_r: 1,
            k: 0,
            ranks: vec![],
            seed: 2,
        })
        .unwrap();
        let Model::NCp(m) = &model else { unreachable!() };
        let f = Fact::new(1, vec![0, 2]);
        let expected = m.relations().get(1, 0)
            * m.entities_at(1).get(0, 0)
            * m.entities_at(2).get(2, 0);
        assert!((model.score(&f).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn position_out_of_range_is_error() {
        let model = toy_getd(1);
        assert!(matches!(
            model.score_all(&Fact::new(0, vec![0, 1, 2]), 4),
            Err(ModelError::PositionOutOfRange { .. })
        ));
    }
}
