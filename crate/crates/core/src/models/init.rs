//! Seeded model initialization and reshape-shape selection.

use super::{GetdModel, Model, ModelError, ModelKind, NCpModel, NTuckerModel, ParamCount};
use crate::tensor::{DenseTensor, Mat, TensorRing};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

/// Everything needed to build a fresh model. `k` and `ranks` only apply to
/// GETD; the other kinds ignore them. A single entry in `ranks` is repeated
/// for all k bonds.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub kind: ModelKind,
    pub arity: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub d_e: usize,
    pub d_r: usize,
    pub k: usize,
    pub ranks: Vec<usize>,
    pub seed: u64,
}

/// Picks the reshaped-core shape for GETD.
///
/// Preference order: the cubic shape when `d_e^n * d_r` has an exact k-th
/// root, the natural `[d_r, d_e, .., d_e]` when k = n+1, and otherwise the
/// n entity modes framed by a balanced factorization of `d_r` (one leading
/// factor, the rest trailing).
pub fn choose_reshape_shape(
    d_e: usize,
    d_r: usize,
    arity: usize,
    k: usize,
) -> Result<Vec<usize>, ModelError> {
    if arity == 0 || d_e == 0 || d_r == 0 {
        return Err(ModelError::Config(
            "arity and embedding dimensions must be positive".into(),
        ));
    }
    if k < arity + 1 {
        return Err(ModelError::Config(format!(
            "reshaped order k = {k} is below arity + 1 = {}; no factorization of d_e^n * d_r = {} was attempted",
            arity + 1,
            (d_e as u128).pow(arity as u32) * d_r as u128
        )));
    }
    let total = (d_e as u128).pow(arity as u32) * d_r as u128;
    if let Some(c) = exact_root(total, k) {
        return Ok(vec![c; k]);
    }
    if k == arity + 1 {
        let mut shape = vec![d_r];
        shape.extend(std::iter::repeat(d_e).take(arity));
        return Ok(shape);
    }
    let factors = balanced_factorization(d_r, k - arity);
    let mut shape = vec![factors[0]];
    shape.extend(std::iter::repeat(d_e).take(arity));
    shape.extend_from_slice(&factors[1..]);
    Ok(shape)
}

fn exact_root(total: u128, k: usize) -> Option<usize> {
    let guess = (total as f64).powf(1.0 / k as f64).round() as u128;
    for c in guess.saturating_sub(1)..=guess + 1 {
        if c == 0 {
            continue;
        }
        if let Some(p) = c.checked_pow(k as u32) {
            if p == total {
                return Some(c as usize);
            }
        }
    }
    None
}

/// Splits `x` into `parts` integer factors, each step taking the divisor
/// closest (in log space) to the geometric target, preferring the larger on
/// ties. Non-splittable remainders come out as trailing 1s.
fn balanced_factorization(x: usize, parts: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(parts);
    let mut rem = x;
    for slots in (2..=parts).rev() {
        let target = (rem as f64).ln() / slots as f64;
        let mut best = 1usize;
        let mut best_dist = f64::INFINITY;
        for d in 1..=rem {
            if rem % d != 0 {
                continue;
            }
            let dist = ((d as f64).ln() - target).abs();
            if dist < best_dist - 1e-12 || (dist < best_dist + 1e-12 && d > best) {
                best = d;
                best_dist = dist;
            }
        }
        out.push(best);
        rem /= best;
    }
    out.push(rem);
    out
}

/// Builds a model with parameters drawn from seeded normals: N(0, 0.1) for
/// embedding matrices, N(0, 1/sqrt(r_max)) for ring cores and N(0, 1) for the
/// dense n-TuckER core (matching the scale a materialized ring would have).
pub fn init_model(spec: &InitSpec) -> Result<Model, ModelError> {
    if spec.n_entities == 0 || spec.n_relations == 0 {
        return Err(ModelError::Config(format!(
            "vocabulary must be non-empty: n_entities = {}, n_relations = {}",
            spec.n_entities, spec.n_relations
        )));
    }
    if spec.arity == 0 {
        return Err(ModelError::Config("arity must be at least 1".into()));
    }
    if spec.d_e == 0 || spec.d_r == 0 {
        return Err(ModelError::Config(
            "embedding dimensions must be positive".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let embed = Normal::new(0.0, 0.1).expect("valid std");
    let mut draw_mat = |rng: &mut ChaCha12Rng, rows: usize, cols: usize| {
        Mat::from_vec(rows, cols, (0..rows * cols).map(|_| embed.sample(rng)).collect())
            .expect("mat shape")
    };

    match spec.kind {
        ModelKind::Getd => {
            let ranks = expand_ranks(&spec.ranks, spec.k)?;
            let reshape_shape = choose_reshape_shape(spec.d_e, spec.d_r, spec.arity, spec.k)?;
            let entities = draw_mat(&mut rng, spec.n_entities, spec.d_e);
            let relations = draw_mat(&mut rng, spec.n_relations, spec.d_r);
            let r_max = *ranks.iter().max().expect("k >= 2");
            let core_std = 1.0 / (r_max as f64).sqrt();
            let core_dist = Normal::new(0.0, core_std).expect("valid std");
            let mut cores = Vec::with_capacity(spec.k);
            for i in 0..spec.k {
                let shape = vec![ranks[i], reshape_shape[i], ranks[(i + 1) % spec.k]];
                let len = shape.iter().product::<usize>();
                cores.push(
                    DenseTensor::new(shape, (0..len).map(|_| core_dist.sample(&mut rng)).collect())
                        .expect("core shape"),
                );
            }
            let ring = TensorRing::new(cores)?;
            Ok(Model::Getd(GetdModel::new(
                spec.arity,
                entities,
                relations,
                ring,
                reshape_shape,
            )?))
        }
        ModelKind::NTucker => {
            let entities = draw_mat(&mut rng, spec.n_entities, spec.d_e);
            let relations = draw_mat(&mut rng, spec.n_relations, spec.d_r);
            let mut shape = vec![spec.d_r];
            shape.extend(std::iter::repeat(spec.d_e).take(spec.arity));
            let len = shape.iter().product::<usize>();
            let core_dist = Normal::new(0.0, 1.0).expect("valid std");
            let core =
                DenseTensor::new(shape, (0..len).map(|_| core_dist.sample(&mut rng)).collect())
                    .expect("core shape");
            Ok(Model::NTucker(NTuckerModel::new(
                spec.arity, entities, relations, core,
            )?))
        }
        ModelKind::NCp => {
            if spec.d_e != spec.d_r {
                return Err(ModelError::Config(format!(
                    "n-CP shares one dimension across relation and entity embeddings, got d_e = {}, d_r = {}",
                    spec.d_e, spec.d_r
                )));
            }
            let relations = draw_mat(&mut rng, spec.n_relations, spec.d_r);
            let entities = (0..spec.arity)
                .map(|_| draw_mat(&mut rng, spec.n_entities, spec.d_e))
                .collect();
            Ok(Model::NCp(NCpModel::new(relations, entities)?))
        }
    }
}

fn expand_ranks(ranks: &[usize], k: usize) -> Result<Vec<usize>, ModelError> {
    if k < 2 {
        return Err(ModelError::Config(format!(
            "GETD needs k >= 2 ring cores, got {k}"
        )));
    }
    let expanded = match ranks {
        [] => return Err(ModelError::Config("no TR-ranks given".into())),
        [r] => vec![*r; k],
        rs if rs.len() == k => rs.to_vec(),
        rs => {
            return Err(ModelError::Config(format!(
                "expected 1 or {k} TR-ranks, got {}",
                rs.len()
            )))
        }
    };
    if expanded.iter().any(|&r| r == 0) {
        return Err(ModelError::Config("TR-ranks must be positive".into()));
    }
    Ok(expanded)
}

/// Parameter accounting straight from a spec, without allocating the model.
pub fn param_count_for(spec: &InitSpec) -> Result<ParamCount, ModelError> {
    if spec.n_entities == 0 || spec.n_relations == 0 {
        return Err(ModelError::Config(format!(
            "vocabulary must be non-empty: n_entities = {}, n_relations = {}",
            spec.n_entities, spec.n_relations
        )));
    }
    let (embedding, core) = match spec.kind {
        ModelKind::Getd => {
            let ranks = expand_ranks(&spec.ranks, spec.k)?;
            let shape = choose_reshape_shape(spec.d_e, spec.d_r, spec.arity, spec.k)?;
            let core: usize = (0..spec.k)
                .map(|i| ranks[i] * shape[i] * ranks[(i + 1) % spec.k])
                .sum();
            (
                spec.n_entities * spec.d_e + spec.n_relations * spec.d_r,
                core,
            )
        }
        ModelKind::NTucker => (
            spec.n_entities * spec.d_e + spec.n_relations * spec.d_r,
            spec.d_r * spec.d_e.pow(spec.arity as u32),
        ),
        ModelKind::NCp => (
            spec.arity * spec.n_entities * spec.d_e + spec.n_relations * spec.d_r,
            0,
        ),
    };
    Ok(ParamCount {
        embedding_params: embedding,
        core_params: core,
        total: embedding + core,
    })
}
