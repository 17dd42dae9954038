//! n-ary tuple datasets: tab-separated files (relation label first, then n
//! entity labels), vocabularies by first appearance, seeded splits, and the
//! rank-1 synthetic generator.

use crate::filter::FilterIndex;
use crate::models::Fact;
use crate::tensor::{DenseTensor, TensorError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected {expected} tab-separated fields, got {actual}")]
    RaggedLine {
        path: String,
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{path}: no facts found")]
    EmptyFile { path: String },
    #[error("fact arity {actual} does not match expected {expected}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error(
        "no support factorization of {target} facts fits {n_relations} relations x \
         {n_entities}^{arity} entities; nearest feasible count is {suggestion}"
    )]
    InfeasibleFactCount {
        target: usize,
        n_relations: usize,
        n_entities: usize,
        arity: usize,
        suggestion: usize,
    },
    #[error("split ratios {ratios:?} must be non-negative and sum to 1")]
    BadRatios { ratios: [f64; 3] },
    #[error("id {id} out of vocabulary range {n}")]
    IdOutOfRange { id: usize, n: usize },
    #[error("synthetic spec invalid: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Vocabularies plus train/valid/test fact splits of one fixed arity.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    arity: usize,
    entity_names: Vec<String>,
    relation_names: Vec<String>,
    train: Vec<Fact>,
    valid: Vec<Fact>,
    test: Vec<Fact>,
    /// Entities first seen outside the train split (tolerated, reported).
    eval_only_entities: usize,
    /// Tuples appearing in more than one split (tolerated, reported).
    cross_split_duplicates: usize,
}

impl KnowledgeBase {
    pub fn from_parts(
        arity: usize,
        entity_names: Vec<String>,
        relation_names: Vec<String>,
        train: Vec<Fact>,
        valid: Vec<Fact>,
        test: Vec<Fact>,
    ) -> Result<Self, DataError> {
        let n_e = entity_names.len();
        let n_r = relation_names.len();
        for f in train.iter().chain(&valid).chain(&test) {
            if f.arity() != arity {
                return Err(DataError::ArityMismatch {
                    expected: arity,
                    actual: f.arity(),
                });
            }
            if f.relation >= n_r {
                return Err(DataError::IdOutOfRange {
                    id: f.relation,
                    n: n_r,
                });
            }
            if let Some(&e) = f.entities.iter().find(|&&e| e >= n_e) {
                return Err(DataError::IdOutOfRange { id: e, n: n_e });
            }
        }
        let mut seen: HashSet<&Fact> = train.iter().collect();
        let mut duplicates = 0;
        for f in valid.iter().chain(&test) {
            if !seen.insert(f) {
                duplicates += 1;
            }
        }
        Ok(Self {
            arity,
            entity_names,
            relation_names,
            train,
            valid,
            test,
            eval_only_entities: 0,
            cross_split_duplicates: duplicates,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn n_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn train(&self) -> &[Fact] {
        &self.train
    }

    pub fn valid(&self) -> &[Fact] {
        &self.valid
    }

    pub fn test(&self) -> &[Fact] {
        &self.test
    }

    pub fn split(&self, name: &str) -> Option<&[Fact]> {
        match name {
            "train" => Some(&self.train),
            "valid" => Some(&self.valid),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    pub fn eval_only_entities(&self) -> usize {
        self.eval_only_entities
    }

    pub fn cross_split_duplicates(&self) -> usize {
        self.cross_split_duplicates
    }

    /// Loss filter: known-true completions within the train split only.
    pub fn loss_filter(&self) -> FilterIndex {
        FilterIndex::build(&[&self.train], self.arity).expect("splits share the KB arity")
    }

    /// Evaluation filter: known-true completions across all three splits.
    pub fn eval_filter(&self) -> FilterIndex {
        FilterIndex::build(&[&self.train, &self.valid, &self.test], self.arity)
            .expect("splits share the KB arity")
    }
}

/// Loads the three split files. Ids are assigned by first appearance in
/// train, then valid, then test order; entities first seen outside train are
/// admitted and counted in [`KnowledgeBase::eval_only_entities`].
pub fn load_kb(train: &Path, valid: &Path, test: &Path) -> Result<KnowledgeBase, DataError> {
    let mut entities = Vocab::default();
    let mut relations = Vocab::default();
    let mut arity = None;

    let train_facts = parse_file(train, &mut arity, &mut relations, &mut entities)?;
    if train_facts.is_empty() {
        return Err(DataError::EmptyFile {
            path: train.display().to_string(),
        });
    }
    let train_entities = entities.names.len();
    let valid_facts = parse_file(valid, &mut arity, &mut relations, &mut entities)?;
    let test_facts = parse_file(test, &mut arity, &mut relations, &mut entities)?;
    let eval_only = entities.names.len() - train_entities;

    let mut kb = KnowledgeBase::from_parts(
        arity.expect("train split is non-empty"),
        entities.names,
        relations.names,
        train_facts,
        valid_facts,
        test_facts,
    )?;
    kb.eval_only_entities = eval_only;
    Ok(kb)
}

#[derive(Default)]
struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }
}

fn parse_file(
    path: &Path,
    arity: &mut Option<usize>,
    relations: &mut Vocab,
    entities: &mut Vocab,
) -> Result<Vec<Fact>, DataError> {
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut facts = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let expected = match *arity {
            Some(a) => a + 1,
            None => {
                if fields.len() < 2 {
                    return Err(DataError::RaggedLine {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        expected: 2,
                        actual: fields.len(),
                    });
                }
                *arity = Some(fields.len() - 1);
                fields.len()
            }
        };
        if fields.len() != expected {
            return Err(DataError::RaggedLine {
                path: path.display().to_string(),
                line: lineno + 1,
                expected,
                actual: fields.len(),
            });
        }
        let relation = relations.intern(fields[0]);
        let ents = fields[1..].iter().map(|f| entities.intern(f)).collect();
        facts.push(Fact::new(relation, ents));
    }
    Ok(facts)
}

/// Writes `train.txt`, `valid.txt`, `test.txt` under `dir` in the same
/// tab-separated layout `load_kb` reads.
pub fn write_kb(kb: &KnowledgeBase, dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, facts) in [
        ("train.txt", kb.train()),
        ("valid.txt", kb.valid()),
        ("test.txt", kb.test()),
    ] {
        let path = dir.join(name);
        let mut out = String::new();
        for f in facts {
            out.push_str(&kb.relation_names[f.relation]);
            for &e in &f.entities {
                out.push('\t');
                out.push_str(&kb.entity_names[e]);
            }
            out.push('\n');
        }
        std::fs::write(&path, out).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Spec for a rank-1 synthetic KB in the style of the 10-entity toy datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_relations: usize,
    pub arity: usize,
    pub target_fact_count: usize,
    pub split_ratios: [f64; 3],
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(
        n_entities: usize,
        n_relations: usize,
        arity: usize,
        target_fact_count: usize,
        seed: u64,
    ) -> Self {
        Self {
            n_entities,
            n_relations,
            arity,
            target_fact_count,
            split_ratios: [0.8, 0.1, 0.1],
            seed,
        }
    }
}

/// How a synthetic KB was generated: the seed plus the per-mode supports of
/// the rank-1 indicator tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticProvenance {
    pub spec: SyntheticSpec,
    pub support_sizes: Vec<usize>,
    /// supports[0] holds relation ids, supports[1..] entity ids per slot.
    pub supports: Vec<Vec<usize>>,
}

/// Generates a KB whose truth tensor is a rank-1 indicator outer product:
/// random per-mode supports with sizes multiplying to the target count, all
/// their combinations enumerated as true facts, shuffled and split.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(KnowledgeBase, SyntheticProvenance), DataError> {
    if spec.n_entities == 0 || spec.n_relations == 0 || spec.arity == 0 {
        return Err(DataError::BadSpec(
            "entities, relations and arity must be positive".into(),
        ));
    }
    if spec.target_fact_count == 0 {
        return Err(DataError::BadSpec("target fact count must be positive".into()));
    }
    check_ratios(spec.split_ratios)?;

    let mut bounds = vec![spec.n_relations];
    bounds.extend(std::iter::repeat(spec.n_entities).take(spec.arity));
    let sizes = match factorize_within(spec.target_fact_count, &bounds) {
        Some(s) => s,
        None => {
            let suggestion = nearest_feasible(spec.target_fact_count, &bounds);
            return Err(DataError::InfeasibleFactCount {
                target: spec.target_fact_count,
                n_relations: spec.n_relations,
                n_entities: spec.n_entities,
                arity: spec.arity,
                suggestion,
            });
        }
    };

    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut supports = Vec::with_capacity(sizes.len());
    for (mode, &size) in sizes.iter().enumerate() {
        let universe = bounds[mode];
        let mut ids: Vec<usize> = (0..universe).collect();
        ids.shuffle(&mut rng);
        ids.truncate(size);
        ids.sort_unstable();
        supports.push(ids);
    }

    // enumerate the full combinatorial rectangle
    let mut facts = Vec::with_capacity(spec.target_fact_count);
    let mut idx = vec![0usize; supports.len()];
    loop {
        let relation = supports[0][idx[0]];
        let entities = (1..supports.len()).map(|m| supports[m][idx[m]]).collect();
        facts.push(Fact::new(relation, entities));
        let mut m = supports.len();
        loop {
            if m == 0 {
                break;
            }
            m -= 1;
            idx[m] += 1;
            if idx[m] < supports[m].len() {
                break;
            }
            idx[m] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    debug_assert_eq!(facts.len(), spec.target_fact_count);

    let (train, valid, test) = split_dataset(&facts, spec.split_ratios, spec.seed)?;
    let entity_names = (0..spec.n_entities).map(|i| format!("e{i}")).collect();
    let relation_names = (0..spec.n_relations).map(|i| format!("r{i}")).collect();
    let kb = KnowledgeBase::from_parts(
        spec.arity,
        entity_names,
        relation_names,
        train,
        valid,
        test,
    )?;
    let provenance = SyntheticProvenance {
        spec: spec.clone(),
        support_sizes: sizes,
        supports,
    };
    Ok((kb, provenance))
}

/// Factorizes `target` into one factor per bound, factor i at most bounds[i],
/// trying larger factors first. Deterministic.
fn factorize_within(target: usize, bounds: &[usize]) -> Option<Vec<usize>> {
    fn go(rem: usize, bounds: &[usize], acc: &mut Vec<usize>) -> bool {
        let Some((&bound, rest)) = bounds.split_first() else {
            return rem == 1;
        };
        let capacity = rest
            .iter()
            .try_fold(bound as u128, |acc, &b| acc.checked_mul(b as u128));
        match capacity {
            Some(c) if (rem as u128) > c => return false,
            None => {} // unbounded enough
            _ => {}
        }
        for d in (1..=bound.min(rem)).rev() {
            if rem % d == 0 {
                acc.push(d);
                if go(rem / d, rest, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        false
    }
    let mut acc = Vec::with_capacity(bounds.len());
    go(target, bounds, &mut acc).then_some(acc)
}

fn nearest_feasible(target: usize, bounds: &[usize]) -> usize {
    let capacity: u128 = bounds.iter().map(|&b| b as u128).product();
    for delta in 1.. {
        if target > delta {
            let down = target - delta;
            if factorize_within(down, bounds).is_some() {
                return down;
            }
        }
        let up = target + delta;
        if (up as u128) <= capacity && factorize_within(up, bounds).is_some() {
            return up;
        }
        if target <= delta && (up as u128) > capacity {
            return 1;
        }
    }
    unreachable!("count 1 is always feasible")
}

fn check_ratios(ratios: [f64; 3]) -> Result<(), DataError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|&r| r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadRatios { ratios });
    }
    Ok(())
}

/// Seeded shuffle then contiguous cut; valid and test sizes round down, the
/// remainder goes to train.
pub fn split_dataset<T: Clone>(
    items: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), DataError> {
    check_ratios(ratios)?;
    let mut shuffled: Vec<T> = items.to_vec();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let n = shuffled.len();
    let n_valid = (n as f64 * ratios[1]).floor() as usize;
    let n_test = (n as f64 * ratios[2]).floor() as usize;
    let n_train = n - n_valid - n_test;
    let test = shuffled.split_off(n_train + n_valid);
    let valid = shuffled.split_off(n_train);
    Ok((shuffled, valid, test))
}

/// Binary KB tensor of shape `[n_r, n_e, .., n_e]` with a 1 at every fact of
/// every split.
pub fn kb_to_tensor(kb: &KnowledgeBase, cap: usize) -> Result<DenseTensor, DataError> {
    let mut shape = vec![kb.n_relations()];
    shape.extend(std::iter::repeat(kb.n_entities()).take(kb.arity()));
    let elements = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    match elements {
        Some(e) if e <= cap => {}
        _ => {
            return Err(TensorError::CapacityExceeded {
                required: elements.unwrap_or(usize::MAX),
                allowed: cap,
            }
            .into())
        }
    }
    let mut t = DenseTensor::zeros(shape);
    let mut index = Vec::with_capacity(kb.arity() + 1);
    for f in kb.train().iter().chain(kb.valid()).chain(kb.test()) {
        index.clear();
        index.push(f.relation);
        index.extend_from_slice(&f.entities);
        t.set(&index, 1.0)?;
    }
    Ok(t)
}

/// One-line textual summary used by the CLI.
pub fn describe(kb: &KnowledgeBase) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "arity {} | {} entities, {} relations | train {} / valid {} / test {}",
        kb.arity(),
        kb.n_entities(),
        kb.n_relations(),
        kb.train().len(),
        kb.valid().len(),
        kb.test().len()
    );
    if kb.eval_only_entities() > 0 {
        let _ = write!(s, " | {} entities unseen in train", kb.eval_only_entities());
    }
    if kb.cross_split_duplicates() > 0 {
        let _ = write!(s, " | {} cross-split duplicates", kb.cross_split_duplicates());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic10_3_counts_match() {
        let spec = SyntheticSpec::new(10, 2, 3, 500, 7);
        let (kb, prov) = generate_synthetic(&spec).unwrap();
        assert_eq!(kb.train().len(), 400);
        assert_eq!(kb.valid().len(), 50);
        assert_eq!(kb.test().len(), 50);
        assert_eq!(kb.n_entities(), 10);
        assert_eq!(kb.n_relations(), 2);
        let product: usize = prov.support_sizes.iter().product();
        assert_eq!(product, 500);
        assert_eq!(kb.cross_split_duplicates(), 0);
    }

    #[test]
    fn synthetic10_4_counts_match() {
        let spec = SyntheticSpec::new(10, 2, 4, 1500, 3);
        let (kb, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(
            (kb.train().len(), kb.valid().len(), kb.test().len()),
            (1200, 150, 150)
        );
    }

    #[test]
    fn single_fact_target() {
        let spec = SyntheticSpec::new(10, 2, 3, 1, 0);
        let (kb, prov) = generate_synthetic(&spec).unwrap();
        assert_eq!(prov.support_sizes, vec![1, 1, 1, 1]);
        assert_eq!(
            kb.train().len() + kb.valid().len() + kb.test().len(),
            1
        );
    }

    #[test]
    fn infeasible_count_suggests_alternative() {
        // 7 is prime and exceeds every bound of a 2-relation/4-entity arity-2 KB
        let spec = SyntheticSpec::new(4, 2, 2, 7, 0);
        match generate_synthetic(&spec) {
            Err(DataError::InfeasibleFactCount { suggestion, .. }) => {
                assert!(factorize_within(suggestion, &[2, 4, 4]).is_some());
                assert!(suggestion == 6 || suggestion == 8);
            }
            other => panic!("expected infeasible error, got {other:?}"),
        }
    }

    #[test]
    fn splits_are_deterministic_and_sized() {
        let items: Vec<usize> = (0..10).collect();
        let (a1, b1, c1) = split_dataset(&items, [0.8, 0.1, 0.1], 5).unwrap();
        let (a2, b2, c2) = split_dataset(&items, [0.8, 0.1, 0.1], 5).unwrap();
        assert_eq!((a1.len(), b1.len(), c1.len()), (8, 1, 1));
        assert_eq!((a1, b1, c1), (a2, b2, c2));
    }

    #[test]
    fn kb_to_tensor_marks_every_fact_once() {
        let spec = SyntheticSpec::new(5, 2, 2, 12, 1);
        let (kb, _) = generate_synthetic(&spec).unwrap();
        let t = kb_to_tensor(&kb, 1_000).unwrap();
        let ones = t.data().iter().filter(|&&x| x == 1.0).count();
        assert_eq!(ones, 12);
        assert!(t.is_binary());
    }

    #[test]
    fn kb_tensor_is_outer_product_of_supports() {
        let spec = SyntheticSpec::new(6, 3, 2, 8, 11);
        let (kb, prov) = generate_synthetic(&spec).unwrap();
        let t = kb_to_tensor(&kb, 1_000).unwrap();
        for idx in t.indices() {
            let inside = prov.supports[0].contains(&idx[0])
                && prov.supports[1].contains(&idx[1])
                && prov.supports[2].contains(&idx[2]);
            assert_eq!(t.get(&idx).unwrap(), if inside { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn load_write_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let train = dir.path().join("train.txt");
        let valid = dir.path().join("valid.txt");
        let test = dir.path().join("test.txt");
        std::fs::write(&train, "buys\talice\tbread\tmarket\n").unwrap();
        std::fs::write(&valid, "buys\tbob\tbread\tmarket\n").unwrap();
        std::fs::write(&test, "sells\tmarket\tbread\tbob\n").unwrap();
        let kb = load_kb(&train, &valid, &test).unwrap();
        assert_eq!(kb.arity(), 3);
        assert_eq!(kb.n_entities(), 5);
        assert_eq!(kb.n_relations(), 2);
        assert_eq!(kb.eval_only_entities(), 1); // bob first appears in valid

        let out = dir.path().join("rt");
        write_kb(&kb, &out).unwrap();
        let kb2 = load_kb(
            &out.join("train.txt"),
            &out.join("valid.txt"),
            &out.join("test.txt"),
        )
        .unwrap();
        assert_eq!(kb.entity_names(), kb2.entity_names());
        assert_eq!(kb.relation_names(), kb2.relation_names());
        assert_eq!(kb.train(), kb2.train());
        assert_eq!(kb.valid(), kb2.valid());
        assert_eq!(kb.test(), kb2.test());
    }

    #[test]
    fn ragged_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let train = dir.path().join("train.txt");
        std::fs::write(&train, "r\ta\tb\nr\ta\n").unwrap();
        let err = load_kb(&train, &train, &train).unwrap_err();
        match err {
            DataError::RaggedLine { line, expected, actual, .. } => {
                assert_eq!((line, expected, actual), (2, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let missing = Path::new("/nonexistent/getd/train.txt");
        assert!(matches!(
            load_kb(missing, missing, missing),
            Err(DataError::Io { .. })
        ));
    }
}
