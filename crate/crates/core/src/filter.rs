//! Per-query sets of known-true completions.
//!
//! A query is a fact with one slot removed. The index maps each query to the
//! ids that complete it into a known fact. Built over the train split only it
//! filters the loss denominators; built over all three splits it filters
//! ranking competitors.

use crate::datasets::DataError;
use crate::models::Fact;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    position: usize,
    // full tuple with the held slot removed: entities for position 0,
    // relation followed by the remaining entities otherwise
    fields: Box<[usize]>,
}

fn key_for(f: &Fact, position: usize) -> Key {
    let mut fields = Vec::with_capacity(f.arity());
    if position != 0 {
        fields.push(f.relation);
    }
    for (j, &e) in f.entities.iter().enumerate() {
        if j + 1 != position {
            fields.push(e);
        }
    }
    Key {
        position,
        fields: fields.into_boxed_slice(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    map: HashMap<Key, Vec<usize>>,
}

impl FilterIndex {
    /// Indexes every (fact, position) query over the given splits, including
    /// the relation slot (position 0).
    pub fn build(splits: &[&[Fact]], arity: usize) -> Result<Self, DataError> {
        let mut map: HashMap<Key, Vec<usize>> = HashMap::new();
        for split in splits {
            for f in *split {
                if f.arity() != arity {
                    return Err(DataError::ArityMismatch {
                        expected: arity,
                        actual: f.arity(),
                    });
                }
                for position in 0..=arity {
                    let held = if position == 0 {
                        f.relation
                    } else {
                        f.entities[position - 1]
                    };
                    map.entry(key_for(f, position)).or_default().push(held);
                }
            }
        }
        for ids in map.values_mut() {
            ids.sort_unstable();
            ids.dedup();
        }
        Ok(Self { map })
    }

    /// Sorted ids known to complete the query `f`-with-hole-at-`position`.
    /// Contains the fact's own id whenever the fact was indexed.
    pub fn known_true(&self, f: &Fact, position: usize) -> &[usize] {
        self.map
            .get(&key_for(f, position))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn query_count(&self) -> usize {
        self.map.len()
    }
}

/// See [`FilterIndex::build`].
pub fn build_filter_index(splits: &[&[Fact]], arity: usize) -> Result<FilterIndex, DataError> {
    FilterIndex::build(splits, arity)
}
