//! Filtered ranking metrics: MRR and Hits@{1,3,10}, per entity position and
//! aggregated, with known-true competitors removed from every candidate list.

use crate::filter::FilterIndex;
use crate::models::{Fact, Model, ModelError, Prepared};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no facts to evaluate")]
    EmptyFactSet,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Metrics for one slice of queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionReport {
    pub position: usize,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub count: usize,
}

/// Aggregated filtered metrics over facts x entity positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub per_position: Vec<PositionReport>,
    pub count: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_header() -> &'static str {
        "mrr,hits1,hits3,hits10,count"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{}",
            self.mrr, self.hits1, self.hits3, self.hits10, self.count
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MetricSums {
    reciprocal: f64,
    hits1: usize,
    hits3: usize,
    hits10: usize,
    count: usize,
}

impl MetricSums {
    fn add_rank(&mut self, rank: usize) {
        self.reciprocal += 1.0 / rank as f64;
        self.hits1 += usize::from(rank <= 1);
        self.hits3 += usize::from(rank <= 3);
        self.hits10 += usize::from(rank <= 10);
        self.count += 1;
    }

    fn merge(&mut self, other: &MetricSums) {
        self.reciprocal += other.reciprocal;
        self.hits1 += other.hits1;
        self.hits3 += other.hits3;
        self.hits10 += other.hits10;
        self.count += other.count;
    }

    fn report(&self, position: usize) -> PositionReport {
        let n = self.count.max(1) as f64;
        PositionReport {
            position,
            mrr: self.reciprocal / n,
            hits1: self.hits1 as f64 / n,
            hits3: self.hits3 as f64 / n,
            hits10: self.hits10 as f64 / n,
            count: self.count,
        }
    }
}

/// Filtered rank of the true id at `position`: one plus the number of
/// unfiltered competitors with strictly greater score. Ids forming other
/// known-true facts are removed from the competitor set; the true id itself
/// always competes. Ties do not count against the true id.
pub fn rank_fact(
    prepared: &Prepared<'_>,
    f: &Fact,
    position: usize,
    eval_filter: &FilterIndex,
) -> Result<usize, EvalError> {
    let scores = prepared.score_all(f, position)?;
    let true_id = if position == 0 {
        f.relation
    } else {
        f.entities[position - 1]
    };
    let true_score = scores[true_id];
    let filtered = eval_filter.known_true(f, position);
    let mut greater = 0usize;
    for (id, &s) in scores.iter().enumerate() {
        if id == true_id || filtered.binary_search(&id).is_ok() {
            continue;
        }
        if s > true_score {
            greater += 1;
        }
    }
    Ok(greater + 1)
}

/// Filtered MRR / Hits@k over every fact and every entity position.
pub fn evaluate(
    model: &Model,
    facts: &[Fact],
    eval_filter: &FilterIndex,
) -> Result<EvalReport, EvalError> {
    let prepared = model.prepare()?;
    evaluate_prepared(&prepared, facts, eval_filter, 1)
}

/// As [`evaluate`], with a prepared model and a worker count. Queries are
/// chunked across threads; partial sums merge in chunk order, so results do
/// not depend on scheduling.
pub fn evaluate_prepared(
    prepared: &Prepared<'_>,
    facts: &[Fact],
    eval_filter: &FilterIndex,
    workers: usize,
) -> Result<EvalReport, EvalError> {
    if facts.is_empty() {
        return Err(EvalError::EmptyFactSet);
    }
    let arity = prepared.model().arity();
    let positions: Vec<usize> = (1..=arity).collect();
    let per_position = ranks_by_position(prepared, facts, eval_filter, &positions, workers)?;

    let mut total = MetricSums::default();
    for sums in &per_position {
        total.merge(sums);
    }
    let per_position = positions
        .iter()
        .zip(&per_position)
        .map(|(&p, sums)| sums.report(p))
        .collect();
    let mut report = total.report(0);
    report.count = total.count;
    Ok(EvalReport {
        mrr: report.mrr,
        hits1: report.hits1,
        hits3: report.hits3,
        hits10: report.hits10,
        per_position,
        count: total.count,
    })
}

fn ranks_by_position(
    prepared: &Prepared<'_>,
    facts: &[Fact],
    eval_filter: &FilterIndex,
    positions: &[usize],
    workers: usize,
) -> Result<Vec<MetricSums>, EvalError> {
    let workers = workers.max(1).min(facts.len());
    if workers == 1 {
        let mut sums = vec![MetricSums::default(); positions.len()];
        for f in facts {
            for (slot, &p) in positions.iter().enumerate() {
                sums[slot].add_rank(rank_fact(prepared, f, p, eval_filter)?);
            }
        }
        return Ok(sums);
    }
    let chunk = facts.len().div_ceil(workers);
    let results: Vec<Result<Vec<MetricSums>, EvalError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = facts
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut sums = vec![MetricSums::default(); positions.len()];
                    for f in part {
                        for (slot, &p) in positions.iter().enumerate() {
                            sums[slot].add_rank(rank_fact(prepared, f, p, eval_filter)?);
                        }
                    }
                    Ok(sums)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });
    let mut merged = vec![MetricSums::default(); positions.len()];
    for part in results {
        for (slot, sums) in part?.iter().enumerate() {
            merged[slot].merge(sums);
        }
    }
    Ok(merged)
}
