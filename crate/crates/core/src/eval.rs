//! Precision, recall, per-cutoff PR curves and corpus-level evaluation
//! against ground-truth relevance sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{IndexStore, QueryOptions, RankedResults};
use crate::metrics::Metric;

/// Retrieved-and-relevant (`nir`), retrieved (`tid`) and relevant (`nid`)
/// counts. `nir <= min(tid, nid)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub nir: usize,
    pub tid: usize,
    pub nid: usize,
}

impl EvalCounts {
    pub fn new(nir: usize, tid: usize, nid: usize) -> Result<Self> {
        if nir > tid.min(nid) {
            return Err(Error::InvalidParameter(format!(
                "nir = {nir} exceeds min(tid = {tid}, nid = {nid})"
            )));
        }
        Ok(EvalCounts { nir, tid, nid })
    }

    pub fn precision(&self) -> Result<f64> {
        precision(self)
    }

    pub fn recall(&self) -> Result<f64> {
        recall(self)
    }
}

/// `nir / tid`.
pub fn precision(c: &EvalCounts) -> Result<f64> {
    if c.tid == 0 {
        return Err(Error::EmptyRetrieval);
    }
    Ok(c.nir as f64 / c.tid as f64)
}

/// `nir / nid`.
pub fn recall(c: &EvalCounts) -> Result<f64> {
    if c.nid == 0 {
        return Err(Error::NoRelevantSet);
    }
    Ok(c.nir as f64 / c.nid as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// One (recall, precision) point per cutoff `1..=ranking.len()`, without
/// interpolation.
pub fn pr_curve<'a>(
    ranking: impl IntoIterator<Item = &'a str>,
    relevant: &BTreeSet<String>,
) -> Result<Vec<PrPoint>> {
    if relevant.is_empty() {
        return Err(Error::NoRelevantSet);
    }
    let mut nir = 0;
    let mut points = Vec::new();
    for (i, id) in ranking.into_iter().enumerate() {
        if relevant.contains(id) {
            nir += 1;
        }
        let c = EvalCounts::new(nir, i + 1, relevant.len())?;
        points.push(PrPoint {
            recall: c.recall()?,
            precision: c.precision()?,
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyRetrieval);
    }
    Ok(points)
}

pub fn ranked_pr_curve(ranked: &RankedResults, relevant: &BTreeSet<String>) -> Result<Vec<PrPoint>> {
    pr_curve(ranked.ids(), relevant)
}

/// Query id to the set of image ids relevant to it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTruth {
    pub queries: BTreeMap<String, BTreeSet<String>>,
}

impl GroundTruth {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidGroundTruth(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    /// Every query and every relevant id must name an indexed image, and
    /// every relevant set must be nonempty.
    pub fn validate(&self, store: &IndexStore) -> Result<()> {
        if self.queries.is_empty() {
            return Err(Error::InvalidGroundTruth("no queries".into()));
        }
        for (q, rel) in &self.queries {
            if store.get(q).is_none() {
                return Err(Error::InvalidGroundTruth(format!("query {q} is not in the index")));
            }
            if rel.is_empty() {
                return Err(Error::InvalidGroundTruth(format!("query {q} has no relevant images")));
            }
            if let Some(missing) = rel.iter().find(|id| store.get(id).is_none()) {
                return Err(Error::InvalidGroundTruth(format!(
                    "relevant image {missing} of query {q} is not in the index"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEvaluation {
    pub query_id: String,
    pub counts: EvalCounts,
    pub precision: f64,
    pub recall: f64,
    pub curve: Vec<PrPoint>,
    pub ranking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: Metric,
    pub k: usize,
    pub queries: Vec<QueryEvaluation>,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table: one row per query, then the means.
    pub fn to_table(&self) -> String {
        let p_col = format!("P@{}", self.k);
        let r_col = format!("R@{}", self.k);
        let width = self
            .queries
            .iter()
            .map(|q| q.query_id.len())
            .chain(["query".len(), "mean".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>5}  {:>5}  {:>5}",
            "query", p_col, r_col, "NIR", "TID", "NID"
        );
        for q in &self.queries {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.4}  {:>8.4}  {:>5}  {:>5}  {:>5}",
                q.query_id, q.precision, q.recall, q.counts.nir, q.counts.tid, q.counts.nid
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.4}  {:>8.4}",
            "mean", self.mean_precision, self.mean_recall
        );
        out
    }
}

/// Evaluates one ranking against a relevant set at its full length.
pub fn evaluate_ranking(
    query_id: &str,
    ranked: &RankedResults,
    relevant: &BTreeSet<String>,
) -> Result<QueryEvaluation> {
    let curve = ranked_pr_curve(ranked, relevant)?;
    let tid = ranked.hits.len();
    let nir = ranked.ids().filter(|id| relevant.contains(*id)).count();
    let counts = EvalCounts::new(nir, tid, relevant.len())?;
    Ok(QueryEvaluation {
        query_id: query_id.to_string(),
        counts,
        precision: counts.precision()?,
        recall: counts.recall()?,
        curve,
        ranking: ranked.ids().map(str::to_string).collect(),
    })
}

/// Queries the store with every ground-truth query image (by its stored
/// vectors) and scores the top-`k` ranking of each.
pub fn evaluate_corpus(
    store: &IndexStore,
    truth: &GroundTruth,
    k: usize,
    metric: Metric,
) -> Result<EvalReport> {
    truth.validate(store)?;
    let opts = QueryOptions::new(k, metric);
    let queries = truth
        .queries
        .par_iter()
        .map(|(q, relevant)| {
            let ranked = store.query(&store.stored_query(q)?, &opts)?;
            evaluate_ranking(q, &ranked, relevant)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = queries.len() as f64;
    Ok(EvalReport {
        metric,
        k,
        mean_precision: queries.iter().map(|q| q.precision).sum::<f64>() / n,
        mean_recall: queries.iter().map(|q| q.recall).sum::<f64>() / n,
        queries,
    })
}
