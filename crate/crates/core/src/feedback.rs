//! Relevance feedback: per-session Rocchio refinement of a query vector in
//! normalized feature space.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{FeatureQuery, IndexStore, QueryOptions, RankedResults};
use crate::signature::Signature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Relevant,
    NotRelevant,
    Neutral,
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relevant" => Ok(Label::Relevant),
            "not_relevant" => Ok(Label::NotRelevant),
            "neutral" => Ok(Label::Neutral),
            other => Err(Error::InvalidParameter(format!("unknown label {other}"))),
        }
    }
}

/// Weights of the query, the relevant mean and the not-relevant mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocchioParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RocchioParams {
    fn default() -> Self {
        RocchioParams {
            alpha: 1.0,
            beta: 0.75,
            gamma: 0.25,
        }
    }
}

fn mean(vectors: &[&[f64]], dims: usize) -> Option<Vec<f64>> {
    if vectors.is_empty() {
        return None;
    }
    let mut acc = vec![0.0; dims];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    Some(acc.into_iter().map(|a| a / n).collect())
}

/// `alpha*q + beta*mean(relevant) - gamma*mean(not_relevant)`, clipped at 0.
/// An empty class contributes nothing; both empty is an error.
pub fn rocchio(
    q: &[f64],
    relevant: &[&[f64]],
    not_relevant: &[&[f64]],
    params: &RocchioParams,
) -> Result<Vec<f64>> {
    if relevant.is_empty() && not_relevant.is_empty() {
        return Err(Error::AllNeutral);
    }
    if let Some(v) = relevant.iter().chain(not_relevant).find(|v| v.len() != q.len()) {
        return Err(Error::LengthMismatch {
            left: q.len(),
            right: v.len(),
        });
    }
    let pos = mean(relevant, q.len());
    let neg = mean(not_relevant, q.len());
    Ok((0..q.len())
        .map(|i| {
            let mut x = params.alpha * q[i];
            if let Some(p) = &pos {
                x += params.beta * p[i];
            }
            if let Some(n) = &neg {
                x -= params.gamma * n[i];
            }
            x.max(0.0)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRound {
    pub labels: BTreeMap<String, Label>,
    pub resulting_fv: Vec<f64>,
}

/// A query under refinement. Rounds are append-only; `current_fv` is the
/// last round's result, or `original.norm` before any feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSession {
    pub session_id: String,
    pub config_hash: String,
    pub params: RocchioParams,
    pub original: FeatureQuery,
    pub current_fv: Vec<f64>,
    pub rounds: Vec<FeedbackRound>,
}

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

/// Next process-wide session id (`s1`, `s2`, ...).
pub fn next_session_id() -> String {
    format!("s{}", NEXT_SESSION.fetch_add(1, Ordering::Relaxed))
}

/// Opens a session on a query signature; it must have been extracted with
/// the store's config.
pub fn start_session(store: &IndexStore, query: &Signature, params: RocchioParams) -> Result<FeedbackSession> {
    FeedbackSession::new(next_session_id(), store, store.prepare(query)?, params)
}

impl FeedbackSession {
    /// Opens a session on a query already normalized against `store`.
    pub fn new(
        session_id: impl Into<String>,
        store: &IndexStore,
        query: FeatureQuery,
        params: RocchioParams,
    ) -> Result<Self> {
        let layout = store.layout();
        layout.check(&query.raw)?;
        layout.check(&query.norm)?;
        Ok(FeedbackSession {
            session_id: session_id.into(),
            config_hash: store.config_hash().to_string(),
            params,
            current_fv: query.norm.clone(),
            original: query,
            rounds: Vec::new(),
        })
    }

    pub fn round(&self) -> usize {
        self.rounds.len()
    }

    fn check_store(&self, store: &IndexStore) -> Result<()> {
        if self.config_hash != store.config_hash() {
            return Err(Error::ConfigMismatch {
                expected: store.config_hash().to_string(),
                actual: self.config_hash.clone(),
            });
        }
        Ok(())
    }

    fn refine(&self, from: &[f64], store: &IndexStore, labels: &BTreeMap<String, Label>) -> Result<Vec<f64>> {
        let mut relevant = Vec::new();
        let mut not_relevant = Vec::new();
        for (id, label) in labels {
            let entry = store.entry(id)?;
            match label {
                Label::Relevant => relevant.push(entry.norm_fv.as_slice()),
                Label::NotRelevant => not_relevant.push(entry.norm_fv.as_slice()),
                Label::Neutral => {}
            }
        }
        rocchio(from, &relevant, &not_relevant, &self.params)
    }

    /// Applies one round of labels, looking the labeled vectors up in
    /// `store`, and returns the refined vector.
    pub fn apply_feedback(&mut self, store: &IndexStore, labels: BTreeMap<String, Label>) -> Result<&[f64]> {
        self.check_store(store)?;
        let next = self.refine(&self.current_fv, store, &labels)?;
        self.rounds.push(FeedbackRound {
            labels,
            resulting_fv: next.clone(),
        });
        self.current_fv = next;
        Ok(&self.current_fv)
    }

    /// The current query in both spaces. Before any feedback this is the
    /// original query; afterwards the raw side is mapped back through the
    /// corpus normalization.
    pub fn current_query(&self, store: &IndexStore) -> FeatureQuery {
        if self.rounds.is_empty() {
            return self.original.clone();
        }
        FeatureQuery {
            raw: store.normalization().invert(&self.current_fv),
            norm: self.current_fv.clone(),
        }
    }

    pub fn session_query(&self, store: &IndexStore, opts: &QueryOptions) -> Result<RankedResults> {
        self.check_store(store)?;
        store.query(&self.current_query(store), opts)
    }

    /// Recomputes the current vector from the original query and the
    /// recorded labels.
    pub fn replay(&self, store: &IndexStore) -> Result<Vec<f64>> {
        self.check_store(store)?;
        let mut fv = self.original.norm.clone();
        for r in &self.rounds {
            fv = self.refine(&fv, store, &r.labels)?;
        }
        Ok(fv)
    }
}
