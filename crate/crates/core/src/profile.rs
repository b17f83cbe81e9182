//! User interest profiles: topic maps projected onto the sinks.
//!
//! Each topic contributes `count * w(topic, sink)` to every sink; the
//! per-sink sums are then normalized to one. Topics missing from the graph
//! or reaching no sink are recorded and otherwise ignored.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{normalize_title, CategoryGraph, NodeId, NodeKind};
use crate::paths::{PathEngine, PathParams, SinkSet};
use crate::relatedness::compute_weights;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub title: String,
    pub count: u64,
}

#[derive(Debug, Error)]
pub enum TopicMapError {
    #[error("topic {0:?} has a zero count")]
    ZeroCount(String),
    #[error("invalid topic map: {0}")]
    Json(#[from] serde_json::Error),
}

/// A user's `(topic, count)` multiset. Titles are unique after
/// construction; repeated titles have their counts summed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopicMap {
    pub owner: String,
    #[serde(rename = "topics")]
    entries: Vec<TopicEntry>,
}

#[derive(Deserialize)]
struct TopicMapFile {
    owner: String,
    topics: Vec<TopicEntry>,
}

impl TopicMap {
    pub fn new(
        owner: impl Into<String>,
        entries: impl IntoIterator<Item = (String, u64)>,
    ) -> Result<TopicMap, TopicMapError> {
        let mut merged: Vec<TopicEntry> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (title, count) in entries {
            if count == 0 {
                return Err(TopicMapError::ZeroCount(title));
            }
            let key = normalize_title(&title);
            match index.get(&key) {
                Some(&i) => merged[i].count += count,
                None => {
                    index.insert(key, merged.len());
                    merged.push(TopicEntry { title, count });
                }
            }
        }
        Ok(TopicMap {
            owner: owner.into(),
            entries: merged,
        })
    }

    pub fn from_json(text: &str) -> Result<TopicMap, TopicMapError> {
        let f: TopicMapFile = serde_json::from_str(text)?;
        TopicMap::new(f.owner, f.topics.into_iter().map(|e| (e.title, e.count)))
    }

    pub fn entries(&self) -> &[TopicEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DropReason {
    NotFound,
    NoPaths,
    PathBlowup,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedTopic {
    pub title: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub owner: String,
    /// Normalized score per sink, aligned with the sink set.
    pub pc: Vec<f64>,
    /// Sink indices by descending score, ties by sink order.
    pub ranking: Vec<usize>,
    pub dropped: Vec<DroppedTopic>,
    /// Pre-normalization sums `sum_i cnt_i * w_i(m)`.
    pub accumulator: Vec<f64>,
    pub normalizer: f64,
    /// Topics that only resolved as categories.
    pub category_fallbacks: Vec<String>,
}

#[derive(Debug, Clone, Error)]
#[error("no topic of {owner:?} could be mapped to a sink")]
pub struct EmptyProfile {
    pub owner: String,
    pub dropped: Vec<DroppedTopic>,
}

/// Descending-score order with ties broken by ascending index.
pub fn ranking_of(pc: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pc.len()).collect();
    order.sort_by(|&a, &b| pc[b].total_cmp(&pc[a]).then(a.cmp(&b)));
    order
}

/// `(label, pc)` pairs in ranking order.
pub fn rank(profile: &Profile, sinks: &SinkSet) -> Vec<(String, f64)> {
    profile
        .ranking
        .iter()
        .map(|&m| (sinks.label(m).to_owned(), profile.pc[m]))
        .collect()
}

type CachedWeights = Result<Arc<Vec<f64>>, DropReason>;

/// Profiles topic maps for one graph, sink set and parameter setting.
///
/// Weight vectors are memoized per topic node; the cache is only valid for
/// the parameters the profiler was built with.
pub struct Profiler<'g> {
    graph: &'g CategoryGraph,
    sinks: &'g SinkSet,
    engine: PathEngine<'g>,
    params: PathParams,
    cache: Mutex<HashMap<NodeId, CachedWeights>>,
}

impl<'g> Profiler<'g> {
    pub fn new(graph: &'g CategoryGraph, sinks: &'g SinkSet, params: PathParams) -> Self {
        Profiler {
            graph,
            sinks,
            engine: PathEngine::new(graph, sinks),
            params,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_engine(mut self, engine: PathEngine<'g>) -> Self {
        self.engine = engine;
        self
    }

    pub fn params(&self) -> &PathParams {
        &self.params
    }

    pub fn sinks(&self) -> &SinkSet {
        self.sinks
    }

    /// Weight vector of a resolved topic.
    pub fn weights(&self, topic: NodeId) -> CachedWeights {
        if let Some(hit) = self.cache.lock().unwrap().get(&topic) {
            return hit.clone();
        }
        let computed = match self.engine.enumerate(topic, &self.params) {
            Err(_) => Err(DropReason::PathBlowup),
            Ok(stats) => compute_weights(&stats, self.params.alpha)
                .map(|r| Arc::new(r.w))
                .map_err(|_| DropReason::NoPaths),
        };
        self.cache.lock().unwrap().insert(topic, computed.clone());
        computed
    }

    /// Article first, category as fallback.
    fn resolve_topic(&self, title: &str) -> Option<(NodeId, NodeKind)> {
        [NodeKind::Article, NodeKind::Category]
            .into_iter()
            .find_map(|k| self.graph.resolve(title, k).ok().map(|id| (id, k)))
    }

    pub fn profile(&self, map: &TopicMap) -> Result<Profile, EmptyProfile> {
        let n = self.sinks.len();
        let mut accumulator = vec![0.0; n];
        let mut dropped = Vec::new();
        let mut category_fallbacks = Vec::new();

        for entry in map.entries() {
            let (node, kind) = match self.resolve_topic(&entry.title) {
                Some(r) => r,
                None => {
                    dropped.push(DroppedTopic {
                        title: entry.title.clone(),
                        reason: DropReason::NotFound,
                    });
                    continue;
                }
            };
            let w = match self.weights(node) {
                Ok(w) => w,
                Err(reason) => {
                    dropped.push(DroppedTopic {
                        title: entry.title.clone(),
                        reason,
                    });
                    continue;
                }
            };
            if kind == NodeKind::Category {
                category_fallbacks.push(entry.title.clone());
            }
            let count = entry.count as f64;
            for (acc, wm) in accumulator.iter_mut().zip(w.iter()) {
                *acc += count * wm;
            }
        }

        let normalizer: f64 = accumulator.iter().sum();
        if normalizer <= 0.0 {
            return Err(EmptyProfile {
                owner: map.owner.clone(),
                dropped,
            });
        }
        let pc: Vec<f64> = accumulator.iter().map(|a| a / normalizer).collect();
        Ok(Profile {
            owner: map.owner.clone(),
            ranking: ranking_of(&pc),
            pc,
            dropped,
            accumulator,
            normalizer,
            category_fallbacks,
        })
    }
}

pub fn profile(
    graph: &CategoryGraph,
    sinks: &SinkSet,
    params: PathParams,
    map: &TopicMap,
) -> Result<Profile, EmptyProfile> {
    Profiler::new(graph, sinks, params).profile(map)
}
