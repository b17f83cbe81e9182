//! Upward path enumeration from a topic to the sink categories.
//!
//! A valid path follows parent edges from the topic, never revisits a node,
//! stops at the first sink it touches and is at most `cap` edges long. For
//! every sink we count the valid paths ending there (`n_p`) and the length
//! of the shortest one (`l_p`). When no sink is reachable within `l_max`
//! the cap is raised one step at a time, for this topic only, up to `l_th`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CategoryGraph, GraphError, NodeId, NodeKind};

pub const DEFAULT_MAX_PATHS_PER_TOPIC: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("sink set is empty")]
    Empty,
    #[error("duplicate sink label {0:?}")]
    DuplicateLabel(String),
    #[error("sink {label:?} maps to a category already used by another sink")]
    DuplicateNode { label: String },
    #[error("sink {label:?} is not a category")]
    NotCategory { label: String },
    #[error("sink {label:?}: {source}")]
    Unresolved { label: String, source: GraphError },
}

/// Ordered list of sink categories. The order is the tie-break order used
/// by every ranking downstream.
#[derive(Debug, Clone)]
pub struct SinkSet {
    labels: Vec<String>,
    nodes: Vec<NodeId>,
    by_node: HashMap<NodeId, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkSpec {
    pub label: String,
    pub category_title: String,
}

impl SinkSet {
    pub fn new(graph: &CategoryGraph, sinks: Vec<(String, NodeId)>) -> Result<SinkSet, SinkError> {
        if sinks.is_empty() {
            return Err(SinkError::Empty);
        }
        let mut labels = Vec::with_capacity(sinks.len());
        let mut nodes = Vec::with_capacity(sinks.len());
        let mut by_node = HashMap::with_capacity(sinks.len());
        for (i, (label, node)) in sinks.into_iter().enumerate() {
            if labels.contains(&label) {
                return Err(SinkError::DuplicateLabel(label));
            }
            if graph.kind(node) != NodeKind::Category {
                return Err(SinkError::NotCategory { label });
            }
            if by_node.insert(node, i).is_some() {
                return Err(SinkError::DuplicateNode { label });
            }
            labels.push(label);
            nodes.push(node);
        }
        Ok(SinkSet {
            labels,
            nodes,
            by_node,
        })
    }

    /// Resolve `category_title`s against the graph, keeping list order.
    pub fn resolve(graph: &CategoryGraph, specs: &[SinkSpec]) -> Result<SinkSet, SinkError> {
        let mut sinks = Vec::with_capacity(specs.len());
        for spec in specs {
            let node = graph
                .resolve(&spec.category_title, NodeKind::Category)
                .map_err(|source| SinkError::Unresolved {
                    label: spec.label.clone(),
                    source,
                })?;
            sinks.push((spec.label.clone(), node));
        }
        SinkSet::new(graph, sinks)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, m: usize) -> &str {
        &self.labels[m]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node(&self, m: usize) -> NodeId {
        self.nodes[m]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn index_of_node(&self, node: NodeId) -> Option<usize> {
        self.by_node.get(&node).copied()
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("alpha must be positive and finite, got {0}")]
    Alpha(f64),
    #[error("l_max must be at least 1")]
    LMax,
    #[error("l_th ({l_th}) must not be below l_max ({l_max})")]
    LTh { l_max: u32, l_th: u32 },
}

/// Damping and depth parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub alpha: f64,
    pub l_max: u32,
    pub l_th: u32,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            alpha: 3.0,
            l_max: 6,
            l_th: 12,
        }
    }
}

impl PathParams {
    pub fn new(alpha: f64, l_max: u32, l_th: u32) -> Result<PathParams, ParamError> {
        let p = PathParams { alpha, l_max, l_th };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ParamError::Alpha(self.alpha));
        }
        if self.l_max < 1 {
            return Err(ParamError::LMax);
        }
        if self.l_th < self.l_max {
            return Err(ParamError::LTh {
                l_max: self.l_max,
                l_th: self.l_th,
            });
        }
        Ok(())
    }
}

/// Per-sink path counts and shortest lengths for one topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStats {
    pub topic: NodeId,
    pub n_p: Vec<u64>,
    pub l_p: Vec<Option<u32>>,
    pub effective_depth: u32,
}

impl PathStats {
    pub fn n_tot(&self) -> u64 {
        self.n_p.iter().sum()
    }

    pub fn l_min(&self) -> Option<u32> {
        self.l_p.iter().flatten().copied().min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("path enumeration for node {topic} exceeded {limit} explored paths")]
pub struct PathBlowup {
    pub topic: NodeId,
    pub limit: u64,
}

/// Path enumerator bound to one graph and sink set.
#[derive(Debug, Clone, Copy)]
pub struct PathEngine<'g> {
    graph: &'g CategoryGraph,
    sinks: &'g SinkSet,
    max_paths: u64,
}

impl<'g> PathEngine<'g> {
    pub fn new(graph: &'g CategoryGraph, sinks: &'g SinkSet) -> Self {
        PathEngine {
            graph,
            sinks,
            max_paths: DEFAULT_MAX_PATHS_PER_TOPIC,
        }
    }

    /// Budget of explored path prefixes per topic before giving up.
    pub fn with_max_paths(mut self, max_paths: u64) -> Self {
        self.max_paths = max_paths;
        self
    }

    pub fn enumerate(&self, topic: NodeId, params: &PathParams) -> Result<PathStats, PathBlowup> {
        let n = self.sinks.len();
        if let Some(m) = self.sinks.index_of_node(topic) {
            let mut n_p = vec![0; n];
            let mut l_p = vec![None; n];
            n_p[m] = 1;
            l_p[m] = Some(0);
            return Ok(PathStats {
                topic,
                n_p,
                l_p,
                effective_depth: params.l_max,
            });
        }

        let mut cap = params.l_max;
        let mut walk = Walk {
            graph: self.graph,
            sinks: self.sinks,
            budget: self.max_paths,
            explored: 0,
            path: Vec::with_capacity(params.l_th as usize + 1),
            n_p: vec![0; n],
            l_p: vec![None; n],
        };
        loop {
            walk.reset();
            walk.path.push(topic);
            walk.descend(topic, cap)
                .map_err(|()| PathBlowup { topic, limit: self.max_paths })?;
            if walk.n_p.iter().any(|&c| c > 0) || cap >= params.l_th {
                return Ok(PathStats {
                    topic,
                    n_p: walk.n_p,
                    l_p: walk.l_p,
                    effective_depth: cap,
                });
            }
            cap += 1;
        }
    }
}

struct Walk<'a> {
    graph: &'a CategoryGraph,
    sinks: &'a SinkSet,
    budget: u64,
    explored: u64,
    path: Vec<NodeId>,
    n_p: Vec<u64>,
    l_p: Vec<Option<u32>>,
}

impl Walk<'_> {
    fn reset(&mut self) {
        self.path.clear();
        self.n_p.iter_mut().for_each(|c| *c = 0);
        self.l_p.iter_mut().for_each(|l| *l = None);
    }

    /// Depth-first over simple paths. `path` holds the nodes of the current
    /// prefix, `node` is its last element and `remaining` the edges left.
    fn descend(&mut self, node: NodeId, remaining: u32) -> Result<(), ()> {
        if remaining == 0 {
            return Ok(());
        }
        let graph = self.graph;
        for &parent in graph.parents(node) {
            if self.path.contains(&parent) {
                continue;
            }
            self.explored += 1;
            if self.explored > self.budget {
                return Err(());
            }
            if let Some(m) = self.sinks.index_of_node(parent) {
                let len = self.path.len() as u32;
                self.n_p[m] += 1;
                self.l_p[m] = Some(self.l_p[m].map_or(len, |l| l.min(len)));
                continue;
            }
            self.path.push(parent);
            let r = self.descend(parent, remaining - 1);
            self.path.pop();
            r?;
        }
        Ok(())
    }
}

/// Enumerate valid paths from `topic` with the default blow-up budget.
pub fn enumerate_paths(
    graph: &CategoryGraph,
    topic: NodeId,
    sinks: &SinkSet,
    params: &PathParams,
) -> Result<PathStats, PathBlowup> {
    PathEngine::new(graph, sinks).enumerate(topic, params)
}
