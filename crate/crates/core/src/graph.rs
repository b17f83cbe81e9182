//! Immutable category graph with upward (child → parent) adjacency.
//!
//! Nodes are either articles or categories. Every edge points from a member
//! to one of the categories it belongs to, so walking the adjacency lists
//! always moves toward broader concepts. Cycles are allowed here; the path
//! engine neutralizes them at traversal time.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use twox_hash::XxHash64;

const MAGIC: &[u8; 4] = b"TXRK";
pub const FORMAT_VERSION: u32 = 1;

/// Dense index into the node tables of a [`CategoryGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Article,
    Category,
}

impl NodeKind {
    fn to_byte(self) -> u8 {
        match self {
            NodeKind::Article => 0,
            NodeKind::Category => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(NodeKind::Article),
            1 => Some(NodeKind::Category),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Article => "article",
            NodeKind::Category => "category",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "article" | "Article" | "0" => Ok(NodeKind::Article),
            "category" | "Category" | "14" => Ok(NodeKind::Category),
            other => Err(format!("unknown node kind {other:?}")),
        }
    }
}

/// MediaWiki title normalization: spaces become underscores and the first
/// character is uppercased. Everything else is kept verbatim.
pub fn normalize_title(title: &str) -> String {
    let trimmed = title.trim();
    let mut out = String::with_capacity(trimmed.len());
    let mut chars = trimmed.chars();
    if let Some(first) = chars.next() {
        if first == ' ' {
            out.push('_');
        } else {
            out.extend(first.to_uppercase());
        }
    }
    for c in chars {
        out.push(if c == ' ' { '_' } else { c });
    }
    out
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge references undeclared node {0:?}")]
    UnknownNode(String),
    #[error("edge target {0:?} is not a category")]
    ParentNotCategory(String),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("{title:?} ({kind}) not found")]
    NotFound { title: String, kind: NodeKind },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported graph format version {found} (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("corrupt graph file: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone)]
struct NodeEntry {
    kind: NodeKind,
    title: String,
}

/// Read-only category graph.
///
/// Parent lists are stored in CSR form (`offsets` / `targets`), each list
/// sorted by ascending [`NodeId`].
#[derive(Debug, Clone)]
pub struct CategoryGraph {
    nodes: Vec<NodeEntry>,
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    title_index: HashMap<(NodeKind, String), NodeId>,
}

impl CategoryGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn resolve(&self, title: &str, kind: NodeKind) -> Result<NodeId, GraphError> {
        let key = (kind, normalize_title(title));
        self.title_index
            .get(&key)
            .copied()
            .ok_or(GraphError::NotFound { title: key.1, kind })
    }

    /// Parent categories of `node`, ascending by id.
    ///
    /// Panics if `node` is not a node of this graph.
    #[inline]
    pub fn parents(&self, node: NodeId) -> &[NodeId] {
        let i = node.index();
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn title(&self, node: NodeId) -> &str {
        &self.nodes[node.index()].title
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        self.nodes[node.index()].kind
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.node_ids()
            .flat_map(move |c| self.parents(c).iter().map(move |&p| (c, p)))
    }

    /// Copy of the graph in which the given nodes keep their ids and titles
    /// but lose every incident edge.
    pub fn without_nodes(&self, blocked: &HashSet<NodeId>) -> CategoryGraph {
        let edges = self
            .edges()
            .filter(|(c, p)| !blocked.contains(c) && !blocked.contains(p));
        let nodes = self
            .nodes
            .iter()
            .map(|n| (n.title.clone(), n.kind))
            .collect::<Vec<_>>();
        Self::from_parts(nodes, edges).expect("subgraph of a valid graph is valid")
    }

    /// Assemble a graph whose ids are the positions in `nodes`. Titles must
    /// already be normalized and unique per kind.
    fn from_parts(
        nodes: Vec<(String, NodeKind)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<CategoryGraph, GraphError> {
        let n = nodes.len();
        let mut title_index = HashMap::with_capacity(n);
        let mut entries = Vec::with_capacity(n);
        for (i, (title, kind)) in nodes.into_iter().enumerate() {
            if title_index.insert((kind, title.clone()), NodeId(i as u32)).is_some() {
                return Err(GraphError::Corrupt(format!("duplicate node {title:?} ({kind})")));
            }
            entries.push(NodeEntry { kind, title });
        }

        let mut lists: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (child, parent) in edges {
            if child.index() >= n {
                return Err(GraphError::UnknownNode(child.to_string()));
            }
            if parent.index() >= n {
                return Err(GraphError::UnknownNode(parent.to_string()));
            }
            if child == parent {
                return Err(GraphError::SelfLoop(entries[child.index()].title.clone()));
            }
            if entries[parent.index()].kind != NodeKind::Category {
                return Err(GraphError::ParentNotCategory(
                    entries[parent.index()].title.clone(),
                ));
            }
            lists[child.index()].push(parent);
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            list.dedup();
            targets.extend(list);
            offsets.push(targets.len());
        }

        Ok(CategoryGraph {
            nodes: entries,
            offsets,
            targets,
            title_index,
        })
    }
}

/// Incremental construction of a [`CategoryGraph`] from titled nodes and
/// edges. Titles are normalized on the way in.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<(String, NodeKind)>,
    edges: Vec<(String, Option<NodeKind>, String)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, title: &str, kind: NodeKind) -> &mut Self {
        self.nodes.insert((normalize_title(title), kind));
        self
    }

    /// Edge from `child` to the category `parent`. With `child_kind` unset
    /// the child resolves as an article first, then as a category.
    pub fn add_edge(&mut self, child: &str, child_kind: Option<NodeKind>, parent: &str) -> &mut Self {
        self.edges
            .push((normalize_title(child), child_kind, normalize_title(parent)));
        self
    }

    pub fn build(self) -> Result<CategoryGraph, GraphError> {
        // Sorted by (title, kind): ids do not depend on insertion order.
        let nodes: Vec<(String, NodeKind)> = self.nodes.into_iter().collect();
        let index: HashMap<(&str, NodeKind), NodeId> = nodes
            .iter()
            .enumerate()
            .map(|(i, (t, k))| ((t.as_str(), *k), NodeId(i as u32)))
            .collect();
        let lookup = |title: &str, kind: Option<NodeKind>| -> Option<NodeId> {
            match kind {
                Some(k) => index.get(&(title, k)).copied(),
                None => index
                    .get(&(title, NodeKind::Article))
                    .or_else(|| index.get(&(title, NodeKind::Category)))
                    .copied(),
            }
        };

        let mut edges = Vec::with_capacity(self.edges.len());
        for (child, child_kind, parent) in &self.edges {
            let c = lookup(child, *child_kind).ok_or_else(|| GraphError::UnknownNode(child.clone()))?;
            let p = match lookup(parent, Some(NodeKind::Category)) {
                Some(p) => p,
                None if lookup(parent, Some(NodeKind::Article)).is_some() => {
                    return Err(GraphError::ParentNotCategory(parent.clone()))
                }
                None => return Err(GraphError::UnknownNode(parent.clone())),
            };
            if c == p {
                return Err(GraphError::SelfLoop(child.clone()));
            }
            edges.push((c, p));
        }
        drop(index);
        CategoryGraph::from_parts(nodes, edges)
    }
}

/// Build a graph from `(title, kind)` node declarations and
/// `(child_title, parent_title)` edges. Duplicate edges collapse.
pub fn build_graph<S: AsRef<str>>(
    nodes: &[(S, NodeKind)],
    edges: &[(S, S)],
) -> Result<CategoryGraph, GraphError> {
    let mut b = GraphBuilder::new();
    for (title, kind) in nodes {
        b.add_node(title.as_ref(), *kind);
    }
    for (child, parent) in edges {
        b.add_edge(child.as_ref(), None, parent.as_ref());
    }
    b.build()
}

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

fn checksum(bytes: &[u8]) -> u64 {
    XxHash64::oneshot(0, bytes)
}

pub fn encode(graph: &CategoryGraph) -> Vec<u8> {
    let mut buf = Vec::with_capacity(16 + graph.nodes.len() * 24 + graph.targets.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(graph.nodes.len() as u64).to_le_bytes());
    for (i, node) in graph.nodes.iter().enumerate() {
        buf.extend_from_slice(&(i as u32).to_le_bytes());
        buf.push(node.kind.to_byte());
        buf.extend_from_slice(&(node.title.len() as u32).to_le_bytes());
        buf.extend_from_slice(node.title.as_bytes());
    }
    buf.extend_from_slice(&(graph.targets.len() as u64).to_le_bytes());
    for (c, p) in graph.edges() {
        buf.extend_from_slice(&c.0.to_le_bytes());
        buf.extend_from_slice(&p.0.to_le_bytes());
    }
    let sum = checksum(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GraphError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| GraphError::Corrupt(format!("unexpected end of data at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, GraphError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, GraphError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, GraphError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<CategoryGraph, GraphError> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(GraphError::Corrupt("missing TXRK header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(GraphError::FormatVersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < 8 + 8 {
        return Err(GraphError::Corrupt("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if checksum(body) != stored {
        return Err(GraphError::Corrupt("checksum mismatch".into()));
    }

    let mut cur = Cursor { data: body, pos: 8 };
    let node_count = cur.u64()? as usize;
    let mut nodes = Vec::with_capacity(node_count.min(body.len()));
    for expected in 0..node_count {
        let id = cur.u32()?;
        if id as usize != expected {
            return Err(GraphError::Corrupt(format!("node id {id} out of sequence")));
        }
        let kind = NodeKind::from_byte(cur.u8()?)
            .ok_or_else(|| GraphError::Corrupt("bad node kind byte".into()))?;
        let len = cur.u32()? as usize;
        let title = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| GraphError::Corrupt(format!("node {id} title is not UTF-8")))?;
        nodes.push((title.to_owned(), kind));
    }
    let edge_count = cur.u64()? as usize;
    let mut edges = Vec::with_capacity(edge_count.min(body.len() / 8));
    for _ in 0..edge_count {
        edges.push((NodeId(cur.u32()?), NodeId(cur.u32()?)));
    }
    if cur.pos != body.len() {
        return Err(GraphError::Corrupt("trailing bytes after edge table".into()));
    }
    let g = CategoryGraph::from_parts(nodes, edges).map_err(|e| match e {
        GraphError::Corrupt(_) => e,
        other => GraphError::Corrupt(other.to_string()),
    })?;
    if g.edge_count() != edge_count {
        return Err(GraphError::Corrupt("duplicate edges in edge table".into()));
    }
    Ok(g)
}

pub fn save(graph: &CategoryGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    fs::write(path, encode(graph))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<CategoryGraph, GraphError> {
    decode(&fs::read(path)?)
}

// ---------------------------------------------------------------------------
// TSV format
// ---------------------------------------------------------------------------

/// `N<TAB>id<TAB>kind<TAB>title` lines followed by `E<TAB>child<TAB>parent`.
pub fn write_tsv<W: Write>(graph: &CategoryGraph, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for id in graph.node_ids() {
        writeln!(out, "N\t{}\t{}\t{}", id, graph.kind(id), graph.title(id))?;
    }
    for (c, p) in graph.edges() {
        writeln!(out, "E\t{c}\t{p}")?;
    }
    out.flush()
}

/// Inverse of [`write_tsv`]. Node ids must be dense and are preserved.
pub fn read_tsv<R: BufRead>(input: R) -> Result<CategoryGraph, GraphError> {
    let mut nodes: Vec<Option<(String, NodeKind)>> = Vec::new();
    let mut edges = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| GraphError::Corrupt(format!("line {}: {what}", lineno + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["N", id, kind, title] => {
                let id: usize = id.parse().map_err(|_| bad("bad node id"))?;
                let kind: NodeKind = kind.parse().map_err(|e: String| bad(&e))?;
                if nodes.len() <= id {
                    nodes.resize(id + 1, None);
                }
                if nodes[id].replace((normalize_title(title), kind)).is_some() {
                    return Err(bad("duplicate node id"));
                }
            }
            ["E", c, p] => {
                let c: u32 = c.parse().map_err(|_| bad("bad child id"))?;
                let p: u32 = p.parse().map_err(|_| bad("bad parent id"))?;
                edges.push((NodeId(c), NodeId(p)));
            }
            _ => return Err(bad("unrecognized record")),
        }
    }
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or_else(|| GraphError::Corrupt(format!("node id {i} missing"))))
        .collect::<Result<Vec<_>, _>>()?;
    CategoryGraph::from_parts(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeKind::*;

    fn chain() -> CategoryGraph {
        build_graph(
            &[("T", Article), ("A", Category), ("S", Category)],
            &[("T", "A"), ("A", "S")],
        )
        .unwrap()
    }

    #[test]
    fn minimal_chain() {
        let g = chain();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let t = g.resolve("T", Article).unwrap();
        let a = g.resolve("A", Category).unwrap();
        let s = g.resolve("S", Category).unwrap();
        assert_eq!(g.parents(t), &[a]);
        assert_eq!(g.parents(a), &[s]);
        assert!(g.parents(s).is_empty());
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = build_graph(
            &[("T", Article), ("A", Category)],
            &[("T", "A"), ("T", "A")],
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edge_errors() {
        let r = build_graph(&[("T", Category)], &[("T", "T")]);
        assert!(matches!(r, Err(GraphError::SelfLoop(_))));
        let r = build_graph(&[("T", Article)], &[("T", "X")]);
        assert!(matches!(r, Err(GraphError::UnknownNode(t)) if t == "X"));
        let r = build_graph(&[("T", Article), ("U", Article)], &[("T", "U")]);
        assert!(matches!(r, Err(GraphError::ParentNotCategory(t)) if t == "U"));
    }

    #[test]
    fn resolve_by_kind() {
        let g = build_graph(
            &[("Recessione", Article), ("Recessione", Category), ("Economia", Category)],
            &[("Recessione", "Economia")],
        )
        .unwrap();
        let a = g.resolve("Recessione", Article).unwrap();
        let c = g.resolve("Recessione", Category).unwrap();
        assert_ne!(a, c);
        // the untyped edge child resolved to the article
        assert_eq!(g.parents(a).len(), 1);
        assert!(g.parents(c).is_empty());
        assert!(matches!(
            g.resolve("Nothing", Article),
            Err(GraphError::NotFound { .. })
        ));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_title("storia d'Italia"), "Storia_d'Italia");
        assert_eq!(normalize_title("élan vital"), "Élan_vital");
        let g = build_graph(&[("storia economica", Category)], &[]).unwrap();
        assert!(g.resolve("Storia_economica", Category).is_ok());
        assert!(g.resolve("storia economica", Category).is_ok());
    }

    #[test]
    fn cycles_are_representable() {
        let g = build_graph(&[("A", Category), ("B", Category)], &[("A", "B"), ("B", "A")]).unwrap();
        let a = g.resolve("A", Category).unwrap();
        let b = g.resolve("B", Category).unwrap();
        assert_eq!(g.parents(a), &[b]);
        assert_eq!(g.parents(b), &[a]);
    }

    #[test]
    fn parents_sorted() {
        let g = build_graph(
            &[("T", Article), ("Z", Category), ("B", Category), ("M", Category)],
            &[("T", "Z"), ("T", "B"), ("T", "M")],
        )
        .unwrap();
        let p = g.parents(g.resolve("T", Article).unwrap());
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn binary_roundtrip() {
        let g = chain();
        let h = decode(&encode(&g)).unwrap();
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        for id in g.node_ids() {
            assert_eq!(h.resolve(g.title(id), g.kind(id)).unwrap(), id);
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = encode(&chain());
        for cut in [bytes.len() - 1, bytes.len() / 2, 9] {
            assert!(matches!(decode(&bytes[..cut]), Err(GraphError::Corrupt(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[20] ^= 0x40;
        assert!(matches!(decode(&flipped), Err(GraphError::Corrupt(_))));
    }

    #[test]
    fn future_version_rejected() {
        let mut bytes = encode(&chain());
        bytes[4] = 9;
        assert!(matches!(
            decode(&bytes),
            Err(GraphError::FormatVersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn tsv_roundtrip() {
        let g = chain();
        let mut buf = Vec::new();
        write_tsv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N\t0\t"));
        let h = read_tsv(buf.as_slice()).unwrap();
        assert_eq!(h.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert_eq!(h.title(NodeId(2)), g.title(NodeId(2)));
    }

    #[test]
    fn blocking_removes_incident_edges() {
        let g = chain();
        let a = g.resolve("A", Category).unwrap();
        let h = g.without_nodes(&[a].into_iter().collect());
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.edge_count(), 0);
        assert_eq!(h.resolve("A", Category).unwrap(), a);
    }
}
