//! Fixture graphs, a brute-force path oracle and corpus generators shared
//! by the integration tests and the CLI acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use taxrank::graph::{build_graph, CategoryGraph, GraphBuilder, NodeId, NodeKind};
use taxrank::paths::{SinkSet, SinkSpec};

pub use NodeKind::{Article, Category};

pub fn sink_set(g: &CategoryGraph, titles: &[&str]) -> SinkSet {
    let specs: Vec<SinkSpec> = titles
        .iter()
        .map(|t| SinkSpec {
            label: t.to_string(),
            category_title: t.to_string(),
        })
        .collect();
    SinkSet::resolve(g, &specs).expect("fixture sinks resolve")
}

fn chain_edges(b: &mut GraphBuilder, from: &str, via: &[String], to: &str) {
    let mut prev = from.to_string();
    for v in via {
        b.add_node(v, Category);
        b.add_edge(&prev, None, v);
        prev = v.clone();
    }
    b.add_edge(&prev, None, to);
}

/// T reaches S1 through A, B (each to C, D, E) and S2 through F, G.
pub fn figure1() -> (CategoryGraph, SinkSet, NodeId) {
    let nodes = [
        ("T", Article),
        ("A", Category),
        ("B", Category),
        ("C", Category),
        ("D", Category),
        ("E", Category),
        ("F", Category),
        ("G", Category),
        ("S1", Category),
        ("S2", Category),
    ];
    let edges = [
        ("T", "A"),
        ("T", "B"),
        ("A", "C"),
        ("A", "D"),
        ("A", "E"),
        ("B", "C"),
        ("B", "D"),
        ("B", "E"),
        ("C", "S1"),
        ("D", "S1"),
        ("E", "S1"),
        ("T", "F"),
        ("F", "G"),
        ("G", "S2"),
    ];
    let g = build_graph(&nodes, &edges).unwrap();
    let s = sink_set(&g, &["S1", "S2"]);
    let t = g.resolve("T", Article).unwrap();
    (g, s, t)
}

/// S3 is reachable through S2 (cut) and through Y, Z.
pub fn truncation() -> (CategoryGraph, SinkSet, NodeId) {
    let nodes = [
        ("T", Article),
        ("X", Category),
        ("Y", Category),
        ("Z", Category),
        ("S2", Category),
        ("S3", Category),
    ];
    let edges = [
        ("T", "X"),
        ("X", "S2"),
        ("S2", "S3"),
        ("T", "Y"),
        ("Y", "Z"),
        ("Z", "S3"),
    ];
    let g = build_graph(&nodes, &edges).unwrap();
    let s = sink_set(&g, &["S2", "S3"]);
    let t = g.resolve("T", Article).unwrap();
    (g, s, t)
}

pub const RECESSION_SINKS: [&str; 3] = ["Economia", "Politica", "Scienze"];

/// Recessione: two 4-edge paths to Economia, one 5-edge path to Politica,
/// one 6-edge path to Scienze.
pub fn recession_builder() -> GraphBuilder {
    let mut b = GraphBuilder::new();
    b.add_node("Recessione", Article);
    for s in RECESSION_SINKS {
        b.add_node(s, Category);
    }
    let hops = |p: &str, n: usize| (1..=n).map(|i| format!("{p}_{i}")).collect::<Vec<_>>();
    chain_edges(&mut b, "Recessione", &hops("Ciclo_economico", 3), "Economia");
    chain_edges(&mut b, "Recessione", &hops("Macroeconomia", 3), "Economia");
    chain_edges(&mut b, "Recessione", &hops("Politica_economica", 4), "Politica");
    chain_edges(&mut b, "Recessione", &hops("Scienze_sociali", 5), "Scienze");
    b
}

pub fn recession() -> (CategoryGraph, SinkSet, NodeId) {
    let g = recession_builder().build().unwrap();
    let s = sink_set(&g, &RECESSION_SINKS);
    let t = g.resolve("Recessione", Article).unwrap();
    (g, s, t)
}

pub const THOR_SINKS: [&str; 2] = ["Religione", "Politica"];

/// Thor: at depth 6, 15 paths of length 4 to Religione and 2 to Politica;
/// depth 10 adds one 8-edge path to Religione and five to Politica.
pub fn thor_builder() -> GraphBuilder {
    let mut b = GraphBuilder::new();
    b.add_node("Thor", Article);
    for s in THOR_SINKS {
        b.add_node(s, Category);
    }
    for c in ["Divinità_norrene", "Mitologia_norrena", "Guerra", "Conflitti"] {
        b.add_node(c, Category);
    }
    // Thor -> Divinità_norrene -> Culto_k (15) -> Mitologia_norrena -> Religione
    b.add_edge("Thor", None, "Divinità_norrene");
    b.add_edge("Mitologia_norrena", None, "Religione");
    for k in 1..=15 {
        let c = format!("Culto_{k}");
        b.add_node(&c, Category);
        b.add_edge("Divinità_norrene", None, &c);
        b.add_edge(&c, None, "Mitologia_norrena");
    }
    // Thor -> Guerra -> Dei_della_guerra_k (2) -> Conflitti -> Politica
    b.add_edge("Thor", None, "Guerra");
    b.add_edge("Conflitti", None, "Politica");
    for k in 1..=2 {
        let c = format!("Dei_della_guerra_{k}");
        b.add_node(&c, Category);
        b.add_edge("Guerra", None, &c);
        b.add_edge(&c, None, "Conflitti");
    }
    // one 8-edge route to Religione
    let long: Vec<String> = (1..=7).map(|i| format!("Folclore_{i}")).collect();
    chain_edges(&mut b, "Thor", &long, "Religione");
    // five 8-edge routes to Politica: Thor -> Eroi -> Saga_k -> Epica_1..5 -> Politica
    b.add_node("Eroi", Category);
    b.add_edge("Thor", None, "Eroi");
    let tail: Vec<String> = (1..=5).map(|i| format!("Epica_{i}")).collect();
    for k in 1..=5 {
        let c = format!("Saga_{k}");
        b.add_node(&c, Category);
        b.add_edge("Eroi", None, &c);
        b.add_edge(&c, None, &tail[0]);
    }
    chain_edges(&mut b, &tail[0], &tail[1..], "Politica");
    b.add_node(&tail[0], Category);
    b
}

pub fn thor() -> (CategoryGraph, SinkSet, NodeId) {
    let g = thor_builder().build().unwrap();
    let s = sink_set(&g, &THOR_SINKS);
    let t = g.resolve("Thor", Article).unwrap();
    (g, s, t)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Path statistics computed without the engine: every simple path from
/// `topic` over the raw edge list is generated breadth-first, and only the
/// ones that end at a sink and touch no other sink before are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleStats {
    pub n_p: Vec<u64>,
    pub l_p: Vec<Option<u32>>,
    pub depth: u32,
}

pub fn oracle(
    edges: &[(usize, usize)],
    topic: usize,
    sinks: &[usize],
    l_max: u32,
    l_th: u32,
) -> OracleStats {
    let edges: BTreeSet<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
    if let Some(k) = sinks.iter().position(|&s| s == topic) {
        let mut n_p = vec![0; sinks.len()];
        let mut l_p = vec![None; sinks.len()];
        n_p[k] = 1;
        l_p[k] = Some(0);
        return OracleStats { n_p, l_p, depth: l_max };
    }

    let mut all_paths: Vec<Vec<usize>> = Vec::new();
    let mut frontier = vec![vec![topic]];
    for _ in 0..l_th {
        let mut next = Vec::new();
        for path in &frontier {
            let last = *path.last().unwrap();
            for &(a, b) in &edges {
                if a == last && !path.contains(&b) {
                    let mut p = path.clone();
                    p.push(b);
                    next.push(p);
                }
            }
        }
        all_paths.extend(next.iter().cloned());
        frontier = next;
    }

    for cap in l_max..=l_th {
        let mut n_p = vec![0u64; sinks.len()];
        let mut l_p: Vec<Option<u32>> = vec![None; sinks.len()];
        for p in &all_paths {
            let len = (p.len() - 1) as u32;
            if len > cap {
                continue;
            }
            let Some(k) = sinks.iter().position(|&s| s == *p.last().unwrap()) else {
                continue;
            };
            if p[..p.len() - 1].iter().any(|n| sinks.contains(n)) {
                continue;
            }
            n_p[k] += 1;
            l_p[k] = Some(l_p[k].map_or(len, |l| l.min(len)));
        }
        if n_p.iter().any(|&c| c > 0) || cap == l_th {
            return OracleStats { n_p, l_p, depth: cap };
        }
    }
    unreachable!()
}

/// Random digraph over `n` category nodes named `c{i}` plus cycles and
/// duplicates as they fall. Returns the graph and the raw edge list in
/// node-name indices.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, max_edges: usize) -> (CategoryGraph, Vec<(usize, usize)>) {
    let m = rng.random_range(0..=max_edges);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        if a == b {
            b = (b + 1) % n;
        }
        edges.push((a, b));
    }
    let names: Vec<String> = (0..n).map(|i| format!("C{i:02}")).collect();
    let nodes: Vec<(String, NodeKind)> = names.iter().map(|s| (s.clone(), Category)).collect();
    let named: Vec<(String, String)> = edges
        .iter()
        .map(|&(a, b)| (names[a].clone(), names[b].clone()))
        .collect();
    (build_graph(&nodes, &named).unwrap(), edges)
}

pub fn node_of(g: &CategoryGraph, i: usize) -> NodeId {
    g.resolve(&format!("C{i:02}"), Category).unwrap()
}
