//! SameAs graph, entity clusters, and the source belief multigraph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::rdf::{extract_source, RdfStatement, SourceError, SourceId, SourcePolicy, Term};

/// Canonical id of a set of co-referent IRIs: the lexicographically smallest
/// member.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityClusterId(pub String);

impl fmt::Display for EntityClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SameAsEdge {
    pub from: String,
    pub to: String,
    /// Graph of the originating statement (N-Quads input only).
    pub graph: Option<String>,
}

/// Directed graph with one edge per `owl:sameAs` statement; parallel edges
/// are kept.
#[derive(Debug, Clone, Default)]
pub struct SameAsGraph {
    pub vertices: BTreeSet<String>,
    pub edges: Vec<SameAsEdge>,
}

pub fn build_sameas_graph<'a>(statements: impl IntoIterator<Item = &'a RdfStatement>) -> SameAsGraph {
    let mut g = SameAsGraph::default();
    for st in statements {
        if !st.is_same_as() {
            continue;
        }
        // sameAs with a literal or blank object has no IRI endpoint
        if let Term::Iri(obj) = &st.object {
            g.vertices.insert(st.subject.clone());
            g.vertices.insert(obj.clone());
            g.edges.push(SameAsEdge {
                from: st.subject.clone(),
                to: obj.clone(),
                graph: st.graph.clone(),
            });
        }
    }
    g
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[derive(Debug, Clone, Default)]
pub struct EntityClusterMap {
    cluster_of: HashMap<String, EntityClusterId>,
    members: BTreeMap<EntityClusterId, Vec<String>>,
}

impl EntityClusterMap {
    /// Cluster of an IRI. IRIs that never occur in a sameAs statement are
    /// their own singleton cluster, which makes the lookup total.
    pub fn resolve(&self, iri: &str) -> EntityClusterId {
        self.cluster_of
            .get(iri)
            .cloned()
            .unwrap_or_else(|| EntityClusterId(iri.to_string()))
    }

    pub fn get(&self, iri: &str) -> Option<&EntityClusterId> {
        self.cluster_of.get(iri)
    }

    /// Sorted members of a cluster built from sameAs statements.
    pub fn members(&self, id: &EntityClusterId) -> Option<&[String]> {
        self.members.get(id).map(Vec::as_slice)
    }

    pub fn clusters(&self) -> impl Iterator<Item = (&EntityClusterId, &[String])> {
        self.members.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Connected components of the undirected view of the sameAs graph.
pub fn sameas_closure(graph: &SameAsGraph) -> EntityClusterMap {
    // vertices iterate in sorted order, so the smallest index in a component
    // is its smallest IRI
    let names: Vec<&String> = graph.vertices.iter().collect();
    let index: HashMap<&str, usize> =
        names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut dsu = DisjointSet::new(names.len());
    for e in &graph.edges {
        dsu.union(index[e.from.as_str()], index[e.to.as_str()]);
    }
    let mut smallest: HashMap<usize, usize> = HashMap::new();
    for i in 0..names.len() {
        let r = dsu.find(i);
        smallest.entry(r).or_insert(i);
    }
    let mut map = EntityClusterMap::default();
    for (i, name) in names.iter().enumerate() {
        let id = EntityClusterId(names[smallest[&dsu.find(i)]].clone());
        map.members.entry(id.clone()).or_default().push((*name).clone());
        map.cluster_of.insert((*name).clone(), id);
    }
    map
}

/// Maps IRIs to sources. For the named-graph policy a vertex's source is the
/// graph of the statement it appears in as a subject; the target of a sameAs
/// edge falls back to the smallest graph in which it is a subject.
#[derive(Debug, Clone, Default)]
pub struct SourceResolver {
    policy: SourcePolicy,
    subject_graph: HashMap<String, String>,
}

impl SourceResolver {
    pub fn new<'a>(policy: SourcePolicy, statements: impl IntoIterator<Item = &'a RdfStatement>) -> Self {
        let mut subject_graph: HashMap<String, String> = HashMap::new();
        if policy == SourcePolicy::NamedGraph {
            for st in statements {
                if let Some(g) = &st.graph {
                    subject_graph
                        .entry(st.subject.clone())
                        .and_modify(|cur| {
                            if g < cur {
                                *cur = g.clone()
                            }
                        })
                        .or_insert_with(|| g.clone());
                }
            }
        }
        SourceResolver { policy, subject_graph }
    }

    pub fn policy(&self) -> SourcePolicy {
        self.policy
    }

    pub fn source_of(&self, iri: &str, graph: Option<&str>) -> Result<SourceId, SourceError> {
        let graph = graph.or_else(|| self.subject_graph.get(iri).map(String::as_str));
        extract_source(iri, graph, self.policy)
    }
}

/// Directed multigraph over sources. `multiplicity[(a, b)]` is the number of
/// sameAs links from a vertex of `a` to a vertex of `b`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceBeliefGraph {
    pub vertices: BTreeSet<SourceId>,
    pub multiplicity: BTreeMap<(SourceId, SourceId), u64>,
    pub out_degree: BTreeMap<SourceId, u64>,
    pub in_neighbors: BTreeMap<SourceId, BTreeSet<SourceId>>,
    pub self_loops_dropped: u64,
    /// sameAs edges with an endpoint that has no source.
    pub unresolved: Vec<(String, SourceError)>,
}

impl SourceBeliefGraph {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.multiplicity.values().sum()
    }

    /// Number of sameAs links from `from` to `to`.
    pub fn links(&self, from: &SourceId, to: &SourceId) -> u64 {
        self.multiplicity.get(&(from.clone(), to.clone())).copied().unwrap_or(0)
    }

    /// Total outgoing link multiplicity of a source.
    pub fn out_degree(&self, source: &SourceId) -> u64 {
        self.out_degree.get(source).copied().unwrap_or(0)
    }

    pub fn add_edge(&mut self, from: SourceId, to: SourceId, count: u64) {
        if count == 0 {
            return;
        }
        if from == to {
            self.self_loops_dropped += count;
            return;
        }
        self.vertices.insert(from.clone());
        self.vertices.insert(to.clone());
        *self.out_degree.entry(from.clone()).or_default() += count;
        self.in_neighbors.entry(to.clone()).or_default().insert(from.clone());
        *self.multiplicity.entry((from, to)).or_default() += count;
    }

    /// Writes `from TAB to TAB multiplicity` rows in key order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for ((a, b), n) in &self.multiplicity {
            writeln!(w, "{a}\t{b}\t{n}")?;
        }
        Ok(())
    }
}

pub fn project_to_sbg(graph: &SameAsGraph, resolver: &SourceResolver) -> SourceBeliefGraph {
    let mut sbg = SourceBeliefGraph::default();
    for e in &graph.edges {
        let from = resolver.source_of(&e.from, e.graph.as_deref());
        let to = resolver.source_of(&e.to, None);
        match (from, to) {
            (Ok(a), Ok(b)) => sbg.add_edge(a, b, 1),
            (Err(err), _) => sbg.unresolved.push((e.from.clone(), err)),
            (_, Err(err)) => sbg.unresolved.push((e.to.clone(), err)),
        }
    }
    sbg
}
