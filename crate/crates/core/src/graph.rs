//! Typed property graph store.
//!
//! Nodes carry a [`NodeType`] and a schema-restricted attribute map; edges
//! carry a [`RelationLabel`] drawn from the graph's [`RelationVocabulary`].
//! Deduplication happens on insertion: a node whose id, or whose
//! type-namespaced canonical key, is already present is merged into the
//! existing node (first-seen attribute values win).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ingest::{canonical_key, AttributeSchema, CanonicalSource, ACCESSION_KEY, TITLE_KEY};
use crate::text::normalize_text;

pub const FORMAT_VERSION: u32 = 1;

/// The default relation vocabulary, in ordering priority.
pub const DEFAULT_RELATIONS: [&str; 7] = [
    "has_primary_producer",
    "has_secondary_producer",
    "has_related_object",
    "has_image",
    "has_image_label",
    "has_entity",
    "belongs_to_collection",
];

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("attribute {key:?} on {node_id} is outside the schema")]
    SchemaViolation { node_id: String, key: String },
    #[error("no such node: {0}")]
    MissingNode(String),
    #[error("relation {0:?} is not in the vocabulary")]
    UnknownRelation(String),
    #[error("invalid relation vocabulary: {0}")]
    Vocabulary(String),
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("line 1: unsupported graph format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("empty graph file")]
    Empty,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeType {
    Object,
    Person,
    Organisation,
    Image,
    ImageLabel,
    Place,
    Concept,
}

impl NodeType {
    pub const ALL: [NodeType; 7] = [
        NodeType::Object,
        NodeType::Person,
        NodeType::Organisation,
        NodeType::Image,
        NodeType::ImageLabel,
        NodeType::Place,
        NodeType::Concept,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Object => "object",
            NodeType::Person => "person",
            NodeType::Organisation => "organisation",
            NodeType::Image => "image",
            NodeType::ImageLabel => "image_label",
            NodeType::Place => "place",
            NodeType::Concept => "concept",
        }
    }

    /// Prefix used in node ids.
    pub fn id_prefix(self) -> &'static str {
        match self {
            NodeType::ImageLabel => "label",
            other => other.as_str(),
        }
    }

    /// Header word used when rendering a node as context.
    pub fn display_name(self) -> &'static str {
        match self {
            NodeType::Object => "Object",
            NodeType::Person => "Person",
            NodeType::Organisation => "Organisation",
            NodeType::Image => "Image",
            NodeType::ImageLabel => "ImageLabel",
            NodeType::Place => "Place",
            NodeType::Concept => "Concept",
        }
    }

    pub fn parse(s: &str) -> Option<NodeType> {
        NodeType::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn node_id(self, raw: &str) -> String {
        format!("{}:{raw}", self.id_prefix())
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A relation label. Only obtainable from [`RelationVocabulary::resolve`], so
/// every label in a graph is a vocabulary member. Orders by vocabulary position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationLabel {
    rank: u16,
    name: Arc<str>,
}

impl RelationLabel {
    pub fn as_str(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name)
    }
}

/// Closed set of relation labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationVocabulary {
    labels: Vec<RelationLabel>,
}

impl Default for RelationVocabulary {
    fn default() -> Self {
        Self::new(DEFAULT_RELATIONS).expect("default vocabulary is valid")
    }
}

impl RelationVocabulary {
    pub fn new<I, S>(names: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut labels: Vec<RelationLabel> = Vec::new();
        for (rank, name) in names.into_iter().enumerate() {
            let name = name.as_ref();
            if name.is_empty() {
                return Err(GraphError::Vocabulary("empty relation label".into()));
            }
            if labels.iter().any(|l| l.as_str() == name) {
                return Err(GraphError::Vocabulary(format!("duplicate relation {name:?}")));
            }
            let rank = u16::try_from(rank).map_err(|_| GraphError::Vocabulary("too many relations".into()))?;
            labels.push(RelationLabel { rank, name: Arc::from(name) });
        }
        Ok(Self { labels })
    }

    /// Loads a JSON array of relation names.
    pub fn from_json(bytes: &[u8]) -> Result<Self, GraphError> {
        let names: Vec<String> =
            serde_json::from_slice(bytes).map_err(|e| GraphError::Vocabulary(e.to_string()))?;
        Self::new(names)
    }

    pub fn resolve(&self, name: &str) -> Result<RelationLabel, GraphError> {
        self.labels
            .iter()
            .find(|l| l.as_str() == name)
            .cloned()
            .ok_or_else(|| GraphError::UnknownRelation(name.to_string()))
    }

    pub fn labels(&self) -> &[RelationLabel] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub node_id: String,
    pub node_type: NodeType,
    pub attributes: BTreeMap<String, String>,
    pub canonical: Option<String>,
}

impl Node {
    pub fn new(node_type: NodeType, raw_id: &str) -> Self {
        Self {
            node_id: node_type.node_id(raw_id),
            node_type,
            attributes: BTreeMap::new(),
            canonical: None,
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    pub fn title(&self) -> Option<&str> {
        self.attributes.get(TITLE_KEY).map(String::as_str)
    }

    /// Title when present, otherwise the node id.
    pub fn display_name(&self) -> &str {
        self.title().unwrap_or(&self.node_id)
    }
}

impl CanonicalSource for Node {
    fn canonical_title(&self) -> Option<&str> {
        self.title()
    }
    fn canonical_accession(&self) -> Option<&str> {
        self.attributes.get(ACCESSION_KEY).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: String,
    pub relation: RelationLabel,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Out,
    In,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Neighbor {
    pub relation: RelationLabel,
    pub direction: Direction,
    pub node_id: String,
}

/// Result of a node insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inserted {
    pub node_id: String,
    pub merged: bool,
}

/// A broken graph invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DanglingEdge(String, String, String),
    AdjacencyMismatch(String),
    CanonicalCollision(String),
    CanonicalDangling(String),
    AttributeOutsideSchema(String, String),
    TitleNotIndexed(String),
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    schema: AttributeSchema,
    relations: RelationVocabulary,
    nodes: BTreeMap<String, Node>,
    edges: BTreeSet<Edge>,
    outgoing: HashMap<String, BTreeSet<(RelationLabel, String)>>,
    incoming: HashMap<String, BTreeSet<(RelationLabel, String)>>,
    title_index: HashMap<String, BTreeSet<String>>,
    canonical_index: HashMap<String, String>,
    aliases: HashMap<String, String>,
}

fn namespaced(node_type: NodeType, key: &str) -> String {
    format!("{}|{key}", node_type.as_str())
}

impl KnowledgeGraph {
    pub fn new(schema: AttributeSchema, relations: RelationVocabulary) -> Self {
        Self { schema, relations, ..Default::default() }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn relations(&self) -> &RelationVocabulary {
        &self.relations
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, node_id: &str) -> Option<&Node> {
        self.nodes.get(node_id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    /// Follows merge aliases to the surviving node id.
    pub fn resolve_id<'a>(&'a self, node_id: &'a str) -> Option<&'a str> {
        if self.nodes.contains_key(node_id) {
            return Some(node_id);
        }
        self.aliases.get(node_id).map(String::as_str)
    }

    pub fn add_node(&mut self, node: Node) -> Result<String, GraphError> {
        self.insert_node(node).map(|i| i.node_id)
    }

    /// Inserts `node`, merging into an existing node with the same id (or
    /// alias) or the same type-namespaced canonical key.
    pub fn insert_node(&mut self, mut node: Node) -> Result<Inserted, GraphError> {
        if let Some(key) = node.attributes.keys().find(|k| !self.schema.contains(k)) {
            return Err(GraphError::SchemaViolation { node_id: node.node_id.clone(), key: key.clone() });
        }
        if node.canonical.is_none() {
            node.canonical = canonical_key(&node).ok();
        }

        let existing = self.resolve_id(&node.node_id).map(str::to_owned).or_else(|| {
            node.canonical
                .as_ref()
                .and_then(|key| self.canonical_index.get(&namespaced(node.node_type, key)).cloned())
        });
        if let Some(survivor) = existing {
            let id = self.merge_nodes(&survivor, node)?;
            return Ok(Inserted { node_id: id, merged: true });
        }

        let id = node.node_id.clone();
        if let Some(key) = &node.canonical {
            self.canonical_index.insert(namespaced(node.node_type, key), id.clone());
        }
        if let Some(title) = node.title() {
            self.title_index.entry(normalize_text(title)).or_default().insert(id.clone());
        }
        self.nodes.insert(id.clone(), node);
        Ok(Inserted { node_id: id, merged: false })
    }

    /// Folds `duplicate` into `surviving_id`. Existing attributes win; new
    /// keys are added. If the duplicate is itself in the graph it is removed
    /// and its edges are re-pointed to the survivor.
    pub fn merge_nodes(&mut self, surviving_id: &str, duplicate: Node) -> Result<String, GraphError> {
        let survivor_id = self
            .resolve_id(surviving_id)
            .ok_or_else(|| GraphError::MissingNode(surviving_id.to_string()))?
            .to_string();
        if let Some(key) = duplicate.attributes.keys().find(|k| !self.schema.contains(k)) {
            return Err(GraphError::SchemaViolation { node_id: duplicate.node_id.clone(), key: key.clone() });
        }

        let dup_id = duplicate.node_id.clone();
        let mut moved_edges = Vec::new();
        if dup_id != survivor_id && self.nodes.contains_key(&dup_id) {
            moved_edges = self.detach(&dup_id);
        }

        let node_type = self.nodes[&survivor_id].node_type;
        let survivor = self.nodes.get_mut(&survivor_id).expect("survivor exists");
        let had_title = survivor.title().is_some();
        for (k, v) in &duplicate.attributes {
            survivor.attributes.entry(k.clone()).or_insert_with(|| v.clone());
        }
        let new_title = if had_title { None } else { survivor.title().map(normalize_text) };
        let recomputed = canonical_key(&*survivor).ok();
        if let Some(t) = new_title {
            self.title_index.entry(t).or_default().insert(survivor_id.clone());
        }
        let dup_key = duplicate.canonical.clone().or_else(|| canonical_key(&duplicate).ok());
        for key in [dup_key, recomputed].into_iter().flatten() {
            self.canonical_index.entry(namespaced(node_type, &key)).or_insert_with(|| survivor_id.clone());
        }

        if dup_id != survivor_id {
            for target in self.aliases.values_mut().filter(|t| **t == dup_id) {
                *target = survivor_id.clone();
            }
            self.aliases.insert(dup_id.clone(), survivor_id.clone());
        }
        for (src, rel, dst) in moved_edges {
            let src = if src == dup_id { survivor_id.clone() } else { src };
            let dst = if dst == dup_id { survivor_id.clone() } else { dst };
            self.insert_edge(src, rel, dst);
        }
        Ok(survivor_id)
    }

    /// Removes a node and its edges; returns the removed edges.
    fn detach(&mut self, node_id: &str) -> Vec<(String, RelationLabel, String)> {
        let mut removed = Vec::new();
        if let Some(outs) = self.outgoing.remove(node_id) {
            for (rel, dst) in outs {
                if let Some(ins) = self.incoming.get_mut(&dst) {
                    ins.remove(&(rel.clone(), node_id.to_string()));
                }
                removed.push((node_id.to_string(), rel, dst));
            }
        }
        if let Some(ins) = self.incoming.remove(node_id) {
            for (rel, src) in ins {
                if let Some(outs) = self.outgoing.get_mut(&src) {
                    outs.remove(&(rel.clone(), node_id.to_string()));
                }
                removed.push((src, rel, node_id.to_string()));
            }
        }
        for (src, rel, dst) in &removed {
            self.edges.remove(&Edge { source: src.clone(), relation: rel.clone(), target: dst.clone() });
        }
        if let Some(node) = self.nodes.remove(node_id) {
            if let Some(title) = node.title() {
                let key = normalize_text(title);
                if let Some(set) = self.title_index.get_mut(&key) {
                    set.remove(node_id);
                    if set.is_empty() {
                        self.title_index.remove(&key);
                    }
                }
            }
        }
        self.canonical_index.retain(|_, v| v != node_id);
        removed
    }

    /// Adds `(source, relation, target)`; `false` if it was already present.
    pub fn add_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<bool, GraphError> {
        let label = self.relations.resolve(relation)?;
        self.add_labelled_edge(source, &label, target)
    }

    pub fn add_labelled_edge(
        &mut self,
        source: &str,
        relation: &RelationLabel,
        target: &str,
    ) -> Result<bool, GraphError> {
        for end in [source, target] {
            if !self.nodes.contains_key(end) {
                return Err(GraphError::MissingNode(end.to_string()));
            }
        }
        self.relations.resolve(relation.as_str())?;
        Ok(self.insert_edge(source.to_string(), relation.clone(), target.to_string()))
    }

    fn insert_edge(&mut self, source: String, relation: RelationLabel, target: String) -> bool {
        let edge = Edge { source: source.clone(), relation: relation.clone(), target: target.clone() };
        if !self.edges.insert(edge) {
            return false;
        }
        self.outgoing.entry(source.clone()).or_default().insert((relation.clone(), target.clone()));
        self.incoming.entry(target).or_default().insert((relation, source));
        true
    }

    /// Incident edges in both directions, ordered by relation (vocabulary
    /// order), neighbour title, neighbour id.
    pub fn neighbors(&self, node_id: &str) -> Result<Vec<Neighbor>, GraphError> {
        if !self.nodes.contains_key(node_id) {
            return Err(GraphError::MissingNode(node_id.to_string()));
        }
        let outs = self.outgoing.get(node_id).into_iter().flatten().map(|(r, n)| (r, Direction::Out, n));
        let ins = self.incoming.get(node_id).into_iter().flatten().map(|(r, n)| (r, Direction::In, n));
        let mut list: Vec<Neighbor> = outs
            .chain(ins)
            .map(|(relation, direction, n)| Neighbor { relation: relation.clone(), direction, node_id: n.clone() })
            .collect();
        list.sort_by_cached_key(|n| {
            let name = self.nodes.get(&n.node_id).map_or("", |x| x.display_name()).to_owned();
            (n.relation.clone(), name, n.node_id.clone(), n.direction)
        });
        Ok(list)
    }

    /// Neighbours via one relation: outgoing first, then incoming.
    pub fn related(&self, node_id: &str, relation: &RelationLabel) -> Result<Vec<Neighbor>, GraphError> {
        let all = self.neighbors(node_id)?;
        let (mut outs, ins): (Vec<_>, Vec<_>) = all
            .into_iter()
            .filter(|n| &n.relation == relation)
            .partition(|n| n.direction == Direction::Out);
        outs.extend(ins);
        Ok(outs)
    }

    /// Exact normalized-title lookup.
    pub fn find_by_title(&self, title: &str) -> BTreeSet<String> {
        self.title_index.get(&normalize_text(title)).cloned().unwrap_or_default()
    }

    /// Normalized titles with the node ids carrying them.
    pub fn titles(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.title_index.iter()
    }

    pub fn canonical_lookup(&self, node_type: NodeType, key: &str) -> Option<&str> {
        self.canonical_index.get(&namespaced(node_type, key)).map(String::as_str)
    }

    pub fn count_by_type(&self) -> BTreeMap<NodeType, usize> {
        let mut out = BTreeMap::new();
        for n in self.nodes.values() {
            *out.entry(n.node_type).or_insert(0) += 1;
        }
        out
    }

    pub fn count_by_relation(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for e in &self.edges {
            *out.entry(e.relation.as_str().to_string()).or_insert(0) += 1;
        }
        out
    }

    /// Checks referential integrity, adjacency/edge-set agreement, canonical
    /// index injectivity, schema restriction and title-index coverage.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for e in &self.edges {
            if !self.nodes.contains_key(&e.source) || !self.nodes.contains_key(&e.target) {
                out.push(Violation::DanglingEdge(e.source.clone(), e.relation.to_string(), e.target.clone()));
            }
        }
        let out_total: usize = self.outgoing.values().map(BTreeSet::len).sum();
        let in_total: usize = self.incoming.values().map(BTreeSet::len).sum();
        if out_total != self.edges.len() || in_total != self.edges.len() {
            out.push(Violation::AdjacencyMismatch(format!(
                "edges={} outgoing={out_total} incoming={in_total}",
                self.edges.len()
            )));
        }
        let mut owners: HashMap<String, &str> = HashMap::new();
        for n in self.nodes.values() {
            if let Some(key) = &n.canonical {
                let ns = namespaced(n.node_type, key);
                if let Some(prev) = owners.insert(ns.clone(), &n.node_id) {
                    out.push(Violation::CanonicalCollision(format!("{ns} on {prev} and {}", n.node_id)));
                }
            }
            for k in n.attributes.keys() {
                if !self.schema.contains(k) {
                    out.push(Violation::AttributeOutsideSchema(n.node_id.clone(), k.clone()));
                }
            }
            if let Some(t) = n.title() {
                let indexed = self.title_index.get(&normalize_text(t)).is_some_and(|s| s.contains(&n.node_id));
                if !indexed {
                    out.push(Violation::TitleNotIndexed(n.node_id.clone()));
                }
            }
        }
        for (key, id) in &self.canonical_index {
            if !self.nodes.contains_key(id) {
                out.push(Violation::CanonicalDangling(key.clone()));
            }
        }
        out
    }

    /// True when node ids, types, attributes and edges all agree.
    pub fn is_isomorphic_to(&self, other: &KnowledgeGraph) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.iter().all(|(id, n)| {
                other
                    .nodes
                    .get(id)
                    .is_some_and(|m| m.node_type == n.node_type && m.attributes == n.attributes)
            })
            && self.edge_triples() == other.edge_triples()
    }

    fn edge_triples(&self) -> BTreeSet<(&str, &str, &str)> {
        self.edges.iter().map(|e| (e.source.as_str(), e.relation.as_str(), e.target.as_str())).collect()
    }

    /// Writes the NDJSON graph file: header, nodes sorted by id, edges sorted
    /// by (source, relation, target).
    pub fn save_graph<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        let header = Header {
            musekg_version: FORMAT_VERSION,
            schema: self.schema.keys().to_vec(),
            relations: self.relations.labels().iter().map(|l| l.as_str().to_string()).collect(),
        };
        serde_json::to_writer(&mut sink, &header)?;
        sink.write_all(b"\n")?;
        for node in self.nodes.values() {
            let line = NodeLine {
                kind: "node",
                id: &node.node_id,
                node_type: node.node_type,
                attrs: &node.attributes,
            };
            serde_json::to_writer(&mut sink, &line)?;
            sink.write_all(b"\n")?;
        }
        for (src, rel, dst) in self.edge_triples() {
            serde_json::to_writer(&mut sink, &EdgeLine { kind: "edge", src, rel, dst })?;
            sink.write_all(b"\n")?;
        }
        sink.flush()
    }

    pub fn load_graph<R: BufRead>(source: R) -> Result<KnowledgeGraph, LoadError> {
        let mut lines = source.lines().enumerate();
        let (_, first) = lines.next().ok_or(LoadError::Empty)?;
        let first = first?;
        let raw: serde_json::Value =
            serde_json::from_str(&first).map_err(|e| LoadError::Corrupt { line: 1, message: e.to_string() })?;
        let version = raw.get("musekg_version").and_then(serde_json::Value::as_u64);
        match version {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(LoadError::Version { found: v }),
            None => return Err(LoadError::Corrupt { line: 1, message: "missing musekg_version".into() }),
        }
        let header: Header =
            serde_json::from_value(raw).map_err(|e| LoadError::Corrupt { line: 1, message: e.to_string() })?;
        let schema = AttributeSchema::new(header.schema)
            .map_err(|e| LoadError::Corrupt { line: 1, message: e.to_string() })?;
        let relations = RelationVocabulary::new(&header.relations)
            .map_err(|e| LoadError::Corrupt { line: 1, message: e.to_string() })?;
        let mut graph = KnowledgeGraph::new(schema, relations);

        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| LoadError::Corrupt { line: line_no, message };
            let parsed: Line = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
            match parsed {
                Line::Node { id, node_type, attrs } => {
                    if graph.nodes.contains_key(&id) {
                        return Err(corrupt(format!("duplicate node {id}")));
                    }
                    if let Some(k) = attrs.keys().find(|k| !graph.schema.contains(k)) {
                        return Err(corrupt(format!("attribute {k:?} outside schema")));
                    }
                    let mut node = Node { node_id: id.clone(), node_type, attributes: attrs, canonical: None };
                    if let Ok(key) = canonical_key(&node) {
                        let ns = namespaced(node_type, &key);
                        if let std::collections::hash_map::Entry::Vacant(e) = graph.canonical_index.entry(ns) {
                            e.insert(id.clone());
                            node.canonical = Some(key);
                        }
                    }
                    if let Some(t) = node.title() {
                        graph.title_index.entry(normalize_text(t)).or_default().insert(id.clone());
                    }
                    graph.nodes.insert(id, node);
                }
                Line::Edge { src, rel, dst } => {
                    graph.add_edge(&src, &rel, &dst).map_err(|e| corrupt(e.to_string()))?;
                }
            }
        }
        Ok(graph)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    musekg_version: u32,
    schema: Vec<String>,
    relations: Vec<String>,
}

#[derive(Serialize)]
struct NodeLine<'a> {
    kind: &'static str,
    id: &'a str,
    #[serde(rename = "type")]
    node_type: NodeType,
    attrs: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct EdgeLine<'a> {
    kind: &'static str,
    src: &'a str,
    rel: &'a str,
    dst: &'a str,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Line {
    Node {
        id: String,
        #[serde(rename = "type")]
        node_type: NodeType,
        #[serde(default)]
        attrs: BTreeMap<String, String>,
    },
    Edge {
        src: String,
        rel: String,
        dst: String,
    },
}
