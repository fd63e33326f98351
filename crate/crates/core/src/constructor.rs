//! Record-to-graph construction.
//!
//! Per record: an object node from the field sets, typed nodes for every
//! relationship target, image nodes, image-label nodes, collection nodes and
//! entities linked from descriptive text, then edges between them. Node
//! insertion deduplicates by id and canonical key; attributes outside the
//! schema are dropped before insertion.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, KnowledgeGraph, Node, NodeType, RelationLabel, RelationVocabulary};
use crate::ingest::{AttributeSchema, Record, TITLE_KEY};
use crate::text::normalize_text;

/// Relations the constructor emits from record structure rather than from
/// relationship ids.
pub const STRUCTURAL_RELATIONS: [&str; 3] = ["has_image", "has_image_label", "belongs_to_collection"];
const HAS_IMAGE: &str = "has_image";
const HAS_IMAGE_LABEL: &str = "has_image_label";
const BELONGS_TO_COLLECTION: &str = "belongs_to_collection";
const HAS_ENTITY: &str = "has_entity";

const DEFAULT_MAPPING: &str = include_str!("../data/relation_mapping.json");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid relation mapping: {0}")]
    Mapping(String),
    #[error("invalid gazetteer: {0}")]
    Gazetteer(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub relation: String,
    pub target_type: NodeType,
}

/// Raw relationship id to relation label and expected target type.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationMapping {
    entries: BTreeMap<String, MappingEntry>,
}

impl RelationMapping {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        serde_json::from_slice(bytes).map_err(|e| ConfigError::Mapping(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping serializes")
    }

    pub fn insert(&mut self, raw_id: impl Into<String>, relation: impl Into<String>, target_type: NodeType) {
        self.entries
            .insert(raw_id.into(), MappingEntry { relation: relation.into(), target_type });
    }

    pub fn get(&self, raw_id: &str) -> Option<&MappingEntry> {
        self.entries.get(raw_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &MappingEntry)> {
        self.entries.iter()
    }

    /// Fails if any mapping target is outside `vocab`.
    pub fn validate(&self, vocab: &RelationVocabulary) -> Result<(), ConfigError> {
        for (raw, entry) in &self.entries {
            vocab
                .resolve(&entry.relation)
                .map_err(|_| ConfigError::Mapping(format!("{raw} maps to unknown relation {}", entry.relation)))?;
        }
        Ok(())
    }

    /// Vocabulary labels neither mapped to nor produced structurally.
    pub fn uncovered(&self, vocab: &RelationVocabulary) -> Vec<String> {
        vocab
            .labels()
            .iter()
            .map(RelationLabel::as_str)
            .filter(|l| !STRUCTURAL_RELATIONS.contains(l) && !self.entries.values().any(|e| e.relation == *l))
            .map(str::to_owned)
            .collect()
    }
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            linker_fields: vec!["description".into(), "material_desc".into()],
            image_label_field: "image_label".into(),
            collection_field: "collection".into(),
        }
    }
}

/// Fields consumed by construction beyond the attribute schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildConfig {
    pub linker_fields: Vec<String>,
    pub image_label_field: String,
    pub collection_field: String,
}

pub fn default_mapping() -> RelationMapping {
    RelationMapping::from_json(DEFAULT_MAPPING.as_bytes()).expect("bundled mapping parses")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unmapped relationship id {0:?}")]
pub struct Unmapped(pub String);

pub fn map_relation(
    raw_id: &str,
    mapping: &RelationMapping,
    vocab: &RelationVocabulary,
) -> Result<RelationLabel, Unmapped> {
    mapping
        .get(raw_id)
        .and_then(|e| vocab.resolve(&e.relation).ok())
        .ok_or_else(|| Unmapped(raw_id.to_string()))
}

/// Where a node came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin<'a> {
    ObjectRecord,
    RelationshipTarget(&'a str),
    ImageEntry,
    ImageLabel,
    Linker(NodeType),
}

pub fn assign_node_type(origin: Origin<'_>) -> Result<NodeType, String> {
    match origin {
        Origin::ObjectRecord => Ok(NodeType::Object),
        Origin::RelationshipTarget(kind) => match kind {
            "person" => Ok(NodeType::Person),
            "organisation" => Ok(NodeType::Organisation),
            "object" => Ok(NodeType::Object),
            other => Err(format!("unknown relatedRecordType {other:?}")),
        },
        Origin::ImageEntry => Ok(NodeType::Image),
        Origin::ImageLabel => Ok(NodeType::ImageLabel),
        Origin::Linker(t @ (NodeType::Place | NodeType::Person | NodeType::Concept)) => Ok(t),
        Origin::Linker(t) => Err(format!("linker cannot produce {t} nodes")),
    }
}

/// Restricts attributes to the schema; returns removed keys in input order.
pub fn validate_schema(mut node: Node, schema: &AttributeSchema) -> (Node, Vec<String>) {
    let dropped: Vec<String> = node.attributes.keys().filter(|k| !schema.contains(k)).cloned().collect();
    for k in &dropped {
        node.attributes.remove(k);
    }
    (node, dropped)
}

/// An entity detected in text. `span` is a byte range into
/// `normalize_text(input)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityMention {
    pub span: Range<usize>,
    pub surface: String,
    pub node_type: NodeType,
    pub canonical: String,
}

pub trait EntityLinker {
    fn link(&self, text: &str) -> Vec<EntityMention>;
}

/// A linker that finds nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLinker;

impl EntityLinker for NoLinker {
    fn link(&self, _text: &str) -> Vec<EntityMention> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Deserialize)]
struct GazetteerEntryJson {
    #[serde(rename = "type")]
    node_type: NodeType,
    canonical: String,
}

/// Normalized surface form to typed canonical entity.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<String, (NodeType, String)>,
    max_tokens: usize,
}

impl Gazetteer {
    pub fn insert(&mut self, surface: &str, node_type: NodeType, canonical: &str) -> Result<(), ConfigError> {
        assign_node_type(Origin::Linker(node_type)).map_err(ConfigError::Gazetteer)?;
        let key = normalize_text(surface);
        if key.is_empty() {
            return Err(ConfigError::Gazetteer(format!("surface {surface:?} is empty after normalisation")));
        }
        self.max_tokens = self.max_tokens.max(key.split(' ').count());
        self.entries.insert(key, (node_type, normalize_text(canonical)));
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let raw: BTreeMap<String, GazetteerEntryJson> =
            serde_json::from_slice(bytes).map_err(|e| ConfigError::Gazetteer(e.to_string()))?;
        let mut g = Gazetteer::default();
        for (surface, entry) in raw {
            g.insert(&surface, entry.node_type, &entry.canonical)?;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EntityLinker for Gazetteer {
    fn link(&self, text: &str) -> Vec<EntityMention> {
        gazetteer_link(text, self)
    }
}

/// Longest-match, non-overlapping, left-to-right scan over whole tokens of
/// the normalized text.
pub fn gazetteer_link(text: &str, gazetteer: &Gazetteer) -> Vec<EntityMention> {
    if gazetteer.is_empty() {
        return Vec::new();
    }
    let norm = normalize_text(text);
    let mut starts = Vec::new();
    let mut pos = 0;
    for tok in norm.split(' ').filter(|t| !t.is_empty()) {
        starts.push((pos, pos + tok.len()));
        pos += tok.len() + 1;
    }

    let mut out = Vec::new();
    let mut i = 0;
    while i < starts.len() {
        let longest = gazetteer.max_tokens.min(starts.len() - i);
        let hit = (1..=longest).rev().find_map(|n| {
            let span = starts[i].0..starts[i + n - 1].1;
            gazetteer.entries.get(&norm[span.clone()]).map(|e| (n, span, e))
        });
        match hit {
            Some((n, span, (node_type, canonical))) => {
                out.push(EntityMention {
                    surface: norm[span.clone()].to_string(),
                    span,
                    node_type: *node_type,
                    canonical: canonical.clone(),
                });
                i += n;
            }
            None => i += 1,
        }
    }
    out
}

/// Construction statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub records: usize,
    pub nodes_by_type: BTreeMap<String, usize>,
    pub edges_by_relation: BTreeMap<String, usize>,
    pub node_total: usize,
    pub edge_total: usize,
    pub merged_nodes: usize,
    pub dropped_attributes: usize,
    pub relationship_entries: usize,
    pub relationship_edges_added: usize,
    pub relationship_edges_duplicate: usize,
    pub unmapped_relations: usize,
    pub rejected_targets: usize,
    pub rejects: usize,
    pub reject_reasons: Vec<String>,
}

impl BuildReport {
    /// Counts of an existing graph, with the construction counters zeroed.
    pub fn for_graph(graph: &KnowledgeGraph) -> Self {
        let mut report = BuildReport::default();
        report.refresh_totals(graph);
        report
    }

    fn refresh_totals(&mut self, graph: &KnowledgeGraph) {
        self.nodes_by_type = graph
            .count_by_type()
            .into_iter()
            .map(|(t, n)| (t.as_str().to_string(), n))
            .collect();
        self.edges_by_relation = graph.count_by_relation();
        self.node_total = graph.node_count();
        self.edge_total = graph.edge_count();
    }

    /// Folds ingest-level rejects into the report.
    pub fn add_parse_rejects(&mut self, rejects: &[crate::ingest::Reject]) {
        self.rejects += rejects.len();
        self.reject_reasons
            .extend(rejects.iter().map(|r| format!("record {}: {}", r.object_index, r.reason)));
    }
}

pub struct GraphBuilder<'a> {
    graph: KnowledgeGraph,
    report: BuildReport,
    mapping: &'a RelationMapping,
    linker: &'a dyn EntityLinker,
    config: BuildConfig,
}

impl<'a> GraphBuilder<'a> {
    pub fn new(
        schema: AttributeSchema,
        relations: RelationVocabulary,
        mapping: &'a RelationMapping,
        linker: &'a dyn EntityLinker,
    ) -> Self {
        Self {
            graph: KnowledgeGraph::new(schema, relations),
            report: BuildReport::default(),
            mapping,
            linker,
            config: BuildConfig::default(),
        }
    }

    pub fn with_config(mut self, config: BuildConfig) -> Self {
        self.config = config;
        self
    }

    fn insert(&mut self, node: Node) -> Result<String, GraphError> {
        let (node, dropped) = validate_schema(node, self.graph.schema());
        self.report.dropped_attributes += dropped.len();
        let inserted = self.graph.insert_node(node)?;
        if inserted.merged {
            self.report.merged_nodes += 1;
        }
        Ok(inserted.node_id)
    }

    fn structural_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<(), GraphError> {
        match self.graph.relations().resolve(relation) {
            Ok(label) => {
                self.graph.add_labelled_edge(source, &label, target)?;
            }
            Err(_) => {
                self.report.unmapped_relations += 1;
            }
        }
        Ok(())
    }

    fn reject(&mut self, reason: String) {
        self.report.rejected_targets += 1;
        self.report.rejects += 1;
        self.report.reject_reasons.push(reason);
    }

    pub fn add_record(&mut self, record: &Record) -> Result<(), GraphError> {
        self.report.records += 1;
        let object_type = assign_node_type(Origin::ObjectRecord).expect("object records are typed");

        let mut object = Node::new(object_type, &record.object_id);
        for fs in &record.field_sets {
            if fs.identifier == self.config.image_label_field || fs.identifier == self.config.collection_field {
                continue;
            }
            if let Some(first) = fs.values.first() {
                object.attributes.entry(fs.identifier.clone()).or_insert_with(|| first.clone());
            }
        }
        let object_id = self.insert(object)?;

        for rel in &record.relationships {
            self.report.relationship_entries += rel.related_records.len();
            let label = match map_relation(&rel.relationship_id, self.mapping, self.graph.relations()) {
                Ok(label) => label,
                Err(_) => {
                    self.report.unmapped_relations += rel.related_records.len();
                    continue;
                }
            };
            let target_type = match assign_node_type(Origin::RelationshipTarget(&rel.related_record_type)) {
                Ok(t) => t,
                Err(reason) => {
                    for rr in &rel.related_records {
                        self.reject(format!(
                            "{}: target {} of {}: {reason}",
                            record.object_id, rr.related_record_id, rel.relationship_id
                        ));
                    }
                    continue;
                }
            };
            for rr in &rel.related_records {
                let mut target = Node::new(target_type, &rr.related_record_id);
                if !rr.title.trim().is_empty() {
                    target.attributes.insert(TITLE_KEY.to_string(), rr.title.clone());
                }
                let target_id = self.insert(target)?;
                if self.graph.add_labelled_edge(&object_id, &label, &target_id)? {
                    self.report.relationship_edges_added += 1;
                } else {
                    self.report.relationship_edges_duplicate += 1;
                }
            }
        }

        for image in &record.image_ids {
            let node_type = assign_node_type(Origin::ImageEntry).expect("images are typed");
            let image_id = self.insert(Node::new(node_type, image))?;
            self.structural_edge(&object_id, HAS_IMAGE, &image_id)?;
        }

        let label_values: Vec<&String> = record
            .field_sets
            .iter()
            .filter(|fs| fs.identifier == self.config.image_label_field)
            .flat_map(|fs| fs.values.iter())
            .collect();
        for label in label_values {
            let key = normalize_text(label);
            if key.is_empty() {
                continue;
            }
            let node_type = assign_node_type(Origin::ImageLabel).expect("labels are typed");
            let id = self.insert(Node::new(node_type, &key).with_attr(TITLE_KEY, label.clone()))?;
            self.structural_edge(&object_id, HAS_IMAGE_LABEL, &id)?;
        }

        let collections: Vec<&String> = record
            .field_sets
            .iter()
            .filter(|fs| fs.identifier == self.config.collection_field)
            .flat_map(|fs| fs.values.iter())
            .collect();
        for coll in collections {
            let key = normalize_text(coll);
            if key.is_empty() {
                continue;
            }
            let id = self.insert(Node::new(NodeType::Concept, &key).with_attr(TITLE_KEY, coll.clone()))?;
            self.structural_edge(&object_id, BELONGS_TO_COLLECTION, &id)?;
        }

        let mut mentions = Vec::new();
        for field in &self.config.linker_fields {
            if let Some(text) = record.first_value(field) {
                mentions.extend(self.linker.link(text));
            }
        }
        for m in mentions {
            let node_type = match assign_node_type(Origin::Linker(m.node_type)) {
                Ok(t) => t,
                Err(reason) => {
                    self.reject(format!("{}: linked entity {:?}: {reason}", record.object_id, m.canonical));
                    continue;
                }
            };
            let id = self.insert(Node::new(node_type, &m.canonical).with_attr(TITLE_KEY, m.canonical.clone()))?;
            if id != object_id {
                self.structural_edge(&object_id, HAS_ENTITY, &id)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> (KnowledgeGraph, BuildReport) {
        self.report.refresh_totals(&self.graph);
        (self.graph, self.report)
    }
}

/// Builds a graph from records.
pub fn build_graph(
    records: &[Record],
    mapping: &RelationMapping,
    schema: &AttributeSchema,
    linker: &dyn EntityLinker,
) -> Result<(KnowledgeGraph, BuildReport), GraphError> {
    let mut builder = GraphBuilder::new(schema.clone(), RelationVocabulary::default(), mapping, linker);
    for record in records {
        builder.add_record(record)?;
    }
    Ok(builder.finish())
}
