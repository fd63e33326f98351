//! Structured queries over the graph and context serialization.
//!
//! Three query shapes are supported: an attribute of the anchor, the
//! neighbours of the anchor via one relation, and an attribute of those
//! neighbours. Anchors are resolved by normalized title.

use serde::{Deserialize, Serialize};

use crate::graph::{Direction, GraphError, KnowledgeGraph, Neighbor, Node, NodeType, RelationLabel};
use crate::ingest::TITLE_KEY;
use crate::text::tokens;

/// Context size used when the caller does not specify one, in characters.
pub const DEFAULT_CONTEXT_BUDGET: usize = 4000;
pub const TRUNCATION_MARKER: &str = "... (truncated for brevity)";

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("entity not found: {0:?}")]
    NotFound(String),
    #[error("ambiguous entity {query:?}: candidates {candidates:?}")]
    Ambiguous { query: String, candidates: Vec<String> },
    #[error("invalid query: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl QueryError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::NotFound(_) => "not_found",
            QueryError::Ambiguous { .. } => "ambiguous",
            QueryError::Invalid(_) => "invalid_query",
            QueryError::Graph(GraphError::MissingNode(_)) => "not_found",
            QueryError::Graph(_) => "graph_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    AttributeLookup,
    FindRelated,
    AttributeOfRelated,
}

/// Wire form of a structured query; the kind is inferred from which
/// optional fields are present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryDetails {
    pub object_title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relationship: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_attribute: Option<String>,
}

impl QueryDetails {
    pub fn kind(&self) -> Result<QueryKind, QueryError> {
        let present = |o: &Option<String>| o.as_deref().is_some_and(|s| !s.trim().is_empty());
        match (present(&self.relationship), present(&self.target_attribute)) {
            (false, true) => Ok(QueryKind::AttributeLookup),
            (true, false) => Ok(QueryKind::FindRelated),
            (true, true) => Ok(QueryKind::AttributeOfRelated),
            (false, false) => Err(QueryError::Invalid(
                "query needs a relationship, a target_attribute, or both".into(),
            )),
        }
    }

    /// Validates against the graph's vocabulary and schema.
    pub fn compile(&self, graph: &KnowledgeGraph) -> Result<StructuredQuery, QueryError> {
        if self.object_title.trim().is_empty() {
            return Err(QueryError::Invalid("object_title is empty".into()));
        }
        let kind = self.kind()?;
        let relationship = match kind {
            QueryKind::AttributeLookup => None,
            _ => {
                let name = self.relationship.as_deref().unwrap_or_default().trim();
                Some(graph.relations().resolve(name).map_err(|e| QueryError::Invalid(e.to_string()))?)
            }
        };
        let target_attribute = match kind {
            QueryKind::FindRelated => None,
            _ => {
                let key = self.target_attribute.as_deref().unwrap_or_default().trim();
                if !graph.schema().contains(key) {
                    return Err(QueryError::Invalid(format!("attribute {key:?} is outside the schema")));
                }
                Some(key.to_string())
            }
        };
        Ok(StructuredQuery { object_title: self.object_title.clone(), kind, relationship, target_attribute })
    }
}

/// A compiled, executable query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredQuery {
    pub object_title: String,
    pub kind: QueryKind,
    pub relationship: Option<RelationLabel>,
    pub target_attribute: Option<String>,
}

impl StructuredQuery {
    pub fn to_details(&self) -> QueryDetails {
        QueryDetails {
            object_title: self.object_title.clone(),
            relationship: self.relationship.as_ref().map(|r| r.as_str().to_string()),
            target_attribute: self.target_attribute.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRef {
    pub source: String,
    pub relation: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub node_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub values: Vec<String>,
    pub provenance: Vec<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn type_priority(t: NodeType) -> u8 {
    match t {
        NodeType::Object => 0,
        NodeType::Person => 1,
        NodeType::Organisation => 2,
        _ => 3,
    }
}

fn is_token_subsequence(needle: &[String], hay: &[&str]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Resolves a title to a node id. Exact normalized matches win; otherwise a
/// unique title containing the query tokens in order. Ties go to the type
/// priority object > person > organisation > others.
pub fn resolve_anchor(graph: &KnowledgeGraph, title: &str) -> Result<String, QueryError> {
    let query_tokens = tokens(title);
    if query_tokens.is_empty() {
        return Err(QueryError::NotFound(title.to_string()));
    }
    let rank = |id: &String| graph.node(id).map_or(u8::MAX, |n| type_priority(n.node_type));

    let exact = graph.find_by_title(title);
    if let Some(best) = exact.iter().min_by_key(|id| (rank(id), (*id).clone())) {
        return Ok(best.clone());
    }

    let mut contained: Vec<&String> = graph
        .titles()
        .filter(|(t, _)| is_token_subsequence(&query_tokens, &t.split(' ').collect::<Vec<_>>()))
        .flat_map(|(_, ids)| ids.iter())
        .collect();
    let Some(best_rank) = contained.iter().map(|id| rank(id)).min() else {
        return Err(QueryError::NotFound(title.to_string()));
    };
    contained.retain(|id| rank(id) == best_rank);
    contained.sort();
    if contained.len() == 1 {
        Ok(contained[0].clone())
    } else {
        Err(QueryError::Ambiguous {
            query: title.to_string(),
            candidates: contained.into_iter().cloned().collect(),
        })
    }
}

fn edge_ref(anchor: &str, n: &Neighbor) -> EdgeRef {
    let (source, target) = match n.direction {
        Direction::Out => (anchor.to_string(), n.node_id.clone()),
        Direction::In => (n.node_id.clone(), anchor.to_string()),
    };
    EdgeRef { source, relation: n.relation.to_string(), target }
}

fn expect_kind(q: &StructuredQuery, kind: QueryKind) -> Result<(), QueryError> {
    if q.kind == kind {
        Ok(())
    } else {
        Err(QueryError::Invalid(format!("expected a {kind:?} query, got {:?}", q.kind)))
    }
}

fn relationship(q: &StructuredQuery) -> Result<&RelationLabel, QueryError> {
    q.relationship.as_ref().ok_or_else(|| QueryError::Invalid("missing relationship".into()))
}

fn target_attribute(q: &StructuredQuery) -> Result<&str, QueryError> {
    q.target_attribute.as_deref().ok_or_else(|| QueryError::Invalid("missing target_attribute".into()))
}

/// The value of one attribute on a known node.
pub fn attribute_of(graph: &KnowledgeGraph, node_id: &str, key: &str) -> Result<QueryResult, QueryError> {
    let node = graph.node(node_id).ok_or_else(|| GraphError::MissingNode(node_id.to_string()))?;
    Ok(match node.attributes.get(key) {
        Some(v) => QueryResult {
            values: vec![v.clone()],
            provenance: vec![Provenance { node_id: node_id.to_string(), attribute: Some(key.to_string()), edge: None }],
            note: None,
        },
        None => QueryResult { note: Some(format!("attribute {key:?} absent on {node_id}")), ..Default::default() },
    })
}

pub fn attribute_lookup(graph: &KnowledgeGraph, q: &StructuredQuery) -> Result<QueryResult, QueryError> {
    expect_kind(q, QueryKind::AttributeLookup)?;
    let anchor = resolve_anchor(graph, &q.object_title)?;
    attribute_of(graph, &anchor, target_attribute(q)?)
}

pub fn find_related(graph: &KnowledgeGraph, q: &StructuredQuery) -> Result<QueryResult, QueryError> {
    expect_kind(q, QueryKind::FindRelated)?;
    let anchor = resolve_anchor(graph, &q.object_title)?;
    let mut out = QueryResult::default();
    for n in graph.related(&anchor, relationship(q)?)? {
        let node = graph.node(&n.node_id).expect("neighbour exists");
        out.values.push(node.display_name().to_string());
        out.provenance.push(Provenance {
            node_id: n.node_id.clone(),
            attribute: node.title().map(|_| TITLE_KEY.to_string()),
            edge: Some(edge_ref(&anchor, &n)),
        });
    }
    Ok(out)
}

pub fn attribute_of_related(graph: &KnowledgeGraph, q: &StructuredQuery) -> Result<QueryResult, QueryError> {
    expect_kind(q, QueryKind::AttributeOfRelated)?;
    let anchor = resolve_anchor(graph, &q.object_title)?;
    let key = target_attribute(q)?;
    let mut out = QueryResult::default();
    for n in graph.related(&anchor, relationship(q)?)? {
        let node = graph.node(&n.node_id).expect("neighbour exists");
        if let Some(v) = node.attributes.get(key) {
            out.values.push(v.clone());
            out.provenance.push(Provenance {
                node_id: n.node_id.clone(),
                attribute: Some(key.to_string()),
                edge: Some(edge_ref(&anchor, &n)),
            });
        }
    }
    Ok(out)
}

pub fn execute(graph: &KnowledgeGraph, q: &StructuredQuery) -> Result<QueryResult, QueryError> {
    match q.kind {
        QueryKind::AttributeLookup => attribute_lookup(graph, q),
        QueryKind::FindRelated => find_related(graph, q),
        QueryKind::AttributeOfRelated => attribute_of_related(graph, q),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedContext {
    pub anchor: String,
    pub text: String,
    /// Characters of `text` actually emitted.
    pub budget_used: usize,
    pub truncated: bool,
}

fn one_line(v: &str) -> String {
    v.replace(['\n', '\r'], " ")
}

fn attribute_lines(graph: &KnowledgeGraph, node: &Node, indent: &str, lines: &mut Vec<String>) {
    for key in graph.schema().keys() {
        if key == TITLE_KEY {
            continue;
        }
        if let Some(v) = node.attributes.get(key) {
            lines.push(format!("{indent}- {key}: {}", one_line(v)));
        }
    }
}

/// Serializes a node and its one-hop neighbourhood:
///
/// ```text
/// Object: Long Scale Galvanometer
/// - material_desc: aluminium and electronic components
/// - has_primary_producer -> Walden Precision Apparatus Limited
/// - has_image -> image:20208
/// ```
///
/// Incoming relations render as `- <relation> <- <name>`. Each relation line
/// is followed by the neighbour's own attributes, indented. When the text
/// exceeds `budget` characters it is cut at a line boundary and the
/// truncation marker is appended.
pub fn retrieve_context(graph: &KnowledgeGraph, node_id: &str, budget: usize) -> Result<RetrievedContext, QueryError> {
    let node = graph.node(node_id).ok_or_else(|| GraphError::MissingNode(node_id.to_string()))?;
    let mut lines = vec![format!("{}: {}", node.node_type.display_name(), one_line(node.display_name()))];
    attribute_lines(graph, node, "", &mut lines);
    for n in graph.neighbors(node_id)? {
        let other = graph.node(&n.node_id).expect("neighbour exists");
        let arrow = match n.direction {
            Direction::Out => "->",
            Direction::In => "<-",
        };
        lines.push(format!("- {} {arrow} {}", n.relation, one_line(other.display_name())));
        attribute_lines(graph, other, "  ", &mut lines);
    }

    let mut used = 0;
    let mut kept = 0;
    for (i, line) in lines.iter().enumerate() {
        let cost = line.chars().count() + usize::from(i > 0);
        if i > 0 && used + cost > budget {
            break;
        }
        used += cost;
        kept += 1;
    }
    let truncated = kept < lines.len();
    let mut text = lines[..kept].join("\n");
    if truncated {
        text.push('\n');
        text.push_str(TRUNCATION_MARKER);
    }
    let budget_used = text.chars().count();
    Ok(RetrievedContext { anchor: node_id.to_string(), text, budget_used, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{build_graph, default_mapping, NoLinker};
    use crate::ingest::{parse_records, AttributeSchema, FormatHint};
    use crate::graph::RelationVocabulary;

    fn fixture(src: &str) -> KnowledgeGraph {
        let recs = parse_records(src.as_bytes(), FormatHint::Auto).unwrap().records;
        build_graph(&recs, &default_mapping(), &AttributeSchema::default(), &NoLinker).unwrap().0
    }

    fn obj123() -> KnowledgeGraph {
        fixture(include_str!("../tests/fixtures/obj123_full.json"))
    }

    fn q(title: &str, rel: Option<&str>, attr: Option<&str>) -> QueryDetails {
        QueryDetails {
            object_title: title.into(),
            relationship: rel.map(Into::into),
            target_attribute: attr.map(Into::into),
        }
    }

    fn run(g: &KnowledgeGraph, d: QueryDetails) -> Vec<String> {
        execute(g, &d.compile(g).unwrap()).unwrap().values
    }

    fn bare() -> KnowledgeGraph {
        KnowledgeGraph::new(AttributeSchema::default(), RelationVocabulary::default())
    }

    #[test]
    fn kind_inference() {
        assert_eq!(q("x", None, Some("name")).kind().unwrap(), QueryKind::AttributeLookup);
        assert_eq!(q("x", Some("has_entity"), None).kind().unwrap(), QueryKind::FindRelated);
        assert_eq!(q("x", Some("has_entity"), Some("name")).kind().unwrap(), QueryKind::AttributeOfRelated);
        assert!(q("x", None, None).kind().is_err());
        let g = obj123();
        assert!(q("x", Some("owns"), None).compile(&g).is_err());
        assert!(q("x", None, Some("colour")).compile(&g).is_err());
        assert!(q(" ", None, Some("name")).compile(&g).is_err());
        let json = r#"{"object_title": "Certificate of Passing First Year of Bachelor of Laws", "relationship": "has_entity", "target_attribute": "accession_no"}"#;
        let d: QueryDetails = serde_json::from_str(json).unwrap();
        assert_eq!(d.kind().unwrap(), QueryKind::AttributeOfRelated);
    }

    #[test]
    fn anchor_resolution() {
        let g = obj123();
        assert_eq!(resolve_anchor(&g, "Long Scale Galvanometer").unwrap(), "object:OBJ123");
        assert_eq!(resolve_anchor(&g, "long   SCALE galvanometer").unwrap(), "object:OBJ123");
        assert!(matches!(resolve_anchor(&g, ""), Err(QueryError::NotFound(_))));
        assert!(matches!(resolve_anchor(&g, "teapot"), Err(QueryError::NotFound(_))));
        assert_eq!(resolve_anchor(&g, "scale galvanometer").unwrap(), "object:OBJ123");

        let mut g = bare();
        g.add_node(Node::new(NodeType::Object, "1").with_attr("name", "cup")).unwrap();
        g.add_node(Node::new(NodeType::Object, "2").with_attr("name", "blue cup")).unwrap();
        assert_eq!(resolve_anchor(&g, "cup").unwrap(), "object:1");
        assert_eq!(resolve_anchor(&g, "blue").unwrap(), "object:2");
        g.add_node(Node::new(NodeType::Object, "3").with_attr("name", "red cup")).unwrap();
        assert_eq!(resolve_anchor(&g, "cup").unwrap(), "object:1");
        match resolve_anchor(&g, "c") {
            Err(QueryError::NotFound(_)) => {}
            other => panic!("{other:?}"),
        }
        g.add_node(Node::new(NodeType::Object, "4").with_attr("name", "red cup saucer")).unwrap();
        assert!(matches!(resolve_anchor(&g, "red saucer"), Ok(id) if id == "object:4"));
        match resolve_anchor(&g, "red") {
            Err(QueryError::Ambiguous { candidates, .. }) => assert_eq!(candidates, vec!["object:3", "object:4"]),
            other => panic!("{other:?}"),
        }
        // type priority
        g.add_node(Node::new(NodeType::Person, "9").with_attr("name", "green person")).unwrap();
        g.add_node(Node::new(NodeType::Object, "9").with_attr("name", "green vase")).unwrap();
        assert_eq!(resolve_anchor(&g, "green").unwrap(), "object:9");
    }

    #[test]
    fn c1_lookups() {
        let g = obj123();
        assert_eq!(run(&g, q("Long Scale Galvanometer", None, Some("measurements"))), vec!["14.0 x 29.0 x 22.0 cm"]);
        assert_eq!(run(&g, q("Long Scale Galvanometer", None, Some("accession_no"))), vec!["MHM2013.432"]);
        let r = execute(&g, &q("Long Scale Galvanometer", None, Some("history_category")).compile(&g).unwrap()).unwrap();
        assert!(r.values.is_empty());
        assert!(r.note.is_some());
    }

    #[test]
    fn c2_related() {
        let g = obj123();
        assert_eq!(
            run(&g, q("Long Scale Galvanometer", Some("has_primary_producer"), None)),
            vec!["Walden Precision Apparatus Limited"]
        );
        assert!(run(&g, q("Long Scale Galvanometer", Some("has_related_object"), None)).is_empty());

        let mut g = bare();
        for (id, name) in [("A", "anchor"), ("B", "zeta bowl"), ("C", "alpha bowl"), ("D", "delta bowl")] {
            g.add_node(Node::new(NodeType::Object, id).with_attr("name", name)).unwrap();
        }
        g.add_edge("object:A", "has_related_object", "object:B").unwrap();
        g.add_edge("object:A", "has_related_object", "object:C").unwrap();
        g.add_edge("object:D", "has_related_object", "object:A").unwrap();
        assert_eq!(
            run(&g, q("anchor", Some("has_related_object"), None)),
            vec!["alpha bowl", "zeta bowl", "delta bowl"]
        );
    }

    #[test]
    fn c3_attribute_of_related() {
        let g = fixture(include_str!("../tests/fixtures/certificate.ndjson"));
        let d = q("Certificate of Passing First Year of Bachelor of Laws", Some("has_entity"), Some("accession_no"));
        let r = execute(&g, &d.compile(&g).unwrap()).unwrap();
        assert_eq!(r.values, vec!["MHM06682"]);
        assert_eq!(
            r.provenance[0].edge,
            Some(EdgeRef {
                source: "object:OBJ900".into(),
                relation: "has_entity".into(),
                target: "object:OBJ901".into()
            })
        );

        let mut g = bare();
        g.add_node(Node::new(NodeType::Object, "A").with_attr("name", "anchor")).unwrap();
        g.add_node(Node::new(NodeType::Object, "B").with_attr("name", "b").with_attr("accession_no", "B1"))
            .unwrap();
        g.add_node(Node::new(NodeType::Object, "C").with_attr("name", "c").with_attr("accession_no", "C1"))
            .unwrap();
        g.add_node(Node::new(NodeType::Object, "D").with_attr("name", "d")).unwrap();
        for t in ["B", "C", "D"] {
            g.add_edge("object:A", "has_entity", &format!("object:{t}")).unwrap();
        }
        assert_eq!(run(&g, q("anchor", Some("has_entity"), Some("accession_no"))), vec!["B1", "C1"]);
    }

    #[test]
    fn compositional_consistency() {
        let g = fixture(include_str!("../tests/fixtures/certificate.ndjson"));
        let title = "Certificate of Passing First Year of Bachelor of Laws";
        let related = execute(&g, &q(title, Some("has_entity"), None).compile(&g).unwrap()).unwrap();
        let mut composed = Vec::new();
        for p in &related.provenance {
            composed.extend(attribute_of(&g, &p.node_id, "accession_no").unwrap().values);
        }
        assert_eq!(composed, run(&g, q(title, Some("has_entity"), Some("accession_no"))));
    }

    #[test]
    fn context_block() {
        let g = obj123();
        let ctx = retrieve_context(&g, "object:OBJ123", DEFAULT_CONTEXT_BUDGET).unwrap();
        let expected = "Object: Long Scale Galvanometer\n\
            - material_desc: aluminium and electronic components\n\
            - accession_no: MHM2013.432\n\
            - measurements: 14.0 x 29.0 x 22.0 cm\n\
            - credit_line: Transferred from the Melbourne School of Psychological Sciences, University of Melbourne, 2013\n\
            - has_primary_producer -> Walden Precision Apparatus Limited\n\
            - has_image -> image:20208";
        assert_eq!(ctx.text, expected);
        assert!(!ctx.truncated);
        assert_eq!(ctx.budget_used, expected.chars().count());

        let ctx = retrieve_context(&g, "person:3601", 100).unwrap();
        assert!(ctx.truncated);
        assert_eq!(
            ctx.text,
            "Person: Walden Precision Apparatus Limited\n\
             - has_primary_producer <- Long Scale Galvanometer\n\
             ... (truncated for brevity)"
        );
    }

    #[test]
    fn context_truncation_and_isolation() {
        let g = obj123();
        let full = retrieve_context(&g, "object:OBJ123", DEFAULT_CONTEXT_BUDGET).unwrap();
        let lines: Vec<&str> = full.text.lines().collect();
        let prefix = lines[..3].join("\n");
        let ctx = retrieve_context(&g, "object:OBJ123", prefix.chars().count()).unwrap();
        assert!(ctx.truncated);
        assert_eq!(ctx.text, format!("{prefix}\n{TRUNCATION_MARKER}"));

        let mut g = bare();
        g.add_node(Node::new(NodeType::Image, "7")).unwrap();
        let ctx = retrieve_context(&g, "image:7", 100).unwrap();
        assert_eq!(ctx.text, "Image: image:7");
        assert!(retrieve_context(&g, "image:8", 100).is_err());
    }
}
