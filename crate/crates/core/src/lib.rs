//! Museum collection knowledge graph: record ingestion, graph construction,
//! structured queries and KG-grounded question answering.

pub mod bench;
pub mod constructor;
pub mod graph;
pub mod ingest;
pub mod nlq;
pub mod query;
pub mod synthetic;
pub mod text;

pub use graph::{Direction, Edge, GraphError, KnowledgeGraph, Neighbor, Node, NodeType, RelationLabel, RelationVocabulary};
pub use ingest::{canonical_key, parse_records, AttributeSchema, FormatHint, Record};
pub use text::normalize_text;
