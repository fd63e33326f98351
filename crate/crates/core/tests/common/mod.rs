//! Brute-force reference answers computed straight from raw records,
//! without the graph.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use musekg::ingest::Record;
use musekg::query::QueryDetails;

fn norm(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_punctuation() || "\u{201c}\u{201d}\u{2018}\u{2019}".contains(c) { ' ' } else { c })
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

struct Link {
    relation: String,
    prefix: &'static str,
}

pub struct Oracle<'a> {
    records: &'a [Record],
    by_title: HashMap<String, usize>,
    by_id: HashMap<&'a str, usize>,
    links: HashMap<String, Link>,
}

const SCHEMA: [&str; 9] = [
    "name",
    "material_desc",
    "description",
    "accession_no",
    "measurements",
    "credit_line",
    "production_date",
    "object_type",
    "history_category",
];

impl<'a> Oracle<'a> {
    pub fn new(records: &'a [Record]) -> Self {
        let raw: serde_json::Value =
            serde_json::from_str(include_str!("../../data/relation_mapping.json")).expect("mapping parses");
        let links = raw
            .as_object()
            .expect("mapping is an object")
            .iter()
            .map(|(k, v)| {
                let prefix = match v["target_type"].as_str().unwrap() {
                    "person" => "person",
                    "organisation" => "organisation",
                    "object" => "object",
                    other => panic!("unexpected target type {other}"),
                };
                (k.clone(), Link { relation: v["relation"].as_str().unwrap().to_string(), prefix })
            })
            .collect();
        let mut by_title = HashMap::new();
        let mut by_id = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            by_id.entry(r.object_id.as_str()).or_insert(i);
            if let Some(t) = first(r, "name") {
                by_title.entry(norm(t)).or_insert(i);
            }
        }
        Oracle { records, by_title, by_id, links }
    }

    /// Neighbours as (display name, node id, attributes), outgoing before
    /// incoming, each group sorted by name then id.
    fn related(&self, anchor: usize, relation: &str) -> Vec<(String, String, BTreeMap<String, String>)> {
        let rec = &self.records[anchor];
        let mut out: BTreeMap<(String, String), BTreeMap<String, String>> = BTreeMap::new();
        let field = match relation {
            "belongs_to_collection" => Some(("collection", "concept")),
            "has_image_label" => Some(("image_label", "label")),
            _ => None,
        };
        if let Some((key, prefix)) = field {
            for f in rec.field_sets.iter().filter(|f| f.identifier == key) {
                for v in &f.values {
                    let attrs = BTreeMap::from([("name".to_string(), v.clone())]);
                    out.entry((v.clone(), format!("{prefix}:{}", norm(v)))).or_insert(attrs);
                }
            }
        }
        for rel in &rec.relationships {
            let Some(link) = self.links.get(&rel.relationship_id) else { continue };
            if link.relation != relation {
                continue;
            }
            for target in &rel.related_records {
                let id = format!("{}:{}", link.prefix, target.related_record_id);
                let attrs = match (link.prefix, self.by_id.get(target.related_record_id.as_str())) {
                    ("object", Some(&j)) => attributes(&self.records[j]),
                    _ => BTreeMap::from([("name".to_string(), target.title.clone())]),
                };
                let name = attrs.get("name").cloned().unwrap_or_else(|| id.clone());
                out.entry((name, id)).or_insert(attrs);
            }
        }
        let mut inc: BTreeMap<(String, String), BTreeMap<String, String>> = BTreeMap::new();
        for other in self.records {
            for rel in &other.relationships {
                let Some(link) = self.links.get(&rel.relationship_id) else { continue };
                let points_here = link.prefix == "object"
                    && rel.related_records.iter().any(|t| t.related_record_id == rec.object_id);
                if link.relation == relation && points_here {
                    let attrs = attributes(other);
                    let id = format!("object:{}", other.object_id);
                    let name = attrs.get("name").cloned().unwrap_or_else(|| id.clone());
                    inc.entry((name, id)).or_insert(attrs);
                }
            }
        }
        out.into_iter().chain(inc).map(|((n, id), a)| (n, id, a)).collect()
    }

    /// Expected values, or `None` when the anchor title is unknown.
    pub fn answer(&self, q: &QueryDetails) -> Option<Vec<String>> {
        let anchor = *self.by_title.get(&norm(&q.object_title))?;
        Some(match (&q.relationship, &q.target_attribute) {
            (None, Some(attr)) => attributes(&self.records[anchor]).get(attr).cloned().into_iter().collect(),
            (Some(rel), None) => self.related(anchor, rel).into_iter().map(|(n, _, _)| n).collect(),
            (Some(rel), Some(attr)) => {
                self.related(anchor, rel).into_iter().filter_map(|(_, _, a)| a.get(attr).cloned()).collect()
            }
            (None, None) => Vec::new(),
        })
    }
}

fn first<'r>(r: &'r Record, key: &str) -> Option<&'r str> {
    r.field_sets
        .iter()
        .filter(|f| f.identifier == key)
        .flat_map(|f| f.values.iter())
        .next()
        .map(String::as_str)
}

fn attributes(r: &Record) -> BTreeMap<String, String> {
    SCHEMA
        .iter()
        .filter_map(|k| first(r, k).map(|v| (k.to_string(), v.to_string())))
        .collect()
}
