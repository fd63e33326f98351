//! QA benchmark: item loading, graph-derived gold answers, scoring, the
//! runner and question generation.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::graph::{KnowledgeGraph, NodeType};
use crate::ingest::{Record, TITLE_KEY};
use crate::nlq::{answer_question, AnswerOptions, ChatRequest, ModelProvider};
use crate::query::{execute, QueryDetails, QueryError, QueryKind, DEFAULT_CONTEXT_BUDGET};
use crate::text::{find_token_aligned, normalize_text};

/// Separator used when a query yields several values.
pub const ANSWER_SEPARATOR: &str = "; ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    C1,
    C2,
    C3,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::C1, Category::C2, Category::C3];

    pub fn kind(self) -> QueryKind {
        match self {
            Category::C1 => QueryKind::AttributeLookup,
            Category::C2 => QueryKind::FindRelated,
            Category::C3 => QueryKind::AttributeOfRelated,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::C1 => "C1",
            Category::C2 => "C2",
            Category::C3 => "C3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub question: String,
    #[serde(alias = "expected")]
    pub expected_answer: String,
    pub category: Category,
    pub query_details: QueryDetails,
}

impl QAItem {
    /// Checks the fields a runner relies on, including that the category
    /// agrees with the shape of `query_details`.
    pub fn validate(&self) -> Result<(), String> {
        if self.question.trim().is_empty() {
            return Err("question is empty".into());
        }
        if self.query_details.object_title.trim().is_empty() {
            return Err("object_title is empty".into());
        }
        let kind = self.query_details.kind().map_err(|e| e.to_string())?;
        if kind != self.category.kind() {
            return Err(format!("category {} does not match query shape {kind:?}", self.category.as_str()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaReject {
    /// Zero-based position of the item in the input.
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("malformed QA file: {0}")]
    Syntax(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn item_from_value(v: Value) -> Result<QAItem, String> {
    let item: QAItem = serde_json::from_value(v).map_err(|e| e.to_string())?;
    item.validate()?;
    Ok(item)
}

/// Reads QA items from a JSON array or NDJSON. Items that fail to parse or
/// validate are returned as rejects; only an unreadable top-level array is
/// an error.
pub fn load_qa(bytes: &[u8]) -> Result<(Vec<QAItem>, Vec<QaReject>), BenchError> {
    let text = std::str::from_utf8(bytes).map_err(|e| BenchError::Syntax(e.to_string()))?;
    let mut items = Vec::new();
    let mut rejects = Vec::new();
    let mut push = |index: usize, v: Result<Value, String>| match v.and_then(item_from_value) {
        Ok(item) => items.push(item),
        Err(reason) => rejects.push(QaReject { index, reason }),
    };
    if text.trim_start().starts_with('[') {
        let values: Vec<Value> = serde_json::from_str(text).map_err(|e| BenchError::Syntax(e.to_string()))?;
        for (i, v) in values.into_iter().enumerate() {
            push(i, Ok(v));
        }
    } else {
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            push(i, serde_json::from_str(line).map_err(|e| e.to_string()));
        }
    }
    Ok((items, rejects))
}

pub fn load_qa_from<R: std::io::Read>(mut reader: R) -> Result<(Vec<QAItem>, Vec<QaReject>), BenchError> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    load_qa(&buf)
}

pub fn qa_ndjson(items: &[QAItem]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("items serialize") + "\n")
        .collect()
}

/// Why the graph cannot answer a query.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unanswerable from graph ({code}): {reason}")]
pub struct Unanswerable {
    pub code: String,
    pub reason: String,
}

impl From<QueryError> for Unanswerable {
    fn from(e: QueryError) -> Self {
        Unanswerable { code: e.code().into(), reason: e.to_string() }
    }
}

/// The answer the graph gives for `details`, values joined with
/// [`ANSWER_SEPARATOR`]. An empty result counts as unanswerable.
pub fn gold_answer(graph: &KnowledgeGraph, details: &QueryDetails) -> Result<String, Unanswerable> {
    let q = details.compile(graph)?;
    let result = execute(graph, &q)?;
    if result.values.is_empty() {
        return Err(Unanswerable {
            code: "empty".into(),
            reason: result.note.unwrap_or_else(|| "query returned no values".into()),
        });
    }
    Ok(result.values.join(ANSWER_SEPARATOR))
}

/// Normalized equality, or the normalized expected answer occurring
/// token-aligned inside the prediction. An empty expected answer only
/// matches an empty prediction.
pub fn score(predicted: &str, expected: &str) -> bool {
    let p = normalize_text(predicted);
    let e = normalize_text(expected);
    if p == e {
        return true;
    }
    !e.is_empty() && find_token_aligned(&p, &e).is_some()
}

#[derive(Clone, Copy)]
pub enum System<'a> {
    Structured,
    Nlq(&'a dyn ModelProvider),
}

impl System<'_> {
    pub fn name(&self) -> String {
        match self {
            System::Structured => "structured".into(),
            System::Nlq(p) => format!("nlq:{}", p.identity()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    /// Count items the graph cannot answer as wrong instead of excluding them.
    pub strict_gold: bool,
    pub context_budget: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { strict_gold: false, context_budget: DEFAULT_CONTEXT_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
    Unanswerable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemLog {
    pub index: usize,
    pub category: Category,
    pub question: String,
    pub expected: String,
    /// Graph-derived answer, absent when the graph cannot answer.
    pub gold: Option<String>,
    pub predicted: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Per-stage latency in milliseconds.
    pub stages: BTreeMap<String, f64>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub unanswerable: usize,
    /// correct / (correct + incorrect); `None` when nothing was scored.
    pub accuracy: Option<f64>,
}

impl CategoryStats {
    fn add(&mut self, verdict: Verdict) {
        self.total += 1;
        match verdict {
            Verdict::Correct => self.correct += 1,
            Verdict::Incorrect => self.incorrect += 1,
            Verdict::Unanswerable => self.unanswerable += 1,
        }
        let scored = self.correct + self.incorrect;
        self.accuracy = (scored > 0).then(|| self.correct as f64 / scored as f64);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_ms: f64,
    /// Lower median.
    pub p50_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            count: sorted.len(),
            mean_ms: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p50_ms: sorted[(sorted.len() - 1) / 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub system: String,
    pub items: usize,
    pub rejects: usize,
    pub strict_gold: bool,
    pub categories: BTreeMap<Category, CategoryStats>,
    pub overall: CategoryStats,
    /// Keyed by stage name, plus `total`.
    pub latency: BTreeMap<String, LatencyStats>,
}

impl BenchReport {
    pub fn from_logs(system: String, logs: &[ItemLog], rejects: usize, strict_gold: bool) -> Self {
        let mut categories: BTreeMap<Category, CategoryStats> =
            Category::ALL.iter().map(|c| (*c, CategoryStats::default())).collect();
        let mut overall = CategoryStats::default();
        let mut samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for log in logs {
            categories.entry(log.category).or_default().add(log.verdict);
            overall.add(log.verdict);
            for (stage, ms) in &log.stages {
                samples.entry(stage.clone()).or_default().push(*ms);
            }
            samples.entry("total".into()).or_default().push(log.total_ms);
        }
        let latency = samples.iter().map(|(k, v)| (k.clone(), LatencyStats::from_samples(v))).collect();
        Self { system, items: logs.len(), rejects, strict_gold, categories, overall, latency }
    }

    pub fn accuracy(&self, category: Category) -> Option<f64> {
        self.categories.get(&category).and_then(|s| s.accuracy)
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchReport,
    pub logs: Vec<ItemLog>,
}

impl BenchRun {
    pub fn logs_ndjson(&self) -> String {
        self.logs
            .iter()
            .map(|l| serde_json::to_string(l).expect("logs serialize") + "\n")
            .collect()
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn run_structured(graph: &KnowledgeGraph, item: &QAItem, stages: &mut BTreeMap<String, f64>) -> Result<String, String> {
    let t = Instant::now();
    let compiled = item.query_details.compile(graph);
    stages.insert("compile".into(), ms_since(t));
    let q = compiled.map_err(|e| e.to_string())?;
    let t = Instant::now();
    let result = execute(graph, &q);
    stages.insert("execute".into(), ms_since(t));
    Ok(result.map_err(|e| e.to_string())?.values.join(ANSWER_SEPARATOR))
}

fn run_nlq(
    graph: &KnowledgeGraph,
    item: &QAItem,
    provider: &dyn ModelProvider,
    options: &BenchOptions,
    stages: &mut BTreeMap<String, f64>,
) -> Result<String, String> {
    let opts = AnswerOptions { context_budget: options.context_budget, ..AnswerOptions::default() };
    let answer = answer_question(&item.question, graph, provider, &opts).map_err(|e| e.to_string())?;
    stages.insert("extraction".into(), answer.timings.extraction_ms);
    stages.insert("retrieval".into(), answer.timings.retrieval_ms);
    stages.insert("synthesis".into(), answer.timings.synthesis_ms);
    Ok(answer.answer)
}

/// Runs every item sequentially against `system`.
pub fn run_benchmark(graph: &KnowledgeGraph, items: &[QAItem], system: System<'_>, options: &BenchOptions) -> BenchRun {
    let mut logs = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let gold = gold_answer(graph, &item.query_details);
        let mut stages = BTreeMap::new();
        let start = Instant::now();
        let outcome = match system {
            System::Structured => run_structured(graph, item, &mut stages),
            System::Nlq(p) => run_nlq(graph, item, p, options, &mut stages),
        };
        let total_ms = ms_since(start);
        let (predicted, error) = match outcome {
            Ok(p) => (p, None),
            Err(e) => (String::new(), Some(e)),
        };
        let verdict = match (&gold, options.strict_gold) {
            (Err(_), false) => Verdict::Unanswerable,
            (Err(_), true) => Verdict::Incorrect,
            (Ok(_), _) if error.is_none() && score(&predicted, &item.expected_answer) => Verdict::Correct,
            (Ok(_), _) => Verdict::Incorrect,
        };
        let error = error.or_else(|| gold.as_ref().err().map(|e| e.to_string()));
        logs.push(ItemLog {
            index,
            category: item.category,
            question: item.question.clone(),
            expected: item.expected_answer.clone(),
            gold: gold.ok(),
            predicted,
            verdict,
            error,
            stages,
            total_ms,
        });
    }
    let report = BenchReport::from_logs(system.name(), &logs, 0, options.strict_gold);
    BenchRun { report, logs }
}

pub enum Generation<'a> {
    /// Fixed question templates filled from the graph.
    Template { seed: u64 },
    /// A model writes each item from one raw record.
    Llm { provider: &'a dyn ModelProvider, seed: u64 },
}

#[derive(Debug, Clone, Default)]
pub struct GeneratedQa {
    pub items: Vec<QAItem>,
    pub warnings: Vec<String>,
}

fn attribute_phrase(key: &str) -> String {
    match key {
        "material_desc" => "material description".into(),
        "accession_no" => "accession number".into(),
        _ => key.replace('_', " "),
    }
}

fn c1_question(key: &str, title: &str) -> String {
    match key {
        "measurements" => format!("What are the measurements of the {title}?"),
        _ => format!("What is the {} of the {title}?", attribute_phrase(key)),
    }
}

const C2_RELATIONS: [(&str, &str); 6] = [
    ("has_primary_producer", "Who is the primary producer of the {t}?"),
    ("has_secondary_producer", "Who is the secondary producer of the {t}?"),
    ("has_related_object", "Which objects are related to the {t}?"),
    ("has_entity", "Which entities are associated with the {t}?"),
    ("has_image_label", "Which image labels are attached to the {t}?"),
    ("belongs_to_collection", "Which collection does the {t} belong to?"),
];

const C3_RELATIONS: [(&str, &str); 4] = [
    ("has_primary_producer", "primary producer of"),
    ("has_secondary_producer", "secondary producer of"),
    ("has_related_object", "object related to"),
    ("has_entity", "entity associated with"),
];

fn template_candidates(graph: &KnowledgeGraph) -> BTreeMap<Category, Vec<QAItem>> {
    let mut out: BTreeMap<Category, Vec<QAItem>> = Category::ALL.iter().map(|c| (*c, Vec::new())).collect();
    let attrs: Vec<&String> = graph.schema().keys().iter().filter(|k| *k != TITLE_KEY).collect();
    let mut push = |category: Category, question: String, details: QueryDetails| {
        if let Ok(expected) = gold_answer(graph, &details) {
            out.get_mut(&category).expect("all categories").push(QAItem {
                question,
                expected_answer: expected,
                category,
                query_details: details,
            });
        }
    };
    for node in graph.nodes().filter(|n| n.node_type == NodeType::Object) {
        let Some(title) = node.title() else { continue };
        // only anchors the resolver maps back to this node
        if crate::query::resolve_anchor(graph, title).ok().as_deref() != Some(node.node_id.as_str()) {
            continue;
        }
        for key in &attrs {
            if node.attributes.contains_key(key.as_str()) {
                push(
                    Category::C1,
                    c1_question(key, title),
                    QueryDetails {
                        object_title: title.into(),
                        relationship: None,
                        target_attribute: Some((*key).clone()),
                    },
                );
            }
        }
        for (rel, template) in C2_RELATIONS {
            let Ok(label) = graph.relations().resolve(rel) else { continue };
            let Ok(related) = graph.related(&node.node_id, &label) else { continue };
            if related.is_empty() {
                continue;
            }
            push(
                Category::C2,
                template.replace("{t}", title),
                QueryDetails { object_title: title.into(), relationship: Some(rel.into()), target_attribute: None },
            );
            let Some((_, phrase)) = C3_RELATIONS.iter().find(|(r, _)| *r == rel) else { continue };
            for key in &attrs {
                let has_attr = related
                    .iter()
                    .any(|n| graph.node(&n.node_id).is_some_and(|t| t.attributes.contains_key(key.as_str())));
                if has_attr {
                    push(
                        Category::C3,
                        format!("What is the {} of the {phrase} the {title}?", attribute_phrase(key)),
                        QueryDetails {
                            object_title: title.into(),
                            relationship: Some(rel.into()),
                            target_attribute: Some((*key).clone()),
                        },
                    );
                }
            }
        }
    }
    out
}

fn llm_prompt(category: Category, graph: &KnowledgeGraph) -> String {
    let attrs = graph.schema().keys().join(", ");
    let rels: Vec<&str> = graph.relations().labels().iter().map(|l| l.as_str()).collect();
    let rels = rels.join(", ");
    let (task, details) = match category {
        Category::C1 => (
            "asks for one attribute of the object itself".to_string(),
            format!("{{\"object_title\": ..., \"target_attribute\": ...}} where target_attribute is one of: {attrs}"),
        ),
        Category::C2 => (
            "asks which entities are linked to the object through one relationship".to_string(),
            format!("{{\"object_title\": ..., \"relationship\": ...}} where relationship is one of: {rels}"),
        ),
        Category::C3 => (
            "follows one relationship from the object and asks for an attribute of the linked entity".to_string(),
            format!(
                "{{\"object_title\": ..., \"relationship\": ..., \"target_attribute\": ...}} where relationship is one of: {rels} and target_attribute is one of: {attrs}"
            ),
        ),
    };
    format!(
        "You write benchmark questions about museum objects. Using only the record you are given, \
         write one question that {task}. Reply with a single JSON object and nothing else: \
         {{\"question\": ..., \"answer\": ..., \"query_details\": {details}}}"
    )
}

fn parse_llm_item(reply: &str, category: Category) -> Result<QAItem, String> {
    let start = reply.find('{').ok_or("no JSON object in reply")?;
    let end = reply.rfind('}').ok_or("no JSON object in reply")?;
    if end < start {
        return Err("no JSON object in reply".into());
    }
    let mut v: Value = serde_json::from_str(&reply[start..=end]).map_err(|e| e.to_string())?;
    let obj = v.as_object_mut().ok_or("reply is not an object")?;
    if let Some(answer) = obj.remove("answer") {
        obj.entry("expected_answer").or_insert(answer);
    }
    obj.insert("category".into(), serde_json::to_value(category).expect("category serializes"));
    item_from_value(v)
}

/// Builds up to `n_per_category` items per category. Warnings report
/// categories that fell short and discarded model replies.
pub fn generate_qa(graph: &KnowledgeGraph, records: &[Record], n_per_category: usize, mode: Generation<'_>) -> GeneratedQa {
    let mut out = GeneratedQa::default();
    match mode {
        Generation::Template { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (category, mut pool) in template_candidates(graph) {
                pool.shuffle(&mut rng);
                if pool.len() < n_per_category {
                    out.warnings.push(format!(
                        "{}: only {} eligible items, wanted {n_per_category}",
                        category.as_str(),
                        pool.len()
                    ));
                }
                out.items.extend(pool.into_iter().take(n_per_category));
            }
        }
        Generation::Llm { provider, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<&Record> = records.iter().collect();
            order.shuffle(&mut rng);
            for category in Category::ALL {
                let system = llm_prompt(category, graph);
                let mut kept = 0;
                let mut discarded = 0;
                for record in order.iter().take(n_per_category.saturating_mul(3)) {
                    if kept == n_per_category {
                        break;
                    }
                    let user = serde_json::to_string_pretty(&record.to_source_json()).expect("records serialize");
                    let reply = ChatRequest::new(system.clone(), user)
                        .and_then(|r| provider.complete(&r))
                        .map_err(|e| e.to_string());
                    match reply.and_then(|r| parse_llm_item(&r, category)) {
                        Ok(item) if gold_answer(graph, &item.query_details).is_ok() => {
                            out.items.push(item);
                            kept += 1;
                        }
                        Ok(_) => discarded += 1,
                        Err(e) => {
                            log::debug!("discarded generated item for {}: {e}", record.object_id);
                            discarded += 1;
                        }
                    }
                }
                if discarded > 0 {
                    out.warnings.push(format!("{}: discarded {discarded} model replies", category.as_str()));
                }
                if kept < n_per_category {
                    out.warnings.push(format!("{}: generated {kept} of {n_per_category}", category.as_str()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{build_graph, default_mapping, NoLinker};
    use crate::ingest::{parse_records, AttributeSchema, FormatHint};
    use crate::nlq::{mock_provider, ProviderError};

    fn certificate_graph() -> KnowledgeGraph {
        let bytes = include_bytes!("../tests/fixtures/certificate.ndjson");
        let parsed = parse_records(bytes, FormatHint::Auto).unwrap();
        build_graph(&parsed.records, &default_mapping(), &AttributeSchema::default(), &NoLinker).unwrap().0
    }

    #[test]
    fn scoring_rules() {
        assert!(score("MHM06682", "mhm06682"));
        assert!(score("The accession number is MHM06682.", "MHM06682"));
        assert!(!score("Brass Microscope 17", "Brass Microscope 1"));
        assert!(!score("anything", ""));
        assert!(score("", ""));
    }

    #[test]
    fn load_accepts_both_layouts_and_rejects_bad_items() {
        let good = r#"{"question":"q","expected":"a","category":"C1","query_details":{"object_title":"X","target_attribute":"name"}}"#;
        let wrong_shape = r#"{"question":"q","expected_answer":"a","category":"C2","query_details":{"object_title":"X","target_attribute":"name"}}"#;
        let ndjson = format!("{good}\n\n{wrong_shape}\nnot json\n");
        let (items, rejects) = load_qa(ndjson.as_bytes()).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(rejects.iter().map(|r| r.index).collect::<Vec<_>>(), vec![1, 2]);
        let array = format!("[{good},{good}]");
        assert_eq!(load_qa(array.as_bytes()).unwrap().0.len(), 2);
        assert!(load_qa(b"[{").is_err());
    }

    #[test]
    fn gold_and_unanswerable() {
        let g = certificate_graph();
        let details = QueryDetails {
            object_title: "Certificate of Passing First Year of Bachelor of Laws".into(),
            relationship: Some("has_entity".into()),
            target_attribute: Some("accession_no".into()),
        };
        assert_eq!(gold_answer(&g, &details).unwrap(), "MHM06682");
        let missing = QueryDetails { target_attribute: Some("credit_line".into()), ..details.clone() };
        assert_eq!(gold_answer(&g, &missing).unwrap_err().code, "empty");
        let nowhere = QueryDetails { object_title: "Teapot".into(), ..details };
        assert_eq!(gold_answer(&g, &nowhere).unwrap_err().code, "not_found");
    }

    #[test]
    fn strict_gold_changes_denominator() {
        let g = certificate_graph();
        let items = vec![
            QAItem {
                question: "What is the accession number of the Academic Gown?".into(),
                expected_answer: "MHM06682".into(),
                category: Category::C1,
                query_details: QueryDetails {
                    object_title: "Academic Gown".into(),
                    relationship: None,
                    target_attribute: Some("accession_no".into()),
                },
            },
            QAItem {
                question: "What is the credit line of the Academic Gown?".into(),
                expected_answer: "nobody".into(),
                category: Category::C1,
                query_details: QueryDetails {
                    object_title: "Academic Gown".into(),
                    relationship: None,
                    target_attribute: Some("credit_line".into()),
                },
            },
        ];
        let lenient = run_benchmark(&g, &items, System::Structured, &BenchOptions::default());
        assert_eq!(lenient.report.accuracy(Category::C1), Some(1.0));
        assert_eq!(lenient.logs[1].verdict, Verdict::Unanswerable);
        let strict = run_benchmark(&g, &items, System::Structured, &BenchOptions { strict_gold: true, ..Default::default() });
        assert_eq!(strict.report.accuracy(Category::C1), Some(0.5));
        assert_eq!(strict.report.accuracy(Category::C2), None);
        assert_eq!(strict.report.latency["total"].count, 2);
    }

    #[test]
    fn template_generation_is_deterministic_and_consistent() {
        let g = certificate_graph();
        let a = generate_qa(&g, &[], 3, Generation::Template { seed: 1 });
        let b = generate_qa(&g, &[], 3, Generation::Template { seed: 1 });
        assert_eq!(a.items, b.items);
        assert!(a.items.iter().any(|i| i.category == Category::C3 && i.expected_answer == "MHM06682"));
        for item in &a.items {
            item.validate().unwrap();
            assert_eq!(gold_answer(&g, &item.query_details).unwrap(), item.expected_answer);
        }
        let run = run_benchmark(&g, &a.items, System::Structured, &BenchOptions::default());
        assert_eq!(run.report.overall.accuracy, Some(1.0));
    }

    struct Scripted(Vec<&'static str>, std::sync::Mutex<usize>);

    impl ModelProvider for Scripted {
        fn complete(&self, _: &ChatRequest) -> Result<String, ProviderError> {
            let mut i = self.1.lock().unwrap();
            *i += 1;
            Ok(self.0[(*i - 1) % self.0.len()].to_string())
        }
        fn identity(&self) -> String {
            "scripted".into()
        }
    }

    #[test]
    fn llm_generation_discards_malformed_replies() {
        let g = certificate_graph();
        let parsed = parse_records(include_bytes!("../tests/fixtures/certificate.ndjson"), FormatHint::Auto).unwrap();
        let provider = Scripted(
            vec![
                "Sure! {\"question\": \"What is the accession number of the Academic Gown?\", \"answer\": \"MHM06682\", \"query_details\": {\"object_title\": \"Academic Gown\", \"target_attribute\": \"accession_no\"}}",
                "I cannot help with that.",
            ],
            Default::default(),
        );
        let out = generate_qa(&g, &parsed.records, 1, Generation::Llm { provider: &provider, seed: 0 });
        let c1: Vec<_> = out.items.iter().filter(|i| i.category == Category::C1).collect();
        assert_eq!(c1.len(), 1);
        assert_eq!(c1[0].expected_answer, "MHM06682");
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn mock_nlq_answers_c1() {
        let g = certificate_graph();
        let items: Vec<QAItem> = generate_qa(&g, &[], 10, Generation::Template { seed: 3 })
            .items
            .into_iter()
            .filter(|i| i.category == Category::C1)
            .collect();
        assert!(!items.is_empty());
        let provider = mock_provider();
        let run = run_benchmark(&g, &items, System::Nlq(&provider), &BenchOptions::default());
        assert_eq!(run.report.accuracy(Category::C1), Some(1.0), "{}", run.logs_ndjson());
    }
}
