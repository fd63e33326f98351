//! Natural-language question answering over the graph.
//!
//! The pipeline is: entity extraction (model first, title matching as a
//! fallback), anchor resolution, one-hop context retrieval, then answer
//! synthesis with a fixed prompt. Every stage is timed.

mod http;
mod mock;
mod provider;

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use http::{http_provider, HttpProvider, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use mock::{mock_provider, MockProvider};
pub use provider::{ChatRequest, ModelProvider, ProviderError};

use crate::graph::KnowledgeGraph;
use crate::query::{resolve_anchor, retrieve_context, DEFAULT_CONTEXT_BUDGET};
use crate::text::{normalize_text, token_aligned_occurrences, tokens};

pub const EXTRACTION_SYSTEM: &str = "Extract the museum object titles or entity names mentioned in the question. \
Reply with a JSON array of strings only.";
pub(crate) const CANDIDATES_HEADER: &str = "\n\nCandidate titles:\n";
pub(crate) const SYNTHESIS_PREFIX: &str = "Answer using ONLY the KG context. Return ONLY the final answer.";
pub const NOT_FOUND_ANSWER: &str = "entity not found";
pub const MAX_CANDIDATES: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum NlqError {
    #[error("no entity found in question")]
    NoEntity,
    #[error("empty question")]
    EmptyQuestion,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// The synthesis prompt, byte for byte.
pub fn synthesis_prompt(context: &str, question: &str) -> String {
    format!("{SYNTHESIS_PREFIX}\nContext: {context}\nQuestion: {question}\nAnswer:")
}

pub fn synthesis_request(context: &str, question: &str) -> Result<ChatRequest, ProviderError> {
    ChatRequest::new("", synthesis_prompt(context, question))
}

pub fn extraction_request(question: &str, candidates: &[String]) -> Result<ChatRequest, ProviderError> {
    let mut user = question.to_string();
    if !candidates.is_empty() {
        user.push_str(CANDIDATES_HEADER);
        for c in candidates {
            user.push_str("- ");
            user.push_str(c);
            user.push('\n');
        }
    }
    ChatRequest::new(EXTRACTION_SYSTEM, user)
}

/// Titles occurring token-aligned in `question`, longest first, skipping
/// titles whose only occurrences overlap an already chosen longer one.
pub fn match_titles<'a, I>(question: &str, titles: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let q = normalize_text(question);
    let mut found: Vec<(String, &str, Vec<usize>)> = Vec::new();
    let mut seen = HashSet::new();
    for title in titles {
        let norm = normalize_text(title);
        if norm.is_empty() || !seen.insert(norm.clone()) {
            continue;
        }
        let hits = token_aligned_occurrences(&q, &norm);
        if !hits.is_empty() {
            found.push((norm, title, hits));
        }
    }
    found.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));

    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for (norm, title, hits) in found {
        let free = hits
            .iter()
            .map(|&s| (s, s + norm.len()))
            .find(|&(s, e)| taken.iter().all(|&(ts, te)| e <= ts || s >= te));
        if let Some(span) = free {
            taken.push(span);
            out.push(title.to_string());
        }
    }
    out
}

fn display_title<'a>(graph: &'a KnowledgeGraph, ids: &std::collections::BTreeSet<String>) -> Option<&'a str> {
    ids.iter().find_map(|id| graph.node(id).and_then(|n| n.title()))
}

/// Up to [`MAX_CANDIDATES`] graph titles sharing tokens with the question,
/// titles fully contained in it first.
pub fn candidate_titles(graph: &KnowledgeGraph, question: &str) -> Vec<String> {
    let q = normalize_text(question);
    let q_tokens: HashSet<String> = tokens(question).into_iter().collect();
    let mut scored: Vec<(bool, usize, &str, &str)> = Vec::new();
    for (norm, ids) in graph.titles() {
        let mut title_tokens: Vec<&str> = norm.split(' ').collect();
        title_tokens.sort_unstable();
        title_tokens.dedup();
        let overlap = title_tokens.iter().filter(|t| q_tokens.contains(**t)).count();
        if overlap == 0 {
            continue;
        }
        if let Some(title) = display_title(graph, ids) {
            let contained = !token_aligned_occurrences(&q, norm).is_empty();
            scored.push((contained, overlap, norm.as_str(), title));
        }
    }
    scored.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.len().cmp(&a.2.len()))
            .then(a.2.cmp(b.2))
    });
    scored.into_iter().take(MAX_CANDIDATES).map(|s| s.3.to_string()).collect()
}

/// Title matching against every graph title.
pub fn deterministic_entities(graph: &KnowledgeGraph, question: &str) -> Vec<String> {
    match_titles(question, graph.titles().filter_map(|(_, ids)| display_title(graph, ids)))
}

fn parse_entity_reply(reply: &str) -> Option<Vec<String>> {
    let start = reply.find('[')?;
    let end = reply.rfind(']')?;
    let list: Vec<String> = serde_json::from_str(reply.get(start..=end)?).ok()?;
    let list: Vec<String> = list.into_iter().filter(|s| !s.trim().is_empty()).collect();
    (!list.is_empty()).then_some(list)
}

/// Asks the provider for entity names, falling back to title matching when
/// the reply is unusable or the call fails.
pub fn extract_entities(
    question: &str,
    graph: &KnowledgeGraph,
    provider: &dyn ModelProvider,
) -> Result<Vec<String>, NlqError> {
    if question.trim().is_empty() {
        return Err(NlqError::EmptyQuestion);
    }
    let candidates = candidate_titles(graph, question);
    let request = extraction_request(question, &candidates)?;
    match provider.complete(&request) {
        Ok(reply) => {
            if let Some(list) = parse_entity_reply(&reply) {
                return Ok(list);
            }
            log::debug!("unparseable extraction reply {reply:?}; using title matching");
        }
        Err(e) => log::warn!("extraction call failed: {e}; using title matching"),
    }
    let fallback = deterministic_entities(graph, question);
    if fallback.is_empty() {
        Err(NlqError::NoEntity)
    } else {
        Ok(fallback)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub extraction_ms: f64,
    pub retrieval_ms: f64,
    pub synthesis_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NLAnswer {
    pub question: String,
    pub entities: Vec<String>,
    pub anchor: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_anchors: Vec<String>,
    pub context: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_error: Option<String>,
    pub timings: StageTimings,
}

impl NLAnswer {
    pub fn found(&self) -> bool {
        self.anchor.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnswerOptions {
    pub context_budget: usize,
    /// Concatenate the contexts of every resolvable entity instead of using
    /// only the first.
    pub multi_anchor: bool,
}

impl Default for AnswerOptions {
    fn default() -> Self {
        Self { context_budget: DEFAULT_CONTEXT_BUDGET, multi_anchor: false }
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Runs the full retrieval-augmented pipeline for one question.
pub fn answer_question(
    question: &str,
    graph: &KnowledgeGraph,
    provider: &dyn ModelProvider,
    options: &AnswerOptions,
) -> Result<NLAnswer, NlqError> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut answer = NLAnswer {
        question: question.to_string(),
        entities: Vec::new(),
        anchor: None,
        extra_anchors: Vec::new(),
        context: String::new(),
        answer: NOT_FOUND_ANSWER.to_string(),
        anchor_error: None,
        timings,
    };

    let t = Instant::now();
    let extracted = extract_entities(question, graph, provider);
    timings.extraction_ms = ms_since(t);
    match extracted {
        Ok(list) => answer.entities = list,
        Err(NlqError::NoEntity) => {
            answer.anchor_error = Some(NlqError::NoEntity.to_string());
            timings.total_ms = ms_since(start);
            answer.timings = timings;
            return Ok(answer);
        }
        Err(e) => return Err(e),
    }

    let t = Instant::now();
    let considered = if options.multi_anchor { answer.entities.len() } else { 1 };
    let mut anchors: Vec<String> = Vec::new();
    for entity in answer.entities.iter().take(considered) {
        match resolve_anchor(graph, entity) {
            Ok(id) if !anchors.contains(&id) => anchors.push(id),
            Ok(_) => {}
            Err(e) => {
                if answer.anchor_error.is_none() {
                    answer.anchor_error = Some(e.to_string());
                }
            }
        }
    }
    let mut contexts = Vec::new();
    for id in &anchors {
        let ctx = retrieve_context(graph, id, options.context_budget).expect("resolved anchors exist");
        contexts.push(ctx.text);
    }
    timings.retrieval_ms = ms_since(t);
    if anchors.is_empty() {
        timings.total_ms = ms_since(start);
        answer.timings = timings;
        return Ok(answer);
    }
    answer.anchor_error = None;
    answer.context = contexts.join("\n\n");
    answer.anchor = Some(anchors.remove(0));
    answer.extra_anchors = anchors;

    let t = Instant::now();
    let request = synthesis_request(&answer.context, question)?;
    answer.answer = provider.complete(&request)?;
    timings.synthesis_ms = ms_since(t);
    timings.total_ms = ms_since(start);
    answer.timings = timings;
    Ok(answer)
}
