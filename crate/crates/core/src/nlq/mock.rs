//! Deterministic offline provider that only copies text it was given.

use std::collections::HashSet;

use super::provider::{ChatRequest, ModelProvider, ProviderError};
use super::{match_titles, CANDIDATES_HEADER, EXTRACTION_SYSTEM, SYNTHESIS_PREFIX};
use crate::text::tokens;

#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider;

pub fn mock_provider() -> MockProvider {
    MockProvider
}

impl ModelProvider for MockProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        if request.system == EXTRACTION_SYSTEM {
            let (question, candidates) = split_extraction(&request.user);
            let found = match_titles(question, candidates.iter().copied());
            return Ok(serde_json::to_string(&found).expect("strings serialize"));
        }
        if let Some((context, question)) = split_synthesis(&request.user) {
            return Ok(best_line_value(context, question));
        }
        Ok(String::new())
    }

    fn identity(&self) -> String {
        "mock".into()
    }
}

fn split_extraction(user: &str) -> (&str, Vec<&str>) {
    match user.split_once(CANDIDATES_HEADER) {
        Some((question, rest)) => (
            question,
            rest.lines().filter_map(|l| l.strip_prefix("- ")).collect(),
        ),
        None => (user, Vec::new()),
    }
}

fn split_synthesis(user: &str) -> Option<(&str, &str)> {
    let body = user.strip_prefix(SYNTHESIS_PREFIX)?;
    let body = body.strip_prefix("\nContext: ")?;
    let (context, rest) = body.rsplit_once("\nQuestion: ")?;
    let question = rest.strip_suffix("\nAnswer:").unwrap_or(rest);
    Some((context, question))
}

struct Candidate<'a> {
    key_tokens: Vec<String>,
    value: &'a str,
    is_attribute: bool,
}

fn key_tokens(key: &str) -> Vec<String> {
    tokens(&key.replace('_', " "))
}

fn candidates(context: &str) -> Vec<Candidate<'_>> {
    let mut out = Vec::new();
    let mut parent: Vec<String> = Vec::new();
    for line in context.lines().skip(1) {
        if let Some(rest) = line.strip_prefix("  - ") {
            if let Some((key, value)) = rest.split_once(": ") {
                let mut toks = parent.clone();
                toks.extend(key_tokens(key));
                out.push(Candidate { key_tokens: toks, value, is_attribute: false });
            }
        } else if let Some(rest) = line.strip_prefix("- ") {
            let relation = rest
                .split_once(" -> ")
                .or_else(|| rest.split_once(" <- "))
                .filter(|(rel, _)| !rel.contains(' ') && !rel.contains(':'));
            if let Some((rel, value)) = relation {
                parent = key_tokens(rel);
                out.push(Candidate { key_tokens: parent.clone(), value, is_attribute: false });
            } else if let Some((key, value)) = rest.split_once(": ") {
                parent.clear();
                out.push(Candidate { key_tokens: key_tokens(key), value, is_attribute: true });
            }
        }
    }
    out
}

/// Value of the context line whose key tokens overlap the question most;
/// earliest line wins ties. Falls back to the first attribute line.
fn best_line_value(context: &str, question: &str) -> String {
    let lines = candidates(context);
    let q: HashSet<String> = tokens(question).into_iter().collect();
    let mut best: Option<(usize, &Candidate<'_>)> = None;
    for c in &lines {
        let distinct: HashSet<&String> = c.key_tokens.iter().collect();
        let score = distinct.into_iter().filter(|t| q.contains(*t)).count();
        if score > 0 && best.is_none_or(|(s, _)| score > s) {
            best = Some((score, c));
        }
    }
    best.map(|(_, c)| c)
        .or_else(|| lines.iter().find(|c| c.is_attribute))
        .or_else(|| lines.first())
        .map(|c| c.value.to_string())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlq::{extraction_request, synthesis_request};

    const CONTEXT: &str = "Object: Long Scale Galvanometer\n\
        - material_desc: aluminium and electronic components\n\
        - measurements: 14.0 x 29.0 x 22.0 cm\n\
        - accession_no: MHM2013.432\n\
        - credit_line: Transferred from the Melbourne School of Psychological Sciences, University of Melbourne, 2013\n\
        ... (truncated for brevity)";

    fn synth(context: &str, question: &str) -> String {
        MockProvider.complete(&synthesis_request(context, question).unwrap()).unwrap()
    }

    #[test]
    fn copies_best_overlapping_line() {
        assert_eq!(
            synth(CONTEXT, "What are the measurements for the Long Scale Galvanometer?"),
            "14.0 x 29.0 x 22.0 cm"
        );
        assert_eq!(synth(CONTEXT, "What is its accession number?"), "MHM2013.432");
    }

    #[test]
    fn empty_context_gives_empty_answer() {
        assert_eq!(synth("", "What are the measurements?"), "");
    }

    #[test]
    fn ties_go_to_the_earlier_line() {
        let ctx = "Object: X\n- credit_line: first\n- production_date: second";
        // "line" and "date" each overlap once
        assert_eq!(synth(ctx, "which line or date"), "first");
        // no overlap at all: first attribute line
        assert_eq!(synth(ctx, "tell me something"), "first");
    }

    #[test]
    fn neighbour_attributes_carry_relation_tokens() {
        let ctx = "Object: Certificate\n- accession_no: OWN1\n- has_entity -> Academic Gown\n  - accession_no: MHM06682";
        assert_eq!(synth(ctx, "What is the accession number of the entity associated with the Certificate?"), "MHM06682");
        assert_eq!(synth(ctx, "What is the accession number of the Certificate?"), "OWN1");
    }

    #[test]
    fn extraction_uses_candidate_list() {
        let req = extraction_request(
            "Who made the Brass Microscope and the Brass Microscope Case?",
            &["Brass Microscope".to_string(), "Brass Microscope Case".to_string(), "Teapot".to_string()],
        )
        .unwrap();
        let reply = MockProvider.complete(&req).unwrap();
        let parsed: Vec<String> = serde_json::from_str(&reply).unwrap();
        assert_eq!(parsed, vec!["Brass Microscope Case", "Brass Microscope"]);
    }
}
