//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use musekg::bench::{
    gold_answer, generate_qa, load_qa, qa_ndjson, run_benchmark, score, BenchOptions, Category, Generation, QAItem,
    System,
};
use musekg::constructor::{build_graph, default_mapping, NoLinker};
use musekg::nlq::{answer_question, mock_provider, AnswerOptions, NOT_FOUND_ANSWER};
use musekg::query::{execute, retrieve_context, QueryDetails, DEFAULT_CONTEXT_BUDGET};
use musekg::synthetic::synthetic_records;
use musekg::{normalize_text, parse_records, AttributeSchema, FormatHint, KnowledgeGraph, Record};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::Oracle;

const SEED: u64 = 20240601;
const SCALE_OBJECTS: usize = 16_000;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> Vec<Record> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_records(&bytes, FormatHint::Auto).expect("fixture parses").records
}

fn build(records: &[Record]) -> KnowledgeGraph {
    build_graph(records, &default_mapping(), &AttributeSchema::default(), &NoLinker).expect("build succeeds").0
}

fn details(title: &str, rel: Option<&str>, attr: Option<&str>) -> QueryDetails {
    QueryDetails {
        object_title: title.into(),
        relationship: rel.map(Into::into),
        target_attribute: attr.map(Into::into),
    }
}

fn values(graph: &KnowledgeGraph, d: &QueryDetails) -> Result<Vec<String>, String> {
    let q = d.compile(graph).map_err(|e| e.to_string())?;
    execute(graph, &q).map(|r| r.values).map_err(|e| e.to_string())
}

fn golden_record() -> Outcome {
    let start = Instant::now();
    let g = build(&fixture("obj123.json"));
    let elapsed = start.elapsed();
    let obj = g.node("object:OBJ123").ok_or("object:OBJ123 missing")?;
    ensure(obj.title() == Some("Long Scale Galvanometer"), || format!("title {:?}", obj.title()))?;
    ensure(
        obj.attributes.get("material_desc").map(String::as_str) == Some("aluminium and electronic components"),
        || format!("material_desc {:?}", obj.attributes.get("material_desc")),
    )?;
    let person = g.node("person:3601").ok_or("person:3601 missing")?;
    ensure(person.title() == Some("Walden Precision Apparatus Limited"), || format!("person {:?}", person.title()))?;
    ensure(g.node("image:20208").is_some(), || "image:20208 missing".into())?;
    let edges: Vec<(String, String, String)> =
        g.edges().map(|e| (e.source.clone(), e.relation.to_string(), e.target.clone())).collect();
    let want = vec![
        ("object:OBJ123".to_string(), "has_primary_producer".to_string(), "person:3601".to_string()),
        ("object:OBJ123".to_string(), "has_image".to_string(), "image:20208".to_string()),
    ];
    let mut sorted_edges = edges.clone();
    sorted_edges.sort();
    let mut sorted_want = want.clone();
    sorted_want.sort();
    ensure(sorted_edges == sorted_want, || format!("edges {edges:?}"))?;
    ensure(g.node_count() == 3, || format!("{} nodes", g.node_count()))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("3 nodes, 2 edges in {elapsed:?}"))
}

fn golden_c3() -> Outcome {
    let g = build(&fixture("certificate.ndjson"));
    let got = values(
        &g,
        &details("Certificate of Passing First Year of Bachelor of Laws", Some("has_entity"), Some("accession_no")),
    )?;
    ensure(got == ["MHM06682"], || format!("got {got:?}"))?;
    Ok("MHM06682".into())
}

fn golden_c1() -> Outcome {
    let g = build(&fixture("obj123_full.json"));
    let m = values(&g, &details("Long Scale Galvanometer", None, Some("measurements")))?;
    ensure(m == ["14.0 x 29.0 x 22.0 cm"], || format!("measurements {m:?}"))?;
    let a = values(&g, &details("Long Scale Galvanometer", None, Some("accession_no")))?;
    ensure(a == ["MHM2013.432"], || format!("accession_no {a:?}"))?;
    Ok("14.0 x 29.0 x 22.0 cm, MHM2013.432".into())
}

/// Compares every item's structured answer with the brute-force scan.
fn compare_with_oracle(graph: &KnowledgeGraph, oracle: &Oracle<'_>, items: &[QAItem]) -> Result<(), String> {
    for item in items {
        let got = values(graph, &item.query_details)?;
        let want = oracle.answer(&item.query_details).ok_or_else(|| format!("oracle has no anchor for {item:?}"))?;
        ensure(got == want, || format!("{:?}: graph {got:?} vs oracle {want:?}", item.query_details))?;
    }
    Ok(())
}

fn per_category(items: &[QAItem]) -> [usize; 3] {
    Category::ALL.map(|c| items.iter().filter(|i| i.category == c).count())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let records = synthetic_records(1000, SEED);
    let g = build(&records);
    let items = generate_qa(&g, &records, 100, Generation::Template { seed: SEED }).items;
    ensure(per_category(&items) == [100, 100, 100], || format!("per category {:?}", per_category(&items)))?;
    let oracle = Oracle::new(&records);
    compare_with_oracle(&g, &oracle, &items)?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("300/300 agree in {elapsed:?}"))
}

fn random_string(rng: &mut ChaCha8Rng) -> String {
    const POOL: &[char] = &[
        'a', 'B', 'z', 'Q', '0', '7', ' ', '\t', '\n', '.', ',', '-', '_', '"', '\'', '(', ')', '/', '\u{201c}',
        '\u{201d}', '\u{2018}', '\u{2019}', 'é', 'Ö', 'ß', '中', '\u{a0}', '\u{2003}', '!', '?', ';', ':',
    ];
    let len = rng.random_range(0..40);
    (0..len).map(|_| POOL[rng.random_range(0..POOL.len())]).collect()
}

fn pipeline_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..1000 {
        let s = random_string(&mut rng);
        let once = normalize_text(&s);
        ensure(normalize_text(&once) == once, || format!("not idempotent on {s:?}"))?;
    }
    let mut sets: Vec<(String, Vec<Record>)> =
        ["obj123.json", "obj123_full.json", "certificate.ndjson", "three_records.json"]
            .iter()
            .map(|f| (f.to_string(), fixture(f)))
            .collect();
    sets.push(("synthetic-1000".into(), synthetic_records(1000, SEED)));
    for (name, records) in &sets {
        let once = build(records);
        let doubled: Vec<Record> = records.iter().chain(records.iter()).cloned().collect();
        let twice = build(&doubled);
        ensure(once.is_isomorphic_to(&twice), || format!("{name}: records ++ records differs"))?;
        for g in [&once, &twice] {
            let v = g.check_invariants();
            ensure(v.is_empty(), || format!("{name}: {v:?}"))?;
        }
    }
    Ok(format!("1000 strings, {} corpora, 0 violations", sets.len()))
}

fn offline_rag() -> Outcome {
    let records = synthetic_records(1000, SEED);
    let g = build(&records);
    let items = generate_qa(&g, &records, 10, Generation::Template { seed: SEED }).items;
    ensure(items.len() == 30, || format!("{} items", items.len()))?;
    let provider = mock_provider();
    let run = run_benchmark(&g, &items, System::Nlq(&provider), &BenchOptions::default());
    let c1 = run.report.accuracy(Category::C1);
    ensure(c1 == Some(1.0), || format!("C1 accuracy {c1:?}"))?;
    for (item, log) in items.iter().zip(&run.logs) {
        let ans = answer_question(&item.question, &g, &provider, &AnswerOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(ans.answer == log.predicted, || format!("non-deterministic answer for {:?}", item.question))?;
        let grounded = ans.answer != NOT_FOUND_ANSWER && score(&ans.context, &ans.answer);
        ensure(grounded, || format!("{:?} not in context for {:?}", ans.answer, item.question))?;
    }
    let acc = |c| run.report.accuracy(c).map_or("n/a".to_string(), |a| format!("{a:.2}"));
    Ok(format!(
        "C1 {} C2 {} C3 {}, 30/30 grounded",
        acc(Category::C1),
        acc(Category::C2),
        acc(Category::C3)
    ))
}

fn scale_and_persistence() -> (Outcome, Outcome) {
    let records = synthetic_records(SCALE_OBJECTS, SEED);
    let start = Instant::now();
    let g = build(&records);
    let build_time = start.elapsed();

    let items = generate_qa(&g, &records, 100, Generation::Template { seed: SEED }).items;
    let scale = (|| {
        ensure(build_time < Duration::from_secs(60), || format!("build took {build_time:?}"))?;
        let mut samples = Vec::with_capacity(items.len());
        for item in &items {
            let t = Instant::now();
            let q = item.query_details.compile(&g).map_err(|e| e.to_string())?;
            execute(&g, &q).map_err(|e| e.to_string())?;
            let anchor = musekg::query::resolve_anchor(&g, &item.query_details.object_title).map_err(|e| e.to_string())?;
            retrieve_context(&g, &anchor, DEFAULT_CONTEXT_BUDGET).map_err(|e| e.to_string())?;
            samples.push(t.elapsed());
        }
        samples.sort();
        let p50 = samples[(samples.len() - 1) / 2];
        ensure(p50 < Duration::from_millis(10), || format!("p50 {p50:?}"))?;
        Ok(format!("{} nodes built in {build_time:?}, query+context p50 {p50:?}", g.node_count()))
    })();

    let persistence = (|| {
        ensure(items.len() == 300, || format!("{} oracle queries", items.len()))?;
        let mut buf = Vec::new();
        g.save_graph(&mut buf).map_err(|e| e.to_string())?;
        let loaded = KnowledgeGraph::load_graph(buf.as_slice()).map_err(|e| e.to_string())?;
        ensure(g.is_isomorphic_to(&loaded), || "reloaded graph differs".into())?;
        for item in &items {
            let a = values(&g, &item.query_details)?;
            let b = values(&loaded, &item.query_details)?;
            ensure(a == b, || format!("{:?}: {a:?} vs {b:?}", item.query_details))?;
        }
        compare_with_oracle(&loaded, &Oracle::new(&records), &items)?;
        Ok(format!("{} bytes, 300/300 identical", buf.len()))
    })();
    (scale, persistence)
}

fn benchmark_shape() -> Outcome {
    let records = synthetic_records(1000, SEED);
    let g = build(&records);
    let generated = generate_qa(&g, &records, 50, Generation::Template { seed: SEED });
    let items = generated.items;
    ensure(items.len() == 150, || format!("{} items", items.len()))?;
    ensure(per_category(&items) == [50, 50, 50], || format!("per category {:?}", per_category(&items)))?;
    let (reloaded, rejects) = load_qa(qa_ndjson(&items).as_bytes()).map_err(|e| e.to_string())?;
    ensure(rejects.is_empty() && reloaded == items, || format!("reload rejects {rejects:?}"))?;
    for item in &items {
        item.validate()?;
        let gold = gold_answer(&g, &item.query_details).map_err(|e| e.to_string())?;
        ensure(gold == item.expected_answer, || format!("{:?} inconsistent", item.question))?;
    }
    let run = run_benchmark(&g, &items, System::Structured, &BenchOptions { strict_gold: true, ..Default::default() });
    for c in Category::ALL {
        ensure(run.report.accuracy(c) == Some(1.0), || format!("{} accuracy {:?}", c.as_str(), run.report.accuracy(c)))?;
    }
    Ok("150 items (50/50/50), structured accuracy 1.00".into())
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("golden record", guarded(golden_record)),
        ("golden C3", guarded(golden_c3)),
        ("golden C1", guarded(golden_c1)),
        ("oracle equivalence", guarded(oracle_equivalence)),
        ("pipeline invariants", guarded(pipeline_invariants)),
        ("offline RAG", guarded(offline_rag)),
    ];
    let (scale, persistence) = catch_unwind(scale_and_persistence).unwrap_or_else(|_| {
        (Err("panicked".into()), Err("panicked".into()))
    });
    results.push(("scale/latency", scale));
    results.push(("persistence", persistence));
    results.push(("benchmark shape", guarded(benchmark_shape)));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
