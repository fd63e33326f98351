//! `musekg` command line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use musekg::bench::{
    generate_qa, load_qa, qa_ndjson, run_benchmark, BenchOptions, Category, Generation, QAItem, System,
};
use musekg::constructor::{default_mapping, EntityLinker, Gazetteer, GraphBuilder, NoLinker, RelationMapping};
use musekg::ingest::{parse_records, AttributeSchema, FormatHint, Record, Reject};
use musekg::nlq::{answer_question, AnswerOptions, NOT_FOUND_ANSWER};
use musekg::query::{execute, QueryDetails, DEFAULT_CONTEXT_BUDGET};
use musekg::synthetic::synthetic_records;
use musekg::{KnowledgeGraph, RelationVocabulary};

use crate::{make_provider, router, serve, AppState, ProviderChoice, ServiceConfig};

const EXIT_FATAL: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "musekg", version, about = "Build and query museum collection knowledge graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a graph file from collection records.
    Build(BuildArgs),
    /// Answer one question, natural-language or structured.
    Query(QueryArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Score a system on a QA file.
    Bench(BenchArgs),
    /// Generate a QA benchmark from a graph.
    GenerateQa(GenerateArgs),
    /// Write a synthetic record corpus as NDJSON.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Record files, JSON or NDJSON.
    #[arg(long, required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// Relationship id mapping; defaults to the bundled one.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Relation vocabulary, a JSON array of labels.
    #[arg(long)]
    pub relations: Option<PathBuf>,
    /// Gazetteer for linking entities in free-text fields.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write rejected records as NDJSON.
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "mock")]
    pub provider: ProviderChoice,
    /// Context budget in characters.
    #[arg(long, default_value_t = DEFAULT_CONTEXT_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Natural-language question.
    #[arg(required_unless_present = "structured", conflicts_with = "structured")]
    pub question: Option<String>,
    /// Structured query as JSON: {"object_title", "relationship"?, "target_attribute"?}.
    #[arg(long)]
    pub structured: Option<String>,
    /// Print the full result with provenance and timings.
    #[arg(long)]
    pub json: bool,
    /// Use every resolvable entity in the question as an anchor.
    #[arg(long)]
    pub multi_anchor: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Allowed CORS origin; repeatable.
    #[arg(long = "cors-origin")]
    pub cors_origins: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemChoice {
    Structured,
    Nlq,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// QA items, NDJSON or a JSON array.
    #[arg(long)]
    pub qa: PathBuf,
    #[arg(long, value_enum, default_value = "structured")]
    pub system: SystemChoice,
    /// Count items the graph cannot answer as wrong.
    #[arg(long)]
    pub strict_gold: bool,
    /// Use at most this many items per category, in file order.
    #[arg(long)]
    pub n_per_category: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-item NDJSON log path.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerationMode {
    Template,
    Llm,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Raw records shown to the model in llm mode.
    #[arg(long, num_args = 1..)]
    pub records: Vec<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub n_per_category: usize,
    #[arg(long, value_enum, default_value = "template")]
    pub mode: GenerationMode,
    #[arg(long, value_enum, default_value = "http")]
    pub provider: ProviderChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output NDJSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub objects: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_records(paths: &[PathBuf]) -> anyhow::Result<(Vec<Record>, Vec<Reject>)> {
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for path in paths {
        let outcome = parse_records(&read(path)?, FormatHint::Auto)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        records.extend(outcome.records);
        rejects.extend(outcome.rejects);
    }
    Ok((records, rejects))
}

pub fn load_graph(path: &Path) -> anyhow::Result<KnowledgeGraph> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    KnowledgeGraph::load_graph(BufReader::new(file)).with_context(|| format!("cannot load {}", path.display()))
}

fn build(args: BuildArgs) -> anyhow::Result<ExitCode> {
    let (records, rejects) = load_records(&args.records)?;
    let mapping = match &args.mapping {
        Some(p) => RelationMapping::from_json(&read(p)?)?,
        None => default_mapping(),
    };
    let vocab = match &args.relations {
        Some(p) => RelationVocabulary::from_json(&read(p)?)?,
        None => RelationVocabulary::default(),
    };
    mapping.validate(&vocab)?;
    let gazetteer = match &args.gazetteer {
        Some(p) => Some(Gazetteer::from_json(&read(p)?)?),
        None => None,
    };
    let linker: &dyn EntityLinker = match &gazetteer {
        Some(g) => g,
        None => &NoLinker,
    };
    let mut builder = GraphBuilder::new(AttributeSchema::default(), vocab, &mapping, linker);
    for record in &records {
        builder.add_record(record)?;
    }
    let (graph, mut report) = builder.finish();
    report.add_parse_rejects(&rejects);

    let file = File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut sink = BufWriter::new(file);
    graph.save_graph(&mut sink)?;
    sink.flush()?;
    if let Some(p) = &args.rejects {
        let text: String = rejects.iter().map(|r| serde_json::to_string(r).expect("rejects serialize") + "\n").collect();
        write_output(Some(p), &text)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.rejects > 0 { ExitCode::from(EXIT_PARTIAL) } else { ExitCode::SUCCESS })
}

fn query(args: QueryArgs) -> anyhow::Result<ExitCode> {
    let graph = load_graph(&args.graph.graph)?;
    if let Some(text) = &args.structured {
        let details: QueryDetails = serde_json::from_str(text).context("invalid structured query")?;
        let result = details.compile(&graph).and_then(|q| execute(&graph, &q))?;
        if args.json {
            println!("{}", serde_json::to_string_pretty(&result)?);
        } else {
            println!("{}", result.values.join(musekg::bench::ANSWER_SEPARATOR));
            if let Some(note) = &result.note {
                eprintln!("note: {note}");
            }
        }
        return Ok(ExitCode::SUCCESS);
    }
    let question = args.question.as_deref().unwrap_or_default();
    let provider = make_provider(args.graph.provider)?;
    let options = AnswerOptions { context_budget: args.graph.budget, multi_anchor: args.multi_anchor };
    let answer = answer_question(question, &graph, provider.as_ref(), &options)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&answer)?);
    } else if answer.found() {
        println!("{}", answer.answer);
    }
    if !answer.found() {
        eprintln!("{NOT_FOUND_ANSWER}: {}", answer.anchor_error.as_deref().unwrap_or("no anchor"));
        return Ok(ExitCode::from(EXIT_FATAL));
    }
    Ok(ExitCode::SUCCESS)
}

fn serve_cmd(args: ServeArgs) -> anyhow::Result<ExitCode> {
    let config = ServiceConfig {
        graph_path: args.graph.graph,
        listen: args.listen,
        provider: args.graph.provider,
        context_budget: args.graph.budget,
        cors_origins: args.cors_origins,
    };
    let graph = load_graph(&config.graph_path)?;
    let provider = make_provider(config.provider)?;
    let state = Arc::new(AppState { graph, provider, context_budget: config.context_budget });
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .with_context(|| format!("cannot listen on {}", config.listen))?;
        log::info!("listening on {}", listener.local_addr()?);
        eprintln!("listening on {}", listener.local_addr()?);
        serve(listener, router(state, &config.cors_origins)).await?;
        anyhow::Ok(())
    })?;
    Ok(ExitCode::SUCCESS)
}

fn limit_per_category(items: Vec<QAItem>, n: usize) -> Vec<QAItem> {
    let mut seen = std::collections::BTreeMap::<Category, usize>::new();
    items
        .into_iter()
        .filter(|i| {
            let c = seen.entry(i.category).or_default();
            *c += 1;
            *c <= n
        })
        .collect()
}

fn bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let graph = load_graph(&args.graph.graph)?;
    let (mut items, rejects) = load_qa(&read(&args.qa)?)?;
    for r in &rejects {
        log::warn!("QA item {} rejected: {}", r.index, r.reason);
    }
    if let Some(n) = args.n_per_category {
        items = limit_per_category(items, n);
    }
    let options = BenchOptions { strict_gold: args.strict_gold, context_budget: args.graph.budget };
    let mut run = match args.system {
        SystemChoice::Structured => run_benchmark(&graph, &items, System::Structured, &options),
        SystemChoice::Nlq => {
            let provider = make_provider(args.graph.provider)?;
            run_benchmark(&graph, &items, System::Nlq(provider.as_ref()), &options)
        }
    };
    run.report.rejects = rejects.len();
    if let Some(p) = &args.log {
        write_output(Some(p), &run.logs_ndjson())?;
    }
    write_output(args.out.as_deref(), &(serde_json::to_string_pretty(&run.report)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenerateArgs) -> anyhow::Result<ExitCode> {
    let graph = load_graph(&args.graph)?;
    let generated = match args.mode {
        GenerationMode::Template => generate_qa(&graph, &[], args.n_per_category, Generation::Template { seed: args.seed }),
        GenerationMode::Llm => {
            if args.records.is_empty() {
                bail!("--records is required in llm mode");
            }
            let (records, _) = load_records(&args.records)?;
            let provider = make_provider(args.provider)?;
            generate_qa(
                &graph,
                &records,
                args.n_per_category,
                Generation::Llm { provider: provider.as_ref(), seed: args.seed },
            )
        }
    };
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    write_output(args.out.as_deref(), &qa_ndjson(&generated.items))?;
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> anyhow::Result<ExitCode> {
    let text: String = synthetic_records(args.objects, args.seed)
        .iter()
        .map(|r| serde_json::to_string(&r.to_source_json()).expect("records serialize") + "\n")
        .collect();
    write_output(Some(&args.out), &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Bench(a) => bench(a),
        Command::GenerateQa(a) => generate(a),
        Command::Synth(a) => synth(a),
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
