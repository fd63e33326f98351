//! HTTP API over a graph that is loaded once and never mutated.

pub mod cli;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use musekg::constructor::BuildReport;
use musekg::graph::{Direction, GraphError, KnowledgeGraph, Node, NodeType};
use musekg::nlq::{answer_question, AnswerOptions, HttpProvider, MockProvider, ModelProvider, NLAnswer, NlqError};
use musekg::query::{execute, resolve_anchor, QueryDetails, QueryError, QueryResult, DEFAULT_CONTEXT_BUDGET};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const DEFAULT_NEIGHBOR_LIMIT: usize = 100;
const MAX_NEIGHBOR_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProviderChoice {
    Mock,
    Http,
}

/// Builds the provider. The HTTP client blocks, so call this outside any
/// async runtime.
pub fn make_provider(choice: ProviderChoice) -> anyhow::Result<Arc<dyn ModelProvider>> {
    Ok(match choice {
        ProviderChoice::Mock => Arc::new(MockProvider),
        ProviderChoice::Http => Arc::new(HttpProvider::from_env()?),
    })
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub graph_path: PathBuf,
    pub listen: SocketAddr,
    pub provider: ProviderChoice,
    pub context_budget: usize,
    pub cors_origins: Vec<String>,
}

pub struct AppState {
    pub graph: KnowledgeGraph,
    pub provider: Arc<dyn ModelProvider>,
    pub context_budget: usize,
}

impl AppState {
    pub fn new(graph: KnowledgeGraph, provider: Arc<dyn ModelProvider>) -> Self {
        Self { graph, provider, context_budget: DEFAULT_CONTEXT_BUDGET }
    }
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let status = match &e {
            QueryError::NotFound(_) | QueryError::Graph(GraphError::MissingNode(_)) => StatusCode::NOT_FOUND,
            QueryError::Ambiguous { .. } => StatusCode::CONFLICT,
            QueryError::Invalid(_) => StatusCode::BAD_REQUEST,
            QueryError::Graph(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub node_id: String,
    pub node_type: NodeType,
    pub name: String,
}

impl From<&Node> for NodeSummary {
    fn from(n: &Node) -> Self {
        Self { node_id: n.node_id.clone(), node_type: n.node_type, name: n.display_name().to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub node_id: String,
    pub node_type: NodeType,
    pub name: String,
    pub attributes: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborView {
    pub relation: String,
    pub direction: Direction,
    pub node_id: String,
    pub node_type: NodeType,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborPage {
    pub node_id: String,
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub neighbors: Vec<NeighborView>,
}

#[derive(Debug, Deserialize)]
pub struct PageParams {
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query: String,
    /// The node the title resolves to, when it resolves uniquely.
    pub resolved: Option<String>,
    pub matches: Vec<NodeSummary>,
}

#[derive(Debug, Deserialize)]
pub struct QuestionRequest {
    pub question: String,
    pub context_budget: Option<usize>,
    #[serde(default)]
    pub multi_anchor: bool,
}

#[derive(Debug, Serialize)]
pub struct Stats {
    #[serde(flatten)]
    pub report: BuildReport,
    pub relations: Vec<String>,
    pub schema: Vec<String>,
}

fn lookup<'a>(state: &'a AppState, id: &str) -> Result<&'a Node, ApiError> {
    state
        .graph
        .resolve_id(id)
        .and_then(|id| state.graph.node(id))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no node {id:?}")))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn get_node(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<NodeView>, ApiError> {
    let node = lookup(&state, &id)?;
    Ok(Json(NodeView {
        node_id: node.node_id.clone(),
        node_type: node.node_type,
        name: node.display_name().to_string(),
        attributes: node.attributes.clone(),
    }))
}

async fn get_neighbors(
    State(state): State<Shared>,
    Path(id): Path<String>,
    params: Result<Query<PageParams>, QueryRejection>,
) -> Result<Json<NeighborPage>, ApiError> {
    let Query(params) = params?;
    let node = lookup(&state, &id)?;
    let all = state.graph.neighbors(&node.node_id).map_err(QueryError::from)?;
    let limit = params.limit.unwrap_or(DEFAULT_NEIGHBOR_LIMIT).min(MAX_NEIGHBOR_LIMIT);
    let offset = params.offset.unwrap_or(0);
    let neighbors = all
        .iter()
        .skip(offset)
        .take(limit)
        .filter_map(|n| {
            let target = state.graph.node(&n.node_id)?;
            Some(NeighborView {
                relation: n.relation.to_string(),
                direction: n.direction,
                node_id: n.node_id.clone(),
                node_type: target.node_type,
                name: target.display_name().to_string(),
            })
        })
        .collect();
    Ok(Json(NeighborPage { node_id: node.node_id.clone(), total: all.len(), offset, limit, neighbors }))
}

async fn search(
    State(state): State<Shared>,
    params: Result<Query<SearchParams>, QueryRejection>,
) -> Result<Json<SearchResult>, ApiError> {
    let Query(params) = params?;
    if params.title.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", "title is empty"));
    }
    let summaries = |ids: &[String]| ids.iter().filter_map(|id| state.graph.node(id)).map(NodeSummary::from).collect();
    let (resolved, matches) = match resolve_anchor(&state.graph, &params.title) {
        Ok(id) => (Some(id.clone()), summaries(&[id])),
        Err(QueryError::Ambiguous { candidates, .. }) => (None, summaries(&candidates)),
        Err(QueryError::NotFound(_)) => (None, Vec::new()),
        Err(e) => return Err(e.into()),
    };
    Ok(Json(SearchResult { query: params.title, resolved, matches }))
}

async fn structured_query(
    State(state): State<Shared>,
    body: Result<Json<QueryDetails>, JsonRejection>,
) -> Result<Json<QueryResult>, ApiError> {
    let Json(details) = body?;
    let q = details.compile(&state.graph)?;
    Ok(Json(execute(&state.graph, &q)?))
}

async fn nl_query(
    State(state): State<Shared>,
    body: Result<Json<QuestionRequest>, JsonRejection>,
) -> Result<Json<NLAnswer>, ApiError> {
    let Json(req) = body?;
    let options = AnswerOptions {
        context_budget: req.context_budget.unwrap_or(state.context_budget),
        multi_anchor: req.multi_anchor,
    };
    let state = state.clone();
    let answer = tokio::task::spawn_blocking(move || {
        answer_question(&req.question, &state.graph, state.provider.as_ref(), &options)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    match answer {
        Ok(a) => Ok(Json(a)),
        Err(NlqError::EmptyQuestion) => Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", "question is empty")),
        Err(e) => Err(ApiError::new(StatusCode::BAD_GATEWAY, "provider_error", e.to_string())),
    }
}

async fn stats(State(state): State<Shared>) -> Json<Stats> {
    Json(Stats {
        report: BuildReport::for_graph(&state.graph),
        relations: state.graph.relations().labels().iter().map(|l| l.to_string()).collect(),
        schema: state.graph.schema().keys().to_vec(),
    })
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: Arc<AppState>, cors_origins: &[String]) -> Router {
    let mut app = Router::new()
        .route("/health", get(health))
        .route("/nodes/{id}", get(get_node))
        .route("/nodes/{id}/neighbors", get(get_neighbors))
        .route("/search", get(search))
        .route("/structured-query", post(structured_query))
        .route("/query", post(nl_query))
        .route("/stats", get(stats))
        .fallback(fallback)
        .with_state(state);
    let origins: Vec<HeaderValue> = cors_origins.iter().filter_map(|o| o.parse().ok()).collect();
    if !origins.is_empty() {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods(tower_http::cors::Any)
                .allow_headers(tower_http::cors::Any),
        );
    }
    app
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
