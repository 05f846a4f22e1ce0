//! JSON-over-HTTP API for a single live session.
//!
//! All numerals travel as decimal strings. Mutating endpoints answer with
//! the new [`Versions`]; `GET /alpha?since=V` answers `304` while α is
//! unchanged since version `V`.
//!
//! | method | path | effect |
//! |---|---|---|
//! | GET | `/session` | id, counters, log length |
//! | GET | `/session/export` | session file text |
//! | POST | `/session/import` | replace the session from session file text |
//! | GET | `/alpha` | α entries (`?since=V` for polling) |
//! | GET | `/alpha/{x}` | peek at α(x) without running Q |
//! | GET | `/programs/{index}` | decoded program, text and tree |
//! | POST | `/programs/encode` | index of program text |
//! | POST | `/run` | interpret an index on an input |
//! | POST | `/build/const`, `/build/prepend`, `/build/compose` | indices of constructed programs |
//! | GET | `/certificates`, `/certificates/{index}` | registry contents |
//! | POST | `/certificates` | issue a certificate |
//! | POST | `/psi` | ψ(j) for a certified enumerator, issuing its total certificate |
//! | POST | `/q/feed`, `/q/query`, `/q/step` | one execution of Q |
//! | POST | `/harness/diagonal`, `/harness/escape`, `/harness/thm5` | run a check |
//! | GET | `/reports`, `/reports/{id}` | stored check reports |

mod error;
mod workbench;

use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequest, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use diagwork_core::harness::{self, DEFAULT_FUEL, DEFAULT_PREFIX};
use diagwork_core::text::{parse, pretty_print};
use diagwork_core::{
    compose, const_program, decode_program, encode_program, prepend_value, AlphaEntry, CertKind,
    Certificate, Index, Machine, Program, RunOutcome, Session,
};
use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use error::{ApiError, ErrorBody};
pub use workbench::{Versions, Workbench};

type Shared = State<Arc<Workbench>>;
type ApiResult<T> = Result<T, ApiError>;

/// Session files for deep enumerator chains run to several megabytes.
const BODY_LIMIT: usize = 512 << 20;

pub fn router(workbench: Arc<Workbench>) -> Router {
    Router::new()
        .route("/session", get(session_info))
        .route("/session/export", get(export))
        .route("/session/import", post(import))
        .route("/alpha", get(alpha))
        .route("/alpha/{x}", get(peek))
        .route("/programs/encode", post(encode))
        .route("/programs/{index}", get(program))
        .route("/run", post(run))
        .route("/build/const", post(build_const))
        .route("/build/prepend", post(build_prepend))
        .route("/build/compose", post(build_compose))
        .route("/certificates", get(certificates).post(issue))
        .route("/certificates/{index}", get(certificates_for))
        .route("/psi", post(apply_psi))
        .route("/q/feed", post(q_feed))
        .route("/q/query", post(q_query))
        .route("/q/step", post(q_step))
        .route("/harness/diagonal", post(check_diagonal))
        .route("/harness/escape", post(check_escape))
        .route("/harness/thm5", post(check_thm5))
        .route("/reports", get(reports))
        .route("/reports/{id}", get(report))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(workbench)
}

/// Serves until ctrl-c.
pub async fn serve(workbench: Arc<Workbench>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(workbench))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// JSON body whose rejections use the structured error shape.
struct Body<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(v) = Json::<T>::from_request(req, state).await?;
        Ok(Body(v))
    }
}

fn index_param(raw: &str) -> ApiResult<Index> {
    raw.parse().map_err(|e: String| ApiError::malformed(e))
}

/// Runs CPU-heavy work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

#[derive(Serialize)]
struct SessionInfo<'a> {
    session_id: &'a str,
    #[serde(flatten)]
    versions: Versions,
    constant: Index,
    log_len: usize,
    alpha_len: usize,
    certificates: usize,
}

async fn session_info(State(wb): Shared) -> Json<Value> {
    let s = wb.read();
    Json(json!(SessionInfo {
        session_id: wb.id(),
        versions: s.versions,
        constant: s.session.constant().clone(),
        log_len: s.session.log().len(),
        alpha_len: s.session.alpha().len(),
        certificates: s.session.registry().len(),
    }))
}

async fn export(State(wb): Shared) -> ApiResult<Response> {
    blocking(move || {
        let text = wb.read().session.to_text();
        Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
    })
    .await
}

async fn import(State(wb): Shared, text: String) -> ApiResult<Json<Versions>> {
    blocking(move || {
        let session = Session::from_text(&text)?;
        Ok(Json(wb.replace(session)))
    })
    .await
}

#[derive(Deserialize)]
struct Since {
    since: Option<u64>,
}

#[derive(Serialize)]
struct AlphaView<'a> {
    version: u64,
    #[serde(with = "diagwork_core::decimal")]
    least_unused: BigUint,
    entries: &'a [AlphaEntry],
}

async fn alpha(
    State(wb): Shared,
    query: Result<Query<Since>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Response> {
    let Query(since) = query.map_err(|e| ApiError::malformed(e.body_text()))?;
    let s = wb.read();
    let version = s.versions.alpha_version;
    if since.since.is_some_and(|v| v >= version) {
        return Ok(StatusCode::NOT_MODIFIED.into_response());
    }
    let view = AlphaView {
        version,
        least_unused: s.session.alpha().least_unused().clone(),
        entries: s.session.alpha().entries(),
    };
    Ok(Json(view).into_response())
}

async fn peek(State(wb): Shared, Path(x): Path<String>) -> ApiResult<Json<Value>> {
    let x = index_param(&x)?;
    let s = wb.read();
    Ok(Json(json!({
        "slot": x,
        "index": s.session.peek(&x.0),
        "version": s.versions.alpha_version,
        "note": "reads alpha only; this is not omega and never inserts",
    })))
}

#[derive(Serialize)]
struct ProgramView {
    index: Index,
    text: String,
    tree: Program,
}

async fn program(Path(raw): Path<String>) -> ApiResult<Json<ProgramView>> {
    let index = index_param(&raw)?;
    blocking(move || {
        let tree = decode_program(&index);
        Ok(Json(ProgramView {
            text: pretty_print(&tree),
            index,
            tree,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct EncodeRequest {
    text: String,
}

async fn encode(Body(req): Body<EncodeRequest>) -> ApiResult<Json<Value>> {
    let program = parse(&req.text)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "syntax_error", e.to_string()))?;
    Ok(Json(json!({ "index": encode_program(&program) })))
}

#[derive(Deserialize)]
struct RunRequest {
    index: Index,
    input: Index,
    fuel: Option<u64>,
}

async fn run(Body(req): Body<RunRequest>) -> ApiResult<Json<RunOutcome>> {
    blocking(move || {
        let fuel = req.fuel.unwrap_or(DEFAULT_FUEL);
        Ok(Json(Machine::new().run_index(
            &req.index,
            &req.input.0,
            fuel,
        )))
    })
    .await
}

#[derive(Deserialize)]
struct ConstRequest {
    t: Index,
}

#[derive(Deserialize)]
struct PrependRequest {
    tail: Index,
    head: Index,
}

#[derive(Deserialize)]
struct ComposeRequest {
    a: Index,
    b: Index,
}

async fn build_const(Body(req): Body<ConstRequest>) -> Json<Value> {
    Json(json!({ "index": const_program(&req.t) }))
}

async fn build_prepend(Body(req): Body<PrependRequest>) -> ApiResult<Json<Value>> {
    blocking(move || {
        Ok(Json(
            json!({ "index": prepend_value(&req.tail, &req.head) }),
        ))
    })
    .await
}

async fn build_compose(Body(req): Body<ComposeRequest>) -> ApiResult<Json<Value>> {
    blocking(move || Ok(Json(json!({ "index": compose(&req.a, &req.b) })))).await
}

async fn certificates(State(wb): Shared) -> Json<Value> {
    let s = wb.read();
    Json(json!({
        "version": s.versions.registry_version,
        "certificates": s.session.registry().certificates(),
    }))
}

async fn certificates_for(State(wb): Shared, Path(raw): Path<String>) -> ApiResult<Json<Value>> {
    let index = index_param(&raw)?;
    let s = wb.read();
    let certs: Vec<&Certificate> = s.session.registry().certificates_for(&index);
    Ok(Json(json!({
        "version": s.versions.registry_version,
        "subject": index,
        "total": s.session.is_certified_total(&index),
        "enumerator": s.session.is_certified_enumerator(&index),
        "certificates": certs,
    })))
}

/// `{"subject": "7", "rule": "ENUM-CONST", "premises": ["0"]}`
#[derive(Deserialize)]
struct IssueRequest {
    subject: Index,
    rule: String,
    #[serde(default)]
    premises: Vec<Index>,
}

#[derive(Serialize)]
struct Issued {
    certificate: Certificate,
    #[serde(flatten)]
    versions: Versions,
}

async fn issue(State(wb): Shared, Body(req): Body<IssueRequest>) -> ApiResult<Json<Issued>> {
    let kind = CertKind::from_parts(&req.rule, &req.premises).ok_or_else(|| {
        ApiError::malformed(format!(
            "unknown rule {:?} with {} premises",
            req.rule,
            req.premises.len()
        ))
    })?;
    blocking(move || {
        let (certificate, versions) = wb.mutate(|s| s.issue(&req.subject, kind))?;
        Ok(Json(Issued {
            certificate,
            versions,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct JRequest {
    j: Index,
}

async fn apply_psi(State(wb): Shared, Body(req): Body<JRequest>) -> ApiResult<Json<Value>> {
    blocking(move || {
        let (cert, versions) = wb.mutate(|s| {
            if !s.is_certified_enumerator(&req.j) {
                return Err(ApiError::from(diagwork_core::GateError::Uncertified {
                    j: req.j.clone(),
                }));
            }
            s.apply_rule_psi(&req.j).map_err(ApiError::from)
        })?;
        Ok(Json(
            json!({ "psi": cert.subject, "certificate": cert, "versions": versions }),
        ))
    })
    .await
}

#[derive(Serialize)]
struct Stepped {
    #[serde(with = "diagwork_core::decimal")]
    returned: BigUint,
    #[serde(flatten)]
    versions: Versions,
}

async fn q_feed(State(wb): Shared, Body(req): Body<JRequest>) -> ApiResult<Json<Stepped>> {
    blocking(move || {
        let (returned, versions) = wb.mutate(|s| s.q_feed(&req.j))?;
        Ok(Json(Stepped { returned, versions }))
    })
    .await
}

#[derive(Deserialize)]
struct XRequest {
    x: Index,
}

async fn q_query(State(wb): Shared, Body(req): Body<XRequest>) -> ApiResult<Json<Stepped>> {
    let (returned, versions) = wb.mutate(|s| Ok::<_, ApiError>(s.q_query(&req.x.0)))?;
    Ok(Json(Stepped { returned, versions }))
}

#[derive(Deserialize)]
struct StepRequest {
    x: Option<Index>,
    j: Option<Index>,
}

async fn q_step(State(wb): Shared, Body(req): Body<StepRequest>) -> ApiResult<Json<Stepped>> {
    blocking(move || {
        let (returned, versions) =
            wb.mutate(|s| s.q_step(req.x.as_ref().map(|x| &x.0), req.j.as_ref()))?;
        Ok(Json(Stepped { returned, versions }))
    })
    .await
}

#[derive(Deserialize)]
struct CheckRequest {
    j: Index,
    n: Option<u64>,
    fuel: Option<u64>,
}

fn stored(
    wb: &Workbench,
    kind: &'static str,
    j: &Index,
    verdict: bool,
    body: Value,
) -> Json<Value> {
    let id = wb.store_report(kind, j.to_string(), verdict, body.clone());
    Json(json!({ "id": id, "kind": kind, "report": body }))
}

async fn check_diagonal(
    State(wb): Shared,
    Body(req): Body<CheckRequest>,
) -> ApiResult<Json<Value>> {
    blocking(move || {
        let registry = wb.read().session.registry().clone();
        let n = req.n.unwrap_or(DEFAULT_PREFIX);
        let r = harness::verify_diagonal(&registry, &req.j, n, req.fuel.unwrap_or(DEFAULT_FUEL))?;
        Ok(stored(&wb, "diagonal", &req.j, r.verdict, json!(r)))
    })
    .await
}

async fn check_escape(State(wb): Shared, Body(req): Body<CheckRequest>) -> ApiResult<Json<Value>> {
    blocking(move || {
        let registry = wb.read().session.registry().clone();
        let n = req.n.unwrap_or(100);
        let r = harness::verify_escape(&registry, &req.j, n, req.fuel.unwrap_or(DEFAULT_FUEL))?;
        Ok(stored(&wb, "escape", &req.j, r.verdict, json!(r)))
    })
    .await
}

/// Feeds `j` into Q, so this one is a mutation.
async fn check_thm5(State(wb): Shared, Body(req): Body<CheckRequest>) -> ApiResult<Json<Value>> {
    blocking(move || {
        let n = req.n.unwrap_or(DEFAULT_PREFIX);
        let fuel = req.fuel.unwrap_or(DEFAULT_FUEL);
        let (r, versions) = wb.mutate(|s| harness::theorem5_witness(s, &req.j, n, fuel))?;
        let Json(mut body) = stored(&wb, "thm5", &req.j, r.verdict, json!(r));
        body["versions"] = json!(versions);
        Ok(Json(body))
    })
    .await
}

async fn reports(State(wb): Shared) -> Json<Value> {
    Json(json!({ "reports": wb.read().reports }))
}

async fn report(State(wb): Shared, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id: usize = id
        .parse()
        .map_err(|_| ApiError::malformed(format!("bad report id {id:?}")))?;
    let s = wb.read();
    let r = s.reports.get(id).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no report {id}"),
        )
    })?;
    Ok(Json(
        json!({ "id": r.id, "kind": r.kind, "report": r.body }),
    ))
}
