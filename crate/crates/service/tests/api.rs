use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use diagwork_core::{const_program, psi, Index};
use diagwork_service::{router, Workbench};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    send(app, req).await
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

fn app() -> Router {
    router(Arc::new(Workbench::default()))
}

async fn certify_base(app: &Router) {
    let (s, _) = call(
        app,
        "POST",
        "/certificates",
        Some(json!({"subject": "0", "rule": "SYNTACTIC-TOTAL"})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(
        app,
        "POST",
        "/certificates",
        Some(json!({"subject": "7", "rule": "ENUM-CONST", "premises": ["0"]})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn fresh_alpha_is_empty_at_version_zero() {
    let app = app();
    let (s, v) = call(&app, "GET", "/alpha", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"version": 0, "least_unused": "0", "entries": []}));
}

#[tokio::test]
async fn feed_j1_gives_one_entry_at_version_one() {
    let app = app();
    certify_base(&app).await;
    let (s, v) = call(&app, "POST", "/q/feed", Some(json!({"j": "7"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["returned"], "1");
    assert_eq!(v["alpha_version"], 1);
    assert_eq!(v["version"], 3);

    let psi_j1 = psi(&const_program(&Index::zero())).to_string();
    let (_, v) = call(&app, "GET", "/alpha", None).await;
    assert_eq!(v["version"], 1);
    assert_eq!(
        v["entries"],
        json!([{"slot": "0", "index": psi_j1, "origin": "feed"}])
    );
    assert_eq!(v["least_unused"], "1");

    // the fed value is now certified total
    let (_, v) = call(&app, "GET", &format!("/certificates/{psi_j1}"), None).await;
    assert_eq!(v["total"], true);
    assert_eq!(v["certificates"][0]["tag"], "TOTAL-BY-PSI");
}

#[tokio::test]
async fn psi_on_uncertified_index_is_rejected_without_mutation() {
    let app = app();
    let (_, before) = call(&app, "GET", "/session", None).await;
    let (s, v) = call(&app, "POST", "/psi", Some(json!({"j": "7"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "gate_violation");
    assert_eq!(
        v["error"]["precondition"],
        "7 holds an enumerator certificate"
    );
    let (_, after) = call(&app, "GET", "/session", None).await;
    assert_eq!(before, after);
    assert_eq!(after["version"], 0);

    certify_base(&app).await;
    let (s, v) = call(&app, "POST", "/psi", Some(json!({"j": "7"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["psi"], psi(&Index::from(7)).to_string());
    assert_eq!(v["versions"]["version"], 3);
    assert_eq!(v["versions"]["alpha_version"], 0);
}

#[tokio::test]
async fn gate_rejects_feed_and_bad_premises() {
    let app = app();
    let (s, v) = call(&app, "POST", "/q/feed", Some(json!({"j": "7"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "gate_violation");
    let (s, v) = call(
        &app,
        "POST",
        "/certificates",
        Some(json!({"subject": "7", "rule": "ENUM-CONST", "premises": ["0"]})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "unmet_premise");
    assert_eq!(v["error"]["precondition"], "0 is certified total");
    // index 4 is `while r0 {}`
    let (s, v) = call(
        &app,
        "POST",
        "/certificates",
        Some(json!({"subject": "4", "rule": "SYNTACTIC-TOTAL"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "wrong_shape");
    let (_, v) = call(&app, "GET", "/session", None).await;
    assert_eq!(v["version"], 0);
}

#[tokio::test]
async fn malformed_payloads_are_rejected_before_mutation() {
    let app = app();
    for body in [
        json!({"x": 5}),
        json!({"x": "-1"}),
        json!({"x": "12a"}),
        json!({}),
    ] {
        let (s, v) = call(&app, "POST", "/q/query", Some(body)).await;
        assert_eq!(s, StatusCode::BAD_REQUEST);
        assert_eq!(v["error"]["code"], "malformed_request");
    }
    let req = Request::post("/q/query")
        .header("content-type", "application/json")
        .body(Body::from("{"))
        .unwrap();
    let (s, v) = send(&app, req).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "malformed_request");
    let (s, _) = call(
        &app,
        "POST",
        "/certificates",
        Some(json!({"subject": "1", "rule": "NOPE"})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "GET", "/programs/x1", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (_, v) = call(&app, "GET", "/session", None).await;
    assert_eq!(v["version"], 0);
    assert_eq!(v["log_len"], 0);
}

#[tokio::test]
async fn query_mutates_but_peek_does_not() {
    let app = app();
    let (_, v) = call(&app, "GET", "/alpha/5", None).await;
    assert_eq!(v["index"], Value::Null);
    let (_, v) = call(&app, "POST", "/q/query", Some(json!({"x": "5"}))).await;
    assert_eq!(
        v,
        json!({"returned": "0", "version": 1, "alpha_version": 1, "registry_version": 0})
    );
    let (_, v) = call(&app, "GET", "/alpha/5", None).await;
    assert_eq!(v["index"], "0");
    // repeated query: a logged mutation, but α is unchanged
    let (_, v) = call(&app, "POST", "/q/query", Some(json!({"x": "5"}))).await;
    assert_eq!(v["version"], 2);
    assert_eq!(v["alpha_version"], 1);
    let (_, v) = call(&app, "POST", "/q/step", Some(json!({}))).await;
    assert_eq!(v["returned"], "1");
}

#[tokio::test]
async fn conditional_alpha_fetch() {
    let app = app();
    let (s, _) = call(&app, "GET", "/alpha?since=0", None).await;
    assert_eq!(s, StatusCode::NOT_MODIFIED);
    call(&app, "POST", "/q/query", Some(json!({"x": "3"}))).await;
    let (s, v) = call(&app, "GET", "/alpha?since=0", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["version"], 1);
    let (s, _) = call(&app, "GET", "/alpha?since=1", None).await;
    assert_eq!(s, StatusCode::NOT_MODIFIED);
    let (s, _) = call(&app, "GET", "/alpha?since=x", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn programs_build_and_run() {
    let app = app();
    let (s, v) = call(&app, "GET", "/programs/1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["text"], "inc r0\n");
    assert_eq!(v["tree"], json!([{"op": "inc", "reg": "0"}]));
    let (_, v) = call(&app, "GET", "/programs/0", None).await;
    assert_eq!(v["text"], "");

    let (_, v) = call(
        &app,
        "POST",
        "/programs/encode",
        Some(json!({"text": "set r0 0\n"})),
    )
    .await;
    assert_eq!(v["index"], "7");
    let (s, v) = call(
        &app,
        "POST",
        "/programs/encode",
        Some(json!({"text": "frob r0"})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "syntax_error");

    let (_, v) = call(
        &app,
        "POST",
        "/run",
        Some(json!({"index": "1", "input": "41"})),
    )
    .await;
    assert_eq!(
        v,
        json!({"outcome": "halted", "value": "42", "fuel_used": 1})
    );
    let (_, v) = call(
        &app,
        "POST",
        "/run",
        Some(json!({"index": "1", "input": "41", "fuel": 0})),
    )
    .await;
    assert_eq!(v["outcome"], "fuel_exhausted");

    let (_, v) = call(&app, "POST", "/build/const", Some(json!({"t": "0"}))).await;
    assert_eq!(v["index"], "7");
    let head = psi(&Index::from(7)).to_string();
    let (_, v) = call(
        &app,
        "POST",
        "/build/prepend",
        Some(json!({"tail": "7", "head": head})),
    )
    .await;
    let j2 = v["index"].as_str().unwrap().to_string();
    let (_, v) = call(
        &app,
        "POST",
        "/run",
        Some(json!({"index": j2, "input": "0"})),
    )
    .await;
    assert_eq!(v["value"], head);
    let (_, v) = call(
        &app,
        "POST",
        "/build/compose",
        Some(json!({"a": "1", "b": "1"})),
    )
    .await;
    let c = v["index"].as_str().unwrap().to_string();
    let (_, v) = call(
        &app,
        "POST",
        "/run",
        Some(json!({"index": c, "input": "3"})),
    )
    .await;
    assert_eq!(v["value"], "5");
}

#[tokio::test]
async fn harness_reports_are_stored() {
    let app = app();
    let (s, v) = call(
        &app,
        "POST",
        "/harness/diagonal",
        Some(json!({"j": "7", "n": 3})),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    certify_base(&app).await;
    let (s, v) = call(
        &app,
        "POST",
        "/harness/diagonal",
        Some(json!({"j": "7", "n": 3})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["report"]["verdict"], true);
    assert_eq!(v["report"]["checks"].as_array().unwrap().len(), 4);
    let (_, v) = call(&app, "POST", "/harness/escape", Some(json!({"j": "7"}))).await;
    assert_eq!(v["report"]["checks"].as_array().unwrap().len(), 101);
    let (_, v) = call(&app, "POST", "/harness/thm5", Some(json!({"j": "7"}))).await;
    assert_eq!(v["report"]["verdict"], true);
    assert_eq!(v["report"]["fed_slot"], "0");
    assert_eq!(v["versions"]["alpha_version"], 1);

    let (_, v) = call(&app, "GET", "/reports", None).await;
    let kinds: Vec<_> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["kind"].clone())
        .collect();
    assert_eq!(
        kinds,
        vec![json!("diagonal"), json!("escape"), json!("thm5")]
    );
    let (_, v) = call(&app, "GET", "/reports/2", None).await;
    assert_eq!(v["report"]["enumerator"], "7");
    let (s, _) = call(&app, "GET", "/reports/9", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn export_import_reproduces_alpha() {
    let app = app();
    certify_base(&app).await;
    call(&app, "POST", "/q/query", Some(json!({"x": "1"}))).await;
    call(&app, "POST", "/q/step", Some(json!({"x": "4", "j": "7"}))).await;
    let (_, alpha_before) = call(&app, "GET", "/alpha", None).await;

    let resp = app
        .clone()
        .oneshot(Request::get("/session/export").body(Body::empty()).unwrap())
        .await
        .unwrap();
    let text = String::from_utf8(
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
    .unwrap();
    assert!(text.starts_with("SESSION version=1 c=0\n"));
    assert!(text.ends_with("COUNT 4\n"));

    let other = self::app();
    let (s, v) = send(
        &other,
        Request::post("/session/import")
            .body(Body::from(text.clone()))
            .unwrap(),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["alpha_version"], 1);
    let (_, alpha_after) = call(&other, "GET", "/alpha", None).await;
    assert_eq!(alpha_after["entries"], alpha_before["entries"]);

    // a truncated file is refused and leaves the session alone
    let cut = &text[..text.len() - 8];
    let (s, v) = send(
        &other,
        Request::post("/session/import")
            .body(Body::from(cut.to_string()))
            .unwrap(),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid_session");
    let (_, v) = call(&other, "GET", "/session", None).await;
    assert_eq!(v["version"], 1);
}

#[tokio::test]
async fn concurrent_mutations_get_distinct_versions() {
    let app = app();
    let mut tasks = Vec::new();
    for x in 0..32 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let (_, v) = call(&app, "POST", "/q/query", Some(json!({"x": x.to_string()}))).await;
            v["version"].as_u64().unwrap()
        }));
    }
    let mut versions = Vec::new();
    for t in tasks {
        versions.push(t.await.unwrap());
    }
    versions.sort_unstable();
    assert_eq!(versions, (1..=32).collect::<Vec<_>>());
    let (_, v) = call(&app, "GET", "/alpha", None).await;
    assert_eq!(v["entries"].as_array().unwrap().len(), 32);
}
