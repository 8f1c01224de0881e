use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use breakrisk_core::sim::{builtin_fixture, FixtureId};
use breakrisk_core::{RiskMode, Snapshot};
use breakrisk_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn app_with(state: AppState) -> Router {
    router(Arc::new(state), &ServiceConfig::default()).unwrap()
}

fn fixture_app(id: FixtureId) -> Router {
    app_with(AppState::with_snapshot(
        builtin_fixture(id),
        RiskMode::default(),
    ))
}

async fn send(app: Router, req: Request<Body>) -> (StatusCode, String) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(app: Router, uri: &str) -> (StatusCode, String) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post_risk(app: Router, body: &str) -> (StatusCode, String) {
    let req = Request::post("/api/v1/risk")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap();
    send(app, req).await
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[tokio::test]
async fn snapshot_summary_for_mce0() {
    let (status, body) = get(fixture_app(FixtureId::Mce0), "/api/v1/snapshot").await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert_eq!(v["grand_total"], 385);
    assert_eq!(v["paths"].as_array().unwrap().len(), 4);
    assert_eq!(v["services"].as_array().unwrap().len(), 7);
}

#[tokio::test]
async fn snapshot_summary_for_mce2_lists_branch_counts() {
    let (_, body) = get(fixture_app(FixtureId::Mce2), "/api/v1/snapshot").await;
    let v = json(&body);
    let path1 = v["paths"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["id"] == 1)
        .unwrap();
    let branch = path1["branches"]
        .as_array()
        .unwrap()
        .iter()
        .find(|b| b["key"] == "OPA1;OPB1;OPC1")
        .unwrap();
    assert_eq!(branch["count"], 290);
}

#[tokio::test]
async fn no_snapshot_is_503() {
    let app = app_with(AppState::unloaded(RiskMode::default()));
    let (status, body) = get(app.clone(), "/api/v1/snapshot").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(json(&body)["code"], "no_snapshot");
    let (status, _) = post_risk(app, r#"{"operations":["OPE1"]}"#).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn risk_spot_value() {
    let (status, body) = post_risk(
        fixture_app(FixtureId::Mce0),
        r#"{"operations":["OPE1"],"mode":"affected-paths"}"#,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(
        body.starts_with(r#"{"mode":"affected-paths","total":0.4286,"clamped":false,"per_path":"#)
    );
}

#[tokio::test]
async fn risk_uses_configured_default_mode() {
    let app = app_with(AppState::with_snapshot(
        builtin_fixture(FixtureId::Mce0),
        RiskMode::Literal,
    ));
    let (_, body) = post_risk(app, r#"{"operations":["OPE1"]}"#).await;
    let v = json(&body);
    assert_eq!(v["mode"], "literal");
    assert_eq!(v["total"].to_string(), "0.3974");
}

#[tokio::test]
async fn risk_saturates_and_reports_unmatched() {
    let app = fixture_app(FixtureId::Mce0);
    let (_, body) = post_risk(app.clone(), r#"{"operations":["OPC1","OPE1"]}"#).await;
    assert!(body.contains(r#""total":1.0000"#), "{body}");
    let (status, body) = post_risk(app, r#"{"operations":["OPZ9"]}"#).await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert_eq!(v["total"].as_f64(), Some(0.0));
    assert_eq!(v["unmatched"], serde_json::json!(["OPZ9"]));
}

#[tokio::test]
async fn risk_request_errors() {
    let app = fixture_app(FixtureId::Mce0);
    let cases = [
        (
            r#"{"operations":[]}"#,
            StatusCode::BAD_REQUEST,
            "empty_operations",
        ),
        (
            r#"{"operations":["OPE1"],"mode":"bogus"}"#,
            StatusCode::UNPROCESSABLE_ENTITY,
            "unknown_mode",
        ),
        ("not json", StatusCode::BAD_REQUEST, "bad_request"),
        (
            r#"{"mode":"literal"}"#,
            StatusCode::BAD_REQUEST,
            "bad_request",
        ),
        (
            r#"{"operations":["A;B"]}"#,
            StatusCode::BAD_REQUEST,
            "invalid_operation",
        ),
    ];
    for (body, status, code) in cases {
        let (got, text) = post_risk(app.clone(), body).await;
        assert_eq!(got, status, "{body}");
        let v = json(&text);
        assert_eq!(v["code"], code, "{body}");
        assert!(v["message"].is_string());
    }
}

#[tokio::test]
async fn empty_snapshot_is_503() {
    let app = app_with(AppState::with_snapshot(
        Snapshot::empty(),
        RiskMode::default(),
    ));
    let (status, body) = get(app.clone(), "/api/v1/sweep").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(json(&body)["code"], "empty_snapshot");
    let (status, _) = post_risk(app.clone(), r#"{"operations":["OPE1"]}"#).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, body) = get(app, "/api/v1/snapshot").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["grand_total"], 0);
}

#[tokio::test]
async fn sweep_mce2_is_led_by_path_one() {
    let (status, body) = get(
        fixture_app(FixtureId::Mce2),
        "/api/v1/sweep?mode=affected-paths",
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert_eq!(v["mode"], "affected-paths");
    let rows = v["sweep"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    // OPB1 sits on paths 1 and 2: (1030 + 101) / 1308
    assert_eq!(rows[0]["operation"], "OPB1");
    assert_eq!(rows[0]["score"].to_string(), "0.8647");
}

#[tokio::test]
async fn sweep_unknown_mode_is_422() {
    let (status, body) = get(fixture_app(FixtureId::Mce0), "/api/v1/sweep?mode=bogus").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json(&body)["code"], "unknown_mode");
}

#[tokio::test]
async fn identical_requests_identical_bodies() {
    let app = fixture_app(FixtureId::Mce1);
    let a = post_risk(
        app.clone(),
        r#"{"operations":["OPB1","OPG1"],"mode":"literal"}"#,
    )
    .await;
    let b = post_risk(app, r#"{"operations":["OPG1","OPB1"],"mode":"literal"}"#).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn fixtures_are_listed_and_served() {
    let app = fixture_app(FixtureId::Mce0);
    let (_, body) = get(app.clone(), "/api/v1/fixtures").await;
    assert_eq!(
        json(&body),
        serde_json::json!(["mce0", "mce1", "mce2", "p3-sample"])
    );
    let (status, body) = get(app.clone(), "/api/v1/fixtures/mce1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, builtin_fixture(FixtureId::Mce1).to_json());
    let (status, body) = get(app, "/api/v1/fixtures/nope").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["code"], "unknown_fixture");
}

#[tokio::test]
async fn unknown_routes_and_methods_answer_json() {
    let app = fixture_app(FixtureId::Mce0);
    let (status, body) = get(app.clone(), "/api/v2/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["code"], "not_found");
    let req = Request::builder()
        .method(Method::DELETE)
        .uri("/api/v1/snapshot")
        .body(Body::empty())
        .unwrap();
    let (status, body) = send(app, req).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(json(&body)["code"], "method_not_allowed");
}

#[tokio::test]
async fn cors_origin_from_config() {
    let config = ServiceConfig {
        cors_origin: Some("http://ui.local".into()),
        ..Default::default()
    };
    let state = Arc::new(AppState::with_snapshot(
        builtin_fixture(FixtureId::Mce0),
        RiskMode::default(),
    ));
    let app = router(state, &config).unwrap();
    let req = Request::get("/api/v1/snapshot")
        .header(header::ORIGIN, "http://ui.local")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(
        resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN],
        "http://ui.local"
    );
}

#[tokio::test]
async fn serves_over_tcp() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = fixture_app(FixtureId::Mce0);
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(breakrisk_service::serve(listener, app, async {
        rx.await.ok();
    }));
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream
        .write_all(b"GET /api/v1/sweep HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(r#""mode":"affected-paths""#));
    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
}
