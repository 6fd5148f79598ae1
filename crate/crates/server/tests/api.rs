use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::http::{Request, StatusCode};
use axum::Router;
use edgeflow_core::flow::{load_flow, save_flow, FlowGraph};
use edgeflow_core::report::{pretty, to_json, validate};
use edgeflow_core::runtime::{lineage, start_session, to_json_lines, window, parse_log, Session, SessionConfig};
use edgeflow_core::taint::Category;
use edgeflow_core::{builtin_specs, Registry};
use edgeflow_server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn app() -> Router {
    router(AppState::new(builtin_specs()))
}

fn request(method: &str, uri: &str, body: impl Into<Body>) -> Request<Body> {
    Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap()
}

async fn call(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Bytes) {
    let res = app.clone().oneshot(request(method, uri, body)).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes())
}

fn as_json(b: &Bytes) -> Value {
    serde_json::from_slice(b).unwrap()
}

async fn start(app: &Router, flow: &[u8], seed: u64, duration: u64, profiles: Value) -> u64 {
    let flow: Value = serde_json::from_slice(flow).unwrap();
    let body = json!({ "flow": flow, "seed": seed, "duration": duration, "profiles": profiles });
    let (status, bytes) = call(app, "POST", "/api/sessions", body.to_string()).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&bytes));
    as_json(&bytes)["id"].as_u64().unwrap()
}

fn loaded(name: &str, reg: &Registry) -> FlowGraph {
    load_flow(&fixture(name), reg).unwrap()
}

#[tokio::test]
async fn health_and_unknown_routes() {
    let app = app();
    let (status, body) = call(&app, "GET", "/api/health", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(as_json(&body)["status"], "ok");
    let (status, body) = call(&app, "GET", "/api/nope", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(as_json(&body)["error"]["code"], "not-found");
    let (status, _) = call(&app, "GET", "/api/sessions/99/stream", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn nodespecs_lists_builtins_with_profiles() {
    let (status, body) = call(&app(), "GET", "/api/nodespecs", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let reg: Registry = serde_json::from_slice(&body).unwrap();
    let light = reg.get("light").unwrap();
    assert!(light.help.profiles.iter().any(|p| p.name == "office lighting"));

    let empty = std::env::temp_dir().join(format!("edgeflow-empty-specs-{}", std::process::id()));
    std::fs::create_dir_all(&empty).unwrap();
    let mut with_dir = builtin_specs();
    assert_eq!(with_dir.load_dir(&empty).unwrap(), 0);
    let (_, again) = call(&router(AppState::new(with_dir)), "GET", "/api/nodespecs", Body::empty()).await;
    assert_eq!(again, body);
}

#[tokio::test]
async fn validate_matches_the_cli_report_and_tracks_identifiers() {
    let reg = builtin_specs();
    let app = app();
    let flow = loaded("mood_motion", &reg);
    let (status, body) = call(&app, "POST", "/api/flows/validate", fixture("mood_motion")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, to_json(&validate(&flow, &reg)).into_bytes());

    let identifiers = |b: &Bytes| -> usize {
        let r: edgeflow_core::report::ValidateResponse = serde_json::from_slice(b).unwrap();
        r.labels
            .0
            .values()
            .filter(|l| l.iter().any(|a| a.category == Category::Identifier))
            .count()
    };
    assert!(identifiers(&body) > 0);
    let mut cut = flow.clone();
    cut.wires.retain(|w| w.from.node != "twitter");
    let (_, body) = call(&app, "POST", "/api/flows/validate", save_flow(&cut)).await;
    assert_eq!(identifiers(&body), 0);
}

#[tokio::test]
async fn invalid_flows_are_422_with_location() {
    let app = app();
    let mut doc: Value = serde_json::from_slice(&fixture("chain")).unwrap();
    doc["wires"][0]["to"] = json!(["ghost", "in"]);
    let (status, body) = call(&app, "POST", "/api/flows/validate", doc.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = &as_json(&body)["error"];
    assert_eq!(err["code"], "invalid-flow");
    assert_eq!(err["location"]["wire"]["to"], json!(["ghost", "in"]));

    let (status, body) = call(&app, "POST", "/api/flows/validate", "{\n  \"id\": ").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = &as_json(&body)["error"];
    assert_eq!(err["code"], "parse-error");
    assert_eq!(err["location"]["line"], 2);
}

#[tokio::test]
async fn stream_equals_the_run_log_and_queries_match_inspect() {
    let reg = builtin_specs();
    let app = app();
    let profiles = json!({ "light": "office lighting" });
    let id = start(&app, &fixture("threshold"), 7, 5000, profiles.clone()).await;
    let (status, streamed) = call(&app, "GET", &format!("/api/sessions/{id}/stream"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let config = SessionConfig {
        seed: 7,
        duration: 5000,
        profiles: serde_json::from_value(profiles).unwrap(),
    };
    let log = start_session(&loaded("threshold", &reg), &reg, config).unwrap().log;
    assert_eq!(streamed, to_json_lines(&log).into_bytes());

    let (_, status_body) = call(&app, "GET", &format!("/api/sessions/{id}"), Body::empty()).await;
    assert_eq!(as_json(&status_body)["state"], "finished");
    assert_eq!(as_json(&status_body)["records"], log.len());

    let uri = format!("/api/sessions/{id}/provenance?node=light&from=1000&to=3000");
    let (status, body) = call(&app, "GET", &uri, Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, pretty(&window(&log, "light", 1000, 3000).unwrap()).into_bytes());

    let last = log.last().unwrap().msg;
    let uri = format!("/api/sessions/{id}/provenance?message={last}");
    let (_, body) = call(&app, "GET", &uri, Body::empty()).await;
    assert_eq!(body, pretty(&lineage(&log, last).unwrap()).into_bytes());

    let (status, body) = call(&app, "GET", &format!("/api/sessions/{id}/provenance?node=ghost"), Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(as_json(&body)["error"]["code"], "unknown-node");
    let (status, _) = call(&app, "GET", &format!("/api/sessions/{id}/provenance"), Body::empty()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn stopping_leaves_a_prefix_of_the_full_run() {
    let reg = builtin_specs();
    let app = app();
    let duration = 1_000_000_000;
    let id = start(&app, &fixture("mood_motion"), 3, duration, json!({})).await;
    let res = app
        .clone()
        .oneshot(request("GET", &format!("/api/sessions/{id}/stream"), Body::empty()))
        .await
        .unwrap();
    let mut body = res.into_body();
    let first = body.frame().await.unwrap().unwrap().into_data().unwrap();
    assert!(first.ends_with(b"\n"));

    let (status, stopped) = call(&app, "POST", &format!("/api/sessions/{id}/stop"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let stopped = as_json(&stopped);
    assert_eq!(stopped["state"], "stopped");
    let n = stopped["records"].as_u64().unwrap() as usize;
    assert!(n > 0);

    let mut rest = first.to_vec();
    rest.extend(body.collect().await.unwrap().to_bytes());
    let partial = parse_log(std::str::from_utf8(&rest).unwrap()).unwrap();
    assert_eq!(partial.len(), n);

    let config = SessionConfig { seed: 3, duration, profiles: Default::default() };
    let mut full = Session::new(&loaded("mood_motion", &reg), &reg, config).unwrap();
    while full.log().len() < n {
        full.step().unwrap();
    }
    assert_eq!(partial, full.log()[..n]);
}

#[tokio::test]
async fn concurrent_sessions_do_not_interleave() {
    let reg = builtin_specs();
    let app = app();
    let seeds = [11u64, 12, 13, 14];
    let mut ids = Vec::new();
    for seed in seeds {
        ids.push(start(&app, &fixture("mood_motion"), seed, 20_000, json!({})).await);
    }
    let streams = ids.iter().map(|id| {
        let app = app.clone();
        let uri = format!("/api/sessions/{id}/stream");
        tokio::spawn(async move { call(&app, "GET", &uri, Body::empty()).await.1 })
    });
    let bodies: Vec<Bytes> = futures_join(streams).await;
    let flow = loaded("mood_motion", &reg);
    for (seed, body) in seeds.iter().zip(bodies) {
        let config = SessionConfig { seed: *seed, duration: 20_000, profiles: Default::default() };
        let log = start_session(&flow, &reg, config).unwrap().log;
        assert_eq!(body, to_json_lines(&log).into_bytes(), "seed {seed}");
    }
}

async fn futures_join<T: Send + 'static>(tasks: impl Iterator<Item = tokio::task::JoinHandle<T>>) -> Vec<T> {
    let mut out = Vec::new();
    for t in tasks {
        out.push(t.await.unwrap());
    }
    out
}

#[tokio::test]
async fn session_errors() {
    let app = app();
    let miswire: Value = serde_json::from_slice(&fixture("miswire")).unwrap();
    let body = json!({ "flow": miswire, "seed": 1, "duration": 1000 });
    let (status, bytes) = call(&app, "POST", "/api/sessions", body.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err = &as_json(&bytes)["error"];
    assert_eq!(err["code"], "refuse-to-run");
    assert_eq!(err["diagnostics"][0]["code"], "wire-incompatible");

    let chain: Value = serde_json::from_slice(&fixture("chain")).unwrap();
    let body = json!({ "flow": chain, "seed": 1, "duration": 1000, "profiles": { "light": "moonlight on mars" } });
    let (status, bytes) = call(&app, "POST", "/api/sessions", body.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(as_json(&bytes)["error"]["code"], "unknown-profile");

    let (status, _) = call(&app, "POST", "/api/sessions", json!({ "seed": 1 }).to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn serves_over_tcp_and_shuts_down() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let state = AppState::new(builtin_specs());
    let server = tokio::spawn(edgeflow_server::serve(listener, Arc::clone(&state), async {
        let _ = rx.await;
    }));
    let reply = tokio::task::spawn_blocking(move || {
        use std::io::{Read, Write};
        let mut s = std::net::TcpStream::connect(addr).unwrap();
        s.write_all(b"GET /api/health HTTP/1.1\r\nhost: x\r\nconnection: close\r\n\r\n").unwrap();
        let mut out = String::new();
        s.read_to_string(&mut out).unwrap();
        out
    })
    .await
    .unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    tx.send(()).unwrap();
    tokio::time::timeout(std::time::Duration::from_secs(5), server)
        .await
        .unwrap()
        .unwrap()
        .unwrap();
}
