use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use futures::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

use convflow::engine::{transcript_jsonl, Session, SessionConfig, Turn};
use convflow_service::{router, AppState, ScenarioRegistry, ServerEvent, ServiceConfig, StoredReport};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn config(data: Option<PathBuf>) -> ServiceConfig {
    let mut cfg = ServiceConfig::new(ScenarioRegistry::load_dir(&scenario_dir()).unwrap());
    cfg.data_dir = data;
    cfg
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn create(app: &Router, seed: u64) -> String {
    let (s, v) = call_json(
        app,
        "POST",
        "/sessions",
        Some(json!({"scenario_id": "travel_agency", "spots": ["harbor_land", "city_museum"], "seed": seed})),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["seed"], seed);
    v["session_id"].as_str().unwrap().to_string()
}

fn answer_for(node_id: &str, k: usize) -> String {
    match (node_id, k % 3) {
        (_, 0) => "yes with my family by train, indoor".into(),
        ("q5", _) => "alone".into(),
        (_, 1) => "blorp".into(),
        _ => "no".into(),
    }
}

/// Drive a session over HTTP; returns every utterance payload.
async fn drive_http(app: &Router, id: &str) -> Vec<Value> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let (s, v) = call_json(app, "GET", &format!("/sessions/{id}/next"), None).await;
        if s == StatusCode::GONE {
            return out;
        }
        assert_eq!(s, StatusCode::OK, "{v}");
        if v["awaiting_input"] == true {
            let text = answer_for(v["node_id"].as_str().unwrap(), k);
            k += 1;
            let (s, _) = call_json(app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "text": text }))).await;
            assert_eq!(s, StatusCode::OK);
        }
        out.push(v);
    }
}

/// The same session driven by direct engine calls.
fn drive_direct(seed: u64) -> (Vec<Value>, String) {
    let reg = ScenarioRegistry::load_dir(&scenario_dir()).unwrap();
    let mut s = Session::start(reg.get("travel_agency").unwrap(), SessionConfig::new("harbor_land", "city_museum", seed)).unwrap();
    let mut out = Vec::new();
    let mut k = 0;
    while let Turn::Utterance(u) = s.next_utterance().unwrap() {
        if u.awaiting_input {
            s.submit_answer(&answer_for(u.node_id.as_deref().unwrap(), k)).unwrap();
            k += 1;
        }
        out.push(serde_json::to_value(&u).unwrap());
    }
    (out, transcript_jsonl(s.transcript()))
}

#[tokio::test]
async fn create_errors() {
    let app = router(AppState::new(config(None)));
    let (s, v) = call_json(&app, "POST", "/sessions", Some(json!({"scenario_id": "nope", "spots": ["harbor_land", "city_museum"]}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND, "{v}");
    let (s, v) = call_json(
        &app,
        "POST",
        "/sessions",
        Some(json!({"scenario_id": "travel_agency", "spots": ["harbor_land", "city_museum"], "operator_choice": "seaside_aquarium"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "E_CHOICE_NOT_IN_PAIR");
    let (s, v) = call_json(&app, "POST", "/sessions", Some(json!({"scenario_id": "travel_agency", "spots": ["harbor_land", "mars"]}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "E_UNKNOWN_SPOT");
    let (s, _) = call_json(&app, "POST", "/sessions", Some(json!({"scenario_id": "travel_agency", "spots": ["harbor_land"]}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, v) = call_json(&app, "POST", "/sessions", Some(json!({"scenario_id": "travel_agency", "spots": ["harbor_land", "city_museum"]}))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert!(v["seed"].is_u64(), "server-chosen seed is echoed");
}

#[tokio::test]
async fn turn_protocol_guards() {
    let app = router(AppState::new(config(None)));
    let id = create(&app, 5).await;
    let (s, _) = call_json(&app, "GET", "/sessions/unknown/next", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, v) = call_json(&app, "GET", &format!("/sessions/{id}/next"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["kind"], "intro");
    assert_eq!(v["phase"], "introduction");
    assert_eq!(v["expression"]["name"], "full_smile");
    assert!(v["expression"]["params"]["valence"].is_number());
    assert_eq!(v["gesture_before"]["id"], "wave");
    assert_eq!(v["awaiting_input"], false);

    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({"text": "indoor"}))).await;
    assert_eq!(s, StatusCode::CONFLICT, "answers during a monologue are rejected");
    assert_eq!(v["error"], "E_NOT_AWAITING");

    let (s, _) = call_json(&app, "GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call_json(&app, "POST", &format!("/sessions/{id}/survey"), Some(json!({"items": [4,4,4,4,4,4,4,4,4], "vas_pre": 10, "vas_post": 20}))).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let ask = loop {
        let (_, v) = call_json(&app, "GET", &format!("/sessions/{id}/next"), None).await;
        if v["awaiting_input"] == true {
            break v;
        }
    };
    assert_eq!(ask["kind"], "ask");
    let (s, _) = call_json(&app, "GET", &format!("/sessions/{id}/next"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({"text": "blorp"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"matched": false, "matched_arc": null, "matched_key": null, "favorable": false, "broken": true, "reply_follows": true}));
}

#[tokio::test]
async fn matching_answer_payload() {
    let app = router(AppState::new(config(None)));
    let id = create(&app, 5).await;
    loop {
        let (s, v) = call_json(&app, "GET", &format!("/sessions/{id}/next"), None).await;
        assert_eq!(s, StatusCode::OK, "seed 5 must ask q1 or q5: {v}");
        if v["awaiting_input"] == true {
            let key = match v["node_id"].as_str().unwrap() {
                "q1" => "indoor",
                "q5" => "family",
                _ => "",
            };
            let (s, out) = call_json(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "text": key }))).await;
            assert_eq!(s, StatusCode::OK, "{out}");
            if !key.is_empty() {
                assert_eq!(out["matched"], true);
                assert_eq!(out["broken"], false);
                return;
            }
        }
    }
}

#[tokio::test]
async fn full_session_report_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(config(Some(dir.path().to_path_buf()))));
    let id = create(&app, 77).await;
    drive_http(&app, &id).await;
    let (s, _) = call_json(&app, "GET", &format!("/sessions/{id}/next"), None).await;
    assert_eq!(s, StatusCode::GONE);
    let (s, _) = call_json(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({"text": "x"}))).await;
    assert_eq!(s, StatusCode::GONE);

    let (s, first) = call(&app, "GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(s, StatusCode::OK);
    let (_, again) = call(&app, "GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(first, again, "report reads are byte-identical");
    let report: StoredReport = serde_json::from_slice(&first).unwrap();
    assert!(report.survey.is_none() && report.vas_delta.is_none());
    let raw: Value = serde_json::from_slice(&first).unwrap();
    assert!(raw["survey"].is_null() && raw["vas_delta"].is_null());

    let bad = json!({"items": [4,4,4,8,4,4,4,4,4], "vas_pre": 10, "vas_post": 20});
    let (s, v) = call_json(&app, "POST", &format!("/sessions/{id}/survey"), Some(bad)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "E_RANGE");
    let (s, _) = call_json(&app, "POST", &format!("/sessions/{id}/survey"), Some(json!({"items": [4,4,4,4,4,4,4,4,4], "vas_pre": 10, "vas_post": 101}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let good = json!({"items": [5,6,3,4,5,4,4,5,4], "vas_pre": 40, "vas_post": 60});
    let (s, _) = call_json(&app, "POST", &format!("/sessions/{id}/survey"), Some(good.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call_json(&app, "POST", &format!("/sessions/{id}/survey"), Some(good)).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (_, v) = call_json(&app, "GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(v["vas_delta"], 20);
    assert!(v["breakdown_rate_pct"].is_number());
    assert_eq!(v["survey"]["items"], json!([5,6,3,4,5,4,4,5,4]));

    let session_dir = dir.path().join(&id);
    let transcript = std::fs::read_to_string(session_dir.join("transcript.jsonl")).unwrap();
    let report: StoredReport = serde_json::from_str(&std::fs::read_to_string(session_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(transcript, transcript_jsonl(&report.transcript));
    assert_eq!(report.vas_delta, Some(20));
}

#[tokio::test]
async fn http_matches_direct_engine() {
    let app = router(AppState::new(config(None)));
    for seed in [0, 1, 42, 9001] {
        let id = create(&app, seed).await;
        let payloads = drive_http(&app, &id).await;
        let (direct, jsonl) = drive_direct(seed);
        assert_eq!(payloads, direct, "seed {seed}");
        let (_, body) = call(&app, "GET", &format!("/sessions/{id}/report"), None).await;
        let report: StoredReport = serde_json::from_slice(&body).unwrap();
        assert_eq!(transcript_jsonl(&report.transcript), jsonl);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn parallel_clients_do_not_interleave() {
    let app = router(AppState::new(config(None)));
    let mut handles = Vec::new();
    for seed in 0..16u64 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let id = create(&app, seed).await;
            let payloads = drive_http(&app, &id).await;
            (seed, payloads)
        }));
    }
    for h in handles {
        let (seed, payloads) = h.await.unwrap();
        assert_eq!(payloads, drive_direct(seed).0, "seed {seed}");
    }
}

#[tokio::test]
async fn idle_sessions_expire() {
    let mut cfg = config(None);
    cfg.session_ttl = Duration::from_millis(20);
    let state = AppState::new(cfg);
    let app = router(state.clone());
    let id = create(&app, 1).await;
    assert_eq!(state.purge_idle(Instant::now()), 0);
    assert_eq!(state.purge_idle(Instant::now() + Duration::from_millis(50)), 1);
    let (s, _) = call_json(&app, "GET", &format!("/sessions/{id}/next"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn scenarios_and_expressions() {
    let app = router(AppState::new(config(None)));
    let (s, v) = call_json(&app, "GET", "/scenarios", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v[0]["id"], "travel_agency");
    assert_eq!(v[0]["budget_s"], 330.0);
    assert_eq!(v[0]["spots"].as_array().unwrap().len(), 3);
    let (_, v) = call_json(&app, "GET", "/expressions", None).await;
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["name"], "mood_base");
    assert_eq!(rows[5]["stage"], 4);
    assert!(rows.iter().all(|r| r["real_intention"].is_number()));
}

#[tokio::test]
async fn places_fixture_overrides_tags() {
    let mut cfg = config(None);
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/places.json");
    let client = convflow::places::PlacesClient::new(convflow::places::ProviderConfig::fixture(fixture)).unwrap();
    cfg.places = Some(Arc::new(client));
    let app = router(AppState::new(cfg));
    let id = create(&app, 3).await;
    let payloads = drive_http(&app, &id).await;
    assert!(!payloads.is_empty());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_mirrors_rest() {
    let state = AppState::new(config(None));
    let app = router(state.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });

    let rest = router(state);
    let id = create(&rest, 42).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/stream")).await.unwrap();
    let mut utterances = Vec::new();
    let mut k = 0;
    while let Some(msg) = ws.next().await {
        let Message::Text(text) = msg.unwrap() else { continue };
        match serde_json::from_str::<ServerEvent>(text.as_str()).unwrap() {
            ServerEvent::Utterance { utterance } => {
                if utterance.awaiting_input {
                    let answer = answer_for(utterance.node_id.as_deref().unwrap(), k);
                    k += 1;
                    ws.send(Message::Text(json!({"type": "answer", "text": answer}).to_string().into())).await.unwrap();
                }
                utterances.push(serde_json::to_value(&utterance).unwrap());
            }
            ServerEvent::Outcome { outcome } => assert!(outcome.reply_follows),
            ServerEvent::Finished => break,
            ServerEvent::Error { error, message } => panic!("{error}: {message}"),
        }
    }
    assert_eq!(utterances, drive_direct(42).0);
    let (s, _) = call_json(&rest, "GET", &format!("/sessions/{id}/report"), None).await;
    assert_eq!(s, StatusCode::OK);

    let (s, _) = call_json(&rest, "GET", "/sessions/none/stream", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    server.abort();
}
