use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use cbir_core::feedback::{FeedbackSession, Label, RocchioParams};
use cbir_core::index::{build_index, load_index, save_index, IndexStore, QueryOptions};
use cbir_core::io::{decode_image, encode_png};
use cbir_core::{ExtractionConfig, Image, Metric};
use cbir_service::{router, result_items, AppState, ErrorBody, HealthResponse, QueryResponse, ServiceConfig};
use http_body_util::BodyExt;
use tower::ServiceExt;

const BOUNDARY: &str = "cbir-test-boundary";

fn corpus() -> (tempfile::TempDir, IndexStore) {
    let dir = tempfile::tempdir().unwrap();
    cbir_core::synth::write_corpus(dir.path(), 4).unwrap();
    // a non-square file to check thumbnail aspect
    let wide = Image::from_rgb_fn(300, 120, |x, y| [(x % 256) as u8, (y * 2) as u8, 90]).unwrap();
    std::fs::write(dir.path().join("wide image.png"), encode_png(&wide).unwrap()).unwrap();
    let store = build_index(dir.path(), &ExtractionConfig::default()).unwrap().store;
    (dir, store)
}

fn app(store: IndexStore) -> (Arc<AppState>, Router) {
    let state = AppState::with_index(ServiceConfig::default(), store);
    (state.clone(), router(state))
}

fn multipart(fields: &[(&str, Option<&str>, &[u8])]) -> Vec<u8> {
    let mut body = Vec::new();
    for (name, filename, data) in fields {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        match filename {
            Some(f) => body.extend_from_slice(
                format!(
                    "Content-Disposition: form-data; name=\"{name}\"; filename=\"{f}\"\r\n\
                     Content-Type: application/octet-stream\r\n\r\n"
                )
                .as_bytes(),
            ),
            None => body.extend_from_slice(format!("Content-Disposition: form-data; name=\"{name}\"\r\n\r\n").as_bytes()),
        }
        body.extend_from_slice(data);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

fn upload_request(uri: &str, image: &[u8]) -> Request<Body> {
    Request::builder()
        .method(Method::POST)
        .uri(uri)
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(multipart(&[("image", Some("q.png"), image)])))
        .unwrap()
}

fn feedback_request(session: &str, query: &str, body: &str) -> Request<Body> {
    Request::builder()
        .method(Method::POST)
        .uri(format!("/api/sessions/{session}/feedback{query}"))
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Option<String>, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, ctype, bytes)
}

async fn send_json<T: serde::de::DeserializeOwned>(app: &Router, req: Request<Body>) -> (StatusCode, T) {
    let (status, _, bytes) = send(app, req).await;
    let parsed = serde_json::from_slice(&bytes)
        .unwrap_or_else(|e| panic!("{status}: {e}: {}", String::from_utf8_lossy(&bytes)));
    (status, parsed)
}

async fn error_code(app: &Router, req: Request<Body>) -> (StatusCode, String) {
    let (status, body): (_, ErrorBody) = send_json(app, req).await;
    (status, body.error.code)
}

fn file_bytes(dir: &Path, id: &str) -> Vec<u8> {
    std::fs::read(dir.join(id)).unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::builder().uri(uri).body(Body::empty()).unwrap()
}

#[tokio::test]
async fn upload_query_matches_in_process_query() {
    let (dir, store) = corpus();
    let (_, app) = app(store.clone());
    let bytes = file_bytes(dir.path(), "shapes/shapes_01.png");
    for metric in ["l2", "osm", "histogram", "intersection", "minkowski:3", "cosine", "spd"] {
        let (status, resp): (_, QueryResponse) =
            send_json(&app, upload_request(&format!("/api/query?k=5&metric={metric}"), &bytes)).await;
        assert_eq!(status, StatusCode::OK);
        assert!(!resp.session_id.is_empty());
        assert_eq!(resp.round, 0);
        assert!(resp.results.len() <= 5);
        let metric: Metric = metric.parse().unwrap();
        let want = store.query_image(&decode_image(&bytes).unwrap(), 5, metric).unwrap();
        assert_eq!(resp.results, result_items(&want.hits));
        assert_eq!(resp.metric, metric);
        assert_eq!(resp.direction, want.direction);
    }
}

#[tokio::test]
async fn image_id_queries_use_the_stored_signature() {
    let (_, store) = corpus();
    let (_, app) = app(store.clone());
    let id = "checkerboards/checkerboards_02.png";
    let want = store.query(&store.stored_query(id).unwrap(), &QueryOptions::new(4, Metric::L1)).unwrap();

    let req = Request::builder()
        .method(Method::POST)
        .uri(format!("/api/query?k=4&metric=l1&image_id={id}"))
        .body(Body::empty())
        .unwrap();
    let (status, by_param): (_, QueryResponse) = send_json(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(by_param.results, result_items(&want.hits));
    assert_eq!(by_param.results[0].image_id, id);
    assert_eq!(by_param.results[0].score, Some(0.0));

    let req = Request::builder()
        .method(Method::POST)
        .uri("/api/query?k=4&metric=l1")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(multipart(&[("image_id", None, id.as_bytes())])))
        .unwrap();
    let (status, by_field): (_, QueryResponse) = send_json(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(by_field.results, by_param.results);
    assert_ne!(by_field.session_id, by_param.session_id);
}

#[tokio::test]
async fn feedback_rounds_match_in_process_session() {
    let (dir, store) = corpus();
    let (state, app) = app(store.clone());
    let bytes = file_bytes(dir.path(), "fields/fields_02.png");
    let (_, first): (_, QueryResponse) = send_json(&app, upload_request("/api/query?k=6", &bytes)).await;

    let query = store.prepare_image(&decode_image(&bytes).unwrap()).unwrap();
    let mut local = FeedbackSession::new("local", &store, query, RocchioParams::default()).unwrap();
    assert_eq!(first.results, result_items(&local.session_query(&store, &QueryOptions::new(6, Metric::L2)).unwrap().hits));

    let rounds: [&[(&str, Label)]; 2] = [
        &[
            ("fields/fields_00.png", Label::Relevant),
            ("fields/fields_01.png", Label::Relevant),
            ("shapes/shapes_00.png", Label::NotRelevant),
            ("checkerboards/checkerboards_00.png", Label::Neutral),
        ],
        &[("checkerboards/checkerboards_01.png", Label::NotRelevant)],
    ];
    for (n, labels) in rounds.iter().enumerate() {
        let map: BTreeMap<String, Label> = labels.iter().map(|(i, l)| (i.to_string(), *l)).collect();
        let body = serde_json::to_string(&map).unwrap();
        let (status, resp): (_, QueryResponse) =
            send_json(&app, feedback_request(&first.session_id, "?metric=osm", &body)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(resp.round, n + 1);
        assert_eq!(resp.k, 6);
        assert_eq!(resp.session_id, first.session_id);
        local.apply_feedback(&store, map).unwrap();
        let want = local.session_query(&store, &QueryOptions::new(6, Metric::Osm)).unwrap();
        assert_eq!(resp.results, result_items(&want.hits));
    }
    // metric override sticks for later rounds
    let (_, resp): (_, QueryResponse) = send_json(
        &app,
        feedback_request(&first.session_id, "?k=3", r#"{"shapes/shapes_01.png": "not_relevant"}"#),
    )
    .await;
    assert_eq!(resp.metric, Metric::Osm);
    assert_eq!(resp.results.len(), 3);
    assert_eq!(state.session_count(), 1);
}

#[tokio::test]
async fn restart_reproduces_responses() {
    let (dir, store) = corpus();
    let path = dir.path().join("index.json");
    save_index(&store, &path).unwrap();
    let bytes = file_bytes(dir.path(), "shapes/shapes_02.png");
    let uri = "/api/query?k=8&metric=spd";
    let labels = r#"{"shapes/shapes_00.png": "relevant", "fields/fields_03.png": "not_relevant"}"#;

    let mut runs = Vec::new();
    for _ in 0..2 {
        let (_, app) = app(load_index(&path).unwrap());
        let (_, q): (_, QueryResponse) = send_json(&app, upload_request(uri, &bytes)).await;
        let (_, f): (_, QueryResponse) = send_json(&app, feedback_request(&q.session_id, "", labels)).await;
        runs.push((q.results, f.results));
    }
    assert_eq!(runs[0], runs[1]);
}

#[tokio::test]
async fn images_are_served_whole_and_as_thumbnails() {
    let (dir, store) = corpus();
    let (_, app) = app(store);
    let id = "shapes/shapes_03.png";
    let (status, ctype, body) = send(&app, get(&format!("/api/images/{id}"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype.as_deref(), Some("image/png"));
    assert_eq!(body, file_bytes(dir.path(), id));

    // 64x64 fits already; 300x120 scales to 128x51
    for (id, w, h) in [("shapes/shapes_03.png", 64, 64), ("wide%20image.png", 128, 51)] {
        let (status, ctype, body) = send(&app, get(&format!("/api/images/{id}?thumb=1"))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(ctype.as_deref(), Some("image/png"));
        let img = decode_image(&body).unwrap();
        assert_eq!((img.width(), img.height()), (w, h), "{id}");
    }

    let (_, q): (_, QueryResponse) = send_json(
        &app,
        Request::builder()
            .method(Method::POST)
            .uri("/api/query?k=13&image_id=wide%20image.png")
            .body(Body::empty())
            .unwrap(),
    )
    .await;
    let wide = q.results.iter().find(|r| r.image_id == "wide image.png").unwrap();
    assert_eq!(wide.thumbnail_url, "/api/images/wide%20image.png?thumb=1");
    let (status, _, _) = send(&app, get(&wide.thumbnail_url)).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn errors_map_to_documented_codes() {
    let (dir, store) = corpus();
    let (_, app) = app(store.clone());
    let png = file_bytes(dir.path(), "fields/fields_00.png");
    let post = |uri: &str| Request::builder().method(Method::POST).uri(uri).body(Body::empty()).unwrap();

    let cases: Vec<(Request<Body>, StatusCode, &str)> = vec![
        (upload_request("/api/query", b"plain text, not an image"), StatusCode::BAD_REQUEST, "invalid_image"),
        (upload_request("/api/query?metric=manhattan", &png), StatusCode::BAD_REQUEST, "unknown_metric"),
        (upload_request("/api/query?k=0", &png), StatusCode::BAD_REQUEST, "bad_request"),
        (upload_request("/api/query?threshold=abc", &png), StatusCode::BAD_REQUEST, "bad_request"),
        (post("/api/query"), StatusCode::BAD_REQUEST, "bad_request"),
        (post("/api/query?image_id=ghost.png"), StatusCode::NOT_FOUND, "unknown_image"),
        (feedback_request("s999999", "", r#"{"fields/fields_00.png": "relevant"}"#), StatusCode::NOT_FOUND, "unknown_session"),
        (get("/api/images/ghost.png"), StatusCode::NOT_FOUND, "unknown_image"),
    ];
    for (req, status, code) in cases {
        assert_eq!(error_code(&app, req).await, (status, code.to_string()));
    }

    let (_, q): (_, QueryResponse) = send_json(&app, upload_request("/api/query", &png)).await;
    let s = q.session_id.as_str();
    let session_cases: Vec<(&str, &str, StatusCode, &str)> = vec![
        ("", r#"{"fields/fields_00.png": "neutral"}"#, StatusCode::UNPROCESSABLE_ENTITY, "all_neutral"),
        ("", "{}", StatusCode::UNPROCESSABLE_ENTITY, "all_neutral"),
        ("", r#"{"fields/fields_00.png": "maybe"}"#, StatusCode::BAD_REQUEST, "bad_request"),
        ("", "not json", StatusCode::BAD_REQUEST, "bad_request"),
        ("", r#"{"ghost.png": "relevant"}"#, StatusCode::NOT_FOUND, "unknown_image"),
        ("?metric=nope", r#"{"fields/fields_00.png": "relevant"}"#, StatusCode::BAD_REQUEST, "unknown_metric"),
    ];
    for (query, body, status, code) in session_cases {
        assert_eq!(error_code(&app, feedback_request(s, query, body)).await, (status, code.to_string()), "{body}");
    }
    // failed rounds leave the session untouched
    let (_, ok): (_, QueryResponse) =
        send_json(&app, feedback_request(s, "", r#"{"fields/fields_01.png": "relevant"}"#)).await;
    assert_eq!(ok.round, 1);

    std::fs::remove_file(dir.path().join("fields/fields_03.png")).unwrap();
    assert_eq!(
        error_code(&app, get("/api/images/fields/fields_03.png")).await,
        (StatusCode::NOT_FOUND, "file_not_found".to_string())
    );
}

#[tokio::test]
async fn no_index_and_health() {
    let state = AppState::new(ServiceConfig::default());
    let app = router(state.clone());
    let (status, health): (_, HealthResponse) = send_json(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!health.index_loaded);
    assert_eq!(health.config_hash, None);
    assert_eq!(
        error_code(&app, upload_request("/api/query", b"x")).await,
        (StatusCode::SERVICE_UNAVAILABLE, "no_index".to_string())
    );
    assert_eq!(
        error_code(&app, get("/api/images/a.png")).await,
        (StatusCode::SERVICE_UNAVAILABLE, "no_index".to_string())
    );

    let (_, store) = corpus();
    let hash = store.config_hash().to_string();
    state.set_index(store);
    let (_, health): (_, HealthResponse) = send_json(&app, get("/api/health")).await;
    assert!(health.index_loaded);
    assert_eq!(health.images, 13);
    assert_eq!(health.config_hash, Some(hash));
}

#[tokio::test]
async fn bearer_token_guards_everything_but_health() {
    let (dir, store) = corpus();
    let config = ServiceConfig { token: Some("s3cret".into()), ..Default::default() };
    let app = router(AppState::with_index(config, store));
    let png = file_bytes(dir.path(), "fields/fields_00.png");

    assert_eq!(send(&app, get("/api/health")).await.0, StatusCode::OK);
    assert_eq!(
        error_code(&app, upload_request("/api/query", &png)).await,
        (StatusCode::UNAUTHORIZED, "unauthorized".to_string())
    );
    let mut wrong = upload_request("/api/query", &png);
    wrong.headers_mut().insert(header::AUTHORIZATION, "Bearer nope".parse().unwrap());
    assert_eq!(send(&app, wrong).await.0, StatusCode::UNAUTHORIZED);

    let mut good = upload_request("/api/query", &png);
    good.headers_mut().insert(header::AUTHORIZATION, "Bearer s3cret".parse().unwrap());
    assert_eq!(send(&app, good).await.0, StatusCode::OK);

    assert_eq!(send(&app, get("/api/images/fields/fields_00.png")).await.0, StatusCode::UNAUTHORIZED);
    let (status, _, body) = send(&app, get("/api/images/fields/fields_00.png?access_token=s3cret")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, png);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let (dir, store) = corpus();
    let config = ServiceConfig { session_ttl: Duration::from_millis(50), ..Default::default() };
    let state = AppState::with_index(config, store);
    let app = router(state.clone());
    let png = file_bytes(dir.path(), "fields/fields_00.png");
    let (_, q): (_, QueryResponse) = send_json(&app, upload_request("/api/query", &png)).await;
    assert_eq!(state.session_count(), 1);
    tokio::time::sleep(Duration::from_millis(120)).await;
    assert_eq!(
        error_code(&app, feedback_request(&q.session_id, "", r#"{"fields/fields_01.png": "relevant"}"#)).await,
        (StatusCode::NOT_FOUND, "unknown_session".to_string())
    );
    assert_eq!(state.session_count(), 0);
}

#[tokio::test]
async fn concurrent_sessions_are_independent() {
    let (dir, store) = corpus();
    let (_, app) = app(store.clone());
    let png = file_bytes(dir.path(), "checkerboards/checkerboards_01.png");
    let mut ids = Vec::new();
    for _ in 0..4 {
        let (_, q): (_, QueryResponse) = send_json(&app, upload_request("/api/query?k=5", &png)).await;
        ids.push(q.session_id);
    }
    let tasks: Vec<_> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let app = app.clone();
            let label = if i % 2 == 0 { "relevant" } else { "not_relevant" };
            let body = format!(r#"{{"checkerboards/checkerboards_00.png": "{label}"}}"#);
            let id = id.clone();
            tokio::spawn(async move { send_json::<QueryResponse>(&app, feedback_request(&id, "", &body)).await.1 })
        })
        .collect();
    let mut out = Vec::new();
    for t in tasks {
        out.push(t.await.unwrap());
    }
    assert!(out.iter().all(|r| r.round == 1));
    assert_eq!(out[0].results, out[2].results);
    assert_eq!(out[1].results, out[3].results);
}
