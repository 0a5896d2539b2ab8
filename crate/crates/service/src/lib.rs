//! HTTP facade over the retrieval engine: query by example, relevance
//! feedback sessions and image delivery. Handlers only translate between
//! HTTP and the core operations.

mod error;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Multipart, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cbir_core::feedback::{next_session_id, FeedbackSession, Label, RocchioParams};
use cbir_core::index::{Hit, IndexStore, QueryOptions, RankedResults};
use cbir_core::io::{decode_image, encode_png, thumbnail};
use cbir_core::{Direction, Metric};
use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};
use serde::{Deserialize, Serialize};

pub use crate::error::{classify, ApiError, ErrorBody, ErrorDetail};

pub const DEFAULT_K: usize = 10;
pub const THUMBNAIL_SIDE: u32 = 128;
pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(30 * 60);
const MAX_UPLOAD_BYTES: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Required bearer token; `None` disables authorization.
    pub token: Option<String>,
    /// Idle time after which a session is dropped.
    pub session_ttl: Duration,
    pub rocchio: RocchioParams,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            token: None,
            session_ttl: DEFAULT_SESSION_TTL,
            rocchio: RocchioParams::default(),
        }
    }
}

struct SessionEntry {
    session: FeedbackSession,
    k: usize,
    metric: Metric,
    last_used: Instant,
}

/// Shared server state: the loaded index (replaced whole, never mutated)
/// and the session table. Each session has its own lock, so rounds of one
/// session apply serially while different sessions proceed in parallel.
pub struct AppState {
    config: ServiceConfig,
    index: RwLock<Option<Arc<IndexStore>>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            index: RwLock::new(None),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_index(config: ServiceConfig, store: IndexStore) -> Arc<Self> {
        let state = Self::new(config);
        state.set_index(store);
        state
    }

    /// Installs a new index. Sessions opened against the old one are dropped.
    pub fn set_index(&self, store: IndexStore) {
        *self.index.write().expect("index lock") = Some(Arc::new(store));
        self.sessions.lock().expect("session lock").clear();
    }

    pub fn index(&self) -> Result<Arc<IndexStore>, ApiError> {
        self.index
            .read()
            .expect("index lock")
            .clone()
            .ok_or_else(ApiError::no_index)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session lock").len()
    }

    fn expire_sessions(&self, now: Instant) {
        let ttl = self.config.session_ttl;
        self.sessions.lock().expect("session lock").retain(|_, e| {
            // a session whose lock is held is in use and therefore fresh
            e.try_lock().map(|s| now.duration_since(s.last_used) < ttl).unwrap_or(true)
        });
    }

    fn insert_session(&self, entry: SessionEntry) {
        let id = entry.session.session_id.clone();
        self.sessions
            .lock()
            .expect("session lock")
            .insert(id, Arc::new(Mutex::new(entry)));
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.expire_sessions(Instant::now());
        self.sessions
            .lock()
            .expect("session lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

/// One ranked hit. `score` is `null` for an infinite distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultItem {
    pub image_id: String,
    pub score: Option<f64>,
    pub thumbnail_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub session_id: String,
    pub round: usize,
    pub metric: Metric,
    pub direction: Direction,
    pub k: usize,
    pub results: Vec<ResultItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub index_loaded: bool,
    pub images: usize,
    pub config_hash: Option<String>,
    pub sessions: usize,
}

const SEGMENT: &AsciiSet = &CONTROLS
    .add(b' ')
    .add(b'"')
    .add(b'#')
    .add(b'%')
    .add(b'/')
    .add(b'<')
    .add(b'>')
    .add(b'?')
    .add(b'`')
    .add(b'{')
    .add(b'}');

/// Thumbnail URL of an image id, each path segment percent-encoded.
pub fn thumbnail_url(image_id: &str) -> String {
    let path: Vec<String> = image_id
        .split('/')
        .map(|s| utf8_percent_encode(s, SEGMENT).to_string())
        .collect();
    format!("/api/images/{}?thumb=1", path.join("/"))
}

pub fn result_items(hits: &[Hit]) -> Vec<ResultItem> {
    hits.iter()
        .map(|h| ResultItem {
            image_id: h.image_id.clone(),
            score: h.score.is_finite().then_some(h.score),
            thumbnail_url: thumbnail_url(&h.image_id),
        })
        .collect()
}

fn response(session_id: &str, round: usize, k: usize, ranked: RankedResults) -> QueryResponse {
    QueryResponse {
        session_id: session_id.to_string(),
        round,
        metric: ranked.metric,
        direction: ranked.direction,
        k,
        results: result_items(&ranked.hits),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let protected = Router::new()
        .route("/api/query", post(handle_query))
        .route("/api/sessions/{id}/feedback", post(handle_feedback))
        .route("/api/images/{*id}", get(handle_image))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/api/health", get(handle_health))
        .merge(protected)
        .layer(axum::extract::DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Accepts `Authorization: Bearer <token>` or an `access_token` query
/// parameter (for `<img>` sources, which cannot set headers).
async fn require_token(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    let Some(expected) = state.config.token.as_deref() else {
        return next.run(req).await;
    };
    let header_ok = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|t| t == expected);
    let query_ok = req.uri().query().is_some_and(|q| {
        q.split('&')
            .filter_map(|kv| kv.split_once('='))
            .any(|(k, v)| k == "access_token" && v == expected)
    });
    if header_ok || query_ok {
        next.run(req).await
    } else {
        ApiError::unauthorized().into_response()
    }
}

async fn handle_health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    let index = state.index().ok();
    Json(HealthResponse {
        status: "ok".into(),
        index_loaded: index.is_some(),
        images: index.as_ref().map_or(0, |s| s.len()),
        config_hash: index.map(|s| s.config_hash().to_string()),
        sessions: state.session_count(),
    })
}

fn parse_k(params: &HashMap<String, String>, default: usize) -> Result<usize, ApiError> {
    match params.get("k") {
        None => Ok(default),
        Some(v) => match v.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(ApiError::bad_request(format!("k must be a positive integer, got {v:?}"))),
        },
    }
}

fn parse_metric(params: &HashMap<String, String>, default: Metric) -> Result<Metric, ApiError> {
    match params.get("metric") {
        None => Ok(default),
        Some(m) => Ok(m.parse::<Metric>()?),
    }
}

fn parse_threshold(params: &HashMap<String, String>) -> Result<Option<f64>, ApiError> {
    params
        .get("threshold")
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| ApiError::bad_request(format!("threshold must be a number, got {t:?}")))
        })
        .transpose()
}

/// `POST /api/query`: multipart field `image` (file) or `image_id`, or an
/// `image_id` query parameter. Opens a feedback session on the query.
async fn handle_query(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
    mut multipart: Option<Multipart>,
) -> Result<Json<QueryResponse>, ApiError> {
    let store = state.index()?;
    let k = parse_k(&params, DEFAULT_K)?;
    let metric = parse_metric(&params, Metric::L2)?;
    let threshold = parse_threshold(&params)?;

    let mut upload: Option<Bytes> = None;
    let mut image_id = params.get("image_id").cloned();
    if let Some(form) = multipart.as_mut() {
        while let Some(field) = form
            .next_field()
            .await
            .map_err(|e| ApiError::bad_request(format!("malformed multipart body: {e}")))?
        {
            match field.name() {
                Some("image") => {
                    upload = Some(field.bytes().await.map_err(|e| {
                        ApiError::bad_request(format!("could not read image field: {e}"))
                    })?)
                }
                Some("image_id") => {
                    image_id = Some(field.text().await.map_err(|e| {
                        ApiError::bad_request(format!("could not read image_id field: {e}"))
                    })?)
                }
                _ => {}
            }
        }
    }

    let query = match (upload, image_id) {
        (Some(bytes), _) => {
            let store = store.clone();
            tokio::task::spawn_blocking(move || {
                let img = decode_image(&bytes)?;
                store.prepare_image(&img)
            })
            .await
            .expect("extraction task")?
        }
        (None, Some(id)) => store.stored_query(&id)?,
        (None, None) => {
            return Err(ApiError::bad_request(
                "send an image file in the multipart field \"image\" or an image_id",
            ))
        }
    };

    let session = FeedbackSession::new(next_session_id(), &store, query, state.config.rocchio)?;
    let opts = QueryOptions { k, metric, threshold };
    let ranked = session.session_query(&store, &opts)?;
    let body = response(&session.session_id, 0, k, ranked);
    state.expire_sessions(Instant::now());
    state.insert_session(SessionEntry {
        session,
        k,
        metric,
        last_used: Instant::now(),
    });
    Ok(Json(body))
}

/// `POST /api/sessions/{id}/feedback` with body `{image_id: label}`. `k`
/// and `metric` default to the values of the opening query.
async fn handle_feedback(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<HashMap<String, String>>,
    body: Bytes,
) -> Result<Json<QueryResponse>, ApiError> {
    let store = state.index()?;
    let labels: BTreeMap<String, Label> = serde_json::from_slice(&body).map_err(|e| {
        ApiError::bad_request(format!(
            "body must be a JSON object of image_id to relevant | not_relevant | neutral: {e}"
        ))
    })?;
    let entry = state.session(&id)?;
    let mut entry = entry.lock().expect("session entry lock");
    let k = parse_k(&params, entry.k)?;
    let metric = parse_metric(&params, entry.metric)?;
    let threshold = parse_threshold(&params)?;
    entry.session.apply_feedback(&store, labels)?;
    entry.k = k;
    entry.metric = metric;
    entry.last_used = Instant::now();
    let ranked = entry.session.session_query(&store, &QueryOptions { k, metric, threshold })?;
    Ok(Json(response(&id, entry.session.round(), k, ranked)))
}

pub fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => "image/png",
        Some("bmp") => "image/bmp",
        Some("pgm") => "image/x-portable-graymap",
        Some("ppm") => "image/x-portable-pixmap",
        _ => "image/x-portable-anymap",
    }
}

/// `GET /api/images/{id}`: the corpus file, or with `thumb=1` a PNG whose
/// longer side is at most 128 pixels.
async fn handle_image(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let store = state.index()?;
    let path = store.image_path(&id)?;
    let bytes = tokio::fs::read(&path).await.map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ApiError::new(StatusCode::NOT_FOUND, "file_not_found", format!("{} is missing", path.display()))
        } else {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io_error", e.to_string())
        }
    })?;
    let thumb = params.get("thumb").is_some_and(|v| v == "1" || v == "true");
    let mut headers = HeaderMap::new();
    if !thumb {
        headers.insert(header::CONTENT_TYPE, content_type(&path).parse().expect("valid header"));
        return Ok((headers, bytes).into_response());
    }
    let png = tokio::task::spawn_blocking(move || {
        let img = decode_image(&bytes)?;
        encode_png(&thumbnail(&img, THUMBNAIL_SIDE))
    })
    .await
    .expect("thumbnail task")?;
    headers.insert(header::CONTENT_TYPE, "image/png".parse().expect("valid header"));
    Ok((headers, png).into_response())
}

/// Serves `router(state)` on `addr` until the process is stopped.
pub async fn serve(state: Arc<AppState>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
