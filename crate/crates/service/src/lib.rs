//! HTTP and WebSocket front end for conversation sessions.
//!
//! REST is the source of truth; the WebSocket stream mirrors the same turn
//! protocol as pushed events. Each session owns a directory with its
//! transcript and report when a data directory is configured.

mod error;
mod registry;
mod report;
mod store;
mod ws;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use convflow::affect::{ExpressionTable, RegistryEntry};
use convflow::engine::{AnswerOutcome, SelectionPolicy, Session, SessionConfig, Turn, Utterance};
use convflow::places::PlacesClient;
use convflow::rng::derive_seed;
use convflow::simulate::{MetricsError, SurveyRecord, ITEM_MAX, ITEM_MIN, SURVEY_ITEMS, VAS_MAX};

pub use error::ApiError;
pub use registry::{LoadError, ScenarioRegistry, ScenarioSummary, SpotSummary};
pub use report::{SessionStats, StoredReport};
pub use store::{SessionStore, REPORT_FILE, TRANSCRIPT_FILE};
pub use ws::{ClientMessage, ServerEvent};

pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);
pub const DEMO_SPEAK_DELAY: Duration = Duration::from_secs(5);

#[derive(Clone)]
pub struct ServiceConfig {
    pub registry: ScenarioRegistry,
    pub data_dir: Option<PathBuf>,
    pub session_ttl: Duration,
    /// Pause after each robot utterance. Off unless set.
    pub speak_delay: Option<Duration>,
    /// When set, server-chosen seeds are derived from it in creation order.
    pub base_seed: Option<u64>,
    pub expressions: ExpressionTable,
    pub places: Option<Arc<PlacesClient>>,
}

impl ServiceConfig {
    pub fn new(registry: ScenarioRegistry) -> Self {
        ServiceConfig {
            registry,
            data_dir: None,
            session_ttl: DEFAULT_TTL,
            speak_delay: None,
            base_seed: None,
            expressions: ExpressionTable::default(),
            places: None,
        }
    }
}

struct Slot {
    session: Session,
    scenario_id: String,
    survey: Option<SurveyRecord>,
    report: Option<String>,
    written: usize,
    last_used: Instant,
}

struct Inner {
    cfg: ServiceConfig,
    store: Option<SessionStore>,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Slot>>>>,
    counter: AtomicU64,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateRequest {
    pub scenario_id: String,
    pub spots: [String; 2],
    #[serde(default)]
    pub operator_choice: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub policy: Option<SelectionPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub seed: u64,
    pub scenario_id: String,
    pub created_at: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub matched: bool,
    pub matched_arc: Option<usize>,
    pub matched_key: Option<String>,
    pub favorable: bool,
    pub broken: bool,
    pub reply_follows: bool,
}

impl From<AnswerOutcome> for AnswerResponse {
    fn from(o: AnswerOutcome) -> Self {
        AnswerResponse {
            matched: o.matched_arc.is_some(),
            matched_arc: o.matched_arc,
            matched_key: o.matched_key,
            favorable: o.favorable,
            broken: o.broken,
            reply_follows: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveyRequest {
    pub items: Vec<i64>,
    pub vas_pre: i64,
    pub vas_post: i64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn range_error(e: MetricsError) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
}

impl SurveyRequest {
    pub fn into_record(self, session_id: &str) -> Result<SurveyRecord, ApiError> {
        if self.items.len() != SURVEY_ITEMS {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "E_RANGE",
                format!("expected {SURVEY_ITEMS} items, got {}", self.items.len()),
            ));
        }
        let mut items = [0u8; SURVEY_ITEMS];
        for (i, &v) in self.items.iter().enumerate() {
            if !(i64::from(ITEM_MIN)..=i64::from(ITEM_MAX)).contains(&v) {
                return Err(range_error(MetricsError::Range {
                    field: format!("i{}", i + 1),
                    value: v,
                    min: ITEM_MIN.into(),
                    max: ITEM_MAX.into(),
                }));
            }
            items[i] = v as u8;
        }
        convflow::simulate::vas_delta(self.vas_pre, self.vas_post).map_err(range_error)?;
        debug_assert!(self.vas_pre <= VAS_MAX && self.vas_post <= VAS_MAX);
        Ok(SurveyRecord::new(session_id, items, self.vas_pre as u8, self.vas_post as u8))
    }
}

/// One step of the turn protocol, shared by REST and WebSocket.
pub(crate) enum Step {
    Utterance(Utterance),
    Finished,
}

impl AppState {
    pub fn new(cfg: ServiceConfig) -> Self {
        let store = cfg.data_dir.clone().map(SessionStore::new);
        AppState {
            inner: Arc::new(Inner {
                cfg,
                store,
                sessions: Mutex::new(HashMap::new()),
                counter: AtomicU64::new(0),
            }),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.cfg
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().unwrap().len()
    }

    fn slot(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Slot>>, ApiError> {
        self.inner
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session"))
    }

    fn next_seed(&self) -> u64 {
        let n = self.inner.counter.fetch_add(1, Ordering::Relaxed);
        match self.inner.cfg.base_seed {
            Some(base) => derive_seed(base, n),
            None => uuid::Uuid::new_v4().as_u64_pair().0,
        }
    }

    pub async fn create(&self, req: CreateRequest) -> Result<CreateResponse, ApiError> {
        let doc = self
            .inner
            .cfg
            .registry
            .get(&req.scenario_id)
            .ok_or_else(|| ApiError::not_found("scenario"))?;
        let seed = req.seed.unwrap_or_else(|| self.next_seed());
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let [a, b] = req.spots.clone();
        let mut cfg = SessionConfig::new(a, b, seed).with_id(session_id.clone());
        cfg.policy = req.policy.unwrap_or_default();
        cfg.operator_choice = req.operator_choice.clone();
        cfg.expressions = self.inner.cfg.expressions.clone();
        if let Some(client) = self.inner.cfg.places.clone() {
            let spots = req.spots.clone();
            let tags = tokio::task::spawn_blocking(move || {
                spots.map(|s| match client.get_place_types(&s) {
                    Ok(rec) => Some(rec.tags),
                    Err(e) => {
                        log::warn!("place types for `{s}` unavailable ({e}); using scenario tags");
                        None
                    }
                })
            })
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "E_INTERNAL", e.to_string()))?;
            cfg.spot_tags = tags;
        }
        let session = Session::start(doc, cfg)?;
        let slot = Slot {
            session,
            scenario_id: req.scenario_id.clone(),
            survey: None,
            report: None,
            written: 0,
            last_used: Instant::now(),
        };
        self.inner
            .sessions
            .lock()
            .unwrap()
            .insert(session_id.clone(), Arc::new(tokio::sync::Mutex::new(slot)));
        Ok(CreateResponse {
            session_id,
            seed,
            scenario_id: req.scenario_id,
            created_at: unix_now(),
        })
    }

    fn persist(&self, slot: &mut Slot) {
        let Some(store) = &self.inner.store else { return };
        let id = slot.session.id().to_string();
        if let Err(e) = store.append_transcript(&id, slot.session.transcript(), &mut slot.written) {
            log::error!("cannot write transcript for {id}: {e}");
        }
        if let Some(report) = &slot.report {
            if let Err(e) = store.write_report(&id, report) {
                log::error!("cannot write report for {id}: {e}");
            }
        }
    }

    fn finish_report(slot: &mut Slot) {
        let report = StoredReport::build(&slot.scenario_id, &slot.session, slot.survey.as_ref());
        slot.report = Some(report.to_json());
    }

    pub(crate) async fn step(&self, id: &str) -> Result<Step, ApiError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        slot.last_used = Instant::now();
        if slot.session.is_finished() {
            return Err(ApiError::from(convflow::engine::EngineError::SessionFinished));
        }
        let turn = slot.session.next_utterance()?;
        let step = match turn {
            Turn::Utterance(u) => Step::Utterance(u),
            Turn::Finished => {
                Self::finish_report(&mut slot);
                Step::Finished
            }
        };
        self.persist(&mut slot);
        if let (Some(delay), Step::Utterance(u)) = (self.inner.cfg.speak_delay, &step) {
            if !u.awaiting_input {
                tokio::time::sleep(delay).await;
            }
        }
        Ok(step)
    }

    pub async fn answer(&self, id: &str, text: &str) -> Result<AnswerResponse, ApiError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        slot.last_used = Instant::now();
        let out = slot.session.submit_answer(text)?;
        self.persist(&mut slot);
        Ok(out.into())
    }

    pub async fn survey(&self, id: &str, req: SurveyRequest) -> Result<(), ApiError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        slot.last_used = Instant::now();
        if !slot.session.is_finished() {
            return Err(ApiError::new(StatusCode::CONFLICT, "E_NOT_FINISHED", "the session has not finished"));
        }
        if slot.survey.is_some() {
            return Err(ApiError::new(StatusCode::CONFLICT, "E_SURVEY_EXISTS", "a survey was already stored"));
        }
        let record = req.into_record(id)?;
        slot.survey = Some(record);
        Self::finish_report(&mut slot);
        self.persist(&mut slot);
        Ok(())
    }

    pub async fn report(&self, id: &str) -> Result<String, ApiError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        slot.last_used = Instant::now();
        slot.report
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "E_NOT_FINISHED", "the session has not finished"))
    }

    /// Drop sessions idle for longer than the TTL. Sessions busy with a
    /// request are kept.
    pub fn purge_idle(&self, now: Instant) -> usize {
        let ttl = self.inner.cfg.session_ttl;
        let mut map = self.inner.sessions.lock().unwrap();
        let before = map.len();
        map.retain(|_, slot| match slot.try_lock() {
            Ok(s) => now.saturating_duration_since(s.last_used) < ttl,
            Err(_) => true,
        });
        before - map.len()
    }

    pub fn spawn_reaper(&self) -> tokio::task::JoinHandle<()> {
        let state = self.clone();
        let period = (self.inner.cfg.session_ttl / 4).clamp(Duration::from_millis(10), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let n = state.purge_idle(Instant::now());
                if n > 0 {
                    log::info!("purged {n} idle session(s)");
                }
            }
        })
    }
}

async fn create_session(
    State(state): State<AppState>,
    Json(req): Json<CreateRequest>,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    Ok((StatusCode::CREATED, Json(state.create(req).await?)))
}

async fn get_next(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Utterance>, ApiError> {
    match state.step(&id).await? {
        Step::Utterance(u) => Ok(Json(u)),
        Step::Finished => Err(ApiError::from(convflow::engine::EngineError::SessionFinished)),
    }
}

async fn post_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> Result<Json<AnswerResponse>, ApiError> {
    Ok(Json(state.answer(&id, &req.text).await?))
}

async fn post_survey(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SurveyRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    state.survey(&id, req).await?;
    Ok(Json(serde_json::json!({ "stored": true, "session_id": id })))
}

async fn get_report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let body = state.report(&id).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Vec<ScenarioSummary>> {
    Json(state.inner.cfg.registry.summaries())
}

async fn expressions(State(state): State<AppState>) -> Json<Vec<RegistryEntry>> {
    Json(state.inner.cfg.expressions.registry())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(get_next))
        .route("/sessions/{id}/answer", post(post_answer))
        .route("/sessions/{id}/survey", post(post_survey))
        .route("/sessions/{id}/report", get(get_report))
        .route("/sessions/{id}/stream", get(ws::stream))
        .route("/scenarios", get(list_scenarios))
        .route("/expressions", get(expressions))
        .with_state(state)
}

/// Bind and serve until the task is cancelled.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let reaper = state.spawn_reaper();
    let result = axum::serve(listener, router(state)).await;
    reaper.abort();
    result
}
