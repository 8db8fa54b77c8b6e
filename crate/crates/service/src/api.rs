//! HTTP/JSON API over a platform instance.
//!
//! Every mutating endpoint appends one or more events through the single
//! platform lock; read endpoints only look at committed state. Mutations
//! accept an `Idempotency-Key` header, and a repeated key returns the first
//! response without touching the log.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::watch;

use lcw_core::agents::{
    is_feasible, AdministratorConfig, Decision, ProductConstraints, ProviderConfig, RequestStatus, ServicePolicy,
};
use lcw_core::domain::{
    BusinessModel, CaseEvent, CaseId, Money, OfferId, ProductDescriptor, RequestId, SimDay, StakeholderId, ToolId,
    TwinId,
};
use lcw_core::log::EventRecord;
use lcw_core::market::DecisionTrigger;
use lcw_core::platform::{Platform, PlatformError};
use lcw_core::runtime::OpenGate;
use lcw_core::twin::{ConditionReport, Finding, Measurement, TwinEvent, TwinSnapshot};

use crate::config::TimeMode;
use crate::store::{write_snapshot, DataDir, MirroredLog};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
pub const STAKEHOLDER_HEADER: &str = "x-stakeholder-id";
/// Upper bound on a single long-poll wait.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

/// Uniform error body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error_code: String,
    pub message: String,
    /// Sequence number the next event would have had.
    pub seq_at_failure: u64,
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        let code = e.code();
        let status = match code {
            "UnknownTwin"
            | "UnknownCase"
            | "UnknownRequest"
            | "UnknownAdministrator"
            | "UnknownProvider"
            | "VersionOutOfRange" => StatusCode::NOT_FOUND,
            "AccessDenied" => StatusCode::FORBIDDEN,
            "StorageFailure" => StatusCode::SERVICE_UNAVAILABLE,
            "InvalidDescriptor"
            | "UnknownParent"
            | "UnknownDamageCode"
            | "EmptyComponentPath"
            | "NotConnected"
            | "InvalidTransfer"
            | "InvalidConfig"
            | "NoConstraintsConfigured"
            | "InfeasibleChoice"
            | "InvalidReplacement"
            | "FutureReport"
            | "NothingToService"
            | "SchemaViolation" => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::CONFLICT,
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "SchemaViolation", e.body_text())
    }
}

struct Inner {
    platform: Platform<MirroredLog>,
    dir: DataDir,
    idempotency: HashMap<String, (StatusCode, Value)>,
    unsnapshotted: u64,
    snapshot_every: u64,
}

impl Inner {
    fn seq(&self) -> u64 {
        self.platform.state().next_seq()
    }

    fn envelope(&self, e: &ApiError) -> Value {
        serde_json::to_value(ErrorEnvelope {
            error_code: e.code.to_owned(),
            message: e.message.clone(),
            seq_at_failure: self.seq(),
        })
        .expect("envelopes serialize")
    }
}

/// Shared state behind the router.
pub struct AppState {
    inner: Mutex<Inner>,
    next_seq: watch::Sender<u64>,
    time_mode: TimeMode,
}

impl AppState {
    pub fn new(platform: Platform<MirroredLog>, dir: DataDir, time_mode: TimeMode, snapshot_every: u64) -> Arc<Self> {
        let (next_seq, _) = watch::channel(platform.state().next_seq());
        Arc::new(Self {
            inner: Mutex::new(Inner {
                platform,
                dir,
                idempotency: HashMap::new(),
                unsnapshotted: 0,
                snapshot_every: snapshot_every.max(1),
            }),
            next_seq,
            time_mode,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // a panicking handler cannot leave a half-applied event behind
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Writes a snapshot of the current state.
    pub fn snapshot(&self) -> Result<(), crate::ServiceError> {
        let inner = self.lock();
        write_snapshot(&inner.dir, &inner.platform)
    }

    /// Runs `f` as one serialized mutation with idempotency handling.
    fn mutate<T: Serialize>(
        &self,
        headers: &HeaderMap,
        route: String,
        success: StatusCode,
        f: impl FnOnce(&mut Platform<MirroredLog>) -> Result<T, ApiError>,
    ) -> Response {
        let key = headers.get(IDEMPOTENCY_HEADER).and_then(|v| v.to_str().ok()).map(|k| format!("{route} {k}"));
        let mut inner = self.lock();
        if let Some(stored) = key.as_ref().and_then(|k| inner.idempotency.get(k)) {
            return (stored.0, Json(stored.1.clone())).into_response();
        }
        let before = inner.seq();
        let mut result = Ok(());
        if self.time_mode == TimeMode::Live {
            let today = TimeMode::today().max(inner.platform.clock());
            result = inner.platform.advance_clock(today).map_err(ApiError::from);
        }
        let (status, body) = match result.and_then(|()| f(&mut inner.platform)) {
            Ok(value) => (success, serde_json::to_value(value).expect("responses serialize")),
            Err(e) => (e.status, inner.envelope(&e)),
        };
        if let Some(k) = key {
            inner.idempotency.insert(k, (status, body.clone()));
        }
        let after = inner.seq();
        if after > before {
            inner.unsnapshotted += after - before;
            if inner.unsnapshotted >= inner.snapshot_every {
                if let Err(e) = write_snapshot(&inner.dir, &inner.platform) {
                    eprintln!("lcw: snapshot failed: {e}");
                }
                inner.unsnapshotted = 0;
            }
            self.next_seq.send_replace(after);
        }
        (status, Json(body)).into_response()
    }

    fn read<T: Serialize>(&self, f: impl FnOnce(&Platform<MirroredLog>) -> Result<T, ApiError>) -> Response {
        let inner = self.lock();
        match f(&inner.platform) {
            Ok(value) => Json(value).into_response(),
            Err(e) => (e.status, Json(inner.envelope(&e))).into_response(),
        }
    }

    fn reject(&self, e: ApiError) -> Response {
        let inner = self.lock();
        (e.status, Json(inner.envelope(&e))).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/twins", post(register_twin))
        .route("/api/twins/{id}", get(show_twin))
        .route("/api/twins/{id}/assessments", post(ingest_assessment))
        .route("/api/twins/{id}/telemetry", post(ingest_telemetry))
        .route("/api/agents/administrators/{id}/config", put(put_admin_config).get(get_admin_config))
        .route("/api/agents/providers/{id}/config", put(put_provider_config).get(get_provider_config))
        .route("/api/requests", post(post_request).get(list_requests))
        .route("/api/requests/{id}/offers", post(post_offer))
        .route("/api/cases/{id}/decision", post(post_decision))
        .route("/api/cases/{id}/events", post(post_case_event))
        .route("/api/cases/{id}", get(show_case))
        .route("/api/events", get(list_events))
        .route("/api/sim/tick", post(tick))
        .with_state(state)
}

type Body<T> = Result<Json<T>, JsonRejection>;

macro_rules! body {
    ($state:expr, $body:expr) => {
        match $body {
            Ok(Json(b)) => b,
            Err(e) => return $state.reject(e.into()),
        }
    };
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterTwin {
    #[serde(flatten)]
    pub descriptor: ProductDescriptor,
    pub administrator: StakeholderId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Committed {
    pub seq: u64,
}

async fn register_twin(State(s): State<Arc<AppState>>, headers: HeaderMap, body: Body<RegisterTwin>) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, "POST /api/twins".into(), StatusCode::CREATED, |p| {
        let twin_id = p.register_twin(body.descriptor, body.administrator)?;
        Ok(json!({ "twin_id": twin_id, "seq": p.state().next_seq() - 1 }))
    })
}

#[derive(Debug, Deserialize)]
struct VersionQuery {
    version: Option<u64>,
}

/// Snapshot of a twin plus its event history up to the snapshot version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinView {
    #[serde(flatten)]
    pub snapshot: TwinSnapshot,
    pub history: Vec<TwinEvent>,
}

async fn show_twin(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
    headers: HeaderMap,
) -> Response {
    let viewer = headers.get(STAKEHOLDER_HEADER).and_then(|v| v.to_str().ok()).map(StakeholderId::from);
    s.read(|p| {
        let twin_id = TwinId::from(id);
        let state = p.state();
        let snapshot = match viewer {
            Some(v) if state.providers().contains_key(&v) => state.provider_view(&v, &twin_id, q.version)?,
            _ => state.twins().snapshot(&twin_id, q.version).map_err(PlatformError::from)?,
        };
        let record = state.twins().get(&twin_id).map_err(PlatformError::from)?;
        let history = record.events()[..snapshot.version as usize].to_vec();
        Ok(TwinView { snapshot, history })
    })
}

#[derive(Debug, Clone, Deserialize)]
struct AssessmentBody {
    recorded_by: ToolId,
    /// Defaults to the platform clock.
    day: Option<SimDay>,
    #[serde(default)]
    findings: Vec<Finding>,
}

async fn ingest_assessment(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<AssessmentBody>,
) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, format!("POST /api/twins/{id}/assessments"), StatusCode::CREATED, |p| {
        let report = ConditionReport {
            recorded_by: body.recorded_by,
            day: body.day.unwrap_or(p.clock()),
            findings: body.findings,
        };
        let version = p.ingest_assessment(&id.as_str().into(), report)?;
        Ok(json!({ "version": version }))
    })
}

#[derive(Debug, Clone, Deserialize)]
struct TelemetryBody {
    readings: Vec<Measurement>,
}

async fn ingest_telemetry(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<TelemetryBody>,
) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, format!("POST /api/twins/{id}/telemetry"), StatusCode::CREATED, |p| {
        let version = p.ingest_telemetry(&id.as_str().into(), body.readings)?;
        Ok(json!({ "version": version }))
    })
}

#[derive(Debug, Clone, Deserialize)]
struct AdminConfigBody {
    constraints: BTreeMap<String, ProductConstraints>,
}

async fn put_admin_config(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<AdminConfigBody>,
) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, format!("PUT /api/agents/administrators/{id}/config"), StatusCode::OK, |p| {
        let config = AdministratorConfig { administrator_id: id.into(), constraints: body.constraints };
        p.configure_administrator(config.clone())?;
        Ok(config)
    })
}

async fn get_admin_config(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    s.read(|p| {
        let id = StakeholderId::from(id);
        p.state().administrators().get(&id).cloned().ok_or_else(|| PlatformError::UnknownAdministrator(id).into())
    })
}

#[derive(Debug, Clone, Deserialize)]
struct ProviderConfigBody {
    catalog: Vec<ServicePolicy>,
}

async fn put_provider_config(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<ProviderConfigBody>,
) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, format!("PUT /api/agents/providers/{id}/config"), StatusCode::OK, |p| {
        let config = ProviderConfig { provider_id: id.into(), catalog: body.catalog };
        p.configure_provider(config.clone())?;
        Ok(config)
    })
}

async fn get_provider_config(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    s.read(|p| {
        let id = StakeholderId::from(id);
        p.state().providers().get(&id).cloned().ok_or_else(|| PlatformError::UnknownProvider(id).into())
    })
}

#[derive(Debug, Clone, Deserialize)]
struct RequestBody {
    twin_id: TwinId,
}

async fn post_request(State(s): State<Arc<AppState>>, headers: HeaderMap, body: Body<RequestBody>) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, "POST /api/requests".into(), StatusCode::CREATED, |p| {
        let case_id = p.request_service(&body.twin_id)?;
        let request_id = p.state().case(&case_id)?.request.request_id.clone();
        Ok(json!({ "case_id": case_id, "request_id": request_id }))
    })
}

#[derive(Debug, Deserialize)]
struct RequestQuery {
    status: Option<String>,
    model: Option<String>,
}

/// A board entry: the request plus where to find its case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestView {
    #[serde(flatten)]
    pub request: lcw_core::agents::ServiceRequest,
    pub case_id: CaseId,
    pub model_id: String,
}

async fn list_requests(State(s): State<Arc<AppState>>, Query(q): Query<RequestQuery>) -> Response {
    let status = match q.status.as_deref() {
        None | Some("open") => Some(RequestStatus::Open),
        Some("closed") => Some(RequestStatus::Closed),
        Some("all") => None,
        Some(other) => return s.reject(ApiError::bad_request(format!("unknown status {other:?}"))),
    };
    s.read(|p| {
        let state = p.state();
        let model_of = |t: &TwinId| state.twins().get(t).ok().map(|r| r.descriptor.model_id.as_str());
        let views = state
            .market()
            .list_requests(status, q.model.as_deref(), model_of)
            .into_iter()
            .map(|r| {
                let case = state.market().case_for_request(&r.request_id).expect("listed requests have cases");
                RequestView {
                    request: r.clone(),
                    case_id: case.case_id.clone(),
                    model_id: model_of(&r.twin_id).unwrap_or_default().to_owned(),
                }
            })
            .collect::<Vec<_>>();
        Ok(views)
    })
}

/// Explicit terms, or none of them to offer from the provider's catalog.
#[derive(Debug, Clone, Deserialize)]
struct OfferBody {
    provider_id: StakeholderId,
    price: Option<Money>,
    promised_duration_days: Option<u32>,
    model: Option<BusinessModel>,
}

async fn post_offer(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<OfferBody>,
) -> Response {
    let body = body!(s, body);
    let request_id = RequestId::from(id.clone());
    s.mutate(&headers, format!("POST /api/requests/{id}/offers"), StatusCode::CREATED, |p| {
        match (body.price, body.promised_duration_days, body.model) {
            (Some(price), Some(days), Some(model)) => {
                let ack = p.submit_offer(&request_id, body.provider_id, price, days, model)?;
                Ok(json!({ "matched": true, "ack": ack }))
            }
            (None, None, None) => {
                let ack = p.offer_from_catalog(&body.provider_id, &request_id)?;
                Ok(json!({ "matched": ack.is_some(), "ack": ack }))
            }
            _ => Err(ApiError::bad_request("give price, promised_duration_days and model together, or none of them")),
        }
    })
}

#[derive(Debug, Clone, Default, Deserialize)]
struct DecisionBody {
    /// The offer to accept; absent means "accept the recommendation".
    offer_id: Option<OfferId>,
}

async fn post_decision(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<DecisionBody>,
) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, format!("POST /api/cases/{id}/decision"), StatusCode::OK, |p| {
        Ok(p.decide(&id.as_str().into(), DecisionTrigger::Manual(body.offer_id))?)
    })
}

#[derive(Debug, Clone, Deserialize)]
struct CaseEventBody {
    event: CaseEvent,
    replacement_twin: Option<TwinId>,
}

async fn post_case_event(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Body<CaseEventBody>,
) -> Response {
    let body = body!(s, body);
    s.mutate(&headers, format!("POST /api/cases/{id}/events"), StatusCode::OK, |p| {
        Ok(p.fulfill(&id.as_str().into(), body.event, body.replacement_twin)?)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseView {
    pub case: lcw_core::market::ServiceCase,
    /// What the selection rule would pick from the offers held now.
    pub recommendation: Decision,
    pub feasible_offers: Vec<OfferId>,
}

async fn show_case(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    s.read(|p| {
        let case = p.state().case(&id.as_str().into())?.clone();
        let feasible_offers = case
            .offers
            .iter()
            .filter(|o| is_feasible(&case.request.constraints, o))
            .map(|o| o.offer_id.clone())
            .collect();
        Ok(CaseView { recommendation: case.recommendation(), feasible_offers, case })
    })
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    since: Option<u64>,
    wait_ms: Option<u64>,
}

/// Records with `seq >= since`; `next_seq` is the cursor for the next poll.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPage {
    pub events: Vec<EventRecord>,
    pub next_seq: u64,
}

async fn list_events(State(s): State<Arc<AppState>>, Query(q): Query<EventsQuery>) -> Response {
    let since = q.since.unwrap_or(0);
    if let Some(ms) = q.wait_ms.filter(|ms| *ms > 0) {
        let mut rx = s.next_seq.subscribe();
        let wait = Duration::from_millis(ms).min(MAX_WAIT);
        // a timeout just returns the (empty) page
        let _ = tokio::time::timeout(wait, rx.wait_for(|next| *next > since)).await;
    }
    s.read(|p| {
        let records = p.sink().records();
        let from = (since as usize).min(records.len());
        Ok(EventPage { events: records[from..].to_vec(), next_seq: records.len() as u64 })
    })
}

#[derive(Debug, Clone, Default, Deserialize)]
struct TickBody {
    /// Days to advance in sim mode; defaults to one.
    days: Option<u32>,
}

async fn tick(State(s): State<Arc<AppState>>, headers: HeaderMap, body: Option<Json<TickBody>>) -> Response {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let mode = s.time_mode;
    s.mutate(&headers, "POST /api/sim/tick".into(), StatusCode::OK, |p| {
        if mode == TimeMode::Sim {
            let to = p.clock().plus(body.days.unwrap_or(1));
            p.advance_clock(to)?;
        } else if body.days.is_some() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "LiveClock",
                "the clock follows the wall clock in live mode",
            ));
        }
        let activity = p.run_agent_day(&OpenGate)?;
        Ok(json!({ "day": p.clock(), "activity": activity }))
    })
}
