//! HTTP front end for retargeting sessions.
//!
//! | method | path                   | body                                   |
//! |--------|------------------------|----------------------------------------|
//! | GET    | `/models`              |                                        |
//! | POST   | `/session`             | `{"master", "slave", "method"}`        |
//! | POST   | `/session/{id}/pose`   | `{"angles": [...]}`                    |
//! | POST   | `/session/{id}/method` | `{"method"}`                           |
//! | POST   | `/calibrate`           | `{"model", "calibration"}`             |
//!
//! `calibration` is either a calibration file's TOML text or the same
//! structure as a JSON object.

mod error;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use telemap_core::baseline::FingertipReport;
use telemap_core::calibration::CalibrationReport;
use telemap_core::{calibrate, AxisAssignment, CalibrationSet, Catalog, HandModel, Method, SubspacePoint};

pub use error::ApiError;
pub use session::{Session, SessionStore, DEFAULT_IDLE_TIMEOUT};

#[derive(Clone)]
pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub sessions: Arc<SessionStore>,
}

impl AppState {
    pub fn new(catalog: Catalog) -> Self {
        Self::with_idle_timeout(catalog, DEFAULT_IDLE_TIMEOUT)
    }

    pub fn with_idle_timeout(catalog: Catalog, idle_timeout: Duration) -> Self {
        AppState {
            catalog: Arc::new(catalog),
            sessions: Arc::new(SessionStore::new(idle_timeout)),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", get(list_models))
        .route("/session", post(create_session))
        .route("/session/{id}/pose", post(submit_pose))
        .route("/session/{id}/method", post(select_method))
        .route("/calibrate", post(calibrate_model))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub axis: AxisAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerSummary {
    pub name: String,
    pub base_position: [f64; 3],
    /// `[w, x, y, z]`
    pub base_orientation: [f64; 4],
    pub joints: Vec<String>,
    pub link_lengths: Vec<f64>,
    pub adduction_joint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub joints: Vec<JointSummary>,
    pub fingers: Vec<FingerSummary>,
    pub origin_pose: Vec<f64>,
}

impl ModelSummary {
    pub fn of(model: &HandModel) -> Self {
        let name = |i: usize| model.joints[i].name.clone();
        ModelSummary {
            name: model.name.clone(),
            joints: model
                .joints
                .iter()
                .map(|j| JointSummary {
                    name: j.name.clone(),
                    min: j.min_angle,
                    max: j.max_angle,
                    axis: j.axis_assignment,
                })
                .collect(),
            fingers: model
                .fingers
                .iter()
                .map(|f| {
                    let q = f.base_orientation;
                    FingerSummary {
                        name: f.name.clone(),
                        base_position: f.base_position.into(),
                        base_orientation: [q.w, q.i, q.j, q.k],
                        joints: f.joint_indices.iter().map(|&i| name(i)).collect(),
                        link_lengths: f.link_lengths.clone(),
                        adduction_joint: f.adduction_joint_index.map(name),
                    }
                })
                .collect(),
            origin_pose: model.origin_pose.to_vec(),
        }
    }
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<ModelSummary>> {
    Json(state.catalog.models().map(|m| ModelSummary::of(m)).collect())
}

#[derive(Debug, Deserialize)]
pub struct SessionRequest {
    pub master: String,
    pub slave: String,
    #[serde(default = "default_method")]
    pub method: Method,
}

fn default_method() -> Method {
    Method::Subspace
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: Uuid,
    pub method: Method,
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<SessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let Json(req) = body?;
    for name in [&req.master, &req.slave] {
        state.catalog.model(name).map_err(|e| ApiError::not_found(e.to_string()))?;
    }
    let retargeter = state.catalog.retargeter(&req.master, &req.slave)?;
    let session = Session::new(retargeter, req.method)?;
    let id = state.sessions.insert(session);
    Ok((StatusCode::CREATED, Json(SessionCreated { id, method: req.method })))
}

fn find_session(state: &AppState, id: &str) -> Result<Arc<std::sync::Mutex<Session>>, ApiError> {
    Uuid::parse_str(id)
        .ok()
        .and_then(|id| state.sessions.get(id))
        .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
}

#[derive(Debug, Deserialize)]
pub struct PoseRequest {
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingertip {
    pub finger: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingertips {
    pub master: Vec<Fingertip>,
    pub slave: Vec<Fingertip>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseResponse {
    pub method: Method,
    pub slave: Vec<f64>,
    pub t: SubspacePoint,
    pub fingertips: Fingertips,
    /// Present for the fingertip method only.
    pub convergence: Option<FingertipReport>,
}

fn fingertips(model: &HandModel, pose: &[f64]) -> telemap_core::Result<Vec<Fingertip>> {
    Ok(model
        .fingertips(pose)?
        .into_iter()
        .map(|(finger, p)| Fingertip {
            finger,
            position: p.into(),
        })
        .collect())
}

async fn submit_pose(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PoseRequest>, JsonRejection>,
) -> Result<Json<PoseResponse>, ApiError> {
    let session = find_session(&state, &id)?;
    let Json(req) = body?;
    let mut s = session.lock().unwrap();
    let out = s.retargeter.retarget(s.method, &req.angles, &s.last_slave)?;
    let response = PoseResponse {
        method: s.method,
        t: out.subspace,
        fingertips: Fingertips {
            master: fingertips(&s.retargeter.master, &req.angles)?,
            slave: fingertips(&s.retargeter.slave, &out.slave)?,
        },
        slave: out.slave.to_vec(),
        convergence: out.fingertip,
    };
    s.last_master = req.angles.into();
    s.last_slave = out.slave;
    Ok(Json(response))
}

#[derive(Debug, Deserialize)]
pub struct MethodRequest {
    pub method: Method,
}

async fn select_method(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<MethodRequest>, JsonRejection>,
) -> Result<Json<SessionCreated>, ApiError> {
    let session = find_session(&state, &id)?;
    let Json(req) = body?;
    let mut s = session.lock().unwrap();
    s.retargeter.supports(req.method)?;
    s.method = req.method;
    Ok(Json(SessionCreated {
        id: Uuid::parse_str(&id).expect("found above"),
        method: req.method,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CalibrationInput {
    Text(String),
    Set(CalibrationSet),
}

#[derive(Debug, Deserialize)]
pub struct CalibrateRequest {
    pub model: String,
    pub calibration: CalibrationInput,
}

#[derive(Debug, Serialize)]
pub struct CalibrateResponse {
    /// Mapping file contents, identical to what the library writes.
    pub mapping: String,
    pub report: CalibrationReport,
}

async fn calibrate_model(
    State(state): State<AppState>,
    body: Result<Json<CalibrateRequest>, JsonRejection>,
) -> Result<Json<CalibrateResponse>, ApiError> {
    let Json(req) = body?;
    let model = state.catalog.model(&req.model).map_err(|e| ApiError::not_found(e.to_string()))?;
    let set = match req.calibration {
        CalibrationInput::Text(text) => CalibrationSet::from_toml_str(&text, "request")?,
        CalibrationInput::Set(set) => set,
    };
    let cal = calibrate(&model, &set)?;
    Ok(Json(CalibrateResponse {
        mapping: cal.mapping.to_toml_string()?,
        report: cal.report,
    }))
}
