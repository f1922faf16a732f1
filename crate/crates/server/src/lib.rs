//! Live game sessions over HTTP.
//!
//! Every session records its steps in the same JSON Lines format as agent
//! trajectories (with `source: "human"`), so session logs feed the analytics
//! unchanged. Sessions are written to disk after every action and reloaded on
//! startup.
//!
//! Routes, all under `/v1`:
//!
//! | method | path                        | body               |
//! |--------|-----------------------------|--------------------|
//! | GET    | `/worlds`                   |                    |
//! | POST   | `/sessions`                 | `{world, seed?}`   |
//! | GET    | `/sessions/{id}`            |                    |
//! | POST   | `/sessions/{id}/action`     | `{index, step?}`   |
//! | GET    | `/sessions/{id}/trajectory` |                    |
//!
//! `step` on an action is the step count the client last saw; a mismatch is
//! answered with 409 so duplicate or racing submissions apply at most once.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use panda_core::text::text_hash;
use panda_core::world::{Engine, GameState, Observation, WorldSpec};
use panda_core::{Source, StepRecord, Trajectory};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::CorsLayer;

pub const DEFAULT_ACTION_CAP: u32 = 100;
pub const SESSIONS_DIR: &str = "sessions";
const META_FILE: &str = "session.json";
const TRAJECTORY_FILE: &str = "trajectory.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` is finished")]
    Finished(String),
    #[error("stale step: client saw {client}, session is at {current}")]
    StaleStep { client: u32, current: u32 },
    #[error("action index {index} out of range for {count} candidates")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("server error: {0}")]
    Serve(#[from] std::io::Error),
    #[error("storage error at {path}: {message}")]
    Storage { path: PathBuf, message: String },
}

impl ServiceError {
    fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownWorld(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Finished(_) | ServiceError::StaleStep { .. } => StatusCode::CONFLICT,
            ServiceError::IndexOutOfRange { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage { .. } | ServiceError::Serve(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn storage(path: &Path, e: impl std::fmt::Display) -> Self {
        ServiceError::Storage {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Finished,
}

/// On-disk session state. The trajectory lives next to it as JSON Lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    id: String,
    world: String,
    seed: u64,
    status: Status,
    created: u64,
    updated: u64,
    state: GameState,
    observation: Observation,
}

struct Session {
    meta: Meta,
    trajectory: Trajectory,
    dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub world: String,
    pub status: Status,
    pub step: u32,
    pub score: i64,
    pub observation: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionReply {
    pub observation: String,
    pub candidates: Vec<String>,
    pub reward: i64,
    pub score: i64,
    pub step: u32,
    pub done: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldInfo {
    pub id: String,
    pub places: usize,
    pub max_score: i64,
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub world: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
pub struct ActionRequest {
    pub index: usize,
    #[serde(default)]
    pub step: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub worlds: Vec<WorldSpec>,
    pub data_dir: PathBuf,
    pub action_cap: u32,
}

impl ServiceConfig {
    pub fn new(worlds: Vec<WorldSpec>, data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            worlds,
            data_dir: data_dir.into(),
            action_cap: DEFAULT_ACTION_CAP,
        }
    }
}

pub struct AppState {
    worlds: BTreeMap<String, WorldSpec>,
    root: PathBuf,
    cap: u32,
    sessions: std::sync::Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl AppState {
    /// Loads any sessions persisted under `data_dir`.
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let root = config.data_dir.join(SESSIONS_DIR);
        fs::create_dir_all(&root).map_err(|e| ServiceError::storage(&root, e))?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&root).map_err(|e| ServiceError::storage(&root, e))? {
            let dir = entry.map_err(|e| ServiceError::storage(&root, e))?.path();
            if dir.join(META_FILE).is_file() {
                let s = load_session(&dir)?;
                sessions.insert(s.meta.id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(Arc::new(AppState {
            worlds: config.worlds.into_iter().map(|w| (w.id.clone(), w)).collect(),
            root,
            cap: config.action_cap,
            sessions: std::sync::Mutex::new(sessions),
        }))
    }

    fn world(&self, id: &str) -> Result<&WorldSpec, ServiceError> {
        self.worlds.get(id).ok_or_else(|| ServiceError::UnknownWorld(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create(&self, world: &str, seed: u64) -> Result<SessionView, ServiceError> {
        let spec = self.world(world)?;
        let (state, observation) = Engine::new(spec, self.cap).reset(seed);
        let id = uuid::Uuid::new_v4().simple().to_string();
        let t = now();
        let session = Session {
            meta: Meta {
                id: id.clone(),
                world: world.to_string(),
                seed,
                status: if observation.candidates.is_empty() { Status::Finished } else { Status::Active },
                created: t,
                updated: t,
                state,
                observation,
            },
            trajectory: Trajectory::new(),
            dir: self.root.join(&id),
        };
        fs::create_dir_all(&session.dir).map_err(|e| ServiceError::storage(&session.dir, e))?;
        let traj = session.dir.join(TRAJECTORY_FILE);
        fs::File::create(&traj).map_err(|e| ServiceError::storage(&traj, e))?;
        write_meta(&session)?;
        let view = view(&session);
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub async fn get(&self, id: &str) -> Result<SessionView, ServiceError> {
        let s = self.session(id)?;
        let s = s.lock().await;
        Ok(view(&s))
    }

    pub async fn act(&self, id: &str, req: &ActionRequest) -> Result<ActionReply, ServiceError> {
        let handle = self.session(id)?;
        let mut s = handle.lock().await;
        if s.meta.status == Status::Finished {
            return Err(ServiceError::Finished(id.to_string()));
        }
        let current = s.meta.state.step;
        if let Some(client) = req.step {
            if client != current {
                return Err(ServiceError::StaleStep { client, current });
            }
        }
        let count = s.meta.observation.candidates.len();
        if req.index >= count {
            return Err(ServiceError::IndexOutOfRange { index: req.index, count });
        }
        let spec = self.world(&s.meta.world)?;
        let obs = s.meta.observation.clone();
        let out = Engine::new(spec, self.cap).step(&s.meta.state, &obs.candidates[req.index]);
        let record = StepRecord {
            t: out.state.step,
            place: out.state.place.clone(),
            obs_hash: text_hash(&obs.text),
            obs: obs.text,
            candidates: obs.candidates,
            chosen: req.index,
            valences: BTreeMap::new(),
            reward: out.reward,
            score: out.state.score,
            source: Source::Human,
        };
        append_record(&s.dir, &record)?;
        s.trajectory.push(record);
        s.meta.state = out.state;
        s.meta.observation = out.observation;
        s.meta.updated = now();
        if out.done {
            s.meta.status = Status::Finished;
        }
        write_meta(&s)?;
        Ok(ActionReply {
            observation: s.meta.observation.text.clone(),
            candidates: s.meta.observation.candidates.clone(),
            reward: out.reward,
            score: s.meta.state.score,
            step: s.meta.state.step,
            done: out.done,
        })
    }

    pub async fn trajectory(&self, id: &str) -> Result<Trajectory, ServiceError> {
        let s = self.session(id)?;
        let s = s.lock().await;
        Ok(s.trajectory.clone())
    }

    pub fn world_list(&self) -> Vec<WorldInfo> {
        self.worlds
            .values()
            .map(|w| WorldInfo {
                id: w.id.clone(),
                places: w.places.len(),
                max_score: w.max_score,
            })
            .collect()
    }
}

fn view(s: &Session) -> SessionView {
    SessionView {
        id: s.meta.id.clone(),
        world: s.meta.world.clone(),
        status: s.meta.status,
        step: s.meta.state.step,
        score: s.meta.state.score,
        observation: s.meta.observation.text.clone(),
        candidates: s.meta.observation.candidates.clone(),
    }
}

fn append_record(dir: &Path, record: &StepRecord) -> Result<(), ServiceError> {
    let path = dir.join(TRAJECTORY_FILE);
    let mut line = serde_json::to_string(record).map_err(|e| ServiceError::storage(&path, e))?;
    line.push('\n');
    let mut f = OpenOptions::new()
        .append(true)
        .create(true)
        .open(&path)
        .map_err(|e| ServiceError::storage(&path, e))?;
    f.write_all(line.as_bytes())
        .and_then(|_| f.sync_data())
        .map_err(|e| ServiceError::storage(&path, e))
}

/// Write-then-rename so a crash never leaves a half-written file.
fn write_meta(s: &Session) -> Result<(), ServiceError> {
    let path = s.dir.join(META_FILE);
    let tmp = s.dir.join(format!("{META_FILE}.tmp"));
    let text = serde_json::to_string_pretty(&s.meta).map_err(|e| ServiceError::storage(&path, e))?;
    fs::write(&tmp, text)
        .and_then(|_| fs::rename(&tmp, &path))
        .map_err(|e| ServiceError::storage(&path, e))
}

fn load_session(dir: &Path) -> Result<Session, ServiceError> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| ServiceError::storage(&path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| ServiceError::storage(&path, e))?;
    let tpath = dir.join(TRAJECTORY_FILE);
    let raw = match fs::read_to_string(&tpath) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(ServiceError::storage(&tpath, e)),
    };
    // drop a line cut short by a crash mid-append
    let complete = &raw[..raw.rfind('\n').map_or(0, |i| i + 1)];
    let mut trajectory = Trajectory::from_jsonl(complete).map_err(|e| ServiceError::storage(&tpath, e))?;
    // an append that landed after the last metadata write is rolled back
    trajectory.steps.retain(|r| r.t <= meta.state.step);
    Ok(Session {
        meta,
        trajectory,
        dir: dir.to_path_buf(),
    })
}

async fn list_worlds(State(app): State<Arc<AppState>>) -> Json<Vec<WorldInfo>> {
    Json(app.world_list())
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Json(req): Json<CreateRequest>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    Ok((StatusCode::CREATED, Json(app.create(&req.world, req.seed)?)))
}

async fn get_session(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(app.get(&id).await?))
}

async fn post_action(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ActionRequest>,
) -> Result<Json<ActionReply>, ServiceError> {
    Ok(Json(app.act(&id, &req).await?))
}

async fn get_trajectory(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ServiceError> {
    let t = app.trajectory(&id).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], t.to_jsonl()).into_response())
}

pub fn router(app: Arc<AppState>) -> Router {
    let v1 = Router::new()
        .route("/worlds", get(list_worlds))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/action", post(post_action))
        .route("/sessions/{id}/trajectory", get(get_trajectory));
    Router::new()
        .nest("/v1", v1)
        .layer(CorsLayer::permissive())
        .with_state(app)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, config: ServiceConfig) -> Result<(), ServiceError> {
    let app = AppState::open(config)?;
    axum::serve(listener, router(app)).await?;
    Ok(())
}
