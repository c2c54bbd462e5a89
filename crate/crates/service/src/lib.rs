//! HTTP + JSON session service with a server-sent event stream per session.
//!
//! Routes:
//!
//! | method | path | result |
//! |---|---|---|
//! | GET | `/api/maps` | bundled maps with render geometry |
//! | POST | `/api/sessions` | 201, new session summary |
//! | GET | `/api/sessions/{id}` | snapshot |
//! | POST | `/api/sessions/{id}/heading` | belief summary after the heading |
//! | POST | `/api/sessions/{id}/step` | transition record |
//! | DELETE | `/api/sessions/{id}` | 204 |
//! | GET | `/api/sessions/{id}/events` | event stream, backlog first |
//!
//! Payloads are described by `docs/api.schema.json` at the repository root.

mod error;
mod session;

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use prefnav_core::geometry::{CellId, Point};
use prefnav_core::intent::BeliefSummary;
use prefnav_core::worldgraph::{GridPos, World, WorldError, BUNDLED_MAPS};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

pub use error::{ApiError, ErrorBody};
pub use session::{
    fold_events, CreateSession, HeadingEvent, LastTiming, Overrides, Session, SessionEvent,
    Snapshot, Status, StepEvent,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeView {
    pub id: CellId,
    pub key: String,
    /// Counter-clockwise vertex loop in world coordinates.
    pub outline: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub cell_size: f64,
    pub polytopes: Vec<PolytopeView>,
    pub obstacles: Vec<Vec<Point>>,
    /// Undirected adjacency, smaller id first.
    pub edges: Vec<[CellId; 2]>,
    pub blocked: Vec<GridPos>,
    pub start: GridPos,
    pub goal_candidates: Vec<GridPos>,
}

impl MapView {
    pub fn of(world: &World) -> Self {
        let cells = world.arrangement.cells();
        Self {
            id: world.name.clone(),
            width: world.map.width,
            height: world.map.height,
            cell_size: world.map.cell_size,
            polytopes: world
                .graph
                .vertices()
                .iter()
                .map(|&v| PolytopeView {
                    id: v,
                    key: world.vertex_key(v),
                    outline: cells[v.index()].polygon.clone(),
                })
                .collect(),
            obstacles: cells
                .iter()
                .filter(|c| c.is_obstacle)
                .map(|c| c.polygon.clone())
                .collect(),
            edges: world.graph.edges().iter().map(|e| [e.a, e.b]).collect(),
            blocked: (0..world.map.num_cells())
                .filter(|&i| world.map.blocked[i])
                .map(|i| world.map.pos(i))
                .collect(),
            start: world.map.start,
            goal_candidates: world.map.goal_candidates.clone(),
        }
    }
}

/// Response to session creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub map: MapView,
    pub start: GridPos,
    pub goals: Vec<GridPos>,
    pub true_goal: usize,
    pub auto_step_ms: Option<u64>,
    pub snapshot: Snapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingRequest {
    /// Radians, counter-clockwise from East.
    pub angle: f64,
}

struct Entry {
    session: Mutex<Session>,
    events: broadcast::Sender<SessionEvent>,
}

/// Shared state behind the router: loaded maps and live sessions. Each
/// session has its own lock, so sessions never wait on one another.
pub struct SessionManager {
    worlds: Vec<Arc<World>>,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
}

impl SessionManager {
    pub fn new(worlds: Vec<World>) -> Self {
        Self {
            worlds: worlds.into_iter().map(Arc::new).collect(),
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn bundled() -> Result<Self, WorldError> {
        let worlds = BUNDLED_MAPS
            .iter()
            .map(|(name, _)| prefnav_core::worldgraph::load_bundled(name))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(worlds))
    }

    pub fn maps(&self) -> Vec<MapView> {
        self.worlds.iter().map(|w| MapView::of(w)).collect()
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session {id:?}")))
    }

    pub fn create(&self, mut request: CreateSession) -> Result<SessionSummary, ApiError> {
        let world = self
            .worlds
            .iter()
            .find(|w| w.name == request.map_id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no map {:?}", request.map_id)))?;
        request.overrides.seed.get_or_insert_with(rand::random);
        let mut sessions = self.sessions.write().expect("session table poisoned");
        let id = loop {
            let id = format!("{:016x}", rand::random::<u64>());
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let session = Session::new(id.clone(), world.clone(), request)?;
        let summary = SessionSummary {
            id: id.clone(),
            map: MapView::of(&world),
            start: session.instance().start,
            goals: session.instance().goals.clone(),
            true_goal: session.instance().true_goal,
            auto_step_ms: session.request().overrides.auto_step_ms,
            snapshot: session.snapshot(),
        };
        let (events, _) = broadcast::channel(1024);
        sessions.insert(
            id,
            Arc::new(Entry {
                session: Mutex::new(session),
                events,
            }),
        );
        Ok(summary)
    }

    pub fn snapshot(&self, id: &str) -> Result<Snapshot, ApiError> {
        Ok(self
            .entry(id)?
            .session
            .lock()
            .expect("session poisoned")
            .snapshot())
    }

    pub fn log(&self, id: &str) -> Result<Vec<SessionEvent>, ApiError> {
        Ok(self
            .entry(id)?
            .session
            .lock()
            .expect("session poisoned")
            .log()
            .to_vec())
    }

    pub fn heading(&self, id: &str, angle: f64) -> Result<BeliefSummary, ApiError> {
        let entry = self.entry(id)?;
        let mut session = entry.session.lock().expect("session poisoned");
        let event = session.post_heading(angle)?;
        let _ = entry.events.send(SessionEvent::Heading(event.clone()));
        Ok(event.belief)
    }

    pub fn step(&self, id: &str) -> Result<StepEvent, ApiError> {
        let entry = self.entry(id)?;
        let mut session = entry.session.lock().expect("session poisoned");
        let event = session.step()?;
        let _ = entry.events.send(SessionEvent::Step(event.clone()));
        Ok(event)
    }

    pub fn delete(&self, id: &str) -> Result<(), ApiError> {
        self.sessions
            .write()
            .expect("session table poisoned")
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ApiError::NotFound(format!("no session {id:?}")))
    }

    /// Events recorded so far plus a receiver for later ones, taken under
    /// the session lock so nothing falls between the two.
    pub fn subscribe(
        &self,
        id: &str,
    ) -> Result<(Vec<SessionEvent>, broadcast::Receiver<SessionEvent>), ApiError> {
        let entry = self.entry(id)?;
        let session = entry.session.lock().expect("session poisoned");
        Ok((session.log().to_vec(), entry.events.subscribe()))
    }
}

type AppState = Arc<SessionManager>;

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/api/maps", get(list_maps))
        .route("/api/sessions", post(create_session))
        .route(
            "/api/sessions/{id}",
            get(get_session).delete(delete_session),
        )
        .route("/api/sessions/{id}/heading", post(post_heading))
        .route("/api/sessions/{id}/step", post(post_step))
        .route("/api/sessions/{id}/events", get(events))
        .with_state(manager)
}

/// Runs the service until the listener fails.
pub async fn serve(
    manager: Arc<SessionManager>,
    listener: tokio::net::TcpListener,
) -> std::io::Result<()> {
    axum::serve(listener, router(manager)).await
}

async fn list_maps(State(m): State<AppState>) -> Json<Vec<MapView>> {
    Json(m.maps())
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn create_session(
    State(m): State<AppState>,
    Json(request): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let summary = {
        let m = m.clone();
        blocking(move || m.create(request)).await?
    };
    if let Some(ms) = summary.auto_step_ms {
        tokio::spawn(auto_step(m, summary.id.clone(), Duration::from_millis(ms)));
    }
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn auto_step(m: AppState, id: String, every: Duration) {
    let mut tick = tokio::time::interval(every);
    tick.tick().await;
    loop {
        tick.tick().await;
        let m = m.clone();
        let id = id.clone();
        match blocking(move || m.step(&id)).await {
            Ok(e) if !e.status.is_terminal() => {}
            Ok(_) => break,
            Err(e) => {
                log::debug!("auto-step stopped: {e}");
                break;
            }
        }
    }
}

async fn get_session(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Snapshot>, ApiError> {
    m.snapshot(&id).map(Json)
}

async fn delete_session(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    m.delete(&id).map(|_| StatusCode::NO_CONTENT)
}

async fn post_heading(
    State(m): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<HeadingRequest>,
) -> Result<Json<BeliefSummary>, ApiError> {
    blocking(move || m.heading(&id, body.angle)).await.map(Json)
}

async fn post_step(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<StepEvent>, ApiError> {
    blocking(move || m.step(&id)).await.map(Json)
}

fn sse_event(e: &SessionEvent) -> Event {
    let name = match e {
        SessionEvent::Heading(_) => "heading",
        SessionEvent::Step(_) => "step",
    };
    Event::default()
        .event(name)
        .id(e.seq().to_string())
        .data(serde_json::to_string(e).expect("events serialize"))
}

/// Replays the backlog, then forwards live events. The stream ends after
/// a terminal step or when the session is deleted.
async fn events(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let (backlog, rx) = m.subscribe(&id)?;
    let done = backlog.iter().any(SessionEvent::is_terminal);
    let next_seq = backlog.len() as u64;
    let live = stream::unfold((rx, done, next_seq), |(mut rx, done, next)| async move {
        if done {
            return None;
        }
        loop {
            match rx.recv().await {
                Ok(e) if e.seq() < next => continue,
                Ok(e) => {
                    let done = e.is_terminal();
                    return Some((e.clone(), (rx, done, e.seq() + 1)));
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    log::warn!("event subscriber lagged by {n}");
                    continue;
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let stream = stream::iter(backlog).chain(live).map(|e| Ok(sse_event(&e)));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
