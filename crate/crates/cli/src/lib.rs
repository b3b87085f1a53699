//! Command dispatch, exit codes and the read-only HTTP service.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use flowforge::geometry::{read_mesh, Mesh};
use flowforge::mco::{navigate, Navigation, ParetoFront};
use flowforge::pipeline::FRONT_FILE;
use flowforge::Error;
use serde::Serialize;
use tower_http::cors::CorsLayer;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Exit status for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Geometry(_) | Error::Parse { .. } | Error::Json(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Everything the service answers from, loaded once at startup.
pub struct FrontService {
    /// The persisted document as read from disk.
    raw: String,
    front: ParetoFront,
    dir: PathBuf,
}

impl FrontService {
    /// Loads `front.json` from `dir`. Shapes are read on request.
    pub fn load(dir: &Path) -> flowforge::Result<Self> {
        let path = dir.join(FRONT_FILE);
        let raw = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let front = ParetoFront::from_json(&raw)?;
        Ok(Self {
            raw,
            front,
            dir: dir.to_path_buf(),
        })
    }

    pub fn front(&self) -> &ParetoFront {
        &self.front
    }
}

#[derive(Serialize)]
struct ApiError {
    error: String,
}

fn fail(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ApiError { error: msg.into() })).into_response()
}

#[derive(Serialize)]
pub struct ShapeView {
    pub id: usize,
    pub lambda: Vec<f64>,
    pub costs_raw: Vec<f64>,
    pub costs_normalized: Vec<f64>,
    pub weight_adjusted: bool,
    pub unsupported: bool,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Per-triangle region label: 0 distributor, k ≥ 1 channel k.
    pub labels: Vec<i32>,
    /// Velocity magnitude per node [m/s].
    pub speed: Vec<f64>,
    /// Approximate per-channel flow rate of the stored state [m³/s].
    pub flow_rates: Vec<f64>,
}

/// Router of the navigator endpoints: `/health`, `/front`,
/// `/navigate?j1=&j2=&j3=` and `/shape/{id}`. All handlers only read.
pub fn router(service: Arc<FrontService>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/front", get(front))
        .route("/navigate", get(navigate_handler))
        .route("/shape/{id}", get(shape))
        .layer(CorsLayer::permissive())
        .with_state(service)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn front(State(s): State<Arc<FrontService>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], s.raw.clone()).into_response()
}

/// Parses `j1`, `j2`, ... into one optional bound per objective.
pub fn parse_bounds(query: &HashMap<String, String>, dim: usize) -> Result<Vec<Option<f64>>, String> {
    let mut bounds = vec![None; dim];
    for (k, v) in query {
        let i = k
            .strip_prefix('j')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| (1..=dim).contains(&n))
            .ok_or_else(|| format!("unknown parameter {k:?}"))?;
        if v.is_empty() {
            continue;
        }
        let b: f64 = v.parse().map_err(|_| format!("{k} is not a number: {v:?}"))?;
        if !b.is_finite() {
            return Err(format!("{k} must be finite"));
        }
        bounds[i - 1] = Some(b);
    }
    Ok(bounds)
}

async fn navigate_handler(
    State(s): State<Arc<FrontService>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Navigation>, Response> {
    if s.front.points.is_empty() {
        return Err(fail(StatusCode::CONFLICT, "the front has no points"));
    }
    let bounds = parse_bounds(&q, s.front.dim()).map_err(|m| fail(StatusCode::BAD_REQUEST, m))?;
    Ok(Json(navigate(&s.front, &bounds)))
}

struct StoredShape {
    mesh: Mesh,
    speed: Vec<f64>,
    velocity: Vec<[f64; 2]>,
}

fn load_shape(dir: &Path, file: &str) -> Result<StoredShape, String> {
    // the front names files inside its own directory only
    if file.is_empty() || file.contains(['/', '\\']) || file.starts_with('.') {
        return Err(format!("refusing shape file name {file:?}"));
    }
    let f = std::fs::File::open(dir.join(file)).map_err(|e| format!("{file}: {e}"))?;
    let m = read_mesh(std::io::BufReader::new(f)).map_err(|e| format!("{file}: {e}"))?;
    let fields = m.fields.ok_or_else(|| format!("{file} has no state fields"))?;
    let col = |name: &str| fields.column(name).ok_or_else(|| format!("{file} has no {name} field"));
    let (ux, uy, speed) = (col("ux")?, col("uy")?, col("speed")?);
    Ok(StoredShape {
        velocity: ux.into_iter().zip(uy).map(|(x, y)| [x, y]).collect(),
        mesh: m.mesh,
        speed,
    })
}

/// Flow through each channel mouth from the stored vertex velocities,
/// trapezoidal across the mouth nodes. A preview number that runs low by
/// 10 to 15 % on coarse meshes; the diagnostics CSV has the consistent values.
fn mouth_flow_rates(mesh: &Mesh, velocity: &[[f64; 2]]) -> Vec<f64> {
    let depth = mesh.effective_depth();
    let tol = 1e-9 * mesh.size();
    mesh.channels
        .iter()
        .map(|c| {
            let a = mesh.nodes[c.up_a];
            let b = mesh.nodes[c.up_b];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let mut on: Vec<(f64, usize)> = (0..mesh.n_nodes())
                .filter_map(|n| {
                    let p = mesh.nodes[n];
                    let (rx, ry) = (p[0] - a[0], p[1] - a[1]);
                    let off = (rx * dy - ry * dx).abs() / len;
                    let t = (rx * dx + ry * dy) / len;
                    (off <= tol && t >= -tol && t <= len + tol).then_some((t, n))
                })
                .collect();
            on.sort_by(|p, q| p.0.total_cmp(&q.0));
            let axial = |n: usize| velocity[n][0] * c.axis[0] + velocity[n][1] * c.axis[1];
            let sum: f64 = on.windows(2).map(|w| 0.5 * (axial(w[0].1) + axial(w[1].1)) * (w[1].0 - w[0].0)).sum();
            sum * depth
        })
        .collect()
}

async fn shape(State(s): State<Arc<FrontService>>, UrlPath(id): UrlPath<usize>) -> Result<Json<ShapeView>, Response> {
    let p = s
        .front
        .points
        .get(id)
        .ok_or_else(|| fail(StatusCode::NOT_FOUND, format!("no point {id}")))?;
    let file = p
        .mesh_file
        .clone()
        .ok_or_else(|| fail(StatusCode::NOT_FOUND, format!("point {id} has no stored shape")))?;
    let dir = s.dir.clone();
    let stored = tokio::task::spawn_blocking(move || load_shape(&dir, &file))
        .await
        .map_err(|e| fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|m| fail(StatusCode::NOT_FOUND, m))?;
    Ok(Json(ShapeView {
        id,
        lambda: p.lambda.clone(),
        costs_raw: p.costs_raw.clone(),
        costs_normalized: p.costs_normalized.clone(),
        weight_adjusted: p.weight_adjusted,
        unsupported: p.unsupported,
        flow_rates: mouth_flow_rates(&stored.mesh, &stored.velocity),
        nodes: stored.mesh.nodes,
        triangles: stored.mesh.triangles,
        labels: stored.mesh.labels,
        speed: stored.speed,
    }))
}

/// Serves the front in `dir` on `addr` until the process ends.
pub async fn serve(dir: &Path, addr: SocketAddr) -> flowforge::Result<()> {
    let service = Arc::new(FrontService::load(dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("serving {} on http://{}", dir.join(FRONT_FILE).display(), listener.local_addr()?);
    axum::serve(listener, router(service)).await?;
    Ok(())
}
