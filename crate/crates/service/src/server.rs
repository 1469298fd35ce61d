//! Read-only HTTP service over a loaded workspace.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::Serialize;

use happypath_core::artifacts::{to_json, Workspace};
use happypath_core::perception::{FieldSet, ScoringCurve};
use happypath_core::route_engine::RoutingGraph;

use crate::geojson::{cells_response, parse_point, parse_qualities, parse_variants, route_response, RouteRequest};
use crate::AppError;

pub const HOST_ENV: &str = "HAPPYPATH_HOST";
pub const PORT_ENV: &str = "HAPPYPATH_PORT";

const GEOJSON: &str = "application/geo+json";
const JSON: &str = "application/json";

#[derive(Debug)]
pub struct AppState {
    pub workspace: Workspace,
}

#[derive(Serialize)]
struct Health<'a> {
    status: &'static str,
    graph_fingerprint: &'a str,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

fn json_response<T: Serialize>(status: StatusCode, content_type: &'static str, body: &T) -> Response {
    (status, [(header::CONTENT_TYPE, content_type)], to_json(body)).into_response()
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = if self.is_client_error() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        json_response(
            status,
            JSON,
            &ErrorBody {
                error: ErrorDetail {
                    code: self.code,
                    message: &self.message,
                },
            },
        )
    }
}

pub fn router(workspace: Workspace) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/cells", get(cells))
        .route("/route", get(route))
        .with_state(Arc::new(AppState { workspace }))
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    json_response(
        StatusCode::OK,
        JSON,
        &Health {
            status: "ok",
            graph_fingerprint: &state.workspace.fingerprint,
        },
    )
}

fn curve_fields(ws: &Workspace, curve: Option<&String>) -> Result<(ScoringCurve, FieldSet), AppError> {
    let curve = match curve {
        Some(c) => c.parse::<ScoringCurve>()?,
        None => ws.config.curve,
    };
    Ok((curve, ws.fields.with_curve(curve)?))
}

fn cells_body(ws: &Workspace, params: &HashMap<String, String>) -> Result<Response, AppError> {
    let qualities = parse_qualities(params.get("quality").map_or("all", String::as_str))?;
    let (curve, fields) = curve_fields(ws, params.get("curve"))?;
    let body = cells_response(&ws.graph, &ws.fingerprint, &fields, curve, &qualities);
    Ok(json_response(StatusCode::OK, GEOJSON, &body))
}

async fn cells(State(state): State<Arc<AppState>>, Query(params): Query<HashMap<String, String>>) -> Response {
    cells_body(&state.workspace, &params).unwrap_or_else(IntoResponse::into_response)
}

fn required<'a>(params: &'a HashMap<String, String>, key: &str) -> Result<&'a str, AppError> {
    params
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| AppError::new("BAD_COORDINATES", format!("missing parameter {key}")))
}

pub fn route_body(ws: &Workspace, params: &HashMap<String, String>) -> Result<Response, AppError> {
    let from = parse_point(required(params, "from")?)?;
    let to = parse_point(required(params, "to")?)?;
    let variants = parse_variants(params.get("quality").map_or("all", String::as_str))?;
    let (curve, fields) = curve_fields(ws, params.get("curve"))?;
    let mut policy = ws.config.policy;
    if let Some(s) = params.get("simple") {
        policy.simple_paths_only = match s.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(AppError::new("BAD_PARAMETER", format!("simple must be true or false, got {s:?}"))),
        };
    }
    let routing = RoutingGraph::new(&ws.graph);
    let req = RouteRequest {
        from,
        to,
        variants,
        policy,
    };
    let body = route_response(&routing, &ws.fingerprint, &fields, curve, &req)?;
    Ok(json_response(StatusCode::OK, GEOJSON, &body))
}

async fn route(State(state): State<Arc<AppState>>, Query(params): Query<HashMap<String, String>>) -> Response {
    // route search is CPU-bound
    tokio::task::spawn_blocking(move || route_body(&state.workspace, &params).unwrap_or_else(IntoResponse::into_response))
        .await
        .unwrap_or_else(|e| AppError::new("INTERNAL", e.to_string()).into_response())
}

/// Host and port from the config, overridden by the environment.
pub fn bind_address(ws: &Workspace) -> Result<String, AppError> {
    let host = std::env::var(HOST_ENV).unwrap_or_else(|_| ws.config.host.clone());
    let port = match std::env::var(PORT_ENV) {
        Ok(p) => p
            .parse::<u16>()
            .map_err(|_| AppError::new("BAD_PARAMETER", format!("{PORT_ENV}={p:?} is not a port")))?,
        Err(_) => ws.config.port,
    };
    Ok(format!("{host}:{port}"))
}

pub async fn serve(workspace: Workspace, addr: &str) -> Result<(), AppError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::new("IO", format!("bind {addr}: {e}")))?;
    let local: SocketAddr = listener.local_addr().map_err(|e| AppError::new("IO", e.to_string()))?;
    eprintln!("listening on http://{local}");
    axum::serve(listener, router(workspace))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::new("IO", e.to_string()))
}
