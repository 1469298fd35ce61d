//! Demo workspace paths, in-process requests and golden files.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use happypath::server::router;
use happypath_core::artifacts::Workspace;

pub const EUSTON_SQUARE: &str = "51.5257,-0.1359";
pub const TATE_MODERN: &str = "51.5076,-0.0994";

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn demo_dir() -> PathBuf {
    repo_root().join("demo")
}

pub fn demo_workspace() -> Workspace {
    Workspace::load(&demo_dir().join("workspace.json")).expect("demo workspace loads")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// In-process GET against a fresh router.
pub async fn get(ws: Workspace, uri: &str) -> (StatusCode, String, String) {
    let resp = router(ws)
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, ctype, String::from_utf8(bytes.to_vec()).unwrap())
}

/// Compares `body` with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, body: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, body).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if want == body {
        Ok(())
    } else {
        Err(format!("{name}: response differs from golden file"))
    }
}

/// The golden queries: file name, request, expected status.
pub const GOLDEN: [(&str, &str, u16); 6] = [
    ("health.json", "/health", 200),
    (
        "route_all.json",
        "/route?from=51.5257,-0.1359&to=51.5076,-0.0994&quality=all",
        200,
    ),
    (
        "route_beauty_simple.json",
        "/route?from=51.5257,-0.1359&to=51.5076,-0.0994&quality=beauty&simple=true",
        200,
    ),
    (
        "route_same_cell.json",
        "/route?from=51.5257,-0.1359&to=51.5258,-0.1358&quality=all",
        200,
    ),
    (
        "route_out_of_bbox.json",
        "/route?from=52.0,-0.1359&to=51.5076,-0.0994&quality=all",
        400,
    ),
    (
        "route_bad_quality.json",
        "/route?from=51.5257,-0.1359&to=51.5076,-0.0994&quality=loud",
        400,
    ),
];
