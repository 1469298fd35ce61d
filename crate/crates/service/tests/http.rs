mod support;

use serde_json::Value;
use support::*;

use happypath_core::route_engine::{RouteVariant, RoutingGraph};
use happypath_core::Quality;

fn json(body: &str) -> Value {
    serde_json::from_str(body).unwrap()
}

#[tokio::test]
async fn golden_responses_are_byte_stable() {
    for (name, uri, status) in GOLDEN {
        let (s1, _, b1) = get(demo_workspace(), uri).await;
        let (s2, _, b2) = get(demo_workspace(), uri).await;
        assert_eq!(s1.as_u16(), status, "{uri}: {b1}");
        assert_eq!((s1, &b1), (s2, &b2), "{uri} is not deterministic");
        check_golden(name, &b1).unwrap();
    }
}

#[tokio::test]
async fn health_reports_the_graph_fingerprint() {
    let ws = demo_workspace();
    let fp = ws.fingerprint.clone();
    let (status, ctype, body) = get(ws, "/health").await;
    assert_eq!(status, 200);
    assert_eq!(ctype, "application/json");
    let v = json(&body);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["graph_fingerprint"], fp.as_str());
}

#[tokio::test]
async fn all_gives_four_linestrings_in_fixed_order() {
    let (status, ctype, body) = get(
        demo_workspace(),
        &format!("/route?from={EUSTON_SQUARE}&to={TATE_MODERN}&quality=all"),
    )
    .await;
    assert_eq!(status, 200);
    assert_eq!(ctype, "application/geo+json");
    let v = json(&body);
    assert_eq!(v["type"], "FeatureCollection");
    let feats = v["features"].as_array().unwrap();
    let names: Vec<&str> = feats.iter().map(|f| f["properties"]["quality"].as_str().unwrap()).collect();
    assert_eq!(names, ["shortest", "beauty", "quiet", "happy"]);
    let shortest = &feats[0]["properties"];
    for f in feats {
        assert_eq!(f["geometry"]["type"], "LineString");
        let p = &f["properties"];
        let len = p["length_m"].as_f64().unwrap();
        assert_eq!(p["walk_min"].as_f64().unwrap(), len / 80.0);
        assert!(p["delta_length_pct"].as_f64().unwrap() >= 0.0);
        let coords = f["geometry"]["coordinates"].as_array().unwrap();
        assert_eq!(coords.len(), p["cells"].as_array().unwrap().len());
        // lon first
        assert!(coords[0][0].as_f64().unwrap() < 0.0 && coords[0][1].as_f64().unwrap() > 51.0);
    }
    for (i, q) in ["beauty", "quiet", "happy"].iter().enumerate() {
        let own = feats[i + 1]["properties"]["avg_rank"][q].as_f64().unwrap();
        assert!(own <= shortest["avg_rank"][q].as_f64().unwrap());
    }
}

#[tokio::test]
async fn beauty_route_matches_the_router_directly() {
    let ws = demo_workspace();
    let routing = RoutingGraph::new(&ws.graph);
    let from = ws.graph.cell_of(51.5257, -0.1359).unwrap();
    let to = ws.graph.cell_of(51.5076, -0.0994).unwrap();
    let plan = routing
        .best_pleasant_path(&ws.fields.get(Quality::Beauty).rank, RouteVariant::Beauty, from, to, &ws.config.policy)
        .unwrap();
    let shortest = routing.shortest_path(from, to).unwrap();
    let (_, _, body) = get(ws, &format!("/route?from={EUSTON_SQUARE}&to={TATE_MODERN}&quality=beauty")).await;
    let v = json(&body);
    let feats = v["features"].as_array().unwrap();
    assert_eq!(feats.len(), 2);
    let cells: Vec<usize> = serde_json::from_value(feats[1]["properties"]["cells"].clone()).unwrap();
    assert_eq!(cells, plan.path.cells);
    assert_eq!(feats[1]["properties"]["paths_explored"], plan.paths_explored);
    let d = feats[1]["properties"]["delta_length_pct"].as_f64().unwrap();
    assert_eq!(d, 100.0 * (plan.path.length_m - shortest.length_m) / shortest.length_m);
    assert!(d >= 0.0);
}

#[tokio::test]
async fn same_cell_is_a_single_point() {
    let (status, _, body) = get(demo_workspace(), "/route?from=51.5257,-0.1359&to=51.5257,-0.1359&quality=beauty").await;
    assert_eq!(status, 200);
    let v = json(&body);
    let feats = v["features"].as_array().unwrap();
    assert_eq!(feats.len(), 1);
    assert_eq!(feats[0]["geometry"]["type"], "Point");
    assert_eq!(feats[0]["properties"]["length_m"], 0.0);
    assert_eq!(feats[0]["properties"]["paths_explored"], 1);
}

#[tokio::test]
async fn request_errors_carry_codes() {
    let cases = [
        ("/route?from=51.0,-0.1&to=51.5076,-0.0994", "OUT_OF_BBOX"),
        ("/route?from=51.5257,-0.1359&to=51.5076,0.5", "OUT_OF_BBOX"),
        ("/route?from=51.5257,-0.1359&to=51.5076,-0.0994&quality=noisy", "BAD_QUALITY"),
        ("/cells?quality=noisy", "BAD_QUALITY"),
        ("/route?from=51.5257,-0.1359&to=51.5076,-0.0994&curve=quartic", "BAD_CURVE"),
        ("/route?from=51.5257&to=51.5076,-0.0994", "BAD_COORDINATES"),
        ("/route?to=51.5076,-0.0994", "BAD_COORDINATES"),
        ("/route?from=51.5257,-0.1359&to=51.5076,-0.0994&simple=yes", "BAD_PARAMETER"),
    ];
    for (uri, code) in cases {
        let (status, ctype, body) = get(demo_workspace(), uri).await;
        assert_eq!(status, 400, "{uri}");
        assert_eq!(ctype, "application/json");
        assert_eq!(json(&body)["error"]["code"], code, "{uri}");
    }
}

#[tokio::test]
async fn curve_changes_ranks_only_through_the_query() {
    let base = format!("/route?from={EUSTON_SQUARE}&to={TATE_MODERN}&quality=happy");
    let (_, _, cubic) = get(demo_workspace(), &base).await;
    let (_, _, explicit) = get(demo_workspace(), &format!("{base}&curve=cubic")).await;
    assert_eq!(cubic, explicit);
    let (status, _, linear) = get(demo_workspace(), &format!("{base}&curve=linear")).await;
    assert_eq!(status, 200);
    assert_eq!(json(&linear)["curve"], "linear");
}

#[tokio::test]
async fn cells_are_closed_polygons_with_field_values() {
    let ws = demo_workspace();
    let n = ws.graph.n_cells();
    let beauty_rank = ws.fields.beauty.rank.clone();
    let (status, ctype, body) = get(ws, "/cells?quality=beauty").await;
    assert_eq!(status, 200);
    assert_eq!(ctype, "application/geo+json");
    let v = json(&body);
    let feats = v["features"].as_array().unwrap();
    assert_eq!(feats.len(), n);
    for (i, f) in feats.iter().enumerate() {
        let ring = f["geometry"]["coordinates"][0].as_array().unwrap();
        assert_eq!(ring.len(), 5);
        assert_eq!(ring[0], ring[4]);
        let p = &f["properties"];
        assert_eq!(p["cell"], i);
        assert_eq!(p["beauty"]["rank"], beauty_rank[i]);
        assert!(p.get("quiet").is_none());
    }
    let (_, _, all) = get(demo_workspace(), "/cells").await;
    let v = json(&all);
    assert!(v["features"][0]["properties"]["happy"]["prob"].is_f64());
}
