use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use flowforge::geometry::FlowFieldParams;
use flowforge::mco::{navigate, ParetoFront};
use flowforge::pipeline::{cmd_pareto, RunConfig, FRONT_FILE};
use flowforge_cli::{parse_bounds, router, FrontService};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::with_ptl_depth(0.3e-3);
    cfg.geometry = FlowFieldParams {
        n_channels: 4,
        channel_length_center: 8e-3,
        distributor_depth_in: 3e-3,
        distributor_depth_out: 3e-3,
        ..FlowFieldParams::default()
    };
    cfg.optimizer.max_iterations = 2;
    cfg.mco.budget = 4;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

/// One small Pareto run shared by every test in this file.
fn run_dir() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, p) = DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        cmd_pareto(&cfg).unwrap();
        std::fs::write(dir.path().join("flowforge.json"), serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
        let p = dir.path().to_path_buf();
        (dir, p)
    });
    p
}

fn app() -> axum::Router {
    router(Arc::new(FrontService::load(run_dir()).unwrap()))
}

async fn get(app: &axum::Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let res = app
        .clone()
        .oneshot(Request::builder().uri(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(app: &axum::Router, uri: &str) -> (StatusCode, Value) {
    let (s, body) = get(app, uri).await;
    (s, serde_json::from_slice(&body).unwrap())
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(p.clone(), std::fs::read(&p).unwrap());
    }
    out
}

#[tokio::test]
async fn front_round_trips() {
    let app = app();
    let (status, body) = get(&app, "/front").await;
    assert_eq!(status, StatusCode::OK);
    let on_disk = std::fs::read_to_string(run_dir().join(FRONT_FILE)).unwrap();
    let served: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(served, serde_json::from_str::<Value>(&on_disk).unwrap());
    let strip = |s: &str| s.split_whitespace().collect::<String>();
    assert_eq!(strip(std::str::from_utf8(&body).unwrap()), strip(&on_disk));
    let front = ParetoFront::from_json(std::str::from_utf8(&body).unwrap()).unwrap();
    assert_eq!(front, ParetoFront::load(&run_dir().join(FRONT_FILE)).unwrap());
}

#[tokio::test]
async fn health_answers() {
    let (status, v) = get_json(&app(), "/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn navigate_matches_the_library() {
    let app = app();
    let front = ParetoFront::load(&run_dir().join(FRONT_FILE)).unwrap();
    let mid: Vec<f64> = (0..3)
        .map(|i| {
            let v: Vec<f64> = front.points.iter().map(|p| p.costs_normalized[i]).collect();
            0.5 * (v.iter().cloned().fold(f64::INFINITY, f64::min) + v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    let queries = [
        ("/navigate".to_string(), vec![None, None, None]),
        (format!("/navigate?j1={}", mid[0]), vec![Some(mid[0]), None, None]),
        (format!("/navigate?j2={}&j3={}", mid[1], mid[2]), vec![None, Some(mid[1]), Some(mid[2])]),
        ("/navigate?j1=-1".to_string(), vec![Some(-1.0), None, None]),
        ("/navigate?j1=&j3=0.5".to_string(), vec![None, None, Some(0.5)]),
    ];
    for (uri, bounds) in queries {
        let (status, v) = get_json(&app, &uri).await;
        assert_eq!(status, StatusCode::OK, "{uri}");
        assert_eq!(v, serde_json::to_value(navigate(&front, &bounds)).unwrap(), "{uri}");
    }
    let (_, v) = get_json(&app, "/navigate?j1=-1").await;
    assert_eq!(v["feasible"], Value::Array(vec![]));
    assert!(v["relaxation"].is_array());
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let app = app();
    for uri in ["/navigate?j4=1", "/navigate?jx=1", "/navigate?j1=abc", "/navigate?j2=inf", "/navigate?lambda=1"] {
        let (status, v) = get_json(&app, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(v["error"].is_string());
    }
    assert_eq!(get(&app, "/shape/999").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/shape/abc").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/nothing").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn shape_carries_mesh_and_speed() {
    let app = app();
    let front = ParetoFront::load(&run_dir().join(FRONT_FILE)).unwrap();
    let (status, v) = get_json(&app, "/shape/0").await;
    assert_eq!(status, StatusCode::OK);
    let n = v["nodes"].as_array().unwrap().len();
    assert!(n > 0);
    assert_eq!(v["speed"].as_array().unwrap().len(), n);
    assert_eq!(v["labels"].as_array().unwrap().len(), v["triangles"].as_array().unwrap().len());
    let costs: Vec<f64> = serde_json::from_value(v["costs_normalized"].clone()).unwrap();
    assert_eq!(costs, front.points[0].costs_normalized);
    // the mouth flows add up to the half-cell inflow up to the trapezoid
    // error: vertex values only, a few segments across a no-slip profile
    let q: Vec<f64> = serde_json::from_value(v["flow_rates"].clone()).unwrap();
    let cfg = small_config(run_dir());
    let inflow = 0.5 * cfg.inflow.flow_rate;
    assert_eq!(q.len(), 2);
    assert!(q.iter().all(|&x| x > 0.0));
    assert!((q.iter().sum::<f64>() - inflow).abs() < 0.2 * inflow, "{q:?} {inflow:e}");
}

#[test]
fn bounds_parsing() {
    let q = |pairs: &[(&str, &str)]| pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    assert_eq!(parse_bounds(&q(&[("j2", "0.5")]), 3), Ok(vec![None, Some(0.5), None]));
    assert_eq!(parse_bounds(&q(&[("j1", "")]), 3), Ok(vec![None; 3]));
    assert!(parse_bounds(&q(&[("j0", "1")]), 3).is_err());
    assert!(parse_bounds(&q(&[("j3", "1")]), 2).is_err());
    assert!(parse_bounds(&q(&[("j1", "NaN")]), 3).is_err());
}

#[tokio::test]
async fn requests_never_touch_the_artifacts() {
    let before = snapshot(run_dir());
    let app = app();
    let uris = [
        "/health",
        "/front",
        "/navigate",
        "/navigate?j1=0.5",
        "/navigate?j1=0.1&j2=0.1&j3=0.1",
        "/navigate?j9=1",
        "/shape/0",
        "/shape/1",
        "/shape/77",
        "/shape/..%2Ffront.json",
        "/front?x=1",
    ];
    let mut tasks = Vec::new();
    for k in 0..60 {
        let app = app.clone();
        let uri = uris[(k * 7) % uris.len()];
        tasks.push(tokio::spawn(async move { get(&app, uri).await.0 }));
    }
    for t in tasks {
        assert!(!t.await.unwrap().is_server_error());
    }
    // methods other than GET are not routed
    let res = app
        .clone()
        .oneshot(Request::builder().method("POST").uri("/front").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(snapshot(run_dir()), before);
}

#[test]
fn binary_serves_on_the_bind_address() {
    let dir = run_dir();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = std::process::Command::new(env!("CARGO_BIN_EXE_flowforge"))
        .args(["--config", dir.join("flowforge.json").to_str().unwrap(), "serve", "--bind"])
        .arg(format!("127.0.0.1:{port}"))
        .env("FLOWFORGE_LOG", "warn")
        .spawn()
        .unwrap();
    let mut reply = String::new();
    for _ in 0..100 {
        if let Ok(mut s) = std::net::TcpStream::connect(("127.0.0.1", port)) {
            s.write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
            s.read_to_string(&mut reply).unwrap();
            break;
        }
        std::thread::sleep(Duration::from_millis(100));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains(r#"{"status":"ok"}"#), "{reply}");
}
