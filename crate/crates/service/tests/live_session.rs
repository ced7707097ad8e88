use std::path::Path;
use std::time::Duration;

use fittsbench::config::BenchConfig;
use fittsbench::engine::Phase;
use fittsbench::logfile::read_log_file;
use fittsbench_service::session::{Manifest, TrialState};
use fittsbench_service::{router, AppState};
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

fn config(dir: &Path) -> BenchConfig {
    let mut cfg = BenchConfig::default();
    cfg.rings.retain(|r| r.ring_id == 1);
    cfg.gammas = vec![0.4];
    cfg.trial.countdown_s = 0.3;
    cfg.server.data_dir = dir.to_path_buf();
    cfg
}

async fn start(cfg: BenchConfig) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let app = router(AppState::new(cfg).unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

async fn http(addr: &str, method: &str, path: &str, body: &str) -> (u16, Value) {
    let mut s = TcpStream::connect(addr).await.unwrap();
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).await.unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).await.unwrap();
    let status: u16 = buf[9..12].parse().unwrap();
    let body = buf.split("\r\n\r\n").nth(1).unwrap_or("");
    (status, serde_json::from_str(body).unwrap_or(Value::Null))
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

async fn connect(addr: &str, session: &str) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws?session={session}")).await.unwrap();
    ws
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

async fn recv(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.expect("server went quiet").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

fn vec3(v: &Value) -> [f64; 3] {
    [v[0].as_f64().unwrap(), v[1].as_f64().unwrap(), v[2].as_f64().unwrap()]
}

#[tokio::test(flavor = "multi_thread")]
async fn scripted_pointer_completes_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let addr = start(config(tmp.path())).await;
    let (status, created) = http(&addr, "POST", "/sessions", r#"{"participant":"script"}"#).await;
    assert_eq!(status, 200, "{created}");
    let id = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(created["schedule"].as_array().unwrap().len(), 1);

    let mut ws = connect(&addr, &id).await;
    send(&mut ws, json!({"kind": "hello", "protocol_version": 1})).await;
    let hello = recv(&mut ws).await;
    assert_eq!(hello["kind"], "hello");
    assert_eq!(hello["trial_count"], 1);
    send(&mut ws, json!({"kind": "start_trial"})).await;

    let mut messages = Vec::new();
    let mut sent: Vec<(f64, f64)> = Vec::new();
    let (mut px, mut py) = (0.0_f64, 0.0_f64);
    let mut goal: Option<(f64, f64)> = None;
    let mut layout: Option<(Vec<[f64; 3]>, [f64; 3], f64)> = None;
    let mut ticker = tokio::time::interval(Duration::from_millis(10));
    let speed = 1.5; // normalized units per second
    loop {
        tokio::select! {
            msg = recv(&mut ws) => {
                match msg["kind"].as_str().unwrap() {
                    "start_trial" => {
                        let targets = msg["targets"].as_array().unwrap().iter().map(vec3).collect();
                        assert!(msg.get("gamma").is_none(), "gamma disclosed by default");
                        layout = Some((targets, vec3(&msg["center"]), msg["pointer_scale_m"].as_f64().unwrap()));
                    }
                    "state" => {
                        if let (Some(k), Some((targets, c, scale))) = (msg["active_target"].as_u64(), &layout) {
                            let p = targets[k as usize];
                            goal = Some(((p[0] - c[0]) / scale, (p[1] - c[1]) / scale));
                        }
                    }
                    _ => {}
                }
                let done = msg["kind"] == "session_done";
                messages.push(msg);
                if done {
                    break;
                }
            }
            _ = ticker.tick() => {
                if let Some((gx, gy)) = goal {
                    let (dx, dy) = (gx - px, gy - py);
                    let d = (dx * dx + dy * dy).sqrt();
                    let step = speed * 0.01;
                    if d > step {
                        px += dx / d * step;
                        py += dy / d * step;
                    } else {
                        px = gx;
                        py = gy;
                    }
                    send(&mut ws, json!({"kind": "input", "x": px, "y": py})).await;
                    sent.push((px, py));
                }
            }
        }
    }

    // Sequence numbers are gapless from the hello reply onwards.
    let seqs: Vec<u64> = std::iter::once(&hello).chain(&messages).map(|m| m["seq"].as_u64().unwrap()).collect();
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1), "{seqs:?}");
    assert!(messages.iter().all(|m| m["kind"] != "error"), "{messages:?}");

    let reaches: Vec<&Value> = messages.iter().filter(|m| m["kind"] == "reach_event").collect();
    assert_eq!(reaches.len(), 8);
    let done = messages.iter().find(|m| m["kind"] == "trial_done").unwrap();
    assert_eq!(done["status"], "complete");
    assert_eq!(done["movement_times_s"].as_array().unwrap().len(), 8);

    let states: Vec<&Value> = messages.iter().filter(|m| m["kind"] == "state").collect();
    let countdown: Vec<f64> =
        states.iter().filter(|s| s["phase"] == "countdown").map(|s| s["countdown_remaining_s"].as_f64().unwrap()).collect();
    assert!(!countdown.is_empty());
    assert!(countdown.windows(2).all(|w| w[1] < w[0]));

    // No reach event arrives after a state that already shows the following target.
    let sequence: Vec<u64> = [0u64, 4, 8, 3, 7, 2, 6, 1, 5].to_vec();
    let mut seen_active: Vec<u64> = Vec::new();
    for m in &messages {
        if m["kind"] == "state" {
            if let Some(k) = m["active_target"].as_u64() {
                seen_active.push(k);
            }
        } else if m["kind"] == "reach_event" {
            let reached = m["target_index"].as_u64().unwrap();
            let pos = sequence.iter().position(|&k| k == reached).unwrap();
            if let Some(&next) = sequence.get(pos + 1) {
                assert!(!seen_active.contains(&next), "state showed target {next} before reach of {reached}");
            }
        }
    }

    // Persisted log: complete, and every u_h is the affine image of a sent pointer position.
    let dir = tmp.path().join(&id);
    let log = read_log_file(&dir.join("trial_0.jsonl")).unwrap();
    assert!(log.is_complete());
    assert_eq!(log.movement_times_s.len(), 8);
    let center = log.config.ring.center;
    let scale = 3.0 * 0.045;
    let start = fittsbench::geometry::ring_targets(&log.config.ring)[0];
    for s in log.samples.iter().filter(|s| s.phase == Phase::Running) {
        let matches_script = sent.iter().any(|&(x, y)| {
            (s.u_h.x - (center.x + scale * x)).abs() < 1e-12
                && (s.u_h.y - (center.y + scale * y)).abs() < 1e-12
                && s.u_h.z == center.z
        });
        assert!(matches_script || s.u_h == start, "u_h {:?} at t={} not from the script", s.u_h, s.t_s);
        let g = log.config.condition.gamma;
        assert!(s.u.distance(s.u_r * g + s.u_h * (1.0 - g)) < 1e-9);
    }

    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.trials[0].state, TrialState::Complete);
    assert_eq!(manifest.trials[0].file.as_deref(), Some("trial_0.jsonl"));

    let (status, m) = http(&addr, "GET", &format!("/sessions/{id}"), "").await;
    assert_eq!(status, 200);
    assert_eq!(m["trials"][0]["state"], "complete");
}

#[tokio::test(flavor = "multi_thread")]
async fn disconnect_aborts_and_persists_partial_log() {
    let tmp = tempfile::tempdir().unwrap();
    let addr = start(config(tmp.path())).await;
    let (_, created) = http(&addr, "POST", "/sessions", "").await;
    let id = created["session_id"].as_str().unwrap().to_string();

    let mut ws = connect(&addr, &id).await;
    send(&mut ws, json!({"kind": "hello", "protocol_version": 1})).await;
    recv(&mut ws).await;
    // A second client is refused while the first holds the session.
    assert!(tokio_tungstenite::connect_async(format!("ws://{addr}/ws?session={id}")).await.is_err());
    send(&mut ws, json!({"kind": "start_trial"})).await;
    loop {
        let m = recv(&mut ws).await;
        if m["kind"] == "state" && m["phase"] == "running" {
            break;
        }
    }
    ws.close(None).await.unwrap();
    drop(ws);

    let dir = tmp.path().join(&id);
    let mut manifest: Option<Manifest> = None;
    for _ in 0..100 {
        tokio::time::sleep(Duration::from_millis(50)).await;
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        if m.trials[0].state == TrialState::Aborted {
            manifest = Some(m);
            break;
        }
    }
    let manifest = manifest.expect("trial marked aborted");
    assert_eq!(manifest.trials[0].abort_reason.as_deref(), Some("client disconnected"));
    let log = read_log_file(&dir.join("trial_0.jsonl")).unwrap();
    assert!(!log.is_complete());
    assert!(!log.samples.is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn handshake_and_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let addr = start(config(tmp.path())).await;
    let (_, created) = http(&addr, "POST", "/sessions", "").await;
    let id = created["session_id"].as_str().unwrap().to_string();

    let mut ws = connect(&addr, &id).await;
    send(&mut ws, json!({"kind": "start_trial"})).await;
    let m = recv(&mut ws).await;
    assert_eq!(m["kind"], "error");
    assert_eq!(m["seq"], 0);
    send(&mut ws, json!({"kind": "hello", "protocol_version": 1})).await;
    assert_eq!(recv(&mut ws).await["kind"], "hello");
    send(&mut ws, json!({"kind": "input", "x": 0.1, "y": 0.2})).await;
    let m = recv(&mut ws).await;
    assert!(m["message"].as_str().unwrap().contains("no trial"), "{m}");
    send(&mut ws, json!({"kind": "teleport"})).await;
    assert_eq!(recv(&mut ws).await["kind"], "error");
    drop(ws);

    tokio::time::sleep(Duration::from_millis(100)).await;
    let mut ws = connect(&addr, &id).await;
    send(&mut ws, json!({"kind": "hello", "protocol_version": 99})).await;
    let m = recv(&mut ws).await;
    assert!(m["message"].as_str().unwrap().contains("99"), "{m}");

    let (status, _) = http(&addr, "GET", "/sessions/session-9999", "").await;
    assert_eq!(status, 404);
    let (status, _) = http(&addr, "POST", "/sessions", "{not json").await;
    assert_eq!(status, 400);
}

#[tokio::test(flavor = "multi_thread")]
async fn schedules_are_counterbalanced_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = BenchConfig::default();
    cfg.server.data_dir = tmp.path().join("a");
    let addr = start(cfg.clone()).await;
    let mut rows = Vec::new();
    for _ in 0..12 {
        let (status, created) = http(&addr, "POST", "/sessions", "").await;
        assert_eq!(status, 200);
        rows.push(created["schedule"].as_array().unwrap().clone());
    }
    for pos in 0..12 {
        let mut column: Vec<String> = rows.iter().map(|r| r[pos].to_string()).collect();
        column.sort();
        column.dedup();
        assert_eq!(column.len(), 12, "position {pos} repeats a condition");
    }

    cfg.server.data_dir = tmp.path().join("b");
    let other = start(cfg).await;
    let (_, first) = http(&other, "POST", "/sessions", "").await;
    assert_eq!(first["schedule"].as_array().unwrap(), &rows[0]);
}

#[tokio::test(flavor = "multi_thread")]
async fn storage_failure_creates_no_session() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let mut cfg = config(tmp.path());
    cfg.server.data_dir = blocker.join("data");
    let addr = start(cfg).await;
    let (status, body) = http(&addr, "POST", "/sessions", "").await;
    assert_eq!(status, 503, "{body}");
    let (status, _) = http(&addr, "GET", "/sessions/session-0000", "").await;
    assert_eq!(status, 404);
}
