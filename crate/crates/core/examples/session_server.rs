//! Starts the session service on a local port and walks one trial through
//! it the way the browser client does: HTTP for phase changes, the gaze
//! WebSocket for triggers.
//!
//! ```text
//! cargo run --example session_server [--keep]
//! ```
//!
//! With `--keep` the server stays up after the demo trial.

use std::time::Duration;

use echotrain::session::server::{serve, AppState, ServerMessage};
use echotrain::session::{GridLayout, TargetCatalog};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let logs = std::env::temp_dir().join("echotrain-demo-logs");
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let server = tokio::spawn(serve(listener, AppState::new(TargetCatalog::default_library(), Some(logs.clone()))));
    println!("listening on http://{addr}, logs in {}", logs.display());

    let http = reqwest::Client::new();
    let base = format!("http://{addr}");
    let targets: Value = http.get(format!("{base}/targets")).send().await?.json().await?;
    println!("GET /targets -> {} targets", targets.as_array().map_or(0, |a| a.len()));

    let config = json!({ "training_trials": ["T4"], "test_trials": [] });
    let view: Value = http.post(format!("{base}/sessions")).json(&config).send().await?.json().await?;
    let id = view["session_id"].as_str().unwrap().to_string();
    println!("POST /sessions -> {view}");

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/gaze")).await?;
    let begin: Value = http.post(format!("{base}/sessions/{id}/begin")).json(&json!({ "t": 0.0 })).send().await?.json().await?;
    println!("begin -> phase {}", begin["phase"]);

    // sweep the middle row left to right
    let layout = GridLayout::full_screen(5, 5);
    for (i, cell) in (10..15).enumerate() {
        let (x, y) = layout.cell_center(cell);
        ws.send(Message::Text(json!({ "t": 0.5 + 0.2 * i as f64, "x": x, "y": y, "valid": true }).to_string().into()))
            .await?;
    }
    while let Ok(Some(Ok(msg))) = tokio::time::timeout(Duration::from_millis(300), ws.next()).await {
        if let Message::Text(text) = msg {
            match serde_json::from_str::<ServerMessage>(&text)? {
                ServerMessage::Trigger { t, cell, asset } => println!("  trigger t={t} cell {cell} -> {asset}"),
                ServerMessage::Phase { phase, trial } => println!("  phase {phase:?} trial {trial:?}"),
                other => println!("  {other:?}"),
            }
        }
    }

    http.post(format!("{base}/sessions/{id}/end_sensing")).json(&json!({ "t": 4.0 })).send().await?;
    let drawing = ".....\n.....\n#####\n.....\n.....";
    let out: Value = http.post(format!("{base}/sessions/{id}/drawing?t=9")).body(drawing).send().await?.json().await?;
    println!("drawing -> difference {} matched {}", out["result"]["difference"], out["result"]["matched"]);
    println!("feedback (true target):\n{}", out["feedback"].as_str().unwrap_or(""));
    let log = http.get(format!("{base}/sessions/{id}/log")).send().await?.text().await?;
    println!("log: {} records", log.lines().count());

    if std::env::args().any(|a| a == "--keep") {
        println!("serving until interrupted");
        server.await??;
    }
    Ok(())
}
