//! A full 15-trial protocol driven by synthetic gaze, then log export,
//! replay and the per-condition report.
//!
//! ```text
//! cargo run --example scripted_session [log.jsonl]
//! ```

use echotrain::analytics::report_summary;
use echotrain::geometry::ShapeMask;
use echotrain::session::{parse_log, replay, GazeSample, ProtocolConfig, Session, TargetCatalog};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = TargetCatalog::default_library();
    let mut session = Session::new("demo", ProtocolConfig::default(), &catalog)?;

    for k in 0..session.trials().len() {
        let t0 = 300.0 * k as f64;
        session.begin(Some(t0))?;
        let layout = session.layout().unwrap();
        let target = catalog.get(&session.current_trial().unwrap().target_id).unwrap().mask.clone();

        // raster scan of the grid, lingering on target cells
        let mut t = t0;
        for cell in 0..layout.cell_count() {
            let (x, y) = layout.cell_center(cell);
            let (c, r) = target.position(cell);
            let dwell = if target.get(c, r) { 120 } else { 30 };
            for _ in 0..dwell {
                t += 1.0 / 150.0;
                session.ingest_gaze(GazeSample::new(t, x, y))?;
            }
        }
        session.end_sensing(Some(t))?;

        // every third drawing misses the bottom row
        let drawing = if k % 3 == 2 {
            ShapeMask::from_fn(5, 5, |c, r| r < 4 && target.get(c, r))
        } else {
            target.clone()
        };
        let drawing = if drawing.any() { drawing } else { target.clone() };
        let out = session.submit_drawing(drawing, Some(t + 10.0))?;
        let r = &out.result;
        println!(
            "trial {:>2} {:<3} {:<14} difference {:.4} matched {:<5} sensing {:.1} s feedback {}",
            r.trial,
            r.target_id,
            r.condition.as_str(),
            r.difference,
            r.matched,
            r.sensing_time,
            out.feedback.is_some()
        );
    }

    let log = session.export_log();
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, &log)?;
        println!("log written to {path}");
    }
    let again = replay(&parse_log(&log)?, &catalog)?;
    println!(
        "{} log lines, {} triggers, replay identical: {}",
        log.lines().count(),
        session.trigger_log().len(),
        again.export_log() == log
    );

    let summary = report_summary(&session.trial_records())?;
    for c in &summary.conditions {
        println!("{}", serde_json::to_string(c)?);
    }
    Ok(())
}
