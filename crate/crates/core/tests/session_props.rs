//! Phase machine, trigger and replay properties under random operation
//! sequences.

use echotrain::geometry::ShapeMask;
use echotrain::session::{
    map_pog_to_cell, parse_log, replay, GazeSample, LogRecord, Phase, ProtocolConfig, RetriggerPolicy, Session,
    TargetCatalog,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Begin,
    Gaze { x: f64, y: f64, valid: bool },
    End,
    Draw { full: bool },
    Blank,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        2 => Just(Op::Begin),
        8 => (-0.2f64..1.2, -0.2f64..1.2, prop::bool::weighted(0.9)).prop_map(|(x, y, valid)| Op::Gaze { x, y, valid }),
        2 => Just(Op::End),
        2 => any::<bool>().prop_map(|full| Op::Draw { full }),
        1 => Just(Op::Blank),
    ]
}

fn config(dwell: Option<f64>) -> ProtocolConfig {
    ProtocolConfig {
        training_trials: vec!["T1".into(), "T4".into()],
        test_trials: vec!["U1".into()],
        retrigger_policy: match dwell {
            Some(ms) => RetriggerPolicy::OnDwell { dwell_ms: ms },
            None => RetriggerPolicy::OnCellChange,
        },
        ..Default::default()
    }
}

fn drive(ops: &[(Op, u32)], dwell: Option<f64>) -> Session {
    let cat = TargetCatalog::default_library();
    let mut s = Session::new("prop", config(dwell), &cat).unwrap();
    let mut t = 0.0;
    for (op, dt) in ops {
        t += *dt as f64 / 100.0;
        let before = (s.phase(), s.records().len());
        let ok = match op {
            Op::Begin => s.begin(Some(t)).is_ok(),
            Op::Gaze { x, y, valid } => s.ingest_gaze(GazeSample { t, x: *x, y: *y, valid: *valid }).is_ok(),
            Op::End => s.end_sensing(Some(t)).is_ok(),
            Op::Draw { full } => {
                let m = if *full { ShapeMask::full(5, 5) } else { ShapeMask::parse("#....\n.....\n.....\n.....\n.....").unwrap() };
                s.submit_drawing(m, Some(t)).is_ok()
            }
            Op::Blank => s.submit_drawing(ShapeMask::empty(5, 5), Some(t)).is_ok(),
        };
        if !ok {
            assert_eq!((s.phase(), s.records().len()), before, "failed {op:?} changed state");
        }
    }
    s
}

fn allowed(from: Phase, to: Phase) -> bool {
    matches!(
        (from, to),
        (Phase::Idle, Phase::Sensing)
            | (Phase::Sensing, Phase::Drawing)
            | (Phase::Drawing, Phase::Scored)
            | (Phase::Scored, Phase::Idle)
            | (Phase::Scored, Phase::Finished)
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn phases_only_move_forward(ops in prop::collection::vec((op(), 0u32..50), 0..120)) {
        let s = drive(&ops, None);
        let mut phase = Phase::Idle;
        let mut trial = 0;
        for r in s.records() {
            if let LogRecord::Phase { phase: next, trial: tr, .. } = r {
                prop_assert!(allowed(phase, *next), "{:?} -> {:?}", phase, next);
                if *next == Phase::Idle {
                    prop_assert_eq!(*tr, trial + 1);
                    trial += 1;
                } else {
                    prop_assert_eq!(*tr, trial);
                }
                phase = *next;
            }
        }
        prop_assert_eq!(phase, s.phase());
        let results = s.results().len();
        let scored = s.records().iter().filter(|r| matches!(r, LogRecord::Phase { phase: Phase::Scored, .. })).count();
        prop_assert_eq!(results, scored);
    }

    #[test]
    fn every_trigger_maps_its_sample(ops in prop::collection::vec((op(), 0u32..50), 0..150), dwell in prop::option::of(50.0f64..400.0)) {
        let s = drive(&ops, dwell);
        let layout = s.layout().unwrap_or_else(|| echotrain::session::GridLayout::full_screen(5, 5));
        let mut last_gaze = None;
        let mut count = 0;
        for r in s.records() {
            match r {
                LogRecord::Gaze { t, x, y, valid } => last_gaze = Some(GazeSample { t: *t, x: *x, y: *y, valid: *valid }),
                LogRecord::Trigger { t, cell, .. } => {
                    let g = last_gaze.take().expect("trigger follows its sample");
                    prop_assert_eq!(g.t, *t);
                    prop_assert_eq!(map_pog_to_cell(&g, &layout), Some(*cell));
                    count += 1;
                }
                _ => {}
            }
        }
        prop_assert_eq!(count, s.trigger_log().len());
    }

    #[test]
    fn export_replay_export_is_identical(ops in prop::collection::vec((op(), 0u32..50), 0..150), dwell in prop::option::of(50.0f64..400.0)) {
        let s = drive(&ops, dwell);
        let text = s.export_log();
        let again = replay(&parse_log(&text).unwrap(), &TargetCatalog::default_library()).unwrap();
        prop_assert_eq!(again.export_log(), text);
    }
}
