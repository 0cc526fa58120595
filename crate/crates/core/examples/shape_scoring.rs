//! Scores a few hand-drawn masks against library targets and summarizes a
//! synthetic gaze trace over the grid.
//!
//! ```text
//! cargo run --example shape_scoring
//! ```

use echotrain::analytics::{analyze_gaze, dwell_heatmap, hu_moments, shape_difference, DEFAULT_MATCH_THRESHOLD};
use echotrain::geometry::{default_library, ShapeMask};
use echotrain::session::{GazeSample, GridLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let library = default_library();
    let cross = &library.iter().find(|t| t.id == "T4").unwrap().mask;
    println!("T4:\n{}", cross.to_text());
    println!("Hu invariants {:?}", hu_moments(cross)?.0.to_vec());

    let drawings = [
        ("exact", cross.clone()),
        ("small", ShapeMask::parse(".....\n..#..\n.###.\n..#..\n.....")?),
        ("thick", ShapeMask::parse(".###.\n#####\n#####\n#####\n.###.")?),
        ("bar", ShapeMask::parse(".....\n.....\n#####\n.....\n.....")?),
    ];
    println!("\n{:<8} {:>10} {:>8}", "drawing", "difference", "match");
    for (name, d) in &drawings {
        let s = shape_difference(d, cross)?;
        println!("{name:<8} {:>10.4} {:>8}", s.value, s.matched());
    }
    println!("(match means difference < {DEFAULT_MATCH_THRESHOLD})");

    println!("\ndifference between library targets:");
    print!("{:>4}", "");
    for t in &library {
        print!("{:>6}", t.id);
    }
    println!();
    for a in &library {
        print!("{:>4}", a.id);
        for b in &library {
            print!("{:>6.2}", shape_difference(&a.mask, &b.mask)?.value);
        }
        println!();
    }

    // 150 Hz gaze that circles the centre, then drifts off the grid
    let layout = GridLayout::full_screen(5, 5);
    let log: Vec<GazeSample> = (0..900)
        .map(|n| {
            let t = n as f64 / 150.0;
            let r = if n < 700 { 0.25 } else { 0.7 };
            GazeSample::new(t, 0.5 + r * (t * 2.0).cos(), 0.5 + r * (t * 2.0).sin())
        })
        .collect();
    let map = dwell_heatmap(&log, &layout)?;
    println!("\ndwell (s) per cell:\n{}", map.to_csv());
    let g = analyze_gaze(&log, cross, &layout, 6.0)?;
    println!(
        "edge/outside dwell fraction {:.3}, outside target {:.3}, off grid {:.2} s",
        g.edge_dwell_fraction, g.outside_fraction, g.outside_grid_seconds
    );
    Ok(())
}
