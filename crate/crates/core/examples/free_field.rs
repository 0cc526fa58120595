//! Point source in an empty box: arrival times and 1/r spreading at two
//! receivers, plus a pressure snapshot.
//!
//! ```text
//! cargo run --release --example free_field [snapshot-dir]
//! ```

use echotrain::fdtd::{run_with, RunOptions, SimConfig, SourceSignal};
use echotrain::geometry::{Vec3, VoxelGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.005;
    let mut config = SimConfig { spacing: h, domain_extent: [64.0 * h; 3], pml_layers: 16, ..Default::default() };
    let spec = config.grid_spec()?;
    let signal = SourceSignal::Gaussian { sigma_samples: 6.0 };

    config.source = spec.center_of(18, 18, 18);
    let diag = Vec3::new(1.0, 1.0, 1.0).normalized();
    let radii = [0.05, 0.1, 0.2];
    config.receivers = radii.iter().map(|&r| config.source + diag * r).collect();
    config.duration = 160.0 * config.time_step();

    let options = RunOptions {
        snapshot_steps: vec![60],
        snapshot_dir: std::env::args().nth(1).map(Into::into),
        ..Default::default()
    };
    let traces = run_with(&VoxelGrid::empty(spec), &config, &signal.samples(), &options)?;

    let per_metre = 1.0 / (config.sound_speed * config.time_step());
    println!("dt = {:.3} us, {} steps", config.time_step() * 1e6, traces.len());
    println!("{:>6} {:>10} {:>10} {:>10}", "r (m)", "expected", "arrival", "peak*r");
    for (r, trace) in radii.iter().zip(&traces.traces) {
        let (i, p) = trace.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
        let arrival = i as f64 - signal.peak_index() as f64;
        println!("{r:>6.2} {:>10.1} {arrival:>10.0} {:>10.5}", r * per_metre, p.abs() as f64 * r);
    }
    if let Some(dir) = &options.snapshot_dir {
        println!("snapshot written to {}", dir.display());
    }
    Ok(())
}
