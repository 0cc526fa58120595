//! Simulates a small echo impulse-response bank at desk scale, saves it,
//! loads it back and summarizes each cell.
//!
//! ```text
//! cargo run --release --example ir_bank [out.eirb]
//! ```

use echotrain::cli::Scenario;
use echotrain::geometry::{ShapeMask, TargetRole, TargetSpec};
use echotrain::irbank::{generate_ir_bank_with, load_bank_expecting, save_bank};

fn energy(x: &[f32]) -> f64 {
    x.iter().map(|&v| (v as f64).powi(2)).sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::desk();
    let head = scenario.head_model()?;
    let config = scenario.sim_config();
    let mask = ShapeMask::parse("##.\n.##")?;
    let target = scenario.place(TargetSpec::new("demo", mask, TargetRole::Untrained));
    println!(
        "grid {:?}, {} steps at {:.0} Hz, {} cells",
        config.grid_spec()?.dims,
        config.step_count(),
        config.sample_rate(),
        target.mask.count()
    );

    let t0 = std::time::Instant::now();
    let bank = generate_ir_bank_with(&target, &head, &config, &scenario.bank_options())?;
    println!("simulated in {:.1} s, fingerprint {}", t0.elapsed().as_secs_f64(), &bank.fingerprint_hex()[..16]);

    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("demo.eirb"));
    save_bank(&bank, &path)?;
    let loaded = load_bank_expecting(&path, &bank.sim_fingerprint)?;
    loaded.check_complete(&target.mask)?;
    println!("saved and reloaded {}", path.display());

    println!("{:>4} {:>12} {:>12} {:>8} {:>8}", "cell", "E left", "E right", "onset L", "onset R");
    for (cell, pair) in &loaded.entries {
        let onset = |x: &[f32]| {
            let peak = x.iter().fold(0f32, |m, v| m.max(v.abs()));
            x.iter().position(|v| v.abs() >= 0.1 * peak).unwrap_or(0)
        };
        println!(
            "{cell:>4} {:>12.4e} {:>12.4e} {:>8} {:>8}",
            energy(&pair.left),
            energy(&pair.right),
            onset(&pair.left),
            onset(&pair.right)
        );
    }
    Ok(())
}
