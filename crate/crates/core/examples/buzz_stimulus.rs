//! The 30-pulse chirp train, and a binaural echo rendered from a toy
//! impulse-response pair, written as WAV files.
//!
//! ```text
//! cargo run --release --example buzz_stimulus [out-dir]
//! ```

use std::collections::BTreeMap;

use echotrain::irbank::{ImpulseResponsePair, IrBank};
use echotrain::synth::{
    buzz_train, encode_wav, linear_chirp, render_cell_echo, BinauralBuffer, BuzzParams, ChirpParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    let chirp = ChirpParams::default();
    let buzz = BuzzParams::default();
    let pulse = linear_chirp(&chirp)?;
    let train = buzz_train(&pulse, &buzz, chirp.sample_rate);
    let onsets = buzz.onset_samples(chirp.sample_rate);
    println!(
        "chirp {} samples, {} pulses, onsets {:?}..{:?}, span {:.3} s",
        pulse.len(),
        onsets.len(),
        &onsets[..3],
        onsets.last().unwrap(),
        train.len() as f64 / chirp.sample_rate
    );

    let dry = train.iter().map(|&v| v as f32).collect::<Vec<_>>();
    let dry = BinauralBuffer { sample_rate: chirp.sample_rate, left: dry.clone(), right: dry };
    std::fs::write(out.join("buzz_dry.wav"), encode_wav(&dry))?;

    // toy echo: the right ear hears it 0.3 ms later and 6 dB quieter
    let rate = 48000.0;
    let mut left = vec![0.0f32; 96];
    let mut right = vec![0.0f32; 96];
    left[40] = 0.2;
    right[54] = 0.1;
    let pair = ImpulseResponsePair { cell_index: 0, left, right, sample_rate: rate };
    let bank = IrBank {
        target_id: "toy".into(),
        grid: (1, 1),
        cell_size: 0.05,
        head_id: "none".into(),
        sim_fingerprint: [0; 32],
        sample_rate: rate,
        entries: BTreeMap::from([(0, pair)]),
    };
    let echo = render_cell_echo(&bank, 0, &chirp, &buzz)?;
    println!("echo: {} samples, peak {:.3}, {:.3} s", echo.len(), echo.peak(), echo.duration());
    std::fs::write(out.join("buzz_echo.wav"), encode_wav(&echo))?;
    println!("wrote buzz_dry.wav and buzz_echo.wav to {}", out.display());
    Ok(())
}
