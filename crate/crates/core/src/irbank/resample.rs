//! Band-limited resampling with a Kaiser-windowed sinc kernel.

use super::ImpulseResponsePair;

const KAISER_BETA: f64 = 8.6;
/// Zero crossings of the sinc on each side of the centre tap.
const ZERO_CROSSINGS: f64 = 16.0;
/// Cutoff as a fraction of the lower of the two rates.
const CUTOFF_FRACTION: f64 = 0.45;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resamples `signal` from `in_rate` to `out_rate` Hz. Output length is
/// ⌈N·out/in⌉; equal rates return the input unchanged.
pub fn resample(signal: &[f32], in_rate: f64, out_rate: f64) -> Vec<f32> {
    assert!(in_rate > 0.0 && out_rate > 0.0, "sample rates must be positive");
    if in_rate == out_rate {
        return signal.to_vec();
    }
    let out_len = (signal.len() as f64 * out_rate / in_rate - 1e-9).ceil().max(0.0) as usize;
    let fc = CUTOFF_FRACTION * in_rate.min(out_rate);
    // half-width of the kernel, seconds
    let half = ZERO_CROSSINGS / (2.0 * fc);
    let gain = 2.0 * fc / in_rate;
    let norm = bessel_i0(KAISER_BETA);
    let last = signal.len() as i64 - 1;
    (0..out_len)
        .map(|m| {
            let t = m as f64 / out_rate;
            let lo = ((t - half) * in_rate).ceil().max(0.0) as i64;
            let hi = (((t + half) * in_rate).floor() as i64).min(last);
            let mut acc = 0.0f64;
            for n in lo..=hi {
                let dt = t - n as f64 / in_rate;
                let r = dt / half;
                let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
                acc += signal[n as usize] as f64 * sinc(2.0 * fc * dt) * w;
            }
            (gain * acc) as f32
        })
        .collect()
}

pub fn resample_ir(ir: &ImpulseResponsePair, out_rate: f64) -> ImpulseResponsePair {
    ImpulseResponsePair {
        cell_index: ir.cell_index,
        left: resample(&ir.left, ir.sample_rate, out_rate),
        right: resample(&ir.right, ir.sample_rate, out_rate),
        sample_rate: out_rate,
    }
}
