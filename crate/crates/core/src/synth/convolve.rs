use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::SynthError;

/// Below this many multiply-adds direct summation beats the transform.
const DIRECT_LIMIT: usize = 4096;

/// Full linear convolution, length `signal.len() + ir.len() - 1`.
pub fn convolve(signal: &[f64], ir: &[f64]) -> Result<Vec<f64>, SynthError> {
    if signal.is_empty() || ir.is_empty() {
        return Err(SynthError::EmptyInput);
    }
    let out_len = signal.len() + ir.len() - 1;
    if signal.len() * ir.len() <= DIRECT_LIMIT {
        let mut out = vec![0.0; out_len];
        for (i, a) in signal.iter().enumerate() {
            for (o, b) in out[i..].iter_mut().zip(ir) {
                *o += a * b;
            }
        }
        return Ok(out);
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |x: &[f64]| {
        let mut v: Vec<Complex64> = x.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let mut a = pad(signal);
    let mut b = pad(ir);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    Ok(a[..out_len].iter().map(|c| c.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..a.len() + b.len() - 1)
            .map(|k| {
                let lo = k.saturating_sub(b.len() - 1);
                let hi = k.min(a.len() - 1);
                (lo..=hi).map(|i| a[i] * b[k - i]).sum()
            })
            .collect()
    }

    fn rel_rms(x: &[f64], reference: &[f64]) -> f64 {
        let err: f64 = x.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
        let norm: f64 = reference.iter().map(|b| b * b).sum();
        (err / norm).sqrt()
    }

    #[test]
    fn hand_examples() {
        assert_eq!(convolve(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), vec![1.0, 2.0, 1.0]);
        let s = [0.3, -1.0, 2.5];
        assert_eq!(convolve(&s, &[1.0]).unwrap(), s.to_vec());
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(convolve(&[], &[1.0]), Err(SynthError::EmptyInput)));
        assert!(matches!(convolve(&[1.0], &[]), Err(SynthError::EmptyInput)));
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..5 {
            let a: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = convolve(&a, &b).unwrap();
            assert_eq!(fast.len(), 2047);
            assert!(rel_rms(&fast, &direct(&a, &b)) < 1e-9);
        }
    }

    #[test]
    fn delayed_impulse_shifts() {
        let s: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut ir = vec![0.0; 100];
        ir[37] = 1.0;
        let y = convolve(&s, &ir).unwrap();
        for (i, v) in s.iter().enumerate() {
            assert!((y[i + 37] - v).abs() < 1e-12);
        }
        assert!(y[..37].iter().all(|v| v.abs() < 1e-12));
    }
}
