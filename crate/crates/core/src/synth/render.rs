use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{buzz_train, convolve, encode_wav, linear_chirp, BinauralBuffer, BuzzParams, ChirpParams, SynthError};
use crate::irbank::{resample, IrBank};

/// How rendered cells are scaled to the output amplitude.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// One factor for the whole bank; the loudest cell peaks at `amplitude`.
    #[default]
    Bank,
    /// Each cell peaks at `amplitude` (level cues between cells are lost).
    Cell,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusConfig {
    pub chirp: ChirpParams,
    pub buzz: BuzzParams,
    pub normalization: Normalization,
}

impl StimulusConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.chirp.validate()?;
        self.buzz.validate(&self.chirp)
    }
}

/// Unscaled buzz-train echoes for every cell of a bank, plus the common
/// normalization factor.
#[derive(Debug, Clone)]
pub struct EchoRenderer {
    config: StimulusConfig,
    raw: BTreeMap<u32, [Vec<f64>; 2]>,
    bank_peak: f64,
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, s| m.max(s.abs()))
}

impl EchoRenderer {
    pub fn new(bank: &IrBank, config: &StimulusConfig) -> Result<Self, SynthError> {
        config.validate()?;
        if bank.entries.is_empty() {
            return Err(SynthError::EmptyBank);
        }
        let chirp = linear_chirp(&config.chirp)?;
        let rate = config.chirp.sample_rate;
        let raw = bank
            .entries
            .par_iter()
            .map(|(&cell, pair)| {
                let ear = |ir: &[f32]| -> Result<Vec<f64>, SynthError> {
                    let ir: Vec<f64> = resample(ir, pair.sample_rate, rate).into_iter().map(f64::from).collect();
                    Ok(buzz_train(&convolve(&chirp, &ir)?, &config.buzz, rate))
                };
                Ok((cell, [ear(&pair.left)?, ear(&pair.right)?]))
            })
            .collect::<Result<BTreeMap<_, _>, SynthError>>()?;
        let bank_peak = raw.values().map(|[l, r]| peak(l).max(peak(r))).fold(0.0, f64::max);
        Ok(Self { config: *config, raw, bank_peak })
    }

    pub fn config(&self) -> &StimulusConfig {
        &self.config
    }

    pub fn cells(&self) -> impl Iterator<Item = u32> + '_ {
        self.raw.keys().copied()
    }

    /// Factor applied to the unscaled echoes of `cell`.
    pub fn scale(&self, cell: u32) -> Result<f64, SynthError> {
        let [l, r] = self.raw.get(&cell).ok_or(SynthError::UnknownCell(cell))?;
        let reference = match self.config.normalization {
            Normalization::Bank => self.bank_peak,
            Normalization::Cell => peak(l).max(peak(r)),
        };
        Ok(if reference > 0.0 { self.config.chirp.amplitude / reference } else { 0.0 })
    }

    /// Unscaled left/right echoes.
    pub fn raw(&self, cell: u32) -> Option<(&[f64], &[f64])> {
        self.raw.get(&cell).map(|[l, r]| (l.as_slice(), r.as_slice()))
    }

    pub fn render(&self, cell: u32) -> Result<BinauralBuffer, SynthError> {
        let scale = self.scale(cell)?;
        let [l, r] = &self.raw[&cell];
        let out = |x: &[f64]| x.iter().map(|s| (s * scale) as f32).collect();
        Ok(BinauralBuffer { sample_rate: self.config.chirp.sample_rate, left: out(l), right: out(r) })
    }

    pub fn render_all(&self) -> BTreeMap<u32, BinauralBuffer> {
        self.raw.keys().map(|&c| (c, self.render(c).expect("cell present"))).collect()
    }
}

/// Buzz-train echo for one cell, normalized across the whole bank.
pub fn render_cell_echo(
    bank: &IrBank,
    cell: u32,
    chirp: &ChirpParams,
    buzz: &BuzzParams,
) -> Result<BinauralBuffer, SynthError> {
    if bank.get(cell).is_none() {
        return Err(SynthError::UnknownCell(cell));
    }
    let config = StimulusConfig { chirp: *chirp, buzz: *buzz, normalization: Normalization::Bank };
    EchoRenderer::new(bank, &config)?.render(cell)
}

/// Writes `<dir>/<target_id>/<cell>.wav` for every cell of a
/// `cell_count`-cell grid; returns the paths in cell order. Cells without a
/// bank entry get silence of the same length, so asset names and sizes say
/// nothing about which cells are occupied.
pub fn write_assets(
    renderer: &EchoRenderer,
    dir: impl AsRef<Path>,
    target_id: &str,
    cell_count: usize,
) -> Result<Vec<PathBuf>, SynthError> {
    let out_dir = dir.as_ref().join(target_id);
    std::fs::create_dir_all(&out_dir)?;
    let rendered = renderer.render_all();
    let len = rendered.values().map(BinauralBuffer::len).max().unwrap_or(0);
    let rate = renderer.config.chirp.sample_rate;
    (0..cell_count as u32)
        .map(|cell| {
            let path = out_dir.join(format!("{cell}.wav"));
            let buf = match rendered.get(&cell) {
                Some(b) => {
                    let mut b = b.clone();
                    b.left.resize(len, 0.0);
                    b.right.resize(len, 0.0);
                    b
                }
                None => BinauralBuffer { sample_rate: rate, left: vec![0.0; len], right: vec![0.0; len] },
            };
            std::fs::write(&path, encode_wav(&buf))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irbank::ImpulseResponsePair;

    fn delayed_bank(lags: &[(u32, usize, f32, f32)], rate: f64) -> IrBank {
        let entries = lags
            .iter()
            .map(|&(cell, lag, gl, gr)| {
                let mut left = vec![0.0f32; 200];
                let mut right = vec![0.0f32; 200];
                left[lag] = gl;
                right[lag] = gr;
                (cell, ImpulseResponsePair { cell_index: cell, left, right, sample_rate: rate })
            })
            .collect();
        IrBank {
            target_id: "syn".into(),
            grid: (3, 1),
            cell_size: 0.05,
            head_id: "h".into(),
            sim_fingerprint: [0; 32],
            sample_rate: rate,
            entries,
        }
    }

    fn small_config() -> StimulusConfig {
        StimulusConfig { buzz: BuzzParams { repeat_count: 3, onset_interval: 0.03 }, ..Default::default() }
    }

    #[test]
    fn delayed_impulse_gives_delayed_buzz() {
        let cfg = small_config();
        let bank = delayed_bank(&[(0, 25, 1.0, 1.0)], 48000.0);
        let out = render_cell_echo(&bank, 0, &cfg.chirp, &cfg.buzz).unwrap();
        let chirp = linear_chirp(&cfg.chirp).unwrap();
        let mut expected = vec![0.0; 25];
        expected.extend(chirp);
        let expected = buzz_train(&expected, &cfg.buzz, 48000.0);
        let scale = cfg.chirp.amplitude / peak(&expected);
        assert_eq!(out.len(), expected.len() + 200 - 26);
        for (i, e) in expected.iter().enumerate() {
            assert!((out.left[i] as f64 - e * scale).abs() < 1e-6, "sample {i}");
            assert_eq!(out.left[i], out.right[i]);
        }
    }

    #[test]
    fn bank_normalization_keeps_level_ratios() {
        let bank = delayed_bank(&[(0, 10, 1.0, 0.5), (2, 10, 0.25, 0.25)], 48000.0);
        let r = EchoRenderer::new(&bank, &small_config()).unwrap();
        let loud = r.render(0).unwrap();
        let quiet = r.render(2).unwrap();
        assert!((loud.peak() - 0.9).abs() < 1e-6);
        assert!((quiet.peak() / loud.peak() - 0.25).abs() < 1e-6);
        let rms = |x: &[f32]| x.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        assert!((rms(&loud.right) / rms(&loud.left) - 0.5).abs() < 1e-6);

        let per_cell = EchoRenderer::new(&bank, &StimulusConfig { normalization: Normalization::Cell, ..small_config() }).unwrap();
        assert!((per_cell.render(2).unwrap().peak() - 0.9).abs() < 1e-6);
    }

    #[test]
    fn unknown_cell_rejected() {
        let cfg = small_config();
        let bank = delayed_bank(&[(0, 10, 1.0, 1.0)], 48000.0);
        assert!(matches!(render_cell_echo(&bank, 1, &cfg.chirp, &cfg.buzz), Err(SynthError::UnknownCell(1))));
    }

    #[test]
    fn solver_rate_bank_is_resampled() {
        let rate = 48000.0 * 4.0;
        let bank = delayed_bank(&[(0, 100, 1.0, 1.0)], rate);
        let r = EchoRenderer::new(&bank, &small_config()).unwrap();
        let out = r.render(0).unwrap();
        assert_eq!(out.sample_rate, 48000.0);
        // 100 samples at 4x rate is a 25-sample lag at 48 kHz
        let chirp = linear_chirp(&small_config().chirp).unwrap();
        let first = out.left.iter().position(|s| s.abs() > 0.05).unwrap();
        let chirp_first = chirp.iter().position(|s| s.abs() / 0.9 > 0.05).unwrap();
        assert!((first as i64 - (25 + chirp_first) as i64).abs() <= 1, "{first}");
    }

    #[test]
    fn assets_written_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let bank = delayed_bank(&[(0, 10, 1.0, 1.0), (2, 12, 0.5, 0.5)], 48000.0);
        let r = EchoRenderer::new(&bank, &small_config()).unwrap();
        let paths = write_assets(&r, dir.path(), "T1", 3).unwrap();
        assert_eq!(paths, (0..3).map(|c| dir.path().join(format!("T1/{c}.wav"))).collect::<Vec<_>>());
        let sizes: Vec<u64> = paths.iter().map(|p| std::fs::metadata(p).unwrap().len()).collect();
        assert!(sizes.iter().all(|&s| s == sizes[0]));
        let back = super::super::decode_wav(&std::fs::read(&paths[2]).unwrap()).unwrap();
        assert!((back.peak() - r.render(2).unwrap().peak()).abs() < 1.0 / 32767.0);
        let silent = super::super::decode_wav(&std::fs::read(&paths[1]).unwrap()).unwrap();
        assert_eq!(silent.peak(), 0.0);
    }
}
