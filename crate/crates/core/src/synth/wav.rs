//! Canonical 44-byte-header PCM16 stereo WAV.

use super::{BinauralBuffer, SynthError};

pub const WAV_HEADER_LEN: usize = 44;

fn quantize(x: f32) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

pub fn encode_wav(buffer: &BinauralBuffer) -> Vec<u8> {
    let frames = buffer.left.len().min(buffer.right.len());
    let data_len = (frames * 4) as u32;
    let rate = buffer.sample_rate.round() as u32;
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for (l, r) in buffer.left.iter().zip(&buffer.right) {
        out.extend_from_slice(&quantize(*l).to_le_bytes());
        out.extend_from_slice(&quantize(*r).to_le_bytes());
    }
    out
}

/// Reads back what [`encode_wav`] writes. Other chunks before `data` are
/// skipped; only PCM16 stereo is accepted.
pub fn decode_wav(bytes: &[u8]) -> Result<BinauralBuffer, SynthError> {
    let err = |offset: usize, message: &str| SynthError::Wav { offset, message: message.to_string() };
    let u16_at = |o: usize| bytes.get(o..o + 2).map(|b| u16::from_le_bytes([b[0], b[1]]));
    let u32_at = |o: usize| bytes.get(o..o + 4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    if bytes.get(0..4) != Some(b"RIFF") || bytes.get(8..12) != Some(b"WAVE") {
        return Err(err(0, "not a RIFF/WAVE file"));
    }
    let mut pos = 12;
    let mut rate = None;
    loop {
        let id = bytes.get(pos..pos + 4).ok_or_else(|| err(pos, "missing data chunk"))?;
        let len = u32_at(pos + 4).ok_or_else(|| err(pos + 4, "truncated chunk header"))? as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                let (fmt, ch, bits) = (u16_at(body), u16_at(body + 2), u16_at(body + 14));
                if fmt != Some(1) || ch != Some(2) || bits != Some(16) {
                    return Err(err(body, "only PCM16 stereo is supported"));
                }
                rate = u32_at(body + 4);
            }
            b"data" => {
                let rate = rate.ok_or_else(|| err(pos, "data chunk before fmt chunk"))?;
                let data = bytes.get(body..body + len).ok_or_else(|| err(body, "truncated data chunk"))?;
                let mut left = Vec::with_capacity(len / 4);
                let mut right = Vec::with_capacity(len / 4);
                for frame in data.chunks_exact(4) {
                    left.push(i16::from_le_bytes([frame[0], frame[1]]) as f32 / 32767.0);
                    right.push(i16::from_le_bytes([frame[2], frame[3]]) as f32 / 32767.0);
                }
                return Ok(BinauralBuffer { sample_rate: rate as f64, left, right });
            }
            _ => {}
        }
        pos = body + len + (len & 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn one_silent_frame() {
        let b = BinauralBuffer { sample_rate: 48000.0, left: vec![0.0], right: vec![0.0] };
        let bytes = encode_wav(&b);
        assert_eq!(bytes.len(), 48);
        assert_eq!(&bytes[44..], &[0, 0, 0, 0]);
    }

    #[test]
    fn full_scale_maps_to_32767() {
        let b = BinauralBuffer { sample_rate: 48000.0, left: vec![1.0], right: vec![-1.0] };
        let bytes = encode_wav(&b);
        assert_eq!(i16::from_le_bytes([bytes[44], bytes[45]]), 32767);
        assert_eq!(i16::from_le_bytes([bytes[46], bytes[47]]), -32767);
    }

    #[test]
    fn round_trip_within_one_lsb() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let left: Vec<f32> = (0..4000).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let right: Vec<f32> = (0..4000).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let b = BinauralBuffer { sample_rate: 44100.0, left, right };
        let back = decode_wav(&encode_wav(&b)).unwrap();
        assert_eq!(back.sample_rate, 44100.0);
        let err = b.left.iter().chain(&b.right).zip(back.left.iter().chain(&back.right)).map(|(a, c)| (a - c).abs()).fold(0.0, f32::max);
        assert!(err <= 1.0 / 32768.0, "{err}");
    }

    #[test]
    fn header_fields() {
        let b = BinauralBuffer { sample_rate: 48000.0, left: vec![0.0; 10], right: vec![0.0; 10] };
        let h = encode_wav(&b);
        assert_eq!(&h[0..4], b"RIFF");
        assert_eq!(u32::from_le_bytes(h[4..8].try_into().unwrap()), 36 + 40);
        assert_eq!(u32::from_le_bytes(h[24..28].try_into().unwrap()), 48000);
        assert_eq!(u32::from_le_bytes(h[28..32].try_into().unwrap()), 192000);
        assert_eq!(u32::from_le_bytes(h[40..44].try_into().unwrap()), 40);
    }

    #[test]
    fn garbage_rejected() {
        assert!(decode_wav(b"not a wav file at all").is_err());
        let b = BinauralBuffer { sample_rate: 48000.0, left: vec![0.5; 10], right: vec![0.5; 10] };
        let bytes = encode_wav(&b);
        assert!(decode_wav(&bytes[..50]).is_err());
    }
}
