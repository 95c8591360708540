//! PCM16 conversion and RIFF/WAVE file I/O.
//!
//! DSP math stays in real-valued samples; the integer conversion happens
//! only here, at the wire and file boundary. The conversion rule is pinned:
//! scale by 32767, round half away from zero, clamp to [−32768, 32767].

use std::path::Path;

use crate::error::{Error, Result};
use crate::timebase::Waveform;

const PCM16_SCALE: f32 = 32767.0;

/// Converts one real sample to PCM16: `round_half_away(x · 32767)`,
/// clamped.
pub fn sample_to_pcm16(x: f32) -> i16 {
    // f32::round rounds half away from zero, which is exactly the rule.
    (x * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

/// Inverse mapping used on the receiving side: `i / 32767`.
pub fn pcm16_to_sample(i: i16) -> f32 {
    i as f32 / PCM16_SCALE
}

/// Little-endian PCM16 bytes of a waveform: the audio-frame payload
/// encoding.
pub fn pcm16_bytes(w: &Waveform) -> Vec<u8> {
    let mut out = Vec::with_capacity(w.len() * 2);
    for &s in w.samples() {
        out.extend_from_slice(&sample_to_pcm16(s).to_le_bytes());
    }
    out
}

/// Decodes little-endian PCM16 bytes back into a waveform.
pub fn waveform_from_pcm16(bytes: &[u8], sample_rate: u32) -> Result<Waveform> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::invalid_argument("PCM16 payload has odd length"));
    }
    let samples = bytes
        .chunks_exact(2)
        .map(|pair| pcm16_to_sample(i16::from_le_bytes([pair[0], pair[1]])))
        .collect();
    Ok(Waveform::new(samples, sample_rate))
}

/// Writes a waveform as a mono PCM16 RIFF/WAVE file.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| Error::invalid_argument(format!("cannot create {}: {e}", path.display())))?;
    for &s in w.samples() {
        writer
            .write_sample(sample_to_pcm16(s))
            .map_err(|e| Error::invalid_argument(format!("wav write failed: {e}")))?;
    }
    writer
        .finalize()
        .map_err(|e| Error::invalid_argument(format!("wav finalize failed: {e}")))?;
    Ok(())
}

/// Reads a mono PCM16 RIFF/WAVE file.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::invalid_argument(format!("cannot open {}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 {
        return Err(Error::invalid_argument(format!(
            "{} must be mono PCM16 (got {} channels, {} bits)",
            path.display(),
            spec.channels,
            spec.bits_per_sample
        )));
    }
    let samples: std::result::Result<Vec<i16>, _> = reader.samples::<i16>().collect();
    let samples =
        samples.map_err(|e| Error::invalid_argument(format!("wav read failed: {e}")))?;
    Ok(Waveform::new(
        samples.into_iter().map(pcm16_to_sample).collect(),
        spec.sample_rate,
    ))
}
