use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use hound::{SampleFormat, WavSpec};

use crate::error::{Error, Result};
use crate::signal::AudioClip;

const FULL_SCALE: f64 = 32768.0;

/// 16-bit PCM code of a sample; values outside [-1, 1) saturate.
pub fn pcm16(x: f64) -> i16 {
    (x * FULL_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

/// Rounds every sample to the 16-bit PCM grid, as a WAV round trip would.
pub fn quantize_pcm16(clip: &AudioClip) -> AudioClip {
    AudioClip {
        samples: clip
            .samples
            .iter()
            .map(|&x| pcm16(x) as f64 / FULL_SCALE)
            .collect(),
        sample_rate: clip.sample_rate,
    }
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    let p = path.display();
    match e {
        hound::Error::IoError(io) => Error::Io(std::io::Error::new(io.kind(), format!("{p}: {io}"))),
        hound::Error::FormatError(msg) => Error::format(format!("{p}: {msg}")),
        hound::Error::Unsupported => {
            Error::format(format!("{p}: fmt chunk: unsupported or compressed encoding"))
        }
        other => Error::format(format!("{p}: {other}")),
    }
}

/// Writes `clip` as mono 16-bit PCM.
pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let file = BufWriter::new(File::create(path)?);
    let mut w = hound::WavWriter::new(file, spec).map_err(|e| wav_error(path, e))?;
    let mut samples = w.get_i16_writer(clip.samples.len() as u32);
    for &x in &clip.samples {
        samples.write_sample(pcm16(x));
    }
    samples.flush().map_err(|e| wav_error(path, e))?;
    w.finalize().map_err(|e| wav_error(path, e))
}

/// Reads a mono 16-bit PCM WAV file. Other layouts are format errors naming
/// the `fmt ` chunk; a truncated `data` chunk is an I/O error.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let file = BufReader::new(File::open(path)?);
    let mut r = hound::WavReader::new(file).map_err(|e| wav_error(path, e))?;
    let spec = r.spec();
    let p = path.display();
    if spec.channels != 1 {
        return Err(Error::format(format!(
            "{p}: fmt chunk: {} channels, expected mono",
            spec.channels
        )));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::format(format!(
            "{p}: fmt chunk: {}-bit {:?} samples, expected 16-bit PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let declared = r.len() as usize;
    let samples = r
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / FULL_SCALE))
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| wav_error(path, e))?;
    if samples.len() != declared {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!("{p}: data chunk truncated"),
        )));
    }
    AudioClip::new(samples, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut samples: Vec<f64> = (0..5000).map(|_| rng.random_range(-1.0..1.0)).collect();
        samples.extend([1.0, -1.0, 0.0]);
        let clip = AudioClip::new(samples, 32000).unwrap();
        write_wav(&clip, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, 32000);
        assert_eq!(back.len(), clip.len());
        let err = clip
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 2f64.powi(-15), "{err}");
        assert_eq!(back, quantize_pcm16(&clip));
    }

    fn write_raw(path: &Path, spec: WavSpec, n: usize) {
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for i in 0..n * spec.channels as usize {
            match spec.sample_format {
                SampleFormat::Int => w.write_sample(i as i16).unwrap(),
                SampleFormat::Float => w.write_sample(0.1f32).unwrap(),
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn rejects_stereo_and_float() {
        let dir = tempfile::tempdir().unwrap();
        let stereo = dir.path().join("s.wav");
        write_raw(
            &stereo,
            WavSpec {
                channels: 2,
                sample_rate: 32000,
                bits_per_sample: 16,
                sample_format: SampleFormat::Int,
            },
            10,
        );
        let err = read_wav(&stereo).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(err.to_string().contains("fmt chunk"), "{err}");

        let float = dir.path().join("f.wav");
        write_raw(
            &float,
            WavSpec {
                channels: 1,
                sample_rate: 32000,
                bits_per_sample: 32,
                sample_format: SampleFormat::Float,
            },
            10,
        );
        assert!(matches!(read_wav(&float).unwrap_err(), Error::Format(_)));
    }

    #[test]
    fn truncated_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let clip = AudioClip::new(vec![0.25; 1000], 32000).unwrap();
        write_wav(&clip, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 100]).unwrap();
        assert!(matches!(read_wav(&path).unwrap_err(), Error::Io(_)));
        std::fs::write(&path, &bytes[..20]).unwrap();
        assert!(matches!(read_wav(&path).unwrap_err(), Error::Io(_) | Error::Format(_)));
    }

    #[test]
    fn not_a_riff_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        std::fs::write(&path, b"definitely not audio, just some bytes here").unwrap();
        assert!(matches!(read_wav(&path).unwrap_err(), Error::Format(_)));
    }
}
