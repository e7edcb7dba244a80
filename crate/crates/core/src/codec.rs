//! Backward-adaptive differential codec over scalar real streams.
//!
//! The encoder (receiver side) and decoder (base-station side) hold
//! identical state machines — predictor, gain estimator, reconstruction
//! history — driven exclusively by the transmitted index stream. A single
//! step routine shared by both sides makes the state symmetry structural:
//! there is no code path in which adaptation can see the raw input.

use crate::bitstream::{BitReader, BitWriter, StreamHeader, FORMAT_VERSION, MAGIC_CHANNEL};
use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::fading::ChannelTrajectory;
use crate::gain::{GainConfig, GainState};
use crate::predictor::{PredictorConfig, PredictorState};
use crate::quantizer::{gaussian_codebook, Codebook};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Parameters shared by encoder and decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecConfig {
    pub predictor: PredictorConfig,
    pub gain: GainConfig,
    /// Trailing-window length of the running error-variance estimate.
    pub error_window: usize,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            predictor: PredictorConfig::default(),
            gain: GainConfig::default(),
            error_window: 500,
        }
    }
}

/// Complete per-stream codec state. Bit-exact equality of two states is
/// meaningful and is what the symmetry tests assert.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffCodecState {
    config: CodecConfig,
    codebook: Codebook,
    predictor: PredictorState,
    gain: GainState,
    /// d̂ₙ₋₁, the previous quantized residual.
    prev_diff: Option<f64>,
}

impl DiffCodecState {
    /// Fresh state with the fixed 2-bit Gaussian codebook.
    pub fn new(config: CodecConfig) -> Self {
        let codebook = gaussian_codebook(2).expect("2-bit codebook is always valid");
        Self {
            predictor: PredictorState::new(&config.predictor),
            gain: GainState::new(config.gain),
            config,
            codebook,
            prev_diff: None,
        }
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    /// Gain and prediction for the current sample; advances the gain
    /// estimator. Identical on both sides by construction.
    fn begin_step(&mut self) -> (f64, f64) {
        let g = match self.prev_diff {
            Some(d) => self.gain.update(d),
            None => self.gain.gain(),
        };
        let pred = self.predictor.predict(&self.config.predictor);
        (g, pred)
    }

    /// Reconstruct from the chosen index and advance predictor state.
    fn finish_step(&mut self, g: f64, pred: f64, index: usize) -> f64 {
        let dq = g * self.codebook.levels()[index];
        let recon = pred + dq;
        let last = self.prev_diff.unwrap_or(0.0);
        self.predictor.advance(&self.config.predictor, recon, last);
        self.prev_diff = Some(dq);
        recon
    }

    /// Encode one sample; returns the index and the reconstruction the
    /// decoder will produce for it.
    pub fn encode_sample(&mut self, h: f64) -> Result<(u8, f64)> {
        if !h.is_finite() {
            return Err(Error::Codec(format!("non-finite input {h}")));
        }
        let (g, pred) = self.begin_step();
        let (index, _) = self.codebook.quantize((h - pred) / g);
        let recon = self.finish_step(g, pred, index);
        Ok((index as u8, recon))
    }

    /// Decode one index into a reconstruction, advancing state exactly as
    /// the encoder did.
    pub fn decode_sample(&mut self, index: u8) -> Result<f64> {
        if (index as usize) >= self.codebook.len() {
            return Err(Error::Codec(format!(
                "index {index} out of range for {}-level codebook",
                self.codebook.len()
            )));
        }
        let (g, pred) = self.begin_step();
        Ok(self.finish_step(g, pred, index as usize))
    }

    /// Gain that would apply to the next sample (diagnostics).
    pub fn current_gain(&self) -> f64 {
        self.gain.gain()
    }
}

/// Component order of a matrix sample: transmit-major, receive-minor,
/// real before imaginary. One codec per component.
fn component_count(m: usize, n: usize) -> usize {
    2 * m * n
}

/// Encoder bank for a full M×N channel matrix stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStreamCodec {
    states: Vec<DiffCodecState>,
    m: usize,
    n: usize,
}

impl MatrixStreamCodec {
    pub fn new(m: usize, n: usize, cfg: &CodecConfig) -> Self {
        let states = (0..component_count(m, n))
            .map(|_| DiffCodecState::new(*cfg))
            .collect();
        Self { states, m, n }
    }

    /// Encode one matrix; appends 2-bit indices (component order) to `w`
    /// and returns the reconstructed matrix and the mean gain in effect.
    pub fn encode_matrix(&mut self, h: &CMatrix, w: &mut BitWriter) -> Result<(CMatrix, f64)> {
        assert_eq!((h.rows, h.cols), (self.m, self.n));
        let mut recon = CMatrix::zeros(self.m, self.n);
        let mut gain_sum = 0.0;
        for tx in 0..self.m {
            for rx in 0..self.n {
                let z = h.get(tx, rx);
                let s = 2 * (tx * self.n + rx);
                let (ire, re) = self.states[s].encode_sample(z.re)?;
                let (iim, im) = self.states[s + 1].encode_sample(z.im)?;
                w.push_index(ire);
                w.push_index(iim);
                recon.set(tx, rx, Complex64::new(re, im));
                gain_sum += self.states[s].current_gain() + self.states[s + 1].current_gain();
            }
        }
        w.align();
        Ok((recon, gain_sum / component_count(self.m, self.n) as f64))
    }

    /// Decode one matrix worth of indices.
    pub fn decode_matrix(&mut self, r: &mut BitReader) -> Result<CMatrix> {
        let mut recon = CMatrix::zeros(self.m, self.n);
        for tx in 0..self.m {
            for rx in 0..self.n {
                let s = 2 * (tx * self.n + rx);
                let re = self.states[s].decode_sample(r.read_index()?)?;
                let im = self.states[s + 1].decode_sample(r.read_index()?)?;
                recon.set(tx, rx, Complex64::new(re, im));
            }
        }
        r.align();
        Ok(recon)
    }

    pub fn states(&self) -> &[DiffCodecState] {
        &self.states
    }
}

/// Result of encoding a whole trajectory.
#[derive(Debug, Clone)]
pub struct MatrixStreamOutput {
    /// Complete `ADQF` container (header + packed indices).
    pub bitstream: Vec<u8>,
    pub reconstructed: Vec<CMatrix>,
    /// Per-sample mean |h − ĥ|² over all complex entries.
    pub per_sample_mse: Vec<f64>,
    /// Trailing-window average of `per_sample_mse`.
    pub sigma2_e: Vec<f64>,
    /// Per-sample mean gain across component codecs.
    pub per_sample_gain: Vec<f64>,
    /// Feedback bits spent per channel sample (2 per real component).
    pub bits_per_sample: usize,
}

impl MatrixStreamOutput {
    /// Mean error variance over the samples at and after `skip`.
    pub fn steady_state_sigma2_e(&self, skip: usize) -> f64 {
        let tail = &self.per_sample_mse[skip.min(self.per_sample_mse.len())..];
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Run the differential codec over every entry of a channel trajectory;
/// 2 bits per real component per sample.
pub fn encode_matrix_stream(
    traj: &ChannelTrajectory,
    cfg: &CodecConfig,
) -> Result<MatrixStreamOutput> {
    cfg.predictor.validate()?;
    let (m, n) = traj.dims;
    let n_samples = traj.n_samples();
    let mut codec = MatrixStreamCodec::new(m, n, cfg);
    let mut writer = BitWriter::new();
    let header = StreamHeader {
        magic: MAGIC_CHANNEL,
        version: FORMAT_VERSION,
        bits: 2,
        m: m as u8,
        n: n as u8,
        n_samples: n_samples as u32,
        sample_rate_hz: traj.profile.sample_rate_hz.round() as u32,
    };

    let mut reconstructed = Vec::with_capacity(n_samples);
    let mut per_sample_mse = Vec::with_capacity(n_samples);
    let mut sigma2_e = Vec::with_capacity(n_samples);
    let mut per_sample_gain = Vec::with_capacity(n_samples);
    let mut window_sum = 0.0;
    let window = cfg.error_window.max(1);

    for (idx, h) in traj.samples.iter().enumerate() {
        let (recon, mean_gain) = codec.encode_matrix(h, &mut writer)?;
        let mse = h.sub(&recon).data.iter().map(|z| z.norm_sqr()).sum::<f64>() / (m * n) as f64;
        per_sample_mse.push(mse);
        window_sum += mse;
        if idx >= window {
            window_sum -= per_sample_mse[idx - window];
        }
        sigma2_e.push(window_sum / window.min(idx + 1) as f64);
        per_sample_gain.push(mean_gain);
        reconstructed.push(recon);
    }

    let mut bitstream = Vec::new();
    header.write(&mut bitstream);
    bitstream.extend_from_slice(&writer.into_bytes());
    Ok(MatrixStreamOutput {
        bitstream,
        reconstructed,
        per_sample_mse,
        sigma2_e,
        per_sample_gain,
        bits_per_sample: 2 * component_count(m, n),
    })
}

/// Decode an `ADQF` container produced by `encode_matrix_stream`. The
/// codec configuration travels out of band and must match the encoder's.
pub fn decode_matrix_stream(
    bytes: &[u8],
    cfg: &CodecConfig,
) -> Result<(StreamHeader, Vec<CMatrix>)> {
    let (header, used) = StreamHeader::read(bytes)?;
    if header.magic != MAGIC_CHANNEL {
        return Err(Error::Format("not a channel-entry stream".into()));
    }
    if header.bits != 2 {
        return Err(Error::Format(format!(
            "unsupported codec width {} bits",
            header.bits
        )));
    }
    let (m, n) = (header.m as usize, header.n as usize);
    if m == 0 || n == 0 {
        return Err(Error::Format("zero matrix dimensions in header".into()));
    }
    let mut codec = MatrixStreamCodec::new(m, n, cfg);
    let mut reader = BitReader::new(&bytes[used..]);
    // a corrupt sample count should fail on read, not on allocation
    let mut out = Vec::with_capacity((header.n_samples as usize).min(1 << 16));
    for _ in 0..header.n_samples {
        out.push(codec.decode_matrix(&mut reader)?);
    }
    Ok((header, out))
}
