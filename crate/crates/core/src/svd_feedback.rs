//! Singular-vector feedback: track the retained left singular vectors of
//! each user's channel with the differential codec and rebuild the
//! effective channel F at the base station.
//!
//! The SVD phase ambiguity would make consecutive singular vectors jump
//! arbitrarily, so each new column is phase-aligned against the previous
//! *reconstructed* column before encoding. Reconstructions are the one
//! thing both ends share, which keeps the two state machines in lockstep
//! without any side information.

use crate::bitstream::{BitReader, BitWriter, StreamHeader, FORMAT_VERSION, MAGIC_SINGULAR};
use crate::cmatrix::CMatrix;
use crate::codec::{CodecConfig, DiffCodecState};
use crate::error::{Error, Result};
use crate::fading::ChannelTrajectory;
use crate::quantizer::{singular_value_codebook, Codebook};
use crate::svd::svd_small;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Antenna/stream split of one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLayout {
    /// Receive antennas N_k.
    pub n_antennas: usize,
    /// Data streams L_k (columns of A and singular values retained).
    pub n_streams: usize,
}

/// Parameters of the singular-vector feedback pipeline. Encoder and
/// decoder must agree on all of them; the singular-value codebook is
/// derived deterministically from the seed and draw count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingularStreamConfig {
    pub codec: CodecConfig,
    pub sv_codebook_draws: usize,
    pub sv_codebook_seed: u64,
}

impl Default for SingularStreamConfig {
    fn default() -> Self {
        Self {
            codec: CodecConfig::default(),
            sv_codebook_draws: 20_000,
            sv_codebook_seed: 0x5151_C0DE,
        }
    }
}

/// Scale a singular-matrix entry to the codec's unit-variance front end;
/// the entries of an M×M Haar matrix carry second moment 1/M.
pub fn haar_normalize(entry: Complex64, m: usize) -> Complex64 {
    entry * (m as f64).sqrt()
}

/// Inverse of `haar_normalize`.
pub fn haar_denormalize(entry: Complex64, m: usize) -> Complex64 {
    entry / (m as f64).sqrt()
}

/// Monte Carlo estimate of E|A_ij|² over the left singular vectors of
/// complex Gaussian M×N_k draws (the honestly Haar-distributed columns).
pub fn haar_second_moment(m: usize, n_k: usize, draws: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut count = 0usize;
    for _ in 0..draws {
        let h = CMatrix::gaussian(&mut rng, m, n_k);
        let trip = svd_small(&h).expect("finite Gaussian draw");
        for c in 0..n_k {
            for r in 0..m {
                acc += trip.a.get(r, c).norm_sqr();
                count += 1;
            }
        }
    }
    acc / count as f64
}

/// Rotate each column by a unit phasor so it lines up with the previous
/// reconstructed column; columns with a vanishing inner product keep the
/// deterministic SVD convention.
pub fn align_columns(
    current: &[Vec<Complex64>],
    previous_reconstructed: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    assert_eq!(current.len(), previous_reconstructed.len());
    current
        .iter()
        .zip(previous_reconstructed)
        .map(|(col, prev)| {
            assert_eq!(col.len(), prev.len());
            let inner: Complex64 = prev.iter().zip(col).map(|(p, c)| p.conj() * c).sum();
            if inner.norm() < 1e-9 {
                return col.clone();
            }
            let phasor = inner.conj() / inner.norm(); // e^{-j arg<prev, col>}
            col.iter().map(|z| z * phasor).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
struct UserTracker {
    layout: UserLayout,
    /// One codec per real component of the retained A columns,
    /// column-major, real before imaginary.
    codecs: Vec<DiffCodecState>,
    sv_codebook: Codebook,
    /// Previous reconstructed columns, the alignment reference.
    prev_recon: Option<Vec<Vec<Complex64>>>,
}

impl UserTracker {
    fn new(m: usize, layout: UserLayout, cfg: &SingularStreamConfig) -> Result<Self> {
        let sv_codebook = singular_value_codebook(
            m,
            layout.n_antennas,
            2,
            cfg.sv_codebook_draws,
            cfg.sv_codebook_seed,
        )?;
        let codecs = (0..2 * m * layout.n_streams)
            .map(|_| DiffCodecState::new(cfg.codec))
            .collect();
        Ok(Self {
            layout,
            codecs,
            sv_codebook,
            prev_recon: None,
        })
    }

    fn bits_per_sample(&self, m: usize) -> usize {
        2 * (2 * m * self.layout.n_streams) + 2 * self.layout.n_streams
    }
}

/// Result of encoding a trajectory through the singular-vector path.
#[derive(Debug, Clone)]
pub struct SingularStreamOutput {
    /// Complete `ADQS` container.
    pub bitstream: Vec<u8>,
    /// Reconstructed effective channel F̂ (M×L) per sample.
    pub f_hat: Vec<CMatrix>,
    /// Phase-aligned true effective channel per sample (the tracked
    /// quantity; the reference for the feedback error).
    pub f_ref: Vec<CMatrix>,
    /// Per-sample mean |f − f̂|² over the entries of F.
    pub per_sample_mse: Vec<f64>,
    /// Trailing-window average of `per_sample_mse`.
    pub sigma2_e: Vec<f64>,
    /// Per-sample mean |a − â|² over the retained singular-vector
    /// entries, isolating the adaptive tracker from the fixed
    /// singular-value grid.
    pub per_sample_a_mse: Vec<f64>,
    pub bits_per_sample: usize,
}

impl SingularStreamOutput {
    pub fn steady_state_sigma2_e(&self, skip: usize) -> f64 {
        let tail = &self.per_sample_mse[skip.min(self.per_sample_mse.len())..];
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

fn validate_layout(m: usize, n_total: usize, users: &[UserLayout]) -> Result<()> {
    if users.is_empty() {
        return Err(Error::Domain("at least one user required".into()));
    }
    let n_sum: usize = users.iter().map(|u| u.n_antennas).sum();
    if n_sum != n_total {
        return Err(Error::Domain(format!(
            "user antennas sum to {n_sum}, trajectory has {n_total}"
        )));
    }
    let l_sum: usize = users.iter().map(|u| u.n_streams).sum();
    if l_sum > m {
        return Err(Error::Domain(format!(
            "total streams {l_sum} exceed transmit antennas {m}"
        )));
    }
    for (k, u) in users.iter().enumerate() {
        if u.n_streams == 0 || u.n_streams > u.n_antennas {
            return Err(Error::Domain(format!(
                "user {k}: need 1 <= L_k <= N_k, got L={} N={}",
                u.n_streams, u.n_antennas
            )));
        }
    }
    Ok(())
}

/// Encode the singular-vector feedback of every user across a trajectory:
/// per sample, 2 bits per real component of A(:, 1..L_k) plus 2 fixed
/// bits per retained singular value.
pub fn encode_singular_stream(
    traj: &ChannelTrajectory,
    users: &[UserLayout],
    cfg: &SingularStreamConfig,
) -> Result<SingularStreamOutput> {
    cfg.codec.predictor.validate()?;
    let (m, n_total) = traj.dims;
    validate_layout(m, n_total, users)?;
    let mut trackers = users
        .iter()
        .map(|&u| UserTracker::new(m, u, cfg))
        .collect::<Result<Vec<_>>>()?;
    let l_total: usize = users.iter().map(|u| u.n_streams).sum();
    let bits_per_sample: usize = trackers.iter().map(|t| t.bits_per_sample(m)).sum();

    let mut writer = BitWriter::new();
    let mut f_hat = Vec::with_capacity(traj.n_samples());
    let mut f_ref = Vec::with_capacity(traj.n_samples());
    let mut per_sample_mse = Vec::with_capacity(traj.n_samples());
    let mut sigma2_e = Vec::with_capacity(traj.n_samples());
    let mut per_sample_a_mse = Vec::with_capacity(traj.n_samples());
    let window = cfg.codec.error_window.max(1);
    let mut window_sum = 0.0;

    for (idx, h) in traj.samples.iter().enumerate() {
        let mut fh = CMatrix::zeros(m, l_total);
        let mut fr = CMatrix::zeros(m, l_total);
        let mut a_err = 0.0;
        let mut col_off = 0usize;
        let mut ant_off = 0usize;
        for tracker in trackers.iter_mut() {
            let lk = tracker.layout.n_streams;
            let nk = tracker.layout.n_antennas;
            let h_k = h.col_block(ant_off, ant_off + nk);
            let trip = svd_small(&h_k)?;
            let cols: Vec<Vec<Complex64>> = (0..lk).map(|c| trip.a.col(c)).collect();
            let aligned = match &tracker.prev_recon {
                Some(prev) => align_columns(&cols, prev),
                None => cols,
            };

            let mut recon_cols: Vec<Vec<Complex64>> = Vec::with_capacity(lk);
            for (l, col) in aligned.iter().enumerate() {
                let mut recon_col = Vec::with_capacity(m);
                for (r, z) in col.iter().enumerate() {
                    let zn = haar_normalize(*z, m);
                    let s = 2 * (l * m + r);
                    let (ire, re) = tracker.codecs[s].encode_sample(zn.re)?;
                    let (iim, im) = tracker.codecs[s + 1].encode_sample(zn.im)?;
                    writer.push_index(ire);
                    writer.push_index(iim);
                    let recon = haar_denormalize(Complex64::new(re, im), m);
                    a_err += (recon - z).norm_sqr();
                    recon_col.push(recon);
                }
                recon_cols.push(recon_col);
            }
            for l in 0..lk {
                let (sv_idx, sv_hat) = tracker.sv_codebook.quantize(trip.sigma[l]);
                writer.push_index(sv_idx as u8);
                for r in 0..m {
                    fh.set(r, col_off + l, recon_cols[l][r] * sv_hat);
                    fr.set(r, col_off + l, aligned[l][r] * trip.sigma[l]);
                }
            }
            tracker.prev_recon = Some(recon_cols);
            col_off += lk;
            ant_off += nk;
        }
        writer.align();

        let mse = fr.sub(&fh).data.iter().map(|z| z.norm_sqr()).sum::<f64>() / (m * l_total) as f64;
        per_sample_mse.push(mse);
        per_sample_a_mse.push(a_err / (m * l_total) as f64);
        window_sum += mse;
        if idx >= window {
            window_sum -= per_sample_mse[idx - window];
        }
        sigma2_e.push(window_sum / window.min(idx + 1) as f64);
        f_hat.push(fh);
        f_ref.push(fr);
    }

    let mut bitstream = Vec::new();
    StreamHeader {
        magic: MAGIC_SINGULAR,
        version: FORMAT_VERSION,
        bits: 2,
        m: m as u8,
        n: users.len() as u8,
        n_samples: traj.n_samples() as u32,
        sample_rate_hz: traj.profile.sample_rate_hz.round() as u32,
    }
    .write(&mut bitstream);
    for u in users {
        bitstream.push(u.n_antennas as u8);
        bitstream.push(u.n_streams as u8);
    }
    bitstream.extend_from_slice(&writer.into_bytes());

    Ok(SingularStreamOutput {
        bitstream,
        f_hat,
        f_ref,
        per_sample_mse,
        sigma2_e,
        per_sample_a_mse,
        bits_per_sample,
    })
}

/// Rebuild the F̂ sequence from an `ADQS` container. Produces exactly the
/// encoder's `f_hat` when given the encoder's configuration.
pub fn decode_singular_stream(
    bytes: &[u8],
    cfg: &SingularStreamConfig,
) -> Result<(StreamHeader, Vec<UserLayout>, Vec<CMatrix>)> {
    let (header, mut used) = StreamHeader::read(bytes)?;
    if header.magic != MAGIC_SINGULAR {
        return Err(Error::Format("not a singular-vector stream".into()));
    }
    let n_users = header.n as usize;
    if bytes.len() < used + 2 * n_users {
        return Err(Error::Format("truncated user table".into()));
    }
    let mut users = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        users.push(UserLayout {
            n_antennas: bytes[used] as usize,
            n_streams: bytes[used + 1] as usize,
        });
        used += 2;
    }
    let m = header.m as usize;
    let l_total: usize = users.iter().map(|u| u.n_streams).sum();
    if m == 0 || l_total == 0 || l_total > m || users.iter().any(|u| u.n_streams > u.n_antennas) {
        return Err(Error::Format("inconsistent user table in header".into()));
    }
    let mut trackers = users
        .iter()
        .map(|&u| UserTracker::new(m, u, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut reader = BitReader::new(&bytes[used..]);
    // a corrupt sample count should fail on read, not on allocation
    let mut out = Vec::with_capacity((header.n_samples as usize).min(1 << 16));
    for _ in 0..header.n_samples {
        let mut fh = CMatrix::zeros(m, l_total);
        let mut col_off = 0usize;
        for tracker in trackers.iter_mut() {
            let lk = tracker.layout.n_streams;
            let mut recon_cols: Vec<Vec<Complex64>> = Vec::with_capacity(lk);
            for l in 0..lk {
                let mut recon_col = Vec::with_capacity(m);
                for r in 0..m {
                    let s = 2 * (l * m + r);
                    let re = tracker.codecs[s].decode_sample(reader.read_index()?)?;
                    let im = tracker.codecs[s + 1].decode_sample(reader.read_index()?)?;
                    recon_col.push(haar_denormalize(Complex64::new(re, im), m));
                }
                recon_cols.push(recon_col);
            }
            for l in 0..lk {
                let sv_idx = reader.read_index()? as usize;
                let sv_hat = tracker.sv_codebook.levels()[sv_idx];
                for r in 0..m {
                    fh.set(r, col_off + l, recon_cols[l][r] * sv_hat);
                }
            }
            tracker.prev_recon = Some(recon_cols);
            col_off += lk;
        }
        reader.align();
        out.push(fh);
    }
    Ok((header, users, out))
}
