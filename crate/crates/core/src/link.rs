//! Downstream evaluation of feedback quality: SMSE metric, a stand-in
//! regularized-inversion precoder, QPSK modulation and Monte Carlo BER.
//!
//! The receive filters are genie MMSE filters computed from the true
//! channel statistics, so quantized feedback is the only impairment in
//! the loop.

use crate::cmatrix::{complex_gaussian, CMatrix};
use crate::codec::{encode_matrix_stream, CodecConfig};
use crate::error::{Error, Result};
use crate::fading::ChannelTrajectory;
use crate::quantizer::{gaussian_codebook, Codebook};
use crate::svd::svd_small;
use crate::svd_feedback::{encode_singular_stream, SingularStreamConfig, UserLayout};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// System-level dimensions and the SNR sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Transmit antennas at the base station.
    pub m: usize,
    /// Number of users.
    pub k: usize,
    /// Receive antennas per user.
    pub n_per_user: Vec<usize>,
    /// Data streams per user.
    pub l_per_user: Vec<usize>,
    /// Total transmit power.
    pub p_max: f64,
    /// Per-receive-antenna SNR points in dB.
    pub snr_db: Vec<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n_per_user.len() != self.k || self.l_per_user.len() != self.k {
            return Err(Error::Domain(
                "per-user antenna/stream lists must match the user count".into(),
            ));
        }
        let l: usize = self.l_per_user.iter().sum();
        if l == 0 || l > self.m {
            return Err(Error::Domain(format!(
                "total streams {l} must be in 1..=M ({})",
                self.m
            )));
        }
        for (n, l) in self.n_per_user.iter().zip(&self.l_per_user) {
            if l > n {
                return Err(Error::Domain(format!(
                    "streams per user ({l}) cannot exceed its antennas ({n})"
                )));
            }
        }
        if !(self.p_max > 0.0) {
            return Err(Error::Domain("p_max must be positive".into()));
        }
        Ok(())
    }

    pub fn n_total(&self) -> usize {
        self.n_per_user.iter().sum()
    }

    pub fn l_total(&self) -> usize {
        self.l_per_user.iter().sum()
    }

    pub fn user_layouts(&self) -> Vec<UserLayout> {
        self.n_per_user
            .iter()
            .zip(&self.l_per_user)
            .map(|(&n, &l)| UserLayout {
                n_antennas: n,
                n_streams: l,
            })
            .collect()
    }

    /// Noise variance for a per-receive-antenna SNR point.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.p_max / (self.m as f64 * 10f64.powf(snr_db / 10.0))
    }
}

/// Sum mean squared error of the whole downlink for an effective channel
/// F (M×L), diagonal virtual uplink power q, noise variance σ², feedback
/// error variance σ²_E and total power P:
///
///   SMSE = L − M + (σ² + σ²_E·P) · tr(J⁻¹),
///   J = F·diag(q)·Fᴴ + (σ² + σ²_E·P)·I.
pub fn smse(f: &CMatrix, q: &[f64], sigma2: f64, sigma2_e: f64, p_max: f64) -> Result<f64> {
    if q.len() != f.cols {
        return Err(Error::Domain("power vector length must equal L".into()));
    }
    if sigma2 < 0.0 || sigma2_e < 0.0 || p_max < 0.0 {
        return Err(Error::Domain(
            "variances and power must be nonnegative".into(),
        ));
    }
    let c = sigma2 + sigma2_e * p_max;
    let fq = f.mul_diag_right(q);
    let j = fq.matmul(&f.hermitian()).add_scaled_identity(c);
    let trace = j.trace_inverse_hpd()?;
    let (m, l) = (f.rows as f64, f.cols as f64);
    Ok(l - m + c * trace)
}

/// Stand-in linear precoder: regularized channel inversion with equal
/// per-stream power.
#[derive(Debug, Clone)]
pub struct PrecoderOutput {
    /// M×L beamformer with unit-norm columns.
    pub u: CMatrix,
    /// Per-stream power allocation, sums to P.
    pub p: Vec<f64>,
    /// Set when a beam column collapsed and had to be re-normalized.
    pub degenerate: bool,
}

/// U₀ = G(GᴴG + (L·σ²/P)I)⁻¹, columns normalized, equal power P/L.
pub fn mmse_precoder(g_eff: &CMatrix, p_max: f64, sigma2: f64) -> Result<PrecoderOutput> {
    let l = g_eff.cols;
    let alpha = (l as f64) * sigma2 / p_max;
    let gram = g_eff
        .hermitian()
        .matmul(g_eff)
        .add_scaled_identity(alpha.max(1e-12));
    // U₀ᴴ = (GᴴG + αI)⁻¹ Gᴴ
    let u0h = gram.solve_hpd(&g_eff.hermitian())?;
    let mut u = u0h.hermitian();
    let mut degenerate = false;
    for c in 0..u.cols {
        let norm: f64 = (0..u.rows)
            .map(|r| u.get(r, c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm < 1e-9 {
            degenerate = true;
            let fill = 1.0 / (u.rows as f64).sqrt();
            for r in 0..u.rows {
                u.set(r, c, Complex64::new(fill, 0.0));
            }
        } else {
            for r in 0..u.rows {
                u.set(r, c, u.get(r, c) / norm);
            }
        }
    }
    let p = vec![p_max / l as f64; l];
    Ok(PrecoderOutput { u, p, degenerate })
}

/// Feedback scheme evaluated by the BER simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackScheme {
    Perfect,
    Fixed2,
    Fixed3,
    AdaptiveChannel,
    AdaptiveSvd,
}

impl FeedbackScheme {
    pub fn label(&self) -> &'static str {
        match self {
            FeedbackScheme::Perfect => "perfect",
            FeedbackScheme::Fixed2 => "fixed2",
            FeedbackScheme::Fixed3 => "fixed3",
            FeedbackScheme::AdaptiveChannel => "adaptive_channel",
            FeedbackScheme::AdaptiveSvd => "adaptive_svd",
        }
    }

    /// Uplink bits per second consumed by the scheme.
    pub fn feedback_bits_per_sec(&self, sys: &SystemConfig, sample_rate_hz: u64) -> u64 {
        let components = 2 * sys.m as u64 * sys.n_total() as u64;
        match self {
            FeedbackScheme::Perfect => 0,
            FeedbackScheme::Fixed2 | FeedbackScheme::AdaptiveChannel => {
                overhead(2, components, sample_rate_hz)
            }
            FeedbackScheme::Fixed3 => overhead(3, components, sample_rate_hz),
            FeedbackScheme::AdaptiveSvd => {
                let bits: u64 = sys
                    .l_per_user
                    .iter()
                    .map(|&l| 2 * (2 * sys.m as u64 * l as u64) + 2 * l as u64)
                    .sum();
                bits * sample_rate_hz
            }
        }
    }
}

/// Feedback overhead in bits per second; exact integer arithmetic.
pub fn overhead(bits_per_component: u64, n_components: u64, sample_rate_hz: u64) -> u64 {
    bits_per_component * n_components * sample_rate_hz
}

/// One BER measurement point.
#[derive(Debug, Clone, Copy)]
pub struct BerPoint {
    pub snr_db: f64,
    pub ber: f64,
    /// 95% confidence half-width (binomial approximation).
    pub ci_halfwidth: f64,
    pub bits: u64,
    pub bit_errors: u64,
}

/// Fixed per-component quantization of a full channel matrix. The
/// codebook is matched to the component variance 1/2 of unit-power
/// entries, which makes the complex-entry error variance equal the
/// textbook distortion of the underlying codebook.
pub fn fixed_quantize_matrix(h: &CMatrix, cb: &Codebook) -> CMatrix {
    let mut out = CMatrix::zeros(h.rows, h.cols);
    for r in 0..h.rows {
        for c in 0..h.cols {
            let z = h.get(r, c);
            let (_, re) = cb.quantize(z.re);
            let (_, im) = cb.quantize(z.im);
            out.set(r, c, Complex64::new(re, im));
        }
    }
    out
}

/// Component-variance-matched fixed codebook (levels scaled by 1/√2).
pub fn fixed_component_codebook(bits: u32) -> Result<Codebook> {
    Ok(gaussian_codebook(bits)?.scaled(FRAC_1_SQRT_2))
}

/// Effective channel G = [H_1·V_1 … H_K·V_K] with V_k the dominant right
/// singular vectors of the (possibly quantized) per-user channel.
fn effective_from_channel(h: &CMatrix, sys: &SystemConfig) -> Result<CMatrix> {
    let mut g = CMatrix::zeros(sys.m, sys.l_total());
    let mut ant = 0usize;
    let mut col = 0usize;
    for k in 0..sys.k {
        let nk = sys.n_per_user[k];
        let lk = sys.l_per_user[k];
        let hk = h.col_block(ant, ant + nk);
        let trip = svd_small(&hk)?;
        let v = trip.b.col_block(0, lk);
        let gk = hk.matmul(&v);
        for c in 0..lk {
            for r in 0..sys.m {
                g.set(r, col + c, gk.get(r, c));
            }
        }
        ant += nk;
        col += lk;
    }
    Ok(g)
}

/// The per-sample effective channels a scheme presents to the precoder.
fn scheme_effective_channels(
    traj: &ChannelTrajectory,
    scheme: FeedbackScheme,
    sys: &SystemConfig,
    codec_cfg: &CodecConfig,
    sv_cfg: &SingularStreamConfig,
) -> Result<Vec<CMatrix>> {
    match scheme {
        FeedbackScheme::Perfect => traj
            .samples
            .iter()
            .map(|h| effective_from_channel(h, sys))
            .collect(),
        FeedbackScheme::Fixed2 | FeedbackScheme::Fixed3 => {
            let bits = if scheme == FeedbackScheme::Fixed2 {
                2
            } else {
                3
            };
            let cb = fixed_component_codebook(bits)?;
            traj.samples
                .iter()
                .map(|h| effective_from_channel(&fixed_quantize_matrix(h, &cb), sys))
                .collect()
        }
        FeedbackScheme::AdaptiveChannel => {
            let out = encode_matrix_stream(traj, codec_cfg)?;
            out.reconstructed
                .iter()
                .map(|h| effective_from_channel(h, sys))
                .collect()
        }
        FeedbackScheme::AdaptiveSvd => {
            let out = encode_singular_stream(traj, &sys.user_layouts(), sv_cfg)?;
            Ok(out.f_hat)
        }
    }
}

/// QPSK symbol from two bits, Gray-mapped, unit energy.
#[inline]
fn qpsk_symbol(b0: bool, b1: bool) -> Complex64 {
    Complex64::new(
        if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 },
        if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 },
    )
}

/// Monte Carlo QPSK bit error rate of a feedback scheme across the SNR
/// sweep in `sys.snr_db`. Adaptive feedback needs a settling interval, so
/// the first `skip` channel samples carry no measured traffic.
pub struct BerRunConfig {
    pub codec: CodecConfig,
    pub sv: SingularStreamConfig,
    /// Channel samples excluded from measurement while the codec settles.
    pub skip: usize,
    /// Symbol vectors per measured channel sample and pass.
    pub vectors_per_sample: usize,
    /// Stop once this many bits are measured (per SNR point) and the
    /// minimum error count is reached.
    pub min_bits: u64,
    pub min_errors: u64,
    pub max_passes: usize,
}

impl Default for BerRunConfig {
    fn default() -> Self {
        Self {
            codec: CodecConfig::default(),
            sv: SingularStreamConfig::default(),
            skip: 500,
            vectors_per_sample: 8,
            min_bits: 100_000,
            min_errors: 100,
            max_passes: 6,
        }
    }
}

pub fn ber_run(
    traj: &ChannelTrajectory,
    scheme: FeedbackScheme,
    sys: &SystemConfig,
    seed: u64,
    run_cfg: &BerRunConfig,
) -> Result<Vec<BerPoint>> {
    sys.validate()?;
    if traj.dims != (sys.m, sys.n_total()) {
        return Err(Error::Domain(format!(
            "trajectory dims {:?} do not match system ({}, {})",
            traj.dims,
            sys.m,
            sys.n_total()
        )));
    }
    let effective = scheme_effective_channels(traj, scheme, sys, &run_cfg.codec, &run_cfg.sv)?;
    let skip = run_cfg.skip.min(traj.n_samples().saturating_sub(1));
    let l_total = sys.l_total();

    let mut points = Vec::with_capacity(sys.snr_db.len());
    for (snr_idx, &snr_db) in sys.snr_db.iter().enumerate() {
        let sigma2 = sys.noise_variance(snr_db);
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(snr_idx as u64 + 1)),
        );
        let mut bits = 0u64;
        let mut errors = 0u64;

        'outer: for _pass in 0..run_cfg.max_passes {
            for n in skip..traj.n_samples() {
                let h = &traj.samples[n];
                let pre = mmse_precoder(&effective[n], sys.p_max, sigma2)?;
                let t = pre
                    .u
                    .mul_diag_right(&pre.p.iter().map(|p| p.sqrt()).collect::<Vec<_>>());
                // per-user genie MMSE receive filters from true statistics
                let mut filters = Vec::with_capacity(sys.k);
                let mut ant = 0usize;
                let mut col = 0usize;
                for k in 0..sys.k {
                    let nk = sys.n_per_user[k];
                    let lk = sys.l_per_user[k];
                    let hk = h.col_block(ant, ant + nk); // M×N_k
                    let hk_h = hk.hermitian(); // N_k×M
                    let ht = hk_h.matmul(&t); // N_k×L
                    let cov = ht.matmul(&ht.hermitian()).add_scaled_identity(sigma2);
                    let tk = ht.col_block(col, col + lk); // N_k×L_k
                    let w = cov.solve_hpd(&tk)?; // N_k×L_k
                    filters.push((w, ht));
                    ant += nk;
                    col += lk;
                }

                for _ in 0..run_cfg.vectors_per_sample {
                    // draw bits, build symbol vector
                    let mut tx_bits = Vec::with_capacity(2 * l_total);
                    let mut x = CMatrix::zeros(l_total, 1);
                    for s in 0..l_total {
                        let b0 = rng.gen::<bool>();
                        let b1 = rng.gen::<bool>();
                        tx_bits.push(b0);
                        tx_bits.push(b1);
                        x.set(s, 0, qpsk_symbol(b0, b1));
                    }
                    let mut col0 = 0usize;
                    for k in 0..sys.k {
                        let lk = sys.l_per_user[k];
                        let (w, ht) = &filters[k];
                        let nk = w.rows;
                        // y_k = Hkᴴ T x + n
                        let mut y = ht.matmul(&x);
                        for r in 0..nk {
                            let noise = complex_gaussian(&mut rng) * sigma2.sqrt();
                            y.set(r, 0, y.get(r, 0) + noise);
                        }
                        let est = w.hermitian().matmul(&y); // L_k×1
                        for s in 0..lk {
                            let z = est.get(s, 0);
                            let b0 = z.re < 0.0;
                            let b1 = z.im < 0.0;
                            let stream = col0 + s;
                            if b0 != tx_bits[2 * stream] {
                                errors += 1;
                            }
                            if b1 != tx_bits[2 * stream + 1] {
                                errors += 1;
                            }
                            bits += 2;
                        }
                        col0 += lk;
                    }
                }
            }
            if bits >= run_cfg.min_bits && errors >= run_cfg.min_errors {
                break 'outer;
            }
        }

        let ber = errors as f64 / bits.max(1) as f64;
        let ci = 1.96 * (ber * (1.0 - ber) / bits.max(1) as f64).sqrt();
        points.push(BerPoint {
            snr_db,
            ber,
            ci_halfwidth: ci,
            bits,
            bit_errors: errors,
        });
    }
    Ok(points)
}
