//! Temporally correlated flat Rayleigh MIMO channel generation.
//!
//! Each antenna pair evolves as an independent sum-of-sinusoids process
//! (Zheng's improved Jakes construction):
//!
//!   h(t) = √(1/Nₚ) Σₚ exp(j(2π f_d t cos(αₚ) + φₚ))
//!
//! with Nₚ = 16 oscillators, arrival angles αₚ = (2πp + θ − π)/(4Nₚ) and
//! independent uniform phases φₚ, θ. This gives unit power per entry
//! (E|h|² = 1) and a normalized autocorrelation that converges to
//! J₀(2π f_d τ) as the oscillator count grows.

use crate::bessel::bessel_j0;
use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Oscillators per antenna-pair process. 16 is enough for Gaussian marginals.
pub const NUM_SINUSOIDS: usize = 16;

/// Maximum Doppler shift for a vehicle speed in km/h.
pub fn doppler_frequency(speed_kmh: f64, carrier_freq_hz: f64) -> Result<f64> {
    if speed_kmh < 0.0 || !speed_kmh.is_finite() {
        return Err(Error::Domain(format!(
            "speed must be >= 0, got {speed_kmh}"
        )));
    }
    if !(carrier_freq_hz > 0.0) {
        return Err(Error::Domain(format!(
            "carrier frequency must be > 0, got {carrier_freq_hz}"
        )));
    }
    Ok(speed_kmh / 3.6 * carrier_freq_hz / SPEED_OF_LIGHT)
}

/// Isotropic-scattering autocorrelation reference J₀(2π f_d τ).
pub fn theoretical_autocorrelation(doppler_hz: f64, lag_s: f64) -> f64 {
    bessel_j0(2.0 * PI * doppler_hz * lag_s)
}

/// Mobility and sampling parameters of one simulated link.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityProfile {
    pub speed_kmh: f64,
    pub carrier_freq_hz: f64,
    /// Channel feedback rate f_s: one channel sample per frame.
    pub sample_rate_hz: f64,
    pub doppler_hz: f64,
}

impl MobilityProfile {
    pub fn new(speed_kmh: f64, carrier_freq_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Domain(format!(
                "sample rate must be > 0, got {sample_rate_hz}"
            )));
        }
        let doppler_hz = doppler_frequency(speed_kmh, carrier_freq_hz)?;
        Ok(Self {
            speed_kmh,
            carrier_freq_hz,
            sample_rate_hz,
            doppler_hz,
        })
    }

    /// Table-standard link: 2.5 GHz carrier sampled at 200 Hz.
    pub fn standard(speed_kmh: f64) -> Result<Self> {
        Self::new(speed_kmh, 2.5e9, 200.0)
    }

    /// Frame duration: one feedback update per frame, T = 1/f_s.
    pub fn frame_duration_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }
}

/// One oscillator bank: the fading process of a single antenna pair.
#[derive(Debug, Clone)]
struct SinusoidBank {
    freq_hz: [f64; NUM_SINUSOIDS],
    phase: [f64; NUM_SINUSOIDS],
}

impl SinusoidBank {
    fn draw<R: Rng>(rng: &mut R, doppler_hz: f64) -> Self {
        let theta = rng.gen::<f64>() * 2.0 * PI - PI;
        let mut freq_hz = [0.0; NUM_SINUSOIDS];
        let mut phase = [0.0; NUM_SINUSOIDS];
        for p in 0..NUM_SINUSOIDS {
            let alpha = (2.0 * PI * (p + 1) as f64 + theta - PI) / (4.0 * NUM_SINUSOIDS as f64);
            freq_hz[p] = doppler_hz * alpha.cos();
            phase[p] = rng.gen::<f64>() * 2.0 * PI - PI;
        }
        Self { freq_hz, phase }
    }

    fn sample(&self, t: f64) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for p in 0..NUM_SINUSOIDS {
            let arg = 2.0 * PI * self.freq_hz[p] * t + self.phase[p];
            re += arg.cos();
            im += arg.sin();
        }
        let scale = (1.0 / NUM_SINUSOIDS as f64).sqrt();
        Complex64::new(re * scale, im * scale)
    }

    /// Exact per-realization autocorrelation of either real component at
    /// lag τ; the ensemble average of this over θ is J₀(2π f_d τ).
    #[cfg(test)]
    fn lattice_autocorrelation(&self, lag_s: f64) -> f64 {
        self.freq_hz
            .iter()
            .map(|f| (2.0 * PI * f * lag_s).cos())
            .sum::<f64>()
            / NUM_SINUSOIDS as f64
    }
}

/// A time-indexed sequence of complex M×N channel matrices.
#[derive(Debug, Clone)]
pub struct ChannelTrajectory {
    /// (transmit antennas, total receive antennas).
    pub dims: (usize, usize),
    pub samples: Vec<CMatrix>,
    pub profile: MobilityProfile,
    pub seed: u64,
}

impl ChannelTrajectory {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// The scalar process of antenna pair (tx, rx) across time.
    pub fn entry_series(&self, tx: usize, rx: usize) -> Vec<Complex64> {
        self.samples.iter().map(|h| h.get(tx, rx)).collect()
    }
}

/// Generate a trajectory. Deterministic in all arguments; every antenna
/// pair gets an independent oscillator bank.
pub fn generate_trajectory(
    seed: u64,
    dims: (usize, usize),
    profile: &MobilityProfile,
    n_samples: usize,
) -> Result<ChannelTrajectory> {
    let (m, n) = dims;
    if m == 0 || n == 0 {
        return Err(Error::Domain(format!("dims must be nonzero, got {m}x{n}")));
    }
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be >= 1".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let banks: Vec<SinusoidBank> = (0..m * n)
        .map(|_| {
            let sub = master.gen::<u64>();
            let mut rng = ChaCha8Rng::seed_from_u64(sub);
            SinusoidBank::draw(&mut rng, profile.doppler_hz)
        })
        .collect();

    let mut samples = Vec::with_capacity(n_samples);
    for idx in 0..n_samples {
        let t = idx as f64 / profile.sample_rate_hz;
        let mut h = CMatrix::zeros(m, n);
        for tx in 0..m {
            for rx in 0..n {
                h.set(tx, rx, banks[tx * n + rx].sample(t));
            }
        }
        samples.push(h);
    }
    Ok(ChannelTrajectory {
        dims,
        samples,
        profile: profile.clone(),
        seed,
    })
}

/// Normalized empirical autocorrelation of a real sequence at lags
/// 0..=max_lag, without mean removal (the fading convention).
pub fn empirical_autocorrelation(samples: &[f64], max_lag: usize) -> Vec<f64> {
    let n = samples.len();
    assert!(max_lag < n);
    let power: f64 = samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|lag| {
            let cnt = n - lag;
            let s: f64 = (0..cnt).map(|i| samples[i] * samples[i + lag]).sum();
            s / (cnt as f64 * power)
        })
        .collect()
}
