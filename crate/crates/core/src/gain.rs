//! Step-size (gain) adaptation for the differential quantizer.
//!
//! The gain normalizes the residual so the unit-variance quantizer neither
//! overloads nor drowns in granular noise. It is driven purely by quantized
//! residuals, so both ends of the link can run it in lockstep.

use serde::{Deserialize, Serialize};

/// Gain estimator parameters (defaults follow the reference design table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainConfig {
    /// Bias compensator applied on top of the energy estimate.
    pub bias_comp: f64,
    /// Memory factor of the energy recursion, in (0, 1).
    pub memory: f64,
    /// Gain floor; keeps a dead stream from freezing the quantizer.
    pub floor: f64,
    /// Gain used before the first residual is available.
    pub initial: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            bias_comp: 1.1,
            memory: 0.9,
            floor: 1e-6,
            initial: 1.0,
        }
    }
}

/// Running state of the gain estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainState {
    /// Exponentially weighted residual energy.
    energy: f64,
    gain: f64,
    cfg: GainConfig,
}

impl GainState {
    /// State whose energy accumulator starts at the expected residual
    /// energy of an untrained predictor on a unit-power complex entry
    /// (component variance 1/2), so the estimate moves smoothly from g₀
    /// instead of collapsing while the accumulator warms up from zero.
    pub fn new(cfg: GainConfig) -> Self {
        Self {
            energy: 0.5 / (1.0 - cfg.memory),
            gain: cfg.initial,
            cfg,
        }
    }

    /// State with an explicit initial energy (0 gives the literal
    /// cold-start recursion).
    pub fn from_energy(cfg: GainConfig, energy: f64) -> Self {
        Self {
            energy,
            gain: cfg.initial,
            cfg,
        }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Advance with the previous quantized residual and return the gain to
    /// use for the current sample:
    ///
    ///   v ← k₂·v + d̂², g = max(floor, k₁·√((1−k₂)·v))
    pub fn update(&mut self, last_quantized_diff: f64) -> f64 {
        let d2 = last_quantized_diff * last_quantized_diff;
        self.energy = self.cfg.memory * self.energy + d2;
        let g = self.cfg.bias_comp * ((1.0 - self.cfg.memory) * self.energy).sqrt();
        self.gain = g.max(self.cfg.floor);
        self.gain
    }
}
