//! One-step-ahead prediction of reconstructed sample streams.
//!
//! Two modes with identical prediction form h̃ₙ = Σⱼ wⱼ ĥₙ₋ⱼ:
//!
//! * `Lls` — block least squares refit once per sample over a trailing
//!   learning window, through ridge-regularized normal equations.
//! * `Rls` — exponentially weighted recursive least squares: rank-1
//!   updates of the normal-equation pair followed by a direct solve.
//!
//! Both adapt from reconstructions only, never from the raw input, which
//! is what lets the decoder mirror the encoder without side information.

use crate::bessel::bessel_j0;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorMode {
    Lls,
    Rls,
}

/// Which desired signal drives the cross-correlation recursion in RLS
/// mode. `Desired` pairs the regressor with the newest reconstruction
/// (the Wiener-Hopf form); `Residual` pairs it with the previous
/// quantized residual and is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiForm {
    Desired,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    /// Predictor order T.
    pub order: usize,
    /// RLS forgetting factor λ in (0, 1].
    pub forgetting: f64,
    /// LLS learning window length.
    pub learning_period: usize,
    pub mode: PredictorMode,
    pub psi_form: PsiForm,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            order: 2,
            forgetting: 0.98,
            learning_period: 100,
            mode: PredictorMode::Rls,
            psi_form: PsiForm::Desired,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Domain("predictor order must be >= 1".into()));
        }
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(Error::Domain(format!(
                "forgetting factor must be in (0,1], got {}",
                self.forgetting
            )));
        }
        if self.learning_period < self.order {
            return Err(Error::Domain(
                "learning period must be at least the predictor order".into(),
            ));
        }
        Ok(())
    }
}

/// Diagonal loading of the RLS normal matrix at start-up. Sized to the
/// regressor power so the first rank-deficient updates cannot produce
/// runaway weights; forgetting erases it within a few dozen samples.
const RLS_INIT_DIAG: f64 = 1.0;

/// Pole-radius cap on the adapted predictor. The prediction loop runs on
/// its own reconstructions, so weights whose characteristic roots leave
/// the unit disc lock onto their own exponential growth; estimation
/// noise pushes them there at high channel correlation. Both ends apply
/// the same projection, so symmetry is unaffected.
const MAX_POLE_RADIUS: f64 = 0.99;

/// Project weights so the roots of z^T − Σ wⱼ z^(T−j) stay within
/// `MAX_POLE_RADIUS`. Scaling wⱼ by sʲ scales every root by s; orders
/// above two use a conservative Cauchy-style bound.
fn stabilize_weights(w: &mut [f64]) {
    let radius = match w.len() {
        0 => return,
        1 => w[0].abs(),
        2 => {
            let disc = w[0] * w[0] + 4.0 * w[1];
            if disc >= 0.0 {
                let sq = disc.sqrt();
                (0.5 * (w[0] + sq).abs()).max(0.5 * (w[0] - sq).abs())
            } else {
                // complex pair: |r|² = |r₁r₂| = |w₂|
                (-w[1]).abs().sqrt()
            }
        }
        _ => {
            // smallest ρ with Σ|wⱼ|ρ⁻ʲ ≤ 1 bounds every root
            let f = |rho: f64| -> f64 {
                w.iter()
                    .enumerate()
                    .map(|(j, wj)| wj.abs() / rho.powi(j as i32 + 1))
                    .sum()
            };
            let mut lo = 1e-6;
            let mut hi = 1.0 + w.iter().map(|x| x.abs()).sum::<f64>();
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    };
    if radius > MAX_POLE_RADIUS {
        let s = MAX_POLE_RADIUS / radius;
        let mut f = 1.0;
        for wj in w.iter_mut() {
            f *= s;
            *wj *= f;
        }
    }
}

/// Running predictor state for one scalar stream.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorState {
    weights: Vec<f64>,
    /// T×T regressor autocorrelation estimate, row-major.
    corr: Vec<f64>,
    /// T×1 regressor/desired cross-correlation estimate.
    cross: Vec<f64>,
    /// Most recent reconstructions, newest at the back.
    history: VecDeque<f64>,
    capacity: usize,
}

impl PredictorState {
    pub fn new(cfg: &PredictorConfig) -> Self {
        let t = cfg.order;
        let mut corr = vec![0.0; t * t];
        for i in 0..t {
            corr[i * t + i] = RLS_INIT_DIAG;
        }
        let capacity = (cfg.learning_period + t).max(t);
        Self {
            weights: vec![0.0; t],
            corr,
            cross: vec![0.0; t],
            history: VecDeque::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ĥₙ₋ⱼ for j = 1..=T; entries older than the history read as zero.
    fn regressor(&self, t: usize) -> Vec<f64> {
        (1..=t)
            .map(|j| {
                if self.history.len() >= j {
                    self.history[self.history.len() - j]
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// h̃ₙ = Σⱼ wⱼ ĥₙ₋ⱼ.
    pub fn predict(&self, cfg: &PredictorConfig) -> f64 {
        self.regressor(cfg.order)
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum()
    }

    /// Advance the state with a new reconstruction. `last_quantized_diff`
    /// feeds the residual form of the RLS cross-correlation recursion and
    /// is ignored otherwise.
    pub fn advance(
        &mut self,
        cfg: &PredictorConfig,
        reconstruction: f64,
        last_quantized_diff: f64,
    ) {
        match cfg.mode {
            PredictorMode::Rls => {
                let t = cfg.order;
                let x = self.regressor(t);
                let lambda = cfg.forgetting;
                for i in 0..t {
                    for j in 0..t {
                        self.corr[i * t + j] = lambda * self.corr[i * t + j] + x[i] * x[j];
                    }
                }
                let desired = match cfg.psi_form {
                    PsiForm::Desired => reconstruction,
                    PsiForm::Residual => last_quantized_diff,
                };
                for i in 0..t {
                    self.cross[i] = lambda * self.cross[i] + x[i] * desired;
                }
                self.weights = solve_normal_equations(&self.corr, &self.cross, t);
                stabilize_weights(&mut self.weights);
                self.push(reconstruction);
            }
            PredictorMode::Lls => {
                self.push(reconstruction);
                if self.history.len() >= cfg.learning_period + cfg.order {
                    let hist: Vec<f64> = self.history.iter().cloned().collect();
                    self.weights = lls_fit(&hist, cfg);
                    stabilize_weights(&mut self.weights);
                } else {
                    // no full learning window yet: quantize the raw value
                    self.weights = vec![0.0; cfg.order];
                }
            }
        }
    }

    fn push(&mut self, v: f64) {
        self.history.push_back(v);
        while self.history.len() > self.capacity {
            self.history.pop_front();
        }
    }
}

/// Fit prediction weights on the trailing learning window of `history`
/// (oldest first) by ridge-regularized normal equations.
///
/// Requires `history.len() >= learning_period + order`.
pub fn lls_fit(history: &[f64], cfg: &PredictorConfig) -> Vec<f64> {
    let t = cfg.order;
    let lp = cfg.learning_period;
    assert!(
        history.len() >= lp + t,
        "lls_fit needs {} samples, got {}",
        lp + t,
        history.len()
    );
    let n = history.len();
    let mut ata = vec![0.0f64; t * t];
    let mut atb = vec![0.0f64; t];
    for i in 1..=lp {
        let target = history[n - i];
        // regressor row: history[n - i - 1] ... history[n - i - t]
        for j in 0..t {
            let xj = history[n - i - 1 - j];
            atb[j] += xj * target;
            for k in j..t {
                ata[j * t + k] += xj * history[n - i - 1 - k];
            }
        }
    }
    for j in 0..t {
        for k in 0..j {
            ata[j * t + k] = ata[k * t + j];
        }
    }
    let trace: f64 = (0..t).map(|i| ata[i * t + i]).sum();
    let ridge = 1e-8 * trace / t as f64;
    for i in 0..t {
        ata[i * t + i] += ridge;
    }
    solve_symmetric(&ata, &atb, t).unwrap_or_else(|| vec![0.0; t])
}

/// Solve the RLS normal equations; falls back to Tikhonov loading when the
/// pivot-based condition estimate exceeds 1e12.
fn solve_normal_equations(corr: &[f64], cross: &[f64], t: usize) -> Vec<f64> {
    if let Some((w, cond)) = solve_with_condition(corr, cross, t) {
        if cond < 1e12 {
            return w;
        }
    }
    let trace: f64 = (0..t).map(|i| corr[i * t + i]).sum();
    let load = 1e-10 * (trace / t as f64).max(1e-30);
    let mut loaded = corr.to_vec();
    for i in 0..t {
        loaded[i * t + i] += load;
    }
    solve_symmetric(&loaded, cross, t).unwrap_or_else(|| vec![0.0; t])
}

fn solve_with_condition(a: &[f64], b: &[f64], n: usize) -> Option<(Vec<f64>, f64)> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let mut max_entry = 0.0f64;
    for v in &m {
        max_entry = max_entry.max(v.abs());
    }
    if max_entry == 0.0 {
        return Some((vec![0.0; n], 1.0));
    }
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let p = m[col * n + col];
        if p == 0.0 {
            return None;
        }
        min_pivot = min_pivot.min(p.abs());
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in col + 1..n {
            s -= m[col * n + c] * x[c];
        }
        x[col] = s / m[col * n + col];
    }
    Some((x, max_entry / min_pivot))
}

fn solve_symmetric(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    solve_with_condition(a, b, n).map(|(w, _)| w)
}

/// Direct single-step RLS update (the module-level operation). The codec
/// drives this through `PredictorState::advance`.
pub fn rls_update(
    state: &mut PredictorState,
    cfg: &PredictorConfig,
    new_reconstruction: f64,
    last_quantized_diff: f64,
) {
    debug_assert_eq!(cfg.mode, PredictorMode::Rls);
    state.advance(cfg, new_reconstruction, last_quantized_diff);
}

/// One-step Wiener prediction residual variance of a unit-power complex
/// fading entry with J₀ autocovariance, for an order-T predictor:
/// σ²_d = 1 − ψᵀ Φ⁻¹ ψ with Φᵢⱼ = ρ(|i−j|), ψᵢ = ρ(i+1),
/// ρ(k) = J₀(2π f_d k / f_s).
pub fn wiener_residual_variance(doppler_hz: f64, sample_rate_hz: f64, order: usize) -> f64 {
    let rho = |k: usize| bessel_j0(2.0 * PI * doppler_hz * k as f64 / sample_rate_hz);
    let t = order;
    let mut phi = vec![0.0; t * t];
    let mut psi = vec![0.0; t];
    for i in 0..t {
        psi[i] = rho(i + 1);
        for j in 0..t {
            phi[i * t + j] = rho(i.abs_diff(j));
        }
    }
    // the loaded solve handles the singular fully-correlated case (f_d = 0)
    let w = solve_normal_equations(&phi, &psi, t);
    let gain: f64 = w.iter().zip(&psi).map(|(a, b)| a * b).sum();
    (1.0 - gain).max(0.0)
}
