//! Fixed and data-designed scalar quantizers.
//!
//! The codec front end is the 2-bit unit-variance Gaussian Lloyd-Max
//! quantizer; Lloyd-Max design from samples and scalar k-means are used to
//! build codebooks for singular values and for validating the Gaussian
//! limit of singular-vector entries.

use crate::error::{Error, Result};
use crate::svd::svd_small;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Lloyd-Max levels for the standard normal density, 2 bits.
pub const GAUSS_LEVELS_2BIT: [f64; 4] = [
    -1.5104176084990954,
    -0.4527800346364920,
    0.4527800346364920,
    1.5104176084990954,
];

/// Lloyd-Max levels for the standard normal density, 3 bits.
pub const GAUSS_LEVELS_3BIT: [f64; 8] = [
    -2.1519457045446177,
    -1.3439092785050720,
    -0.7560052812120481,
    -0.2450941789441499,
    0.2450941789441499,
    0.7560052812120481,
    1.3439092785050720,
    2.1519457045446177,
];

/// Mean squared error of the 2-bit quantizer on standard normal input.
pub const GAUSS_MSE_2BIT: f64 = 0.1174818478;
/// Mean squared error of the 3-bit quantizer on standard normal input.
pub const GAUSS_MSE_3BIT: f64 = 0.0345477608;

/// Sorted scalar quantization levels plus midpoint decision thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    levels: Vec<f64>,
    thresholds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CodebookJson {
    bits: u32,
    levels: Vec<f64>,
}

impl Codebook {
    /// Build from levels; they must be strictly increasing and a power of
    /// two in count.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || !levels.len().is_power_of_two() {
            return Err(Error::Domain(format!(
                "codebook size must be a power of two, got {}",
                levels.len()
            )));
        }
        for w in levels.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain(format!(
                    "levels must be strictly increasing ({} !< {})",
                    w[0], w[1]
                )));
            }
        }
        let thresholds = levels.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        Ok(Self { levels, thresholds })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.levels.len().trailing_zeros()
    }

    /// Nearest level by Euclidean distance; a tie at a threshold resolves
    /// to the lower index so encoder and decoder agree everywhere.
    pub fn quantize(&self, x: f64) -> (usize, f64) {
        let mut idx = self.thresholds.len();
        for (i, t) in self.thresholds.iter().enumerate() {
            if x <= *t {
                idx = i;
                break;
            }
        }
        (idx, self.levels[idx])
    }

    /// Codebook scaled by a positive factor.
    pub fn scaled(&self, s: f64) -> Codebook {
        assert!(s > 0.0);
        Codebook {
            levels: self.levels.iter().map(|l| l * s).collect(),
            thresholds: self.thresholds.iter().map(|t| t * s).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CodebookJson {
            bits: self.bits(),
            levels: self.levels.clone(),
        })
        .expect("codebook serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let parsed: CodebookJson =
            serde_json::from_str(s).map_err(|e| Error::Format(format!("codebook json: {e}")))?;
        let cb = Self::from_levels(parsed.levels)?;
        if cb.bits() != parsed.bits {
            return Err(Error::Format(format!(
                "declared {} bits but {} levels",
                parsed.bits,
                cb.len()
            )));
        }
        Ok(cb)
    }
}

/// The fixed unit-variance Gaussian codebook at 2 or 3 bits.
pub fn gaussian_codebook(bits: u32) -> Result<Codebook> {
    match bits {
        2 => Codebook::from_levels(GAUSS_LEVELS_2BIT.to_vec()),
        3 => Codebook::from_levels(GAUSS_LEVELS_3BIT.to_vec()),
        _ => Err(Error::Domain(format!(
            "fixed Gaussian codebook supports 2 or 3 bits, got {bits}"
        ))),
    }
}

/// Empirical mean squared quantization error of a codebook on samples.
pub fn empirical_mse(cb: &Codebook, samples: &[f64]) -> f64 {
    samples
        .iter()
        .map(|&x| {
            let (_, l) = cb.quantize(x);
            (x - l) * (x - l)
        })
        .sum::<f64>()
        / samples.len() as f64
}

/// Lloyd-Max design on empirical samples: alternate conditional-mean level
/// updates and midpoint threshold updates until levels move less than 1e-6
/// or 500 iterations pass.
pub fn lloyd_max_design(samples: &[f64], bits: u32) -> Result<Codebook> {
    lloyd_max_design_capped(samples, bits, 500)
}

fn lloyd_max_design_capped(samples: &[f64], bits: u32, max_iters: usize) -> Result<Codebook> {
    let k = 1usize << bits;
    if samples.len() < 100 * k {
        return Err(Error::Domain(format!(
            "need at least {} samples for {bits}-bit design, got {}",
            100 * k,
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    if !(hi > lo) {
        return Err(Error::Domain(
            "degenerate sample set: all values equal".into(),
        ));
    }
    // quantile-spaced initialization keeps every cell populated
    let mut levels: Vec<f64> = (0..k)
        .map(|i| sorted[(2 * i + 1) * (sorted.len() - 1) / (2 * k)])
        .collect();
    dedup_levels(&mut levels, lo, hi);

    for _ in 0..max_iters {
        let thresholds: Vec<f64> = levels.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        let mut cell = 0usize;
        for &x in &sorted {
            while cell < thresholds.len() && x > thresholds[cell] {
                cell += 1;
            }
            sums[cell] += x;
            counts[cell] += 1;
        }
        let mut moved = 0.0f64;
        for i in 0..k {
            if counts[i] > 0 {
                let c = sums[i] / counts[i] as f64;
                moved = moved.max((c - levels[i]).abs());
                levels[i] = c;
            }
        }
        dedup_levels(&mut levels, lo, hi);
        if moved < 1e-6 {
            break;
        }
    }
    Codebook::from_levels(levels)
}

fn dedup_levels(levels: &mut [f64], lo: f64, hi: f64) {
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let eps = (hi - lo).abs().max(1.0) * 1e-12;
    for i in 1..levels.len() {
        if levels[i] <= levels[i - 1] {
            levels[i] = levels[i - 1] + eps;
        }
    }
}

/// Scalar k-means with greedy farthest-point seeding from a fixed seed;
/// empty clusters are re-seeded to the sample farthest from its centroid.
pub fn kmeans_codebook(samples: &[f64], k: usize) -> Result<Codebook> {
    if !k.is_power_of_two() || k == 0 {
        return Err(Error::Domain(format!(
            "codebook size must be a power of two, got {k}"
        )));
    }
    if samples.len() < 100 * k {
        return Err(Error::Domain(format!(
            "need at least {} samples for k = {k}, got {}",
            100 * k,
            samples.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b6d_6561_6e73); // fixed seeding
    let mut centroids = Vec::with_capacity(k);
    centroids.push(samples[rand::Rng::gen_range(&mut rng, 0..samples.len())]);
    while centroids.len() < k {
        let far = samples
            .iter()
            .cloned()
            .max_by(|a, b| {
                let da = nearest_dist(&centroids, *a);
                let db = nearest_dist(&centroids, *b);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        centroids.push(far);
    }

    let mut assign = vec![0usize; samples.len()];
    for _ in 0..500 {
        for (i, &x) in samples.iter().enumerate() {
            assign[i] = nearest_index(&centroids, x);
        }
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for (i, &x) in samples.iter().enumerate() {
            sums[assign[i]] += x;
            counts[assign[i]] += 1;
        }
        let mut moved = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed to the sample farthest from its centroid
                let (j, _) = samples
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        let da = (**a - centroids[nearest_index(&centroids, **a)]).abs();
                        let db = (**b - centroids[nearest_index(&centroids, **b)]).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                moved = 1.0;
                centroids[c] = samples[j];
            } else {
                let nc = sums[c] / counts[c] as f64;
                moved = moved.max((nc - centroids[c]).abs());
                centroids[c] = nc;
            }
        }
        if moved < 1e-9 {
            break;
        }
    }
    centroids.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = centroids[0];
    let hi = centroids[k - 1];
    dedup_levels(&mut centroids, lo, hi);
    Codebook::from_levels(centroids)
}

fn nearest_dist(centroids: &[f64], x: f64) -> f64 {
    centroids
        .iter()
        .map(|c| (x - c).abs())
        .fold(f64::INFINITY, f64::min)
}

fn nearest_index(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = (x - c).abs();
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

/// Design the fixed codebook for retained singular values: pool the
/// singular values of `n_mc` i.i.d. complex Gaussian M×N_k draws and run
/// Lloyd-Max on them.
pub fn singular_value_codebook(
    m: usize,
    n_k: usize,
    bits: u32,
    n_mc: usize,
    seed: u64,
) -> Result<Codebook> {
    if m < n_k || n_k == 0 {
        return Err(Error::Domain(format!(
            "need M >= N_k >= 1, got M = {m}, N_k = {n_k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::with_capacity(n_mc * n_k);
    for _ in 0..n_mc {
        let h = crate::cmatrix::CMatrix::gaussian(&mut rng, m, n_k);
        let trip = svd_small(&h)?;
        pool.extend_from_slice(&trip.sigma);
    }
    lloyd_max_design(&pool, bits)
}

/// Draw standard normal samples (testing and design helper).
pub fn normal_samples(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| crate::cmatrix::standard_normal(&mut rng))
        .collect()
}

/// Real-component samples of √M-scaled left singular matrices of complex
/// Gaussian M×N_k channels, additionally scaled by √2 so each component
/// has unit variance. The pooled samples converge to N(0,1) as M grows.
///
/// The deterministic SVD phase convention pins one entry per column to
/// the positive real axis; each column is rotated by a fresh uniform
/// phase here so the samples follow the phase-invariant Haar measure.
pub fn haar_component_samples(m: usize, n_k: usize, n_samples: usize, seed: u64) -> Vec<f64> {
    use num_complex::Complex64;
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples);
    let comp_scale = (2.0 * m as f64).sqrt();
    'outer: loop {
        let h = crate::cmatrix::CMatrix::gaussian(&mut rng, m, n_k);
        let trip = svd_small(&h).expect("finite Gaussian draw");
        for c in 0..n_k {
            let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * 2.0 * std::f64::consts::PI);
            for r in 0..m {
                let z = trip.a.get(r, c) * phase;
                out.push(z.re * comp_scale);
                if out.len() == n_samples {
                    break 'outer;
                }
                out.push(z.im * comp_scale);
                if out.len() == n_samples {
                    break 'outer;
                }
            }
        }
    }
    out
}
