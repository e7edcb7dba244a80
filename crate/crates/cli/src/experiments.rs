//! Experiment runners. Each returns named artifacts as strings; the
//! binary writes them under the output directory. All runners are
//! deterministic in the spec and its seeds: parallel cells are assembled
//! by index, never by completion order.

use crate::config::{ExperimentKind, ExperimentSpec};
use adq_core::quantizer::haar_component_samples;
use adq_core::{
    ber_run, encode_matrix_stream, gaussian_codebook, generate_trajectory, haar_second_moment,
    kmeans_codebook, wiener_residual_variance, BerRunConfig, ChannelTrajectory, CodecConfig, Error,
    FeedbackScheme, MobilityProfile, PredictorConfig, PredictorMode, Result, GAUSS_MSE_2BIT,
    GAUSS_MSE_3BIT,
};
use rayon::prelude::*;
use serde_json::json;

pub struct Artifact {
    pub filename: String,
    pub content: String,
}

pub fn run(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    match spec.experiment {
        ExperimentKind::ErrorVsSpeed => run_error_vs_speed(spec),
        ExperimentKind::Transient => run_transient(spec),
        ExperimentKind::BerSweep => run_ber_sweep(spec),
        ExperimentKind::CodebookTable => run_codebook_table(spec),
        ExperimentKind::HaarMoments => run_haar_moments(spec),
        ExperimentKind::OverheadTable => run_overhead_table(spec),
    }
}

fn profile_for(spec: &ExperimentSpec, speed: f64) -> Result<MobilityProfile> {
    MobilityProfile::new(speed, spec.carrier_freq_hz, spec.sample_rate_hz)
}

fn trajectory_for(
    spec: &ExperimentSpec,
    speed: f64,
    dims: (usize, usize),
    seed: u64,
) -> Result<ChannelTrajectory> {
    generate_trajectory(seed, dims, &profile_for(spec, speed)?, spec.n_samples)
}

fn codec_with_mode(base: &CodecConfig, mode: PredictorMode) -> CodecConfig {
    CodecConfig {
        predictor: PredictorConfig {
            mode,
            ..base.predictor
        },
        ..*base
    }
}

/// Steady-state quantization error variance per speed and predictor
/// mode, next to the fixed-quantizer constants and the ideal bound.
pub fn run_error_vs_speed(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let sys = spec.system.as_ref().expect("validated");
    let dims = (sys.m, sys.n_per_user.iter().sum());
    let skip = (spec.n_samples / 2).min(2_000);
    let cells: Vec<(usize, PredictorMode)> = (0..spec.speeds_kmh.len())
        .flat_map(|i| [(i, PredictorMode::Rls), (i, PredictorMode::Lls)])
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, mode)| -> Result<String> {
            let speed = spec.speeds_kmh[i];
            let traj = trajectory_for(spec, speed, dims, spec.seeds[0].wrapping_add(i as u64))?;
            let out = encode_matrix_stream(&traj, &codec_with_mode(&spec.codec, mode))?;
            let sigma2_e = out.steady_state_sigma2_e(skip);
            let mean_gain = out.per_sample_gain[skip..].iter().sum::<f64>()
                / (out.per_sample_gain.len() - skip) as f64;
            let bound = GAUSS_MSE_2BIT
                * wiener_residual_variance(traj.profile.doppler_hz, spec.sample_rate_hz, spec.codec.predictor.order);
            let mode_name = match mode {
                PredictorMode::Rls => "rls",
                PredictorMode::Lls => "lls",
            };
            Ok(format!(
                "{speed},{mode_name},{sigma2_e},{GAUSS_MSE_2BIT},{GAUSS_MSE_3BIT},{bound},{mean_gain},{}",
                mean_gain * mean_gain / sigma2_e
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from(
        "speed_kmh,mode,sigma2_e,sigma2_e_fixed2,sigma2_e_fixed3,wiener_bound,mean_gain,gain_sq_over_sigma2e\n",
    );
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    Ok(vec![Artifact {
        filename: spec.output_path.clone(),
        content: csv,
    }])
}

/// Per-iteration error averaged over independent realizations, plus the
/// settling summary for both predictor modes.
pub fn run_transient(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let speed = spec.speeds_kmh[0];
    let n = spec.n_samples;
    let mut curves = Vec::new();
    for mode in [PredictorMode::Rls, PredictorMode::Lls] {
        let cfg = codec_with_mode(&spec.codec, mode);
        let partial: Vec<Vec<f64>> = (0..spec.n_realizations)
            .into_par_iter()
            .map(|r| -> Result<Vec<f64>> {
                let traj =
                    trajectory_for(spec, speed, (1, 1), spec.seeds[0].wrapping_add(r as u64))?;
                Ok(encode_matrix_stream(&traj, &cfg)?.per_sample_mse)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut curve = vec![0.0f64; n];
        for p in &partial {
            for (acc, v) in curve.iter_mut().zip(p) {
                *acc += v;
            }
        }
        for v in curve.iter_mut() {
            *v /= spec.n_realizations as f64;
        }
        curves.push(curve);
    }

    let steady = |c: &[f64]| c[n / 2..].iter().sum::<f64>() / (n - n / 2) as f64;
    let settle = |c: &[f64], s: f64| -> usize {
        let smooth: Vec<f64> = (0..c.len())
            .map(|i| {
                let lo = i.saturating_sub(4);
                let hi = (i + 5).min(c.len());
                c[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        (0..c.len())
            .find(|&k| smooth[k..].iter().all(|&v| v <= 1.25 * s))
            .unwrap_or(c.len())
    };
    let s_rls = steady(&curves[0]);
    let s_lls = steady(&curves[1]);

    let mut csv = String::from("iteration,sigma2_e_rls,sigma2_e_lls\n");
    for i in 0..n {
        csv.push_str(&format!("{i},{},{}\n", curves[0][i], curves[1][i]));
    }
    let summary = json!({
        "speed_kmh": speed,
        "n_realizations": spec.n_realizations,
        "steady_sigma2_e_rls": s_rls,
        "steady_sigma2_e_lls": s_lls,
        "settle_within_25pct_rls": settle(&curves[0], s_rls),
        "settle_within_25pct_lls": settle(&curves[1], s_lls),
    });
    Ok(vec![
        Artifact {
            filename: spec.output_path.clone(),
            content: csv,
        },
        Artifact {
            filename: format!("{}.summary.json", spec.output_path),
            content: format!("{:#}\n", summary),
        },
    ])
}

/// BER across speeds, schemes and SNR points.
pub fn run_ber_sweep(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let sys_spec = spec.system.as_ref().expect("validated");
    let sys = sys_spec.to_system(&spec.snr_db);
    let dims = (sys.m, sys.n_total());
    let run_cfg = BerRunConfig {
        codec: spec.codec,
        sv: spec.sv_config(),
        ..BerRunConfig::default()
    };
    let cells: Vec<(usize, usize)> = (0..spec.speeds_kmh.len())
        .flat_map(|i| (0..spec.schemes.len()).map(move |j| (i, j)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(i, j)| -> Result<Vec<String>> {
            let speed = spec.speeds_kmh[i];
            let scheme = spec.schemes[j];
            let traj = trajectory_for(spec, speed, dims, spec.seeds[0].wrapping_add(i as u64))?;
            let points = ber_run(
                &traj,
                scheme,
                &sys,
                spec.seeds[0].wrapping_add(1_000).wrapping_mul(j as u64 + 1),
                &run_cfg,
            )?;
            let bps = scheme.feedback_bits_per_sec(&sys, spec.sample_rate_hz.round() as u64);
            Ok(points
                .iter()
                .map(|p| {
                    format!(
                        "{},{speed},{},{},{},{bps}",
                        scheme.label(),
                        p.snr_db,
                        p.ber,
                        p.ci_halfwidth
                    )
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("scheme,speed_kmh,snr_db,ber,ci_halfwidth,bits_per_sec\n");
    for rows in results {
        for r in rows {
            csv.push_str(&r);
            csv.push('\n');
        }
    }
    Ok(vec![Artifact {
        filename: spec.output_path.clone(),
        content: csv,
    }])
}

/// 2-bit k-means codebooks of unit-variance singular-vector components
/// for M ∈ {2, 3, 4, 8}, next to the fixed Gaussian reference.
pub fn run_codebook_table(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let m_values = [2usize, 3, 4, 8];
    let entries = m_values
        .par_iter()
        .map(|&m| -> Result<serde_json::Value> {
            let samples =
                haar_component_samples(m, 2, spec.n_samples, spec.seeds[0].wrapping_add(m as u64));
            let cb = kmeans_codebook(&samples, 4)?;
            Ok(json!({
                "m": m,
                "levels": cb.levels(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = json!({
        "n_samples": spec.n_samples,
        "n_antennas_per_draw": 2,
        "codebooks": entries,
        "gaussian_reference": gaussian_codebook(2)?.levels(),
    });
    Ok(vec![Artifact {
        filename: spec.output_path.clone(),
        content: format!("{:#}\n", table),
    }])
}

/// Monte Carlo second moment of singular-matrix entries per M.
pub fn run_haar_moments(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let m_values = [2usize, 3, 4, 8];
    let entries = m_values
        .par_iter()
        .map(|&m| {
            let measured =
                haar_second_moment(m, 2, spec.n_samples, spec.seeds[0].wrapping_add(m as u64));
            json!({
                "m": m,
                "second_moment": measured,
                "expected": 1.0 / m as f64,
            })
        })
        .collect::<Vec<_>>();
    let table = json!({
        "draws": spec.n_samples,
        "moments": entries,
    });
    Ok(vec![Artifact {
        filename: spec.output_path.clone(),
        content: format!("{:#}\n", table),
    }])
}

/// Feedback bit rates of every scheme for the configured system.
pub fn run_overhead_table(spec: &ExperimentSpec) -> Result<Vec<Artifact>> {
    let sys = spec
        .system
        .as_ref()
        .expect("validated")
        .to_system(&spec.snr_db);
    let fs = spec.sample_rate_hz.round() as u64;
    let schemes = [
        FeedbackScheme::Perfect,
        FeedbackScheme::Fixed2,
        FeedbackScheme::Fixed3,
        FeedbackScheme::AdaptiveChannel,
        FeedbackScheme::AdaptiveSvd,
    ];
    let rates: Vec<serde_json::Value> = schemes
        .iter()
        .map(|s| {
            json!({
                "scheme": s.label(),
                "bits_per_sec": s.feedback_bits_per_sec(&sys, fs),
            })
        })
        .collect();
    let adaptive = FeedbackScheme::AdaptiveChannel.feedback_bits_per_sec(&sys, fs);
    let fixed3 = FeedbackScheme::Fixed3.feedback_bits_per_sec(&sys, fs);
    let svd = FeedbackScheme::AdaptiveSvd.feedback_bits_per_sec(&sys, fs);
    let table = json!({
        "sample_rate_hz": fs,
        "rates": rates,
        "saved_adaptive_channel_vs_fixed3_bits_per_sec": fixed3 - adaptive,
        "saved_adaptive_svd_vs_adaptive_channel_bits_per_sec":
            adaptive.saturating_sub(svd),
    });
    Ok(vec![Artifact {
        filename: spec.output_path.clone(),
        content: format!("{:#}\n", table),
    }])
}

/// Debug dump of a raw trajectory as CSV.
pub fn dump_trajectory(
    seed: u64,
    dims: (usize, usize),
    speed_kmh: f64,
    carrier_freq_hz: f64,
    sample_rate_hz: f64,
    n_samples: usize,
) -> Result<String> {
    let profile = MobilityProfile::new(speed_kmh, carrier_freq_hz, sample_rate_hz)?;
    let traj = generate_trajectory(seed, dims, &profile, n_samples)?;
    let mut csv = String::from("sample_index,tx,rx,re,im\n");
    for (n, h) in traj.samples.iter().enumerate() {
        for tx in 0..dims.0 {
            for rx in 0..dims.1 {
                let z = h.get(tx, rx);
                csv.push_str(&format!("{n},{tx},{rx},{},{}\n", z.re, z.im));
            }
        }
    }
    Ok(csv)
}

/// Helper shared with tests: numeric failures map to exit code 3,
/// everything else raised while reading or validating configs is 2.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Domain(_) | Error::Format(_) => 2,
        Error::Numeric(_) | Error::Codec(_) => 3,
    }
}
