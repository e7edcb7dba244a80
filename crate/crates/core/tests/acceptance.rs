//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `--nocapture` to see them). Expected values are frozen from
//! independent oracles; statistical checks run at fixed seeds.

use adq_core::*;

/// Independent J₀ oracle: plain power series, accurate to ~1e-12 for the
/// argument range used here (< 12).
fn j0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= -q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Doppler shift of the 2.5 GHz / 200 Hz reference link.
fn doppler(speed_kmh: f64) -> f64 {
    speed_kmh / 3.6 * 2.5e9 / 2.997_924_58e8
}

/// Order-2 Wiener one-step residual variance from the J₀ oracle.
fn wiener_bound_oracle(speed_kmh: f64) -> f64 {
    let rho = |k: f64| j0_series(2.0 * std::f64::consts::PI * doppler(speed_kmh) * k / 200.0);
    let (r1, r2) = (rho(1.0), rho(2.0));
    let det = 1.0 - r1 * r1;
    let w1 = (r1 - r1 * r2) / det;
    let w2 = (r2 - r1 * r1) / det;
    1.0 - (r1 * w1 + r2 * w2)
}

fn steady_sigma2e(speed_kmh: f64, mode: PredictorMode, seed: u64) -> (f64, f64) {
    let profile = MobilityProfile::standard(speed_kmh).unwrap();
    let traj = generate_trajectory(seed, (2, 2), &profile, 30_000).unwrap();
    let cfg = CodecConfig {
        predictor: PredictorConfig {
            mode,
            ..PredictorConfig::default()
        },
        ..CodecConfig::default()
    };
    let out = encode_matrix_stream(&traj, &cfg).unwrap();
    let gain = out.per_sample_gain[2_000..].iter().sum::<f64>()
        / (out.per_sample_gain.len() - 2_000) as f64;
    (out.steady_state_sigma2_e(2_000), gain)
}

#[test]
fn acceptance_01_fixed_quantizer_constants() {
    let samples = quantizer::normal_samples(101, 1_000_000);
    let mse2 = quantizer::empirical_mse(&gaussian_codebook(2).unwrap(), &samples);
    assert!(
        (mse2 - 0.1175).abs() <= 0.01 * 0.1175,
        "2-bit MSE {mse2} not within 1% of 0.1175"
    );
    let mse3 = quantizer::empirical_mse(&gaussian_codebook(3).unwrap(), &samples);
    assert!(
        (mse3 - 0.0345).abs() <= 0.02 * 0.0345,
        "3-bit MSE {mse3} not within 2% of 0.0345"
    );
    println!("ACCEPTANCE 1 fixed quantizer constants: PASS (2-bit {mse2:.5}, 3-bit {mse3:.5})");
}

#[test]
fn acceptance_02_haar_codebook_table() {
    let outer_expected = [1.34, 1.40, 1.43, 1.48];
    let inner_expected = [0.43, 0.44, 0.45, 0.45];
    let gauss = gaussian_codebook(2).unwrap();
    let mut prev_gaps: Option<Vec<f64>> = None;
    for (i, m) in [2usize, 3, 4, 8].into_iter().enumerate() {
        let samples = quantizer::haar_component_samples(m, 2, 100_000, 777 + m as u64);
        let cb = kmeans_codebook(&samples, 4).unwrap();
        let l = cb.levels();
        for (got, want) in [
            (l[0], -outer_expected[i]),
            (l[1], -inner_expected[i]),
            (l[2], inner_expected[i]),
            (l[3], outer_expected[i]),
        ] {
            assert!(
                (got - want).abs() <= 0.03,
                "M = {m}: level {got:.4} vs expected {want} (codebook {l:?})"
            );
        }
        // Gaussian limit: each level's gap to the fixed Gaussian codebook
        // shrinks (within tolerance) as M grows
        let gaps: Vec<f64> = l
            .iter()
            .zip(gauss.levels())
            .map(|(a, b)| (a - b).abs())
            .collect();
        if let Some(prev) = &prev_gaps {
            for (g_now, g_prev) in gaps.iter().zip(prev) {
                assert!(
                    *g_now <= g_prev + 0.02,
                    "M = {m}: gap to the Gaussian codebook grew from {g_prev:.4} to {g_now:.4}"
                );
            }
        }
        prev_gaps = Some(gaps);
        println!(
            "ACCEPTANCE 2 codebook table M={m}: PASS (levels {:.3} {:.3} {:.3} {:.3})",
            l[0], l[1], l[2], l[3]
        );
    }
}

#[test]
fn acceptance_03_haar_second_moment() {
    for m in [2usize, 3, 4, 8] {
        let v = haar_second_moment(m, 2, 100_000, 31 + m as u64);
        let expected = 1.0 / m as f64;
        assert!(
            (v - expected).abs() <= 0.02 * expected,
            "M = {m}: E|A_ij|^2 = {v} not within 2% of {expected}"
        );
        println!("ACCEPTANCE 3 Haar second moment M={m}: PASS ({v:.5} vs {expected:.5})");
    }
}

#[test]
fn acceptance_04_backward_adaptivity_symmetry() {
    // scalar codec: state equality after every sample, both modes
    for mode in [PredictorMode::Rls, PredictorMode::Lls] {
        let cfg = CodecConfig {
            predictor: PredictorConfig {
                mode,
                ..PredictorConfig::default()
            },
            ..CodecConfig::default()
        };
        let profile = MobilityProfile::standard(21.6).unwrap();
        let traj = generate_trajectory(404, (1, 1), &profile, 100_000).unwrap();
        let mut enc = DiffCodecState::new(cfg);
        let mut dec = DiffCodecState::new(cfg);
        for (n, h) in traj.samples.iter().enumerate() {
            let (idx, r_enc) = enc.encode_sample(h.get(0, 0).re).unwrap();
            let r_dec = dec.decode_sample(idx).unwrap();
            assert_eq!(
                r_enc.to_bits(),
                r_dec.to_bits(),
                "reconstruction diverged at sample {n} ({mode:?})"
            );
            assert_eq!(enc, dec, "state diverged at sample {n} ({mode:?})");
        }
    }

    // both schemes through their container files, in both predictor modes
    let dir = std::env::temp_dir();
    let profile = MobilityProfile::standard(21.6).unwrap();
    for mode in [PredictorMode::Rls, PredictorMode::Lls] {
        let cfg = CodecConfig {
            predictor: PredictorConfig {
                mode,
                ..PredictorConfig::default()
            },
            ..CodecConfig::default()
        };

        let traj = generate_trajectory(405, (2, 2), &profile, 4_000).unwrap();
        let out = encode_matrix_stream(&traj, &cfg).unwrap();
        let path = dir.join(format!("adq_acceptance_channel_{mode:?}.bin"));
        std::fs::write(&path, &out.bitstream).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let (_, decoded) = decode_matrix_stream(&bytes, &cfg).unwrap();
        assert_eq!(decoded.len(), out.reconstructed.len());
        for (n, (a, b)) in decoded.iter().zip(&out.reconstructed).enumerate() {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(
                    x.re.to_bits(),
                    y.re.to_bits(),
                    "file replay diverged at {n}"
                );
                assert_eq!(
                    x.im.to_bits(),
                    y.im.to_bits(),
                    "file replay diverged at {n}"
                );
            }
        }

        let traj = generate_trajectory(406, (4, 8), &profile, 1_500).unwrap();
        let users = vec![
            UserLayout {
                n_antennas: 4,
                n_streams: 2,
            },
            UserLayout {
                n_antennas: 4,
                n_streams: 2,
            },
        ];
        let sv_cfg = SingularStreamConfig {
            codec: cfg,
            sv_codebook_draws: 4_000,
            ..SingularStreamConfig::default()
        };
        let out = encode_singular_stream(&traj, &users, &sv_cfg).unwrap();
        let path = dir.join(format!("adq_acceptance_singular_{mode:?}.bin"));
        std::fs::write(&path, &out.bitstream).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let (_, users_back, decoded) = decode_singular_stream(&bytes, &sv_cfg).unwrap();
        assert_eq!(users_back, users);
        for (n, (a, b)) in decoded.iter().zip(&out.f_hat).enumerate() {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(
                    x.re.to_bits(),
                    y.re.to_bits(),
                    "singular replay diverged at {n}"
                );
                assert_eq!(
                    x.im.to_bits(),
                    y.im.to_bits(),
                    "singular replay diverged at {n}"
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 4 backward-adaptive symmetry: PASS (both modes, both schemes, file replay)"
    );
}

#[test]
fn acceptance_05_gain_law() {
    // constant-magnitude residual stream: g -> k1*c
    let cfg = GainConfig::default();
    let c = 0.5;
    let mut st = GainState::from_energy(cfg, 0.0);
    let mut g = 0.0;
    for _ in 0..200 {
        g = st.update(c);
    }
    assert!(
        (g - cfg.bias_comp * c).abs() <= 1e-6,
        "gain {g} vs closed form {}",
        cfg.bias_comp * c
    );

    // exact scale equivariance for a power-of-two factor
    let nf = GainConfig { floor: 0.0, ..cfg };
    let mut a = GainState::from_energy(nf, 0.0);
    let mut b = GainState::from_energy(nf, 0.0);
    let stream = [0.4, -0.9, 0.13, 2.2, -0.6, 0.0, 1.7, 0.05];
    for &d in &stream {
        let ga = a.update(d);
        let gb = b.update(8.0 * d);
        assert_eq!(
            gb.to_bits(),
            (8.0 * ga).to_bits(),
            "scale equivariance broken"
        );
    }
    println!("ACCEPTANCE 5 gain law: PASS (g -> k1*c, exact scale equivariance)");
}

#[test]
fn acceptance_06_error_vs_speed_shape() {
    let fixed2 = 0.1175;
    for (i, speed) in [5.0, 10.0, 20.0].into_iter().enumerate() {
        let (rls, _) = steady_sigma2e(speed, PredictorMode::Rls, 60 + i as u64);
        let (lls, _) = steady_sigma2e(speed, PredictorMode::Lls, 60 + i as u64);
        assert!(
            rls < fixed2,
            "RLS at {speed} km/h: {rls} not below {fixed2}"
        );
        assert!(
            lls < fixed2,
            "LLS at {speed} km/h: {lls} not below {fixed2}"
        );
        let rel = (rls - lls).abs() / rls.max(lls);
        assert!(
            rel <= 0.15,
            "RLS {rls} vs LLS {lls} differ by {rel:.2} at {speed} km/h"
        );
        println!(
            "ACCEPTANCE 6 error vs speed {speed} km/h: PASS (RLS {rls:.4}, LLS {lls:.4} < {fixed2})"
        );
    }
    let (rls, _) = steady_sigma2e(40.0, PredictorMode::Rls, 64);
    let (lls, _) = steady_sigma2e(40.0, PredictorMode::Lls, 64);
    assert!(
        rls >= fixed2,
        "RLS at 40 km/h: {rls} unexpectedly below {fixed2}"
    );
    assert!(
        lls >= fixed2,
        "LLS at 40 km/h: {lls} unexpectedly below {fixed2}"
    );
    let rel = (rls - lls).abs() / rls.max(lls);
    assert!(
        rel <= 0.15,
        "RLS {rls} vs LLS {lls} differ by {rel:.2} at 40 km/h"
    );
    println!("ACCEPTANCE 6 error vs speed 40 km/h: PASS (RLS {rls:.4}, LLS {lls:.4} >= {fixed2})");
}

#[test]
fn acceptance_07_wiener_floor() {
    for (i, speed) in [5.0, 10.0, 20.0].into_iter().enumerate() {
        let bound = 0.1175 * wiener_bound_oracle(speed);
        let (measured, _) = steady_sigma2e(speed, PredictorMode::Rls, 70 + i as u64);
        assert!(
            measured >= bound,
            "σ²_E {measured} below the ideal Wiener floor {bound} at {speed} km/h"
        );
        println!(
            "ACCEPTANCE 7 Wiener floor {speed} km/h: PASS (measured {measured:.5} >= bound {bound:.5})"
        );
    }
}

#[test]
fn acceptance_08_transient_time() {
    let n_real = 400usize;
    let n_samples = 800usize;
    let profile = MobilityProfile::standard(21.6).unwrap();
    let mut curves = Vec::new();
    for mode in [PredictorMode::Rls, PredictorMode::Lls] {
        let cfg = CodecConfig {
            predictor: PredictorConfig {
                mode,
                ..PredictorConfig::default()
            },
            ..CodecConfig::default()
        };
        let mut curve = vec![0.0f64; n_samples];
        for r in 0..n_real {
            let traj = generate_trajectory(8_000 + r as u64, (1, 1), &profile, n_samples).unwrap();
            let out = encode_matrix_stream(&traj, &cfg).unwrap();
            for (i, v) in out.per_sample_mse.iter().enumerate() {
                curve[i] += v;
            }
        }
        for v in curve.iter_mut() {
            *v /= n_real as f64;
        }
        curves.push(curve);
    }
    let steady = |c: &[f64]| c[n_samples / 2..].iter().sum::<f64>() / (n_samples / 2) as f64;
    // moving average for the settling scan so single-sample noise does
    // not dominate the indicator
    let smooth = |c: &[f64]| -> Vec<f64> {
        (0..c.len())
            .map(|i| {
                let lo = i.saturating_sub(4);
                let hi = (i + 5).min(c.len());
                c[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect()
    };
    let settle = |c: &[f64], s: f64| -> usize {
        let sm = smooth(c);
        (0..c.len())
            .find(|&n| sm[n..].iter().all(|&v| v <= 1.25 * s))
            .unwrap_or(c.len())
    };

    let s_rls = steady(&curves[0]);
    let s_lls = steady(&curves[1]);
    assert!(
        curves[0][0] > s_rls,
        "iteration-0 error {} not above steady state {s_rls}",
        curves[0][0]
    );
    let ratio20 = curves[0][20] / s_rls;
    assert!(
        ratio20 <= 1.25,
        "RLS at iteration 20 is {ratio20:.3}x steady state (limit 1.25)"
    );
    let t_rls = settle(&curves[0], s_rls);
    let t_lls = settle(&curves[1], s_lls);
    assert!(
        t_lls > t_rls,
        "LLS transient ({t_lls}) not longer than RLS ({t_rls})"
    );
    println!(
        "ACCEPTANCE 8 transient: PASS (RLS {ratio20:.3}x steady at iter 20; settle RLS {t_rls}, LLS {t_lls})"
    );
}

#[test]
fn acceptance_09_overhead_arithmetic() {
    assert_eq!(overhead(1, 2 * 4 * 8, 200), 12_800);
    let sys = SystemConfig {
        m: 4,
        k: 2,
        n_per_user: vec![4, 4],
        l_per_user: vec![2, 2],
        p_max: 4.0,
        snr_db: vec![],
    };
    let adaptive = FeedbackScheme::AdaptiveChannel.feedback_bits_per_sec(&sys, 200);
    let svd = FeedbackScheme::AdaptiveSvd.feedback_bits_per_sec(&sys, 200);
    let fixed3 = FeedbackScheme::Fixed3.feedback_bits_per_sec(&sys, 200);
    assert_eq!(adaptive, 25_600);
    assert_eq!(svd, 14_400);
    assert_eq!(fixed3 - adaptive, 12_800);
    println!("ACCEPTANCE 9 overhead arithmetic: PASS (saving 12800 b/s; svd 14400 vs 25600 b/s)");
}

fn ber_points(speed: f64, scheme: FeedbackScheme, seed: u64) -> Vec<BerPoint> {
    let sys = SystemConfig {
        m: 4,
        k: 2,
        n_per_user: vec![4, 4],
        l_per_user: vec![2, 2],
        p_max: 4.0,
        snr_db: vec![10.0, 15.0, 20.0],
    };
    let profile = MobilityProfile::standard(speed).unwrap();
    let traj = generate_trajectory(4242, (4, 8), &profile, 5_000).unwrap();
    let run = BerRunConfig {
        min_bits: 100_000,
        min_errors: 100,
        max_passes: 12,
        ..BerRunConfig::default()
    };
    ber_run(&traj, scheme, &sys, seed, &run).unwrap()
}

/// a <= b within the 95% confidence of both estimates (the half-widths
/// already carry the 1.96 factor).
fn leq_within_ci(a: &BerPoint, b: &BerPoint) -> bool {
    a.ber - b.ber <= (a.ci_halfwidth.powi(2) + b.ci_halfwidth.powi(2)).sqrt()
}

#[test]
fn acceptance_10a_ber_ordering_at_11kmh() {
    let adaptive = ber_points(11.0, FeedbackScheme::AdaptiveChannel, 5);
    let fixed3 = ber_points(11.0, FeedbackScheme::Fixed3, 5);
    let fixed2 = ber_points(11.0, FeedbackScheme::Fixed2, 5);
    for i in 0..3 {
        assert!(
            leq_within_ci(&adaptive[i], &fixed3[i]),
            "adaptive {} > fixed3 {} at {} dB",
            adaptive[i].ber,
            fixed3[i].ber,
            adaptive[i].snr_db
        );
        assert!(
            leq_within_ci(&adaptive[i], &fixed2[i]),
            "adaptive {} > fixed2 {} at {} dB",
            adaptive[i].ber,
            fixed2[i].ber,
            adaptive[i].snr_db
        );
        assert!(
            leq_within_ci(&fixed3[i], &fixed2[i]),
            "fixed3 {} > fixed2 {} at {} dB",
            fixed3[i].ber,
            fixed2[i].ber,
            fixed3[i].snr_db
        );
        println!(
            "ACCEPTANCE 10a BER ordering {} dB: PASS (adaptive {:.2e} <= fixed3 {:.2e} <= fixed2 {:.2e})",
            adaptive[i].snr_db, adaptive[i].ber, fixed3[i].ber, fixed2[i].ber
        );
    }
}

#[test]
fn acceptance_10b_ber_factor_at_30kmh() {
    // The 2-tap Wiener floor at 30 km/h leaves the adaptive codec at most
    // ~15% error-variance advantage over the fixed 2-bit quantizer
    // (0.852·0.1175 vs 0.1175), so with the equal-power regularized
    // inversion precoder the achievable BER ratio is ~0.9, not 0.6. The
    // 0.6 target presumes a transceiver that exploits the feedback error
    // statistics in its design, which this artifact deliberately does not
    // include. The assertion is kept as stated and is expected to fail;
    // the measured ratios are printed below.
    let adaptive = ber_points(30.0, FeedbackScheme::AdaptiveChannel, 6);
    let fixed2 = ber_points(30.0, FeedbackScheme::Fixed2, 6);
    let mut best_ratio = f64::INFINITY;
    for i in 0..3 {
        let ratio = adaptive[i].ber / fixed2[i].ber;
        best_ratio = best_ratio.min(ratio);
        println!(
            "ACCEPTANCE 10b measurement {} dB: adaptive {:.3e} vs fixed2 {:.3e} (ratio {ratio:.3})",
            adaptive[i].snr_db, adaptive[i].ber, fixed2[i].ber
        );
    }
    if best_ratio <= 0.6 {
        println!("ACCEPTANCE 10b BER factor at 30 km/h: PASS (best ratio {best_ratio:.3})");
    } else {
        println!(
            "ACCEPTANCE 10b BER factor at 30 km/h: FAIL (best ratio {best_ratio:.3} > 0.6; \
             bounded away from 0.6 by the order-2 Wiener floor with the stand-in precoder)"
        );
    }
    assert!(
        best_ratio <= 0.6,
        "BER(adaptive)/BER(fixed2) = {best_ratio:.3} > 0.6 at 30 km/h"
    );
}

#[test]
fn acceptance_11_channel_statistics() {
    for speed in [10.0, 21.6, 30.0] {
        let profile = MobilityProfile::standard(speed).unwrap();
        let traj = generate_trajectory(7, (4, 8), &profile, 100_000).unwrap();

        // unit power within 3%
        let mut power = 0.0;
        for tx in 0..4 {
            for rx in 0..8 {
                power += traj
                    .entry_series(tx, rx)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    / 100_000.0;
            }
        }
        power /= 32.0;
        assert!(
            (power - 1.0).abs() <= 0.03,
            "mean entry power {power} at {speed} km/h"
        );

        // J0 autocorrelation at lags 1..5, averaged across the 32
        // independent antenna-pair processes
        for lag in 1..=5usize {
            let mut acc = 0.0;
            for tx in 0..4 {
                for rx in 0..8 {
                    let series: Vec<f64> = traj.entry_series(tx, rx).iter().map(|z| z.re).collect();
                    acc += fading::empirical_autocorrelation(&series, lag)[lag];
                }
            }
            let emp = acc / 32.0;
            let expected =
                j0_series(2.0 * std::f64::consts::PI * doppler(speed) * lag as f64 / 200.0);
            assert!(
                (emp - expected).abs() <= 0.03,
                "speed {speed} lag {lag}: {emp:.4} vs J0 {expected:.4}"
            );
        }
        println!(
            "ACCEPTANCE 11 channel statistics {speed} km/h: PASS (power {power:.4}, lags 1-5)"
        );
    }
}
