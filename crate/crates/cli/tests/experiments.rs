//! Runner-level checks of artifact content.

use adq_cli::config::ExperimentSpec;
use adq_cli::experiments;

#[test]
fn transient_emits_curve_and_summary() {
    let spec = ExperimentSpec::from_json(
        r#"{
        "experiment": "transient",
        "speeds_kmh": [21.6],
        "seeds": [11],
        "n_samples": 1000,
        "n_realizations": 200,
        "output_path": "transient.csv"
    }"#,
    )
    .unwrap();
    let artifacts = experiments::run(&spec).unwrap();
    assert_eq!(artifacts.len(), 2);
    assert_eq!(artifacts[0].filename, "transient.csv");
    assert_eq!(artifacts[1].filename, "transient.csv.summary.json");
    let csv = &artifacts[0].content;
    assert!(csv.starts_with("iteration,sigma2_e_rls,sigma2_e_lls\n"));
    assert_eq!(csv.lines().count(), 1001);
    let summary: serde_json::Value = serde_json::from_str(&artifacts[1].content).unwrap();
    let rls = summary["settle_within_25pct_rls"].as_u64().unwrap();
    let lls = summary["settle_within_25pct_lls"].as_u64().unwrap();
    assert!(rls < lls, "rls {rls} should settle before lls {lls}");
}

#[test]
fn overhead_table_reference_values() {
    let spec = ExperimentSpec::from_json(
        r#"{
        "experiment": "overhead_table",
        "n_samples": 1,
        "system": {"m": 4, "k": 2, "n_per_user": [4, 4], "l_per_user": [2, 2], "p_max": 4.0},
        "output_path": "overhead.json"
    }"#,
    )
    .unwrap();
    let artifacts = experiments::run(&spec).unwrap();
    let v: serde_json::Value = serde_json::from_str(&artifacts[0].content).unwrap();
    assert_eq!(v["saved_adaptive_channel_vs_fixed3_bits_per_sec"], 12_800);
    let rates = v["rates"].as_array().unwrap();
    let rate_of = |name: &str| -> u64 {
        rates.iter().find(|r| r["scheme"] == name).unwrap()["bits_per_sec"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(rate_of("adaptive_channel"), 25_600);
    assert_eq!(rate_of("adaptive_svd"), 14_400);
    assert_eq!(rate_of("fixed3"), 38_400);
    assert_eq!(rate_of("perfect"), 0);
}

#[test]
fn haar_moments_close_to_expected() {
    let spec = ExperimentSpec::from_json(
        r#"{
        "experiment": "haar_moments",
        "seeds": [5],
        "n_samples": 20000,
        "output_path": "haar.json"
    }"#,
    )
    .unwrap();
    let artifacts = experiments::run(&spec).unwrap();
    let v: serde_json::Value = serde_json::from_str(&artifacts[0].content).unwrap();
    for entry in v["moments"].as_array().unwrap() {
        let measured = entry["second_moment"].as_f64().unwrap();
        let expected = entry["expected"].as_f64().unwrap();
        assert!(
            (measured - expected).abs() < 0.05 * expected,
            "m={}: {measured} vs {expected}",
            entry["m"]
        );
    }
}

#[test]
fn ber_sweep_smoke() {
    let spec = ExperimentSpec::from_json(
        r#"{
        "experiment": "ber_sweep",
        "speeds_kmh": [11.0],
        "snr_db": [10.0],
        "schemes": ["perfect", "adaptive_channel"],
        "seeds": [2],
        "n_samples": 1200,
        "system": {"m": 2, "k": 1, "n_per_user": [2], "l_per_user": [2], "p_max": 2.0},
        "output_path": "ber.csv"
    }"#,
    )
    .unwrap();
    let artifacts = experiments::run(&spec).unwrap();
    let csv = &artifacts[0].content;
    assert!(csv.starts_with("scheme,speed_kmh,snr_db,ber,ci_halfwidth,bits_per_sec\n"));
    assert_eq!(csv.lines().count(), 3);
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        let ber: f64 = fields[3].parse().unwrap();
        assert!((0.0..=0.5).contains(&ber), "implausible BER {ber}");
    }
}

#[test]
fn error_vs_speed_orders_regimes() {
    let spec = ExperimentSpec::from_json(
        r#"{
        "experiment": "error_vs_speed",
        "speeds_kmh": [10.0, 40.0],
        "seeds": [7],
        "n_samples": 8000,
        "system": {"m": 2, "k": 1, "n_per_user": [2], "l_per_user": [2], "p_max": 2.0},
        "output_path": "evs.csv"
    }"#,
    )
    .unwrap();
    let artifacts = experiments::run(&spec).unwrap();
    let csv = &artifacts[0].content;
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let sigma = |speed: &str, mode: &str| -> f64 {
        rows.iter().find(|r| r[0] == speed && r[1] == mode).unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!(sigma("10", "rls") < 0.1175);
    assert!(sigma("40", "rls") > sigma("10", "rls"));
    // the ideal bound never exceeds the measurement
    for r in &rows {
        let measured: f64 = r[2].parse().unwrap();
        let bound: f64 = r[5].parse().unwrap();
        assert!(measured >= bound, "{measured} < bound {bound}");
    }
}
