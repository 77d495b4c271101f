use std::path::Path;

use qhlab::lab::experiments::{image_uniformity, run_metric_table, run_subinvariance};
use qhlab::lab::ExperimentConfig;
use qhlab::mappings::Mapping;

fn preset(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name);
    std::fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn image_estimate_matches_the_standalone_run() {
    for name in ["subinvariance_similarity.toml", "subinvariance_radial.toml"] {
        let cfg = preset(name);
        let report = run_subinvariance(&cfg).unwrap();
        let map = Mapping::new(cfg.map_kind().unwrap().clone(), &cfg.domain().unwrap()).unwrap();
        let alone =
            image_uniformity(&map, &cfg.subdomain().unwrap(), &cfg.uniformity_params(), cfg.sampling.estimator).unwrap();
        let piped = &report.results["c_image"];
        for (key, value) in [("c_curve", alone.estimate.c_curve), ("c_prime_kj", alone.estimate.c_prime_kj)] {
            let got = piped[key].as_f64().unwrap();
            assert!((got - value).abs() <= 1e-9, "{name} {key}: {got} vs {value}");
        }
        assert_eq!(piped["diverging"], alone.estimate.diverging);
    }
}

#[test]
fn metric_cache_does_not_change_the_report() {
    let cfg = preset("metric_punctured_plane.toml");
    let dir = tempfile::tempdir().unwrap();
    let plain = run_metric_table(&cfg, None).unwrap();
    let cold = run_metric_table(&cfg, Some(dir.path())).unwrap();
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0, "cache file written");
    let warm = run_metric_table(&cfg, Some(dir.path())).unwrap();
    let canon = |r: &qhlab::lab::Report| r.canonical().unwrap().to_string();
    assert_eq!(canon(&plain), canon(&cold));
    assert_eq!(canon(&cold), canon(&warm));
}

#[test]
fn metric_table_rows_hit_the_closed_forms() {
    let rows = |name: &str| run_metric_table(&preset(name), None).unwrap().results["rows"].clone();
    let hp = rows("metric_half_plane.toml");
    assert!((hp[0]["j"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((hp[0]["k_upper"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let ball = rows("metric_ball.toml");
    let ln2 = 2f64.ln();
    assert!((ball[0]["j"].as_f64().unwrap() - ln2).abs() < 1e-12);
    assert!(ball[0]["k_upper"].as_f64().unwrap() <= ln2 + 1e-3);
    let pp = rows("metric_punctured_plane.toml");
    let pi = std::f64::consts::PI;
    assert!((pp[0]["k_upper"].as_f64().unwrap() - pi).abs() / pi < 0.02);
}
