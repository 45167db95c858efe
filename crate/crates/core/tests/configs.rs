use std::path::Path;

use cfmec::harness::ExperimentConfig;

#[test]
fn shipped_configs_match_presets() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["desk", "full"] {
        let file = ExperimentConfig::load(&dir.join(format!("{name}.toml"))).unwrap();
        assert_eq!(file, ExperimentConfig::preset(name).unwrap(), "{name}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = ExperimentConfig::desk()
        .to_toml()
        .unwrap()
        .replace("[compute]", "[compute]\nf_cpux = 1.0");
    assert!(ExperimentConfig::from_toml(&text).is_err());
}
