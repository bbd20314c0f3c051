use std::path::{Path, PathBuf};

use ristap_core::driver::Scheme;
use ristap_core::scenario::ScenarioConfig;
use ristap_harness::config::{parse_config, parse_config_str, ExperimentKind, Profile};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn paper_text() -> String {
    std::fs::read_to_string(configs_dir().join("paper.toml")).unwrap()
}

#[test]
fn full_size_config_matches_profile_values() {
    let cfg = parse_config(&configs_dir().join("paper.toml"), Profile::Desk).unwrap();
    let s = cfg.scenario.clone().unwrap();
    assert_eq!(s, ScenarioConfig::paper_default());
    assert_eq!(s.n_tx_antennas, 8);
    assert_eq!(s.n_users, 3);
    assert_eq!(s.n_ris_elements, 25);
    assert_eq!(s.n_ris, 2);
    assert_eq!(s.n_pulses, 8);
    assert_eq!(s.n_slots, 8);
    assert_eq!(s.prf_hz, 1000.0);
    assert_eq!(s.carrier_freq_hz, 2.4e9);
    assert_eq!(s.qos_gamma_db, 10.0);
    assert_eq!(s.target_position, [0.0, 50.0]);
    assert_eq!(s.ris_positions, vec![[-12.0, 45.0], [12.0, 45.0]]);
    assert_eq!(s.clutter_positions, vec![[6.0, 55.0], [-4.0, 53.0], [3.0, 46.0]]);
    assert_eq!(s.pathloss_exponents.bs_user, 3.0);
    assert_eq!(s.pathloss_exponents.ris_user, 2.8);
    assert_eq!(s.pathloss_exponents.bs_ris, 2.0);
    assert_eq!(cfg.experiment.grid, vec![3.0, 5.0, 8.0]);
}

#[test]
fn every_shipped_config_validates() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            for profile in [Profile::Desk, Profile::Paper] {
                parse_config(&path, profile).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            }
            n += 1;
        }
    }
    assert!(n >= 9);
}

#[test]
fn missing_key_is_named() {
    let text = paper_text().replace("n_users = 3\n", "");
    let err = format!("{:#}", parse_config_str(&text).unwrap_err());
    assert!(err.contains("n_users"), "{err}");
}

#[test]
fn unknown_key_is_named_with_line() {
    let text = paper_text().replace("kind = \"convergence\"", "kind = \"convergence\"\nbogus_key = 1");
    let err = format!("{:#}", parse_config_str(&text).unwrap_err());
    assert!(err.contains("bogus_key"), "{err}");
    let line = text.lines().position(|l| l.starts_with("bogus_key")).unwrap() + 1;
    assert!(err.contains(&format!("line {line}")), "{err}");
    let text = paper_text().replace("n_users = 3", "n_users = 3\nn_usres = 3");
    assert!(format!("{:#}", parse_config_str(&text).unwrap_err()).contains("n_usres"));
}

#[test]
fn parse_serialize_parse_round_trips() {
    for name in ["paper.toml", "power_sweep.toml", "roc.toml"] {
        let a = parse_config_str(&std::fs::read_to_string(configs_dir().join(name)).unwrap()).unwrap();
        let b = parse_config_str(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn defaults_fill_optional_experiment_keys() {
    let cfg = parse_config_str("[experiment]\nname = \"x\"\nkind = \"power_sweep\"\ngrid = [40.0]\n").unwrap();
    assert!(cfg.scenario.is_none());
    assert_eq!(cfg.experiment.kind, ExperimentKind::PowerSweep);
    assert_eq!(cfg.experiment.schemes, vec![Scheme::Proposed, Scheme::RandomRis, Scheme::NoRis]);
    assert_eq!(cfg.experiment.seeds, (0..10).collect::<Vec<_>>());
    assert_eq!(cfg.experiment.max_outer, 50);
    assert_eq!(cfg.resolved_scenario(Profile::Desk), ScenarioConfig::desk_default());
    assert_eq!(cfg.resolved_scenario(Profile::Paper), ScenarioConfig::paper_default());
}

#[test]
fn invalid_experiments_are_rejected() {
    let base = "[experiment]\nname = \"x\"\n";
    let cases = [
        ("kind = \"power_sweep\"\ngrid = []\n", "grid"),
        ("kind = \"power_sweep\"\ngrid = [40.0]\nseeds = [1, 1]\n", "seeds"),
        ("kind = \"power_sweep\"\ngrid = [-1.0]\n", "power"),
        ("kind = \"ris_count_sweep\"\ngrid = [3.0]\n", "RIS count"),
        ("kind = \"ris_count_sweep\"\ngrid = [0.5]\n", "RIS count"),
        ("kind = \"roc\"\ngrid = [10.0]\np_fa = [0.0]\n", "p_fa"),
        ("kind = \"power_sweep\"\ngrid = [40.0]\nschemes = []\n", "schemes"),
    ];
    for (body, key) in cases {
        let cfg = parse_config_str(&format!("{base}{body}")).unwrap();
        let err = format!("{:#}", cfg.validate(Profile::Desk).unwrap_err());
        assert!(err.contains(key), "{body}: {err}");
    }
    assert!(parse_config_str(&format!("{base}kind = \"sideways\"\ngrid = [1.0]\n")).is_err());
}
