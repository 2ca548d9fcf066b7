use std::path::{Path, PathBuf};

use uav_codesign::uavspec::{load_problem, parse_problem};
use uav_codesign::Error;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped() -> String {
    std::fs::read_to_string(configs().join("nano.toml")).unwrap()
}

#[test]
fn every_shipped_config_loads() {
    for name in ["nano.toml", "micro.toml", "mini-30fps.toml", "mini-60fps.toml", "nano-low-db.toml"] {
        let p = load_problem(&configs().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(p.search.size() > 0, "{name}");
    }
}

#[test]
fn database_config_ingests_rows() {
    let p = load_problem(&configs().join("nano-low-db.toml")).unwrap();
    assert_eq!(p.database.as_ref().map(|d| d.len()), Some(8));
}

#[test]
fn canonical_form_round_trips() {
    let p = load_problem(&configs().join("nano.toml")).unwrap();
    let text = p.to_toml().unwrap();
    let q = parse_problem(&text, &configs(), Path::new("<canonical>")).unwrap();
    assert_eq!(p, q);
}

#[test]
fn missing_file_is_an_io_error() {
    let e = load_problem(&configs().join("nope.toml")).unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
    assert!(!e.is_config());
}

#[test]
fn syntax_errors_name_the_file() {
    let e = parse_problem("schema_version = [", &configs(), Path::new("broken.toml")).unwrap_err();
    assert!(matches!(e, Error::Parse { ref path, .. } if path == Path::new("broken.toml")));
}

#[test]
fn unknown_keys_are_rejected() {
    let text = shipped().replace("[mission]", "[mission]\nspeed_limit = 3");
    assert!(matches!(parse_problem(&text, &configs(), Path::new("x")), Err(Error::Parse { .. })));
}

#[test]
fn invalid_values_name_the_field() {
    let text = shipped().replace("battery_capacity_mah = 500", "battery_capacity_mah = -5");
    match parse_problem(&text, &configs(), Path::new("x")) {
        Err(Error::Validation(f)) => assert!(f.field.contains("battery"), "{f:?}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn platform_that_cannot_lift_itself_is_rejected() {
    let text = shipped().replace("max_thrust_n = 6.0", "max_thrust_n = 0.3");
    assert!(matches!(parse_problem(&text, &configs(), Path::new("x")), Err(Error::Validation(_))));
}

#[test]
fn empty_search_range_is_rejected() {
    let text = shipped().replace("filters = [16, 32]", "filters = []");
    let e = parse_problem(&text, &configs(), Path::new("x")).unwrap_err();
    assert!(e.is_config(), "{e}");
}
