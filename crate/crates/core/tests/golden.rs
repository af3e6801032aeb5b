use std::path::Path;

use thickscape::{parse_scenario, SeedSpec};

fn root() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn ellipse_scenario_normalizes_to_golden() {
    let text = std::fs::read_to_string(root().join("../../scenarios/ellipse.json")).unwrap();
    let sc = parse_scenario(&text).unwrap();
    let golden = std::fs::read_to_string(root().join("tests/golden/ellipse.normalized.json")).unwrap();
    if std::env::var_os("THICKSCAPE_BLESS").is_some() {
        std::fs::write(root().join("tests/golden/ellipse.normalized.json"), sc.normalized()).unwrap();
        return;
    }
    assert_eq!(sc.normalized(), golden);
    assert_eq!(sc.seeds, SeedSpec::Random { count: 200, rng_seed: 20240601 });
}

#[test]
fn shipped_scenarios_parse_and_round_trip() {
    for entry in std::fs::read_dir(root().join("../../scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let sc = parse_scenario(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = parse_scenario(&sc.normalized()).unwrap();
        assert_eq!(again, sc);
        assert_eq!(again.normalized(), sc.normalized());
        assert_eq!(again.hash(), sc.hash());
    }
}
