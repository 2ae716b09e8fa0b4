use fracflow::scenario::{presets, MethodName, Scenario};
use fracflow::HarnessError;

const GOOD: &str = r#"{
  "domain": {"lx": 1.0, "ly": 1.0},
  "grid": {"n": 19},
  "fracture": [{"x1": 0.15, "y1": 0.63, "x2": 0.45, "y2": 0.09,
                "aperture": 1e-4, "k_tau": 1e4, "k_n": 1e4}],
  "matrix": {"kx": 1.0, "ky": 1.0, "phi": 0.2},
  "fluid": {"mu": 1.0},
  "bc": {"bottom": {"type": "pressure", "value": 1.0},
         "top":    {"type": "pressure", "value": 0.0},
         "left":   {"type": "flux", "value": 0.0},
         "right":  {"type": "flux", "value": 0.0}},
  "method": "ledfm"
}"#;

#[test]
fn documented_example_parses_with_defaults() {
    let sc = Scenario::from_json(GOOD).unwrap();
    assert_eq!(sc, presets::test1(1e4, MethodName::Ledfm, 19));
    assert_eq!(sc.fine.h_fine, 1.0 / 32.0);
    assert!(!sc.transport.enabled);
    assert_eq!(sc.pressure_drop(), 1.0);
}

#[test]
fn presets_round_trip() {
    for sc in [
        presets::test1(1e8, MethodName::Edfm, 37),
        presets::test2(1e-8, MethodName::PedfmUpdated, 5),
        presets::test3(1e-4, MethodName::LedfmMsfv, 73),
        presets::tracer(MethodName::DfmConforming),
    ] {
        assert_eq!(Scenario::from_json(&sc.to_json()).unwrap(), sc);
    }
}

#[test]
fn method_names_round_trip() {
    for m in MethodName::ALL {
        assert_eq!(m.as_str().parse::<MethodName>().unwrap(), m);
    }
    assert!("tpfa".parse::<MethodName>().is_err());
}

fn message(text: &str) -> String {
    match Scenario::from_json(text) {
        Err(HarnessError::Validation(m)) => m,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let broken = GOOD.replace("\"n\": 19}", "\"n\": 19,}");
    let m = message(&broken);
    assert!(m.starts_with("line 3, column "), "{m}");
}

#[test]
fn unknown_and_missing_fields_are_reported() {
    let m = message(&GOOD.replace("\"phi\": 0.2", "\"phi\": 0.2, \"kz\": 1.0"));
    assert!(m.contains("kz") && m.starts_with("line 6"), "{m}");
    let m = message(&GOOD.replace("\"fluid\": {\"mu\": 1.0},", ""));
    assert!(m.contains("missing field `fluid`"), "{m}");
    let m = message(&GOOD.replace("\"ledfm\"", "\"mpfa\""));
    assert!(m.contains("mpfa"), "{m}");
}

#[test]
fn validation_names_every_bad_field() {
    let bad = GOOD
        .replace("\"mu\": 1.0", "\"mu\": -1.0")
        .replace("\"aperture\": 1e-4", "\"aperture\": 0.0")
        .replace("\"x2\": 0.45", "\"x2\": 1.45");
    let m = message(&bad);
    assert!(m.contains("fluid.mu"), "{m}");
    assert!(m.contains("fracture[0].aperture"), "{m}");
    assert!(m.contains("fracture[0]: endpoints must lie in the domain"), "{m}");
    assert_eq!(HarnessError::Validation(m).exit_code(), 2);
}
