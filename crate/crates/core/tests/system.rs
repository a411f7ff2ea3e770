use powinst::{build_system, make_example, Error, ExampleId, Norm, System, SystemSpec};

fn example(id: ExampleId, horizon: usize) -> System {
    build_system(make_example(id, horizon).unwrap()).unwrap()
}

#[test]
fn state_norm_examples() {
    let ex28 = example(ExampleId::Example28, 40);
    let v = ex28.state_norm(4, 1, 0).unwrap();
    assert!((v.value() - 2.0).abs() < 1e-12);
    let ex25 = example(ExampleId::Example25 { b: 2.0, c: 1.0 }, 10);
    assert!((ex25.state_norm(4, 2, 0).unwrap().value() - 4.0).abs() < 1e-12);
    let ex25 = example(ExampleId::Example25 { b: 2.0, c: 2.0 }, 10);
    assert!((ex25.state_norm(5, 2, 0).unwrap().value() - 2.0).abs() < 1e-12);
    let ex28 = example(ExampleId::Example28, 10);
    assert!((ex28.state_norm(10, 0, 0).unwrap().value() - 6.0).abs() < 1e-12);
}

#[test]
fn pair_gain_examples() {
    let c2 = example(ExampleId::Constant { c: 2.0 }, 10);
    assert!((c2.pair_gain(5, 3, 0).unwrap().value.value() - 0.25).abs() < 1e-15);
    let ex29 = example(ExampleId::Example29, 10);
    let g = ex29.pair_gain(3, 1, 0).unwrap().value.value();
    assert!((g - 2f64.exp()).abs() < 1e-12);
    assert_eq!(c2.pair_gain(4, 4, 1).unwrap().value.value(), 1.0);
}

#[test]
fn malformed_specs_are_rejected() {
    let short = SystemSpec::MatrixTable {
        dimension: 2,
        matrices: vec![vec![1.0, 0.0, 0.0, 1.0]; 5],
        norm: Norm::Two,
        sample_count: 4,
        seed: 0,
        horizon: 10,
    };
    assert!(matches!(build_system(short), Err(Error::TableTooShort { .. })));
    let wrong = SystemSpec::MatrixTable {
        dimension: 2,
        matrices: vec![vec![1.0, 0.0, 0.0]; 3],
        norm: Norm::Two,
        sample_count: 4,
        seed: 0,
        horizon: 3,
    };
    assert!(matches!(build_system(wrong), Err(Error::DimensionMismatch { .. })));
    let unknown = SystemSpec::ScalarFormula {
        formula: "example99".into(),
        params: Default::default(),
        horizon: 3,
    };
    assert!(matches!(build_system(unknown), Err(Error::UnknownFormula(_))));
}

#[test]
fn spec_json_round_trip() {
    let spec = make_example(ExampleId::Example25 { b: 2.0, c: 1.5 }, 12).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    let back: SystemSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);

    let table = SystemSpec::ScalarTable {
        log_steps: vec![0.5, f64::NEG_INFINITY, -0.25],
        horizon: 3,
    };
    let text = serde_json::to_string(&table).unwrap();
    assert!(text.contains("\"-inf\""));
    let back: SystemSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, table);
}

#[test]
fn one_by_one_matrices_agree_with_scalar_tables() {
    let logs = [0.3, -0.7, 1.1, -0.2, 0.05, -1.3];
    let scalar = build_system(SystemSpec::ScalarTable {
        log_steps: logs.to_vec(),
        horizon: logs.len(),
    })
    .unwrap();
    let matrix = build_system(SystemSpec::MatrixTable {
        dimension: 1,
        matrices: logs.iter().map(|g| vec![-g.exp()]).collect(),
        norm: Norm::Inf,
        sample_count: 0,
        seed: 0,
        horizon: logs.len(),
    })
    .unwrap();
    for m in 0..=logs.len() {
        for n in 0..=m {
            let a = scalar.state_norm(m, n, 0).unwrap().ln();
            let b = matrix.state_norm(m, n, 0).unwrap().ln();
            assert!((a - b).abs() < 1e-12);
            let ga = scalar.pair_gain(m, n, 0).unwrap().value.ln();
            let gb = matrix.pair_gain(m, n, 0).unwrap().value.ln();
            assert!((ga - gb).abs() < 1e-12);
        }
    }
}
