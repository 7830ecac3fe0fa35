use std::path::PathBuf;

use carveopt::document::{InstanceDocument, PRINT_THRESHOLD};
use carveopt::{parse_instance, serialize_instance, ParseError, ScenarioDefaults, SolutionDocument};
use carveopt_core::fixtures::three_recipe_example;
use carveopt_core::synth::random_small_instance;
use carveopt_core::{solve_iterative, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fig1_bytes() -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fig1.json");
    std::fs::read(path).unwrap()
}

#[test]
fn demo_file_parses() {
    let (inst, defaults) = parse_instance(&fig1_bytes()).unwrap();
    assert_eq!(inst.num_materials(), 6);
    assert_eq!(inst.num_recipes(), 3);
    assert_eq!(inst.num_alt_groups(), 1);
    assert_eq!(defaults, ScenarioDefaults::default());
    // Same structure as the built-in example, apart from names and demand.
    let reference = three_recipe_example();
    for (a, b) in inst.recipes().iter().zip(reference.recipes()) {
        assert_eq!(a, b);
    }
}

#[test]
fn missing_cost_names_the_path() {
    let text = r#"{"schema_version": 1, "materials": [{"id": "a"}, {"id": "b"}]}"#;
    match parse_instance(text.as_bytes()) {
        Err(ParseError::Schema { path, message }) => {
            assert_eq!(path, "materials[0]");
            assert!(message.contains("cost"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn wrong_type_names_the_field() {
    let text = r#"{"schema_version": 1, "materials": [{"id": "a", "cost": 1}, {"id": "b", "cost": "high"}]}"#;
    match parse_instance(text.as_bytes()) {
        Err(ParseError::Schema { path, .. }) => assert_eq!(path, "materials[1].cost"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_fields_and_versions_are_rejected() {
    let text = r#"{"schema_version": 1, "materials": [{"id": "a", "cost": 1, "colour": "red"}]}"#;
    assert!(matches!(parse_instance(text.as_bytes()), Err(ParseError::Schema { .. })));
    let text = r#"{"schema_version": 2, "materials": []}"#;
    match parse_instance(text.as_bytes()) {
        Err(ParseError::Schema { path, .. }) => assert_eq!(path, "schema_version"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    let text = "{\"schema_version\": 1,\n \"materials\": [}";
    match parse_instance(text.as_bytes()) {
        Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_instance(br#"{"schema_version": 1, "materials": []} x"#), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse_instance(&[0xff, 0xfe]), Err(ParseError::Syntax { .. })));
}

#[test]
fn validation_failures_use_document_paths() {
    let text = r#"{"schema_version": 1,
        "materials": [{"id": "a", "cost": 1}],
        "recipes": [{"id": "r", "inputs": [{"material": "a", "qty": 1}], "outputs": [{"material": "ghost", "qty": 1}]}]}"#;
    match parse_instance(text.as_bytes()) {
        Err(ParseError::Invalid(v)) => {
            assert_eq!(v.len(), 1);
            assert_eq!(v[0].path, "recipes[0].outputs[0].material");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn serialization_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let inst = random_small_instance(&mut rng);
        let defaults = ScenarioDefaults {
            weights: Some([1.0, 2.0, 0.5, 0.0, 3.0]),
            moq: Some(50.0),
            mpa_ratio: None,
        };
        let text = serialize_instance(&inst, &defaults);
        let (back, back_defaults) = parse_instance(text.as_bytes()).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back_defaults, defaults);
        assert_eq!(serialize_instance(&back, &back_defaults), text);
    }
}

#[test]
fn parsed_documents_reserialize_identically() {
    let doc: InstanceDocument = serde_json::from_slice(&fig1_bytes()).unwrap();
    let (inst, defaults) = parse_instance(&fig1_bytes()).unwrap();
    let again: InstanceDocument = serde_json::from_str(&serialize_instance(&inst, &defaults)).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn solution_documents_omit_tiny_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let s = Scenario::new(random_small_instance(&mut rng)).unwrap();
        let report = solve_iterative(&s).unwrap();
        let doc = SolutionDocument::new(&s, &report);
        for map in [&doc.z, &doc.buy, &doc.stock_new, &doc.stock_old] {
            assert!(map.values().all(|v| v.abs() > PRINT_THRESHOLD));
        }
        assert!(doc.z_hat.iter().all(|a| a.level.abs() > PRINT_THRESHOLD));
        let sol = report.solution.as_ref().unwrap();
        assert_eq!(doc.objective, Some(sol.objective_value));
        let nonzero_buys = sol.buy.iter().filter(|b| b.abs() > PRINT_THRESHOLD).count();
        assert_eq!(doc.buy.len(), nonzero_buys);
        // The document survives a JSON round trip.
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(serde_json::from_str::<SolutionDocument>(&text).unwrap(), doc);
    }
}
