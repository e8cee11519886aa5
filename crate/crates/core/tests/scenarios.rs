use std::collections::BTreeMap;

use embedcheck::scenarios::{koch_box_count, run_scenario, ScenarioId};

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn lipschitz_trace_threshold() {
    let rep = run_scenario(ScenarioId::LipschitzTrace, &params(&[("n", 3.0), ("p", 2.0)]), 0).unwrap();
    assert_eq!(rep.quantities["q_star"].as_f64(), Some(4.0));
    assert_eq!(rep.quantities["bounded_at_q_star"], true);
    assert_eq!(rep.quantities["compact_at_q_star"], false);
    assert!(rep.pass, "{}", rep.to_text());
    let err = run_scenario(ScenarioId::LipschitzTrace, &params(&[("n", 2.0), ("p", 2.0)]), 0).unwrap_err();
    assert!(err.to_string().contains("p < n"));
}

#[test]
fn koch_trace_threshold() {
    let rep = run_scenario(ScenarioId::KochTrace, &params(&[("p", 1.5), ("alpha", 0.0)]), 0).unwrap();
    let expect = 3.0 * 4f64.ln() / 3f64.ln();
    assert!((rep.quantities["q_star"].as_f64().unwrap() - expect).abs() < 1e-12);
    assert!(rep.pass, "{}", rep.to_text());
}

#[test]
fn koch_box_counts_grow_by_about_four() {
    // N_k ~ c 4^k once the mesh matches the segment length
    let a = koch_box_count(1.0, 5) as f64;
    let b = koch_box_count(1.0, 6) as f64;
    assert!((3.5..4.5).contains(&(b / a)), "{}", b / a);
}

#[test]
fn optimal_weight_verdicts() {
    let rep = run_scenario(ScenarioId::OptimalWeight, &BTreeMap::new(), 0).unwrap();
    assert_eq!(rep.quantities["verdict_q2"], "Compact");
    assert_eq!(rep.quantities["verdict_q2.5"], "NotBounded");
    assert!(rep.pass);
}

#[test]
fn cusp_scenario() {
    let rep = run_scenario(ScenarioId::Cusp, &BTreeMap::new(), 0).unwrap();
    assert_eq!(rep.quantities["theta"].as_f64(), Some(2.0));
    assert_eq!(rep.inputs["alpha"], -4.0);
    assert!(rep.pass, "{}", rep.to_text());
    // nu-measure of every full chunk is omega_1 * ln(b/a)-type, comparable to 1
    let band = rep.quantities["nu_chunk_band"].as_array().unwrap();
    let (lo, hi) = (band[0].as_f64().unwrap(), band[1].as_f64().unwrap());
    assert!(lo > 0.5 && hi < 2.0, "{lo} {hi}");
}

#[test]
fn hajlasz_general_measure() {
    let rep = run_scenario(ScenarioId::HajlaszGeneralMeasure, &BTreeMap::new(), 0).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
}

#[test]
fn verdicts_do_not_depend_on_seed() {
    for id in [ScenarioId::HajlaszGeneralMeasure, ScenarioId::Cusp, ScenarioId::LipschitzTrace] {
        let a = run_scenario(id, &BTreeMap::new(), 1).unwrap();
        let b = run_scenario(id, &BTreeMap::new(), 2).unwrap();
        assert_eq!(a.pass, b.pass, "{}", id.name());
    }
}
