//! Browse the idiom catalog, instantiate templates and compose fragments.

use medidiom::graph::Role;
use medidiom::idiom::{catalog, compose, instantiate, suggest_idiom, Bindings, IdiomId, SuggestHints};

fn bind(pairs: &[(&str, &[&str])]) -> Bindings {
    pairs
        .iter()
        .map(|(slot, vars)| (slot.to_string(), vars.iter().map(|v| v.to_string()).collect()))
        .collect()
}

fn main() {
    for t in catalog() {
        let slots: Vec<&str> = t.slots.iter().map(|s| s.name).collect();
        println!("{:<34} slots {slots:?}", t.id.keyword());
    }

    let manifestation = instantiate(
        IdiomId::Manifestation,
        &bind(&[("condition", &["CAD"]), ("manifestations", &["ChestPain", "ECG"])]),
    )
    .unwrap();
    let pathogenesis = instantiate(
        IdiomId::Pathogenesis,
        &bind(&[
            ("risk_factors", &["Obesity", "Diabetes"]),
            ("mechanism", &["Plaque"]),
            ("condition", &["CAD"]),
        ]),
    )
    .unwrap();
    let model = compose(&[manifestation, pathogenesis]).unwrap();
    for ((from, to), e) in model.edges() {
        println!("{from} -> {to}  from {:?}", e.sources);
    }

    let group = [
        ("Obesity".to_string(), Role::RiskFactor),
        ("CAD".to_string(), Role::Condition),
    ];
    let hints = SuggestHints {
        mediator_observable: Some(false),
        ..SuggestHints::default()
    };
    println!("suggested: {:?}", suggest_idiom(&group, &hints).unwrap());
}
