//! Build a small network by hand and ask structural questions of it.

use medidiom::graph::{Assignment, BayesNet, Role};

fn main() {
    let net = BayesNet::builder()
        .variable("Smoking", &["yes", "no"], Role::RiskFactor)
        .variable("LungCancer", &["yes", "no"], Role::Condition)
        .variable("Xray", &["pos", "neg"], Role::MedicalTest)
        .edge("Smoking", "LungCancer")
        .edge("LungCancer", "Xray")
        .prior("Smoking", &[0.6, 0.4])
        .cpt("LungCancer", &["Smoking"], &[&[0.1, 0.9], &[0.01, 0.99]])
        .cpt("Xray", &["LungCancer"], &[&[0.9, 0.1], &[0.05, 0.95]])
        .build()
        .expect("valid network");

    println!("order: {:?}", net.topological_order());
    println!("descendants of Smoking: {:?}", net.descendants("Smoking").unwrap());

    let all = Assignment::new()
        .with("Smoking", "yes")
        .with("LungCancer", "yes")
        .with("Xray", "pos");
    println!("P(all yes/pos) = {}", net.joint_probability(&all).unwrap());

    for given in [&[][..], &["LungCancer"][..]] {
        let sep = net.d_separated(&["Smoking"], &["Xray"], given).unwrap();
        println!("Smoking _||_ Xray | {given:?}: {sep}");
    }

    // Every violation is reported, not just the first.
    let broken = BayesNet::builder()
        .variable("A", &["x", "y"], Role::Unclassified)
        .variable("B", &["x", "y"], Role::Unclassified)
        .edge("A", "B")
        .edge("B", "A")
        .prior("A", &[0.6, 0.3])
        .build();
    if let Err(errors) = broken {
        for e in errors.0 {
            println!("rejected: {e}");
        }
    }
}
