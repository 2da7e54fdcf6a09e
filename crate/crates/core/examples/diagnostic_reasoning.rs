//! Observational queries: forward prediction, diagnosis and explaining away.

use medidiom::fixtures::load_fixture;
use medidiom::graph::Assignment;
use medidiom::inference::{enumerate_posterior, posterior};

fn show(label: &str, p: f64) {
    println!("{label:<44} {p:.6}");
}

fn main() {
    let chain = load_fixture("smoking_chain").unwrap().net;
    let q = |ev: Assignment| posterior(&chain, "LungCancer", &ev).unwrap().probability("yes").unwrap();
    show("P(LungCancer=yes)", q(Assignment::new()));
    show("P(LungCancer=yes | Smoking=yes)", q(Assignment::new().with("Smoking", "yes")));
    show("P(LungCancer=yes | Xray=pos)", q(Assignment::new().with("Xray", "pos")));

    let xray = load_fixture("xray_measurement").unwrap().net;
    let ev = Assignment::new().with("Xray", "pos");
    let fast = posterior(&xray, "Bleeding", &ev).unwrap();
    let slow = enumerate_posterior(&xray, "Bleeding", &ev).unwrap();
    show("P(Bleeding=yes | Xray=pos)", fast.probability("yes").unwrap());
    println!("elimination vs enumeration: {:e}", fast.max_abs_diff(&slow));

    // Two conditions competing for one symptom.
    let shared = load_fixture("comorbidity_symptom").unwrap().net;
    let pain = Assignment::new().with("ChestPain", "yes");
    let both = pain.clone().with("LungCancer", "yes");
    let cad = |ev: &Assignment| posterior(&shared, "CAD", ev).unwrap().probability("yes").unwrap();
    show("P(CAD=yes | ChestPain=yes)", cad(&pain));
    show("P(CAD=yes | ChestPain=yes, LungCancer=yes)", cad(&both));
}
