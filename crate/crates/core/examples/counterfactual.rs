//! Would the heart attack have been prevented had medication been given?

use medidiom::causal::{build_twin, counterfactual_query};
use medidiom::fixtures::load_fixture;
use medidiom::graph::Assignment;

fn main() {
    let net = load_fixture("counterfactual_medication").unwrap().net;
    let actual = Assignment::new()
        .with("CAD", "yes")
        .with("Medication", "not_given")
        .with("HeartAttack", "yes");
    let had = Assignment::new().with("Medication", "given");

    let twin = build_twin(&net, &had, true).unwrap();
    println!("twin network: {:?}", twin.net.topological_order());
    println!("shared between worlds: {:?}", twin.shared);

    let r = counterfactual_query(&net, &actual, &had, "HeartAttack").unwrap();
    let d = &r.distribution;
    println!("P({}=yes) = {:.6}", d.variable, d.probability("yes").unwrap());
    for note in &r.provenance.notes {
        println!("note: {note}");
    }

    let blank = counterfactual_query(&net, &Assignment::new(), &had, "HeartAttack").unwrap();
    println!("without evidence: {:.6}", blank.distribution.probability("yes").unwrap());
}
