//! Seeing versus doing on the treatment triangle.

use medidiom::causal::{backdoor_adjust, backdoor_blocked, do_surgery, interventional_query};
use medidiom::fixtures::load_fixture;
use medidiom::graph::Assignment;
use medidiom::inference::posterior;

fn main() {
    let net = load_fixture("treatment_triangle").unwrap().net;
    let given = Assignment::new().with("Medication", "given");

    let seen = posterior(&net, "HeartAttack", &given).unwrap();
    let done = interventional_query(&net, "HeartAttack", &given, &Assignment::new()).unwrap();
    let adjusted = backdoor_adjust(&net, "HeartAttack", "Medication", "given", &["CAD"]).unwrap();

    println!("P(HeartAttack=yes | Medication=given)     {:.6}", seen.probability("yes").unwrap());
    println!("P(HeartAttack=yes | do(Medication=given)) {:.6}", done.distribution.probability("yes").unwrap());
    println!("backdoor adjustment over {{CAD}}            {:.6}", adjusted.probability("yes").unwrap());
    println!("arcs cut: {:?}", done.provenance.removed_edges);

    println!("empty set blocks the backdoor: {}", backdoor_blocked(&net, "Medication", "HeartAttack", &[]).unwrap());
    println!("{{CAD}} blocks the backdoor:    {}", backdoor_blocked(&net, "Medication", "HeartAttack", &["CAD"]).unwrap());

    let mutilated = do_surgery(&net, &given).unwrap();
    println!("Medication parents after surgery: {:?}", mutilated.parents("Medication").unwrap());
}
