//! Parse `.idbn` text, report diagnostics and print canonical forms.

use medidiom::model::{elaborate, parse, serialize, to_json};

const SOURCE: &str = "\
# Chest X-ray as an imperfect test for internal bleeding.

cpt Xray given (Bleeding) { row(yes): 0.95, 0.05; row(no): 0.01, 0.99; }
variable Xray { states: pos, neg; role: medical_test }
variable Bleeding { states: yes, no; role: condition }
idiom measurement xray { actual: Bleeding; assessed: Xray; }
cpt Bleeding { prior: 0.1, 0.9 }
";

const BROKEN: &str = "\
variable L { states: yes, no; role: condition }
variable S { states: yes, no; role: risk_factor }
edge S -> L
cpt S { prior: 0.6, 0.4; }
cpt L given (S) { row(yes): 0.6, 0.3; row(no): 0.1, 0.9; }
idiom manifesto m { condition: L; }
";

fn main() {
    let doc = parse(SOURCE).expect("valid model");
    let canonical = serialize(&doc);
    print!("{canonical}");
    assert_eq!(serialize(&parse(&canonical).unwrap()), canonical);

    let e = elaborate(&doc).unwrap();
    println!("\n{} variables, {} edges, {} idiom instance(s)", e.net.len(), e.net.edges().len(), e.instances.len());
    println!("{}", to_json(&doc).lines().take(8).collect::<Vec<_>>().join("\n"));

    // All problems are collected in one pass.
    for d in parse(BROKEN).unwrap_err() {
        println!("broken.idbn:{d}");
    }
}
