//! Render a composed model with one cluster per idiom instance.
//!
//! Pipe into Graphviz: `cargo run --example export_graphviz | dot -Tsvg > cad.svg`

use medidiom::fixtures::load_fixture;
use medidiom::model::export_dot;

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "cad_composite".to_string());
    let f = load_fixture(&id).unwrap_or_else(|e| panic!("{e}"));
    print!("{}", export_dot(&f.net, &f.instances));
}
