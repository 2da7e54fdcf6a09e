//! Lint a structure learned from associations, then its idiom-based repair.

use medidiom::fixtures::load_fixture;
use medidiom::lint::{coverage, lint, lint_with, LintConfig, RuleId};

fn main() {
    for id in ["head_injury_bad", "head_injury_good"] {
        let f = load_fixture(id).unwrap();
        let report = lint(&f.net, Some(&f.instances));
        println!("== {id}");
        print!("{}", report.to_text());
        for finding in &report.findings {
            println!("   see: {}", finding.anchor);
        }
        let cov = coverage(&f.net, &f.instances);
        println!("idiom coverage {:.0}%", 100.0 * cov.ratio());
    }

    let f = load_fixture("coagulopathy_sketch").unwrap();
    let mut quiet = LintConfig::default();
    quiet.disable(RuleId::R4).unwrap();
    println!("== coagulopathy_sketch without R4");
    print!("{}", lint_with(&f.net, Some(&f.instances), &quiet).to_text());
    println!("disabling R1: {}", quiet.disable(RuleId::R1).unwrap_err());
}
