//! Check every bundled model against its expected results.

use medidiom::fixtures::fixtures;

fn main() {
    let mut failed = 0;
    for f in fixtures() {
        let failures = f.check().unwrap_or_else(|e| vec![e.to_string()]);
        let verdict = if failures.is_empty() { "ok" } else { "FAIL" };
        println!("{verdict:<4} {:<28} {} checks  {}", f.id, f.expectations.len(), f.description);
        for m in &failures {
            println!("     {m}");
        }
        failed += failures.len();
    }
    std::process::exit(i32::from(failed > 0));
}
