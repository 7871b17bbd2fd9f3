//! One line per acceptance criterion; fails if any criterion fails.

use std::io::Write;
use std::time::Instant;

use smartlet::acceptance::CRITERIA;

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    std::io::stdout().lock().write_all(b"\n").unwrap();
    for (name, check) in CRITERIA {
        let t = Instant::now();
        let c = check();
        let line = format!("{} {name}: {} ({:.1} s)\n", if c.passed { "PASS" } else { "FAIL" }, c.detail, t.elapsed().as_secs_f64());
        // Bypasses the harness capture so the lines show in every run.
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
        if !c.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
