//! Prints one pass/fail line per acceptance criterion and fails if any
//! criterion fails.

use mie_core::cli::acceptance::{line, run_criterion, ALL};

fn main() {
    let mut failed = Vec::new();
    for id in ALL {
        let start = std::time::Instant::now();
        let r = run_criterion(id);
        println!("{} ({:.1} s)", line(&r), start.elapsed().as_secs_f64());
        if !r.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria pass", ALL.len());
}
