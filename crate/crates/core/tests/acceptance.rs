//! Runs every acceptance criterion and prints one verdict line per criterion.

use std::process::ExitCode;

fn main() -> ExitCode {
    let reports = chlab_core::acceptance::run_all();
    for report in &reports {
        println!("{}", report.line());
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", reports.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
