//! The exit gate: every acceptance criterion at full trial counts, one
//! pass/fail line each. Runs without the test harness so the lines are
//! always shown; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::thread::available_parallelism;

use convex_relu::verify::{Suite, VerifyConfig, CHECK_NAMES};

fn main() -> ExitCode {
    let jobs = available_parallelism().map_or(1, |n| n.get());
    let suite = Suite::new(&VerifyConfig::default(), jobs).expect("thread pool");
    let mut failed = Vec::new();
    for id in 1..=CHECK_NAMES.len() {
        match suite.run(id) {
            Ok(outcome) => {
                println!("{}", outcome.line());
                if !outcome.passed {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("[FAIL] {id:2} {}: error: {e}", CHECK_NAMES[id - 1]);
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CHECK_NAMES.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
