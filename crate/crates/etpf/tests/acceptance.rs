//! One line per acceptance criterion. Criteria listed as known shortfalls
//! are reported with their reason and do not fail the target.

use std::process::ExitCode;

use etpf::acceptance::{evaluate_all, CRITERIA, KNOWN_SHORTFALLS};

fn main() -> ExitCode {
    let verdicts = evaluate_all();
    let mut unexpected = Vec::new();
    for v in &verdicts {
        let known = KNOWN_SHORTFALLS.iter().find(|(id, _)| *id == v.id);
        match (v.passed, known) {
            (false, Some((_, reason))) => println!("{v} [known shortfall: {reason}]"),
            (false, None) => {
                println!("{v}");
                unexpected.push(v.id);
            }
            (true, _) => println!("{v}"),
        }
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    println!("acceptance: {passed}/{} criteria pass", verdicts.len());
    if verdicts.len() != usize::from(CRITERIA) || !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
