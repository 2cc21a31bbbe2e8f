//! Runs the fast validation profile, then the negative control with the
//! four-port coupling sign flipped, which must fail.

use ghostcorr::validate::{run, run_with_sign, Profile};
use ghostcorr::FourPortSign;

fn main() {
    let report = run(Profile::Fast);
    println!("{} checks, all passed: {}", report.checks.len(), report.passed());
    println!("worst fock deviation: {:.2e}", report.max_deviation("fock-vs-closed-form"));
    println!("worst gaussian deviation: {:.2e}", report.max_deviation("gaussian-vs-closed-form"));

    let control = run_with_sign(Profile::Fast, FourPortSign::Flipped);
    println!("negative control passed: {} (expected false)", control.passed());
    for c in control.failures().take(3) {
        println!("  {c}");
    }
}
