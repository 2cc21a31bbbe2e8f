//! Brute-force Fock-space route: builds each source state, checks it, and
//! compares its correlation report with the closed forms.

use ghostcorr::correlators::FockMoments;
use ghostcorr::fock::{self, choose_cutoff_weighted, FockCutoff, Mode, HARD_CAP};
use ghostcorr::{closed_forms, SourceKind, SourceSpec};

fn main() -> ghostcorr::Result<()> {
    for kind in SourceKind::ALL {
        let source = SourceSpec::new(kind, 2.0)?;
        let cutoff = choose_cutoff_weighted(&source, 1e-10, 2, HARD_CAP)?;
        let state = fock::state_for_source(&source, cutoff)?;
        state.validate()?;
        let report = FockMoments::compute(&state)?.report(source);
        println!(
            "{kind:>8}: dim {:>3}, <n_c> = {:.10}, <n_d> = {:.10}, deviation from closed form {:.2e}",
            cutoff.dim(),
            state.mean_number(Mode::C),
            state.mean_number(Mode::D),
            report.max_deviation(&closed_forms(&source))
        );
    }

    // a single photon on a balanced beam splitter
    let cutoff = FockCutoff::new(3, 0.0)?;
    let u = fock::beam_splitter_unitary(0.5, cutoff)?;
    let out = fock::TwoModeFockState::basis(cutoff, 1, 0)?.transformed(&u)?;
    println!("|1,0> through T = 1/2: <n_c> = {:.3}, <n_d> = {:.3}", out.mean_number(Mode::C), out.mean_number(Mode::D));
    Ok(())
}
