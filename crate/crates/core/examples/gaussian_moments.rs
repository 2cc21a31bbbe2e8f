//! Covariance-matrix route: prints each source's covariance and moments.

use ghostcorr::gaussian::{difference_variances, gaussian_from_source, photon_moments, quadrature_correlation};
use ghostcorr::{Quadrature, SourceKind, SourceSpec};

fn main() -> ghostcorr::Result<()> {
    for kind in SourceKind::ALL {
        let state = gaussian_from_source(&SourceSpec::new(kind, 1.0)?);
        let m = photon_moments(&state);
        let (v_int, v_quad) = difference_variances(&state);
        let [lo, hi] = state.symplectic_eigenvalues();
        println!("{kind} at n = 1");
        println!("  covariance (x_c, p_c, x_d, p_d):{}", state.cov());
        println!("  symplectic eigenvalues {lo:.6} {hi:.6}");
        println!("  <n> = {:.6}, var n = {:.6}, cov(n_c, n_d) = {:.6}", m.mean_c, m.var_c, m.cov_cd);
        println!(
            "  C_I = {:?}, C_i(in) = {:?}, C_i(out) = {:?}",
            m.intensity_correlation(),
            quadrature_correlation(&state, Quadrature::In),
            quadrature_correlation(&state, Quadrature::Out)
        );
        println!("  V_I = {v_int:.6}, V_i = {v_quad:.6}");
    }
    Ok(())
}
