//! Exact first- and second-moment calculus for the three (Gaussian) sources.
//!
//! Quadratures follow `x = (a + a^dag)/2`, `p = (a - a^dag)/2i`, so the vacuum
//! covariance is `I/4`. Vectors and matrices are ordered `(x_c, p_c, x_d, p_d)`
//! and the covariance is the symmetrized one, `V_jk = <{dr_j, dr_k}>/2`.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::correlators::normalized_correlation;
use crate::error::{Error, Result};
use crate::source::{FourPortSign, SourceKind, SourceSpec};
use crate::Quadrature;

pub const VACUUM_VARIANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTwoModeState {
    mean: Vector4<f64>,
    cov: Matrix4<f64>,
}

impl GaussianTwoModeState {
    /// Validates symmetry (1e-12) and the uncertainty bound on the symplectic
    /// eigenvalues (`>= 1/4 - 1e-12`).
    pub fn new(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self> {
        let asym = (cov - cov.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::invalid("cov", format!("not symmetric (deviation {asym:e})")));
        }
        let state = GaussianTwoModeState { mean, cov };
        let [lo, _] = state.symplectic_eigenvalues();
        if lo < VACUUM_VARIANCE - 1e-12 {
            return Err(Error::invalid("cov", format!("symplectic eigenvalue {lo} violates the 1/4 bound")));
        }
        Ok(state)
    }

    pub fn vacuum() -> Self {
        GaussianTwoModeState { mean: Vector4::zeros(), cov: Matrix4::identity() * VACUUM_VARIANCE }
    }

    pub fn mean(&self) -> &Vector4<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix4<f64> {
        &self.cov
    }

    /// Symplectic eigenvalues `[nu_-, nu_+]`.
    ///
    /// With `V = L L^T`, the matrix `A = L^T Omega L` is antisymmetric with
    /// eigenvalues `+-i nu`, so `A^T A` is symmetric with eigenvalues `nu^2`.
    /// This stays accurate when the two eigenvalues coincide (pure states),
    /// where the root formula in the two-mode invariants loses half the
    /// digits. A covariance that is not positive definite reports `nu_- = 0`.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        let Some(chol) = self.cov.cholesky() else {
            return [0.0, self.cov.symmetric_eigenvalues().max().max(0.0)];
        };
        let l = chol.l();
        let mut omega = Matrix4::zeros();
        for k in [0, 2] {
            omega[(k, k + 1)] = 1.0;
            omega[(k + 1, k)] = -1.0;
        }
        let a = l.transpose() * omega * l;
        let mut ev: Vec<f64> = (a.transpose() * a).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        // eigenvalues come in pairs; average each pair
        [((ev[0] + ev[1]) / 2.0).max(0.0).sqrt(), ((ev[2] + ev[3]) / 2.0).max(0.0).sqrt()]
    }

    /// Mean and covariance of the `(q_c, q_d)` pair for one quadrature phase.
    pub fn quadrature_marginal(&self, phase: Quadrature) -> (Vector2<f64>, Matrix2<f64>) {
        let (i, j) = quadrature_indices(phase);
        let mean = Vector2::new(self.mean[i], self.mean[j]);
        let cov = Matrix2::new(self.cov[(i, i)], self.cov[(i, j)], self.cov[(j, i)], self.cov[(j, j)]);
        (mean, cov)
    }

    /// `<q_c - q_d>` for the chosen phase.
    pub fn mean_quadrature_difference(&self, phase: Quadrature) -> f64 {
        let (i, j) = quadrature_indices(phase);
        self.mean[i] - self.mean[j]
    }
}

fn quadrature_indices(phase: Quadrature) -> (usize, usize) {
    match phase {
        Quadrature::In => (0, 2),
        Quadrature::Out => (1, 3),
    }
}

/// Photon-number moments of the two output modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonMoments {
    pub mean_c: f64,
    pub mean_d: f64,
    pub var_c: f64,
    pub var_d: f64,
    pub cov_cd: f64,
}

impl PhotonMoments {
    pub fn intensity_correlation(&self) -> Option<f64> {
        normalized_correlation(self.cov_cd, self.var_c, self.var_d)
    }
}

/// Exact output state of a source.
///
/// PDC: zero mean, diagonal `(2n+1)/4`, x-x cross term `+sqrt(n(n+1))/2`, p-p
/// cross term `-sqrt(n(n+1))/2`. Split coherent: mean `(sqrt n, 0, sqrt n, 0)`,
/// vacuum covariance. Split thermal: zero mean, diagonal `(2n+1)/4`, x-x and
/// p-p cross terms `n/2`.
pub fn gaussian_from_source(source: &SourceSpec) -> GaussianTwoModeState {
    gaussian_from_source_signed(source, FourPortSign::Standard)
}

pub(crate) fn gaussian_from_source_signed(source: &SourceSpec, sign: FourPortSign) -> GaussianTwoModeState {
    let n = source.n_per_mode();
    let s = match sign {
        FourPortSign::Standard => 1.0,
        FourPortSign::Flipped => -1.0,
    };
    let diag = (2.0 * n + 1.0) / 4.0;
    let mut mean = Vector4::zeros();
    let mut cov = Matrix4::identity() * VACUUM_VARIANCE;
    let (xx, pp) = match source.kind() {
        SourceKind::Pdc => {
            let k = (n * (n + 1.0)).sqrt() / 2.0;
            (s * k, -s * k)
        }
        SourceKind::CoherentSplit => {
            // alpha = sqrt(2n) on port a; each output carries alpha/sqrt(2)
            let amp = source.coherent_amplitude() * std::f64::consts::FRAC_1_SQRT_2;
            mean[0] = amp;
            mean[2] = amp;
            (0.0, 0.0)
        }
        SourceKind::ThermalSplit => (n / 2.0, n / 2.0),
    };
    if source.kind() != SourceKind::CoherentSplit {
        for i in 0..4 {
            cov[(i, i)] = diag;
        }
    }
    cov[(0, 2)] = xx;
    cov[(2, 0)] = xx;
    cov[(1, 3)] = pp;
    cov[(3, 1)] = pp;
    GaussianTwoModeState { mean, cov }
}

/// `cov(q_c, q_d) / sqrt(var q_c var q_d)`, undefined below the variance floor.
pub fn quadrature_correlation(state: &GaussianTwoModeState, phase: Quadrature) -> Option<f64> {
    let (_, cov) = state.quadrature_marginal(phase);
    normalized_correlation(cov[(0, 1)], cov[(0, 0)], cov[(1, 1)])
}

/// Photon-number moments by Gaussian moment factorization.
///
/// With `s = x^2 + p^2` read off the Wigner function, `n = s - 1/2`,
/// `<n^2> = <s^2> - <s>`, hence `Var n = Var s - 1/4` and
/// `Cov(n_c, n_d) = Cov(s_c, s_d)`. For jointly Gaussian quadratures
/// `Cov(r_i^2, r_j^2) = 2 V_ij^2 + 4 mu_i mu_j V_ij`.
pub fn photon_moments(state: &GaussianTwoModeState) -> PhotonMoments {
    let mu = &state.mean;
    let v = &state.cov;
    let sq_cov = |i: usize, j: usize| 2.0 * v[(i, j)] * v[(i, j)] + 4.0 * mu[i] * mu[j] * v[(i, j)];
    let block = |a: [usize; 2], b: [usize; 2]| -> f64 {
        a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| sq_cov(i, j)).sum()
    };
    let (c, d) = ([0, 1], [2, 3]);
    let mean_of = |m: [usize; 2]| -> f64 { m.iter().map(|&i| v[(i, i)] + mu[i] * mu[i]).sum::<f64>() - 0.5 };
    PhotonMoments {
        mean_c: mean_of(c),
        mean_d: mean_of(d),
        var_c: block(c, c) - 0.25,
        var_d: block(d, d) - 0.25,
        cov_cd: block(c, d),
    }
}

/// `(V_I, V_i)`: second moments of `n_c - n_d` and of `x_c - x_d`.
pub fn difference_variances(state: &GaussianTwoModeState) -> (f64, f64) {
    let m = photon_moments(state);
    let mean_gap = m.mean_c - m.mean_d;
    let intensity = m.var_c + m.var_d - 2.0 * m.cov_cd + mean_gap * mean_gap;
    let (_, cov) = state.quadrature_marginal(Quadrature::In);
    let quad_gap = state.mean_quadrature_difference(Quadrature::In);
    let quadrature = cov[(0, 0)] + cov[(1, 1)] - 2.0 * cov[(0, 1)] + quad_gap * quad_gap;
    (intensity, quadrature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_photons_is_vacuum_for_all_sources() {
        for kind in SourceKind::ALL {
            let s = gaussian_from_source(&SourceSpec::new(kind, 0.0).unwrap());
            assert_eq!(s, GaussianTwoModeState::vacuum(), "{kind}");
        }
    }

    #[test]
    fn pdc_cross_covariance_at_one_photon() {
        let s = gaussian_from_source(&SourceSpec::pdc(1.0).unwrap());
        assert_abs_diff_eq!(s.cov()[(0, 2)], 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.cov()[(1, 3)], -(2f64.sqrt()) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn thermal_covariance_at_one_photon() {
        let s = gaussian_from_source(&SourceSpec::thermal(1.0).unwrap());
        assert_abs_diff_eq!(s.cov()[(0, 2)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.cov()[(0, 0)], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_moments_vanish() {
        let m = photon_moments(&GaussianTwoModeState::vacuum());
        for v in [m.mean_c, m.mean_d, m.var_c, m.var_d, m.cov_cd] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        }
        assert_eq!(quadrature_correlation(&GaussianTwoModeState::vacuum(), Quadrature::In), Some(0.0));
    }

    #[test]
    fn coherent_counts_are_poissonian() {
        let m = photon_moments(&gaussian_from_source(&SourceSpec::coherent(1.0).unwrap()));
        assert_abs_diff_eq!(m.mean_c, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.var_c, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.cov_cd, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn thermal_moments_at_one_photon() {
        let m = photon_moments(&gaussian_from_source(&SourceSpec::thermal(1.0).unwrap()));
        assert_abs_diff_eq!(m.var_c, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.cov_cd, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.intensity_correlation().unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn symplectic_spectrum_of_known_states() {
        for n in [0.1, 1.0, 10.0, 100.0] {
            // rounding grows with the condition number of V, about (4n + 2)^2
            let eps = if n > 10.0 { 1e-10 } else { 1e-12 };
            let pure = gaussian_from_source(&SourceSpec::pdc(n).unwrap());
            for nu in pure.symplectic_eigenvalues() {
                assert_abs_diff_eq!(nu, 0.25, epsilon = eps);
            }
            // a thermal input of mean 2n beside a vacuum port
            let split = gaussian_from_source(&SourceSpec::thermal(n).unwrap());
            let [lo, hi] = split.symplectic_eigenvalues();
            assert_abs_diff_eq!(lo, 0.25, epsilon = eps);
            assert_abs_diff_eq!(hi, (4.0 * n + 1.0) / 4.0, epsilon = 1e-10 * n.max(1.0));
        }
    }

    #[test]
    fn rejects_unphysical_covariance() {
        let squeezed_too_far = Matrix4::identity() * 0.1;
        assert!(GaussianTwoModeState::new(Vector4::zeros(), squeezed_too_far).is_err());
        let mut asym = Matrix4::identity() * 0.25;
        asym[(0, 1)] = 0.01;
        assert!(GaussianTwoModeState::new(Vector4::zeros(), asym).is_err());
    }

    #[test]
    fn flipped_coupling_negates_pdc_correlation() {
        let src = SourceSpec::pdc(1.0).unwrap();
        let s = gaussian_from_source_signed(&src, FourPortSign::Flipped);
        let c = quadrature_correlation(&s, Quadrature::In).unwrap();
        assert_abs_diff_eq!(c, -2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-14);
    }
}
