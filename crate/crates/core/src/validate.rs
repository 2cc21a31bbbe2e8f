//! Cross-backend invariant suite behind `ghostcorr validate`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::correlators::{closed_forms, correlations_signed, ExactBackend, FockMoments, FOCK_MOMENT_ORDER};
use crate::error::{Error, Result};
use crate::fock::{self, FockCutoff, Mode};
use crate::gaussian::{self, VACUUM_VARIANCE};
use crate::sampling::{monte_carlo_report, sample_counts, RngConfig, ROUNDOFF};
use crate::source::{FourPortSign, SourceKind, SourceSpec};
use crate::Quadrature;

pub const STANDARD_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const MONTE_CARLO_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const MONTE_CARLO_SHOTS: usize = 1_000_000;
pub const FIXTURE_SEED: u64 = 20_240_601;
pub const FIXTURE_SHARDS: usize = 8;

pub const GAUSSIAN_TOLERANCE: f64 = 1e-12;
pub const FOCK_TOLERANCE: f64 = 1e-8;
pub const FOCK_TAIL: f64 = 1e-10;
pub const SIGMA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Strict,
    Fast,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Profile::Strict),
            "fast" => Ok(Profile::Fast),
            other => Err(Error::invalid("profile", format!("expected strict or fast, got `{other}`"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Profile::Strict => "strict",
            Profile::Fast => "fast",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `deviation <= tolerance`; NaN fails.
    pub fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Check { name: name.into(), deviation, tolerance, passed: deviation <= tolerance }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Check { name: format!("{} ({err})", name.into()), deviation: f64::INFINITY, tolerance: 0.0, passed: false }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} deviation={:.3e} tolerance={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub profile: Profile,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Worst deviation among checks whose name starts with `prefix`.
    pub fn max_deviation(&self, prefix: &str) -> f64 {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.deviation).fold(0.0, f64::max)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} profile: {} checks, {} failed", self.profile, self.checks.len(), failed)
    }
}

pub fn run(profile: Profile) -> ValidationReport {
    run_with_sign(profile, FourPortSign::Standard)
}

/// Runs the suite with the chosen four-port coupling sign in the exact
/// backends. `Flipped` is the negative control and must fail.
pub fn run_with_sign(profile: Profile, sign: FourPortSign) -> ValidationReport {
    let points: Vec<SourceSpec> = SourceKind::ALL
        .iter()
        .flat_map(|&k| STANDARD_GRID.iter().map(move |&n| SourceSpec::new(k, n).expect("grid point")))
        .collect();
    let mut checks: Vec<Check> = points.par_iter().flat_map_iter(|s| exact_checks(s, sign)).collect();
    checks.extend(unitarity_checks());
    checks.push(determinism_check());
    if profile == Profile::Strict {
        let mc: Vec<SourceSpec> = SourceKind::ALL
            .iter()
            .flat_map(|&k| MONTE_CARLO_GRID.iter().map(move |&n| SourceSpec::new(k, n).expect("grid point")))
            .collect();
        checks.extend(mc.iter().flat_map(monte_carlo_checks));
    }
    ValidationReport { profile, checks }
}

fn label(source: &SourceSpec) -> String {
    format!("{} n={}", source.kind().short_name(), source.n_per_mode())
}

fn exact_checks(source: &SourceSpec, sign: FourPortSign) -> Vec<Check> {
    let tag = label(source);
    let truth = closed_forms(source);
    let mut out = Vec::new();

    let g = correlations_signed(source, ExactBackend::Gaussian, FOCK_TAIL, sign).expect("gaussian backend is total");
    out.push(Check::new(format!("gaussian-vs-closed-form {tag}"), g.max_deviation(&truth), GAUSSIAN_TOLERANCE));
    let state = gaussian::gaussian_from_source_signed(source, sign);
    let [nu, _] = state.symplectic_eigenvalues();
    out.push(Check::new(format!("symplectic-bound {tag}"), (VACUUM_VARIANCE - nu).max(0.0), 1e-12));
    let m = gaussian::photon_moments(&state);
    out.push(Check::new(format!("gaussian-symmetry {tag}"), (m.mean_c - m.mean_d).abs(), 1e-12));
    out.push(Check::new(
        format!("gaussian-in-out-phase {tag}"),
        phase_gap(
            source.kind(),
            gaussian::quadrature_correlation(&state, Quadrature::In),
            gaussian::quadrature_correlation(&state, Quadrature::Out),
        ),
        1e-12,
    ));

    match correlations_signed(source, ExactBackend::Fock, FOCK_TAIL, sign) {
        Ok(f) => {
            out.push(Check::new(format!("fock-vs-closed-form {tag}"), f.max_deviation(&truth), FOCK_TOLERANCE));
            out.push(Check::new(format!("fock-vs-gaussian {tag}"), f.max_deviation(&g), FOCK_TOLERANCE));
        }
        Err(e) => out.push(Check::failed(format!("fock-vs-closed-form {tag}"), &e)),
    }

    match fock_state_checks(source, sign) {
        Ok(checks) => {
            out.extend(checks.into_iter().map(|(name, dev, tol)| Check::new(format!("{name} {tag}"), dev, tol)))
        }
        Err(e) => out.push(Check::failed(format!("fock-state {tag}"), &e)),
    }
    out
}

/// Quadrature correlations of the in- and out-of-phase pairs agree in
/// magnitude for every source; for the beam-splitter sources they also agree
/// in sign, while two-mode squeezing anti-correlates the out-of-phase pair.
fn phase_gap(kind: SourceKind, c_in: Option<f64>, c_out: Option<f64>) -> f64 {
    match (c_in, c_out) {
        (Some(a), Some(b)) if kind == SourceKind::Pdc => (a.abs() - b.abs()).abs(),
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

fn fock_state_checks(source: &SourceSpec, sign: FourPortSign) -> Result<Vec<(&'static str, f64, f64)>> {
    let cutoff = fock::choose_cutoff_weighted(source, FOCK_TAIL, FOCK_MOMENT_ORDER, fock::HARD_CAP)?;
    let state = fock::state_for_source_signed(source, cutoff, sign)?;
    let valid = match state.validate() {
        Ok(()) => 0.0,
        Err(_) => f64::INFINITY,
    };
    let symmetry = (state.mean_number(Mode::C) - state.mean_number(Mode::D)).abs();
    let c_in = FockMoments::compute_phase(&state, Quadrature::In)?;
    let c_out = FockMoments::compute_phase(&state, Quadrature::Out)?;
    let phase = phase_gap(source.kind(), c_in.quadrature_correlation(), c_out.quadrature_correlation());
    Ok(vec![
        ("fock-state-valid", valid, 0.0),
        ("fock-symmetry", symmetry, 1e-10),
        ("fock-in-out-phase", phase, FOCK_TOLERANCE),
    ])
}

fn unitarity_checks() -> Vec<Check> {
    let cutoff = FockCutoff::new(12, 0.0).expect("static cutoff");
    let dim = cutoff.dim() * cutoff.dim();
    [0.0, 0.3, 0.5, 0.9, 1.0]
        .into_iter()
        .map(|t| {
            let dev = fock::beam_splitter_unitary(t, cutoff)
                .map(|u| {
                    (u.adjoint() * &u - DMatrix::<C64>::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max)
                })
                .unwrap_or(f64::INFINITY);
            Check::new(format!("beam-splitter-unitarity T={t}"), dev, 1e-12)
        })
        .collect()
}

fn determinism_check() -> Check {
    let rng = RngConfig::new(FIXTURE_SEED, FIXTURE_SHARDS).expect("fixture rng");
    let source = SourceSpec::thermal(1.0).expect("fixture source");
    let a = sample_counts(&source, 10_000, &rng);
    let b = sample_counts(&source, 10_000, &rng);
    let same = matches!((a, b), (Ok(a), Ok(b)) if a == b);
    Check::new("rng-determinism", if same { 0.0 } else { 1.0 }, 0.0)
}

fn monte_carlo_checks(source: &SourceSpec) -> Vec<Check> {
    let tag = label(source);
    let rng = RngConfig::new(FIXTURE_SEED, FIXTURE_SHARDS).expect("fixture rng");
    let report = match monte_carlo_report(source, MONTE_CARLO_SHOTS, &rng) {
        Ok(r) => r,
        Err(e) => return vec![Check::failed(format!("monte-carlo {tag}"), &e)],
    };
    let truth = closed_forms(source);
    let z = |est: Option<f64>, stderr: f64, truth: Option<f64>| -> f64 {
        match (est, truth) {
            (Some(v), Some(t)) if (v - t).abs() <= ROUNDOFF => 0.0,
            (Some(v), Some(t)) => ((v - t) / stderr).abs(),
            _ => f64::INFINITY,
        }
    };
    let mut out = vec![
        Check::new(
            format!("monte-carlo C_I {tag}"),
            z(report.c_intensity, report.stderr_c_intensity, truth.c_intensity),
            SIGMA,
        ),
        Check::new(
            format!("monte-carlo C_i {tag}"),
            z(report.c_quadrature, report.stderr_c_quadrature, truth.c_quadrature),
            SIGMA,
        ),
        Check::new(
            format!("monte-carlo V_I {tag}"),
            z(Some(report.v_intensity), report.stderr_v_intensity, Some(truth.v_intensity)),
            SIGMA,
        ),
        Check::new(
            format!("monte-carlo V_i {tag}"),
            z(Some(report.v_quadrature), report.stderr_v_quadrature, Some(truth.v_quadrature)),
            SIGMA,
        ),
    ];
    if source.kind() == SourceKind::Pdc {
        out.push(Check::new(format!("monte-carlo PDC difference exactly zero {tag}"), report.v_intensity.abs(), 0.0));
    }
    out
}
