//! Normalized correlation functionals and difference-noise floors.
//!
//! Four scalars describe a source: the normalized photon-number correlation
//! `C_I`, the normalized in-phase quadrature correlation `C_i`, and the
//! second moments of the photon-number difference `V_I` and of the in-phase
//! quadrature difference `V_i`. They come from the closed forms here, from the
//! Fock or Gaussian backends, or from Monte Carlo estimates in `sampling`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{self, Observable, OperatorSet, TwoModeFockState};
use crate::gaussian;
use crate::source::{FourPortSign, SourceKind, SourceSpec};
use crate::Quadrature;

/// Variances below this make a normalized correlation undefined.
pub const VARIANCE_FLOOR: f64 = 1e-14;

/// Photon-number moment order the Fock backend's cutoff is sized for.
pub const FOCK_MOMENT_ORDER: u32 = 2;

/// `cov / sqrt(var_a var_b)`, or `None` when either variance is below
/// [`VARIANCE_FLOOR`].
pub fn normalized_correlation(numerator_cov: f64, var_a: f64, var_b: f64) -> Option<f64> {
    if var_a < VARIANCE_FLOOR || var_b < VARIANCE_FLOOR {
        return None;
    }
    Some(numerator_cov / (var_a * var_b).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    ClosedForm,
    Fock,
    Gaussian,
    MonteCarlo,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Backend::ClosedForm => "closed_form",
            Backend::Fock => "fock",
            Backend::Gaussian => "gaussian",
            Backend::MonteCarlo => "monte_carlo",
        })
    }
}

/// The exact backends `correlations_via_backend` can dispatch to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactBackend {
    Fock,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub source: SourceSpec,
    pub backend: Backend,
    /// `C_I`, normalized photon-number cross-correlation.
    pub c_intensity: Option<f64>,
    /// `C_i`, normalized in-phase quadrature cross-correlation.
    pub c_quadrature: Option<f64>,
    /// `V_I`, second moment of `n_c - n_d`.
    pub v_intensity: f64,
    /// `V_i`, second moment of `x_c - x_d`.
    pub v_quadrature: f64,
    pub stderr_c_intensity: f64,
    pub stderr_c_quadrature: f64,
    pub stderr_v_intensity: f64,
    pub stderr_v_quadrature: f64,
}

impl CorrelationReport {
    pub(crate) fn exact(
        source: SourceSpec,
        backend: Backend,
        c_intensity: Option<f64>,
        c_quadrature: Option<f64>,
        v_intensity: f64,
        v_quadrature: f64,
    ) -> Self {
        CorrelationReport {
            source,
            backend,
            c_intensity,
            c_quadrature,
            v_intensity,
            v_quadrature,
            stderr_c_intensity: 0.0,
            stderr_c_quadrature: 0.0,
            stderr_v_intensity: 0.0,
            stderr_v_quadrature: 0.0,
        }
    }

    /// Largest absolute difference to another report over the four scalars.
    /// A value defined in one report and undefined in the other counts as
    /// infinite.
    pub fn max_deviation(&self, other: &CorrelationReport) -> f64 {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        [
            opt(self.c_intensity, other.c_intensity),
            opt(self.c_quadrature, other.c_quadrature),
            (self.v_intensity - other.v_intensity).abs(),
            (self.v_quadrature - other.v_quadrature).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Analytic values for the three sources at `n` photons per mode.
pub fn closed_forms(source: &SourceSpec) -> CorrelationReport {
    let n = source.n_per_mode();
    let root = (n * (n + 1.0)).sqrt();
    // every source is the vacuum at n = 0, where C_I is 0/0
    let defined = |c: f64| if n > 0.0 { Some(c) } else { None };
    let (ci_int, ci_quad, v_int, v_quad) = match source.kind() {
        SourceKind::Pdc => (defined(1.0), Some(2.0 * root / (2.0 * n + 1.0)), 0.0, 0.5 * (2.0 * n + 1.0 - 2.0 * root)),
        SourceKind::CoherentSplit => (defined(0.0), Some(0.0), 2.0 * n, 0.5),
        SourceKind::ThermalSplit => (defined(n / (n + 1.0)), Some(2.0 * n / (2.0 * n + 1.0)), 2.0 * n, 0.5),
    };
    CorrelationReport::exact(*source, Backend::ClosedForm, ci_int, ci_quad, v_int, v_quad)
}

/// Assembles a report from an exact backend's moments.
///
/// The Fock cutoff bounds the second-moment-weighted photon-number tail by
/// `cutoff_tolerance`; the Gaussian backend ignores the tolerance.
pub fn correlations_via_backend(
    source: &SourceSpec,
    backend: ExactBackend,
    cutoff_tolerance: f64,
) -> Result<CorrelationReport> {
    correlations_signed(source, backend, cutoff_tolerance, FourPortSign::Standard)
}

pub(crate) fn correlations_signed(
    source: &SourceSpec,
    backend: ExactBackend,
    cutoff_tolerance: f64,
    sign: FourPortSign,
) -> Result<CorrelationReport> {
    match backend {
        ExactBackend::Gaussian => {
            let state = gaussian::gaussian_from_source_signed(source, sign);
            let moments = gaussian::photon_moments(&state);
            let (v_int, v_quad) = gaussian::difference_variances(&state);
            Ok(CorrelationReport::exact(
                *source,
                Backend::Gaussian,
                moments.intensity_correlation(),
                gaussian::quadrature_correlation(&state, Quadrature::In),
                v_int,
                v_quad,
            ))
        }
        ExactBackend::Fock => {
            let cutoff = fock::choose_cutoff_weighted(source, cutoff_tolerance, FOCK_MOMENT_ORDER, fock::HARD_CAP)?;
            let state = fock::state_for_source_signed(source, cutoff, sign)?;
            let moments = FockMoments::compute(&state)?;
            Ok(moments.report(*source))
        }
    }
}

/// Raw moments read off a Fock state, enough for all four scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockMoments {
    pub n_c: f64,
    pub n_d: f64,
    pub n_c_sq: f64,
    pub n_d_sq: f64,
    pub n_c_n_d: f64,
    pub x_c: f64,
    pub x_d: f64,
    pub x_c_sq: f64,
    pub x_d_sq: f64,
    pub x_c_x_d: f64,
}

impl FockMoments {
    pub fn compute(state: &TwoModeFockState) -> Result<Self> {
        Self::compute_phase(state, Quadrature::In)
    }

    /// Same moments with the quadrature pair taken at `phase`.
    pub fn compute_phase(state: &TwoModeFockState, phase: Quadrature) -> Result<Self> {
        let ops = OperatorSet::new(state.dim());
        let n = &ops.number;
        let x = ops.quadrature(phase);
        let ev = |obs: Observable<'_>| -> Result<f64> {
            let z = fock::expectation(state, &obs)?;
            Ok(z.re)
        };
        Ok(FockMoments {
            n_c: ev(Observable::new().c(n))?,
            n_d: ev(Observable::new().d(n))?,
            n_c_sq: ev(Observable::new().c(n).c(n))?,
            n_d_sq: ev(Observable::new().d(n).d(n))?,
            n_c_n_d: ev(Observable::new().c(n).d(n))?,
            x_c: ev(Observable::new().c(x))?,
            x_d: ev(Observable::new().d(x))?,
            x_c_sq: ev(Observable::new().c(x).c(x))?,
            x_d_sq: ev(Observable::new().d(x).d(x))?,
            x_c_x_d: ev(Observable::new().c(x).d(x))?,
        })
    }

    pub fn intensity_correlation(&self) -> Option<f64> {
        normalized_correlation(
            self.n_c_n_d - self.n_c * self.n_d,
            self.n_c_sq - self.n_c * self.n_c,
            self.n_d_sq - self.n_d * self.n_d,
        )
    }

    pub fn quadrature_correlation(&self) -> Option<f64> {
        normalized_correlation(
            self.x_c_x_d - self.x_c * self.x_d,
            self.x_c_sq - self.x_c * self.x_c,
            self.x_d_sq - self.x_d * self.x_d,
        )
    }

    /// `<(n_c - n_d)^2>`
    pub fn intensity_difference(&self) -> f64 {
        self.n_c_sq + self.n_d_sq - 2.0 * self.n_c_n_d
    }

    /// `<(x_c - x_d)^2>`
    pub fn quadrature_difference(&self) -> f64 {
        self.x_c_sq + self.x_d_sq - 2.0 * self.x_c_x_d
    }

    pub fn report(&self, source: SourceSpec) -> CorrelationReport {
        CorrelationReport::exact(
            source,
            Backend::Fock,
            self.intensity_correlation(),
            self.quadrature_correlation(),
            self.intensity_difference(),
            self.quadrature_difference(),
        )
    }
}

/// The four plotted families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// `C_I` per source.
    IntensityCorrelation,
    /// `C_i` per source.
    QuadratureCorrelation,
    /// `V_I / 2n`, the intensity floor relative to the coherent-light limit.
    IntensityFloor,
    /// `V_i / (1/2)`, the quadrature floor relative to the coherent-light limit.
    QuadratureFloor,
}

impl Figure {
    pub fn number(self) -> u8 {
        match self {
            Figure::IntensityCorrelation => 2,
            Figure::QuadratureCorrelation => 3,
            Figure::IntensityFloor => 4,
            Figure::QuadratureFloor => 5,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            2 => Ok(Figure::IntensityCorrelation),
            3 => Ok(Figure::QuadratureCorrelation),
            4 => Ok(Figure::IntensityFloor),
            5 => Ok(Figure::QuadratureFloor),
            _ => Err(Error::invalid("figure", format!("expected 2, 3, 4 or 5, got {n}"))),
        }
    }

    fn value(self, report: &CorrelationReport) -> Option<f64> {
        let n = report.source.n_per_mode();
        match self {
            Figure::IntensityCorrelation => report.c_intensity,
            Figure::QuadratureCorrelation => report.c_quadrature,
            Figure::IntensityFloor => {
                if n > 0.0 {
                    Some(report.v_intensity / (2.0 * n))
                } else {
                    None
                }
            }
            Figure::QuadratureFloor => Some(report.v_quadrature / 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    pub n: f64,
    pub pdc: Option<f64>,
    pub coherent: Option<f64>,
    pub thermal: Option<f64>,
}

impl FigureRow {
    pub fn get(&self, kind: SourceKind) -> Option<f64> {
        match kind {
            SourceKind::Pdc => self.pdc,
            SourceKind::CoherentSplit => self.coherent,
            SourceKind::ThermalSplit => self.thermal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub figure: Figure,
    pub rows: Vec<FigureRow>,
}

impl FigureTable {
    pub fn column(&self, kind: SourceKind) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.get(kind)).collect()
    }
}

/// Closed-form curves for one figure over a grid of photon numbers per mode.
pub fn figure_curves(figure: Figure, n_grid: &[f64]) -> Result<FigureTable> {
    let rows = n_grid
        .par_iter()
        .map(|&n| {
            let at = |kind| -> Result<Option<f64>> { Ok(figure.value(&closed_forms(&SourceSpec::new(kind, n)?))) };
            Ok(FigureRow {
                n,
                pdc: at(SourceKind::Pdc)?,
                coherent: at(SourceKind::CoherentSplit)?,
                thermal: at(SourceKind::ThermalSplit)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureTable { figure, rows })
}

/// `points` evenly spaced values from `n_min` to `n_max` inclusive.
pub fn linear_grid(n_min: f64, n_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(n_min.is_finite() && n_max.is_finite() && n_min >= 0.0 && n_min < n_max) {
        return Err(Error::invalid("range", format!("need 0 <= n_min < n_max, got [{n_min}, {n_max}]")));
    }
    if points < 2 {
        return Err(Error::invalid("points", format!("need at least 2, got {points}")));
    }
    let span = n_max - n_min;
    Ok((0..points)
        .map(|i| if i == points - 1 { n_max } else { n_min + span * i as f64 / (points - 1) as f64 })
        .collect())
}
