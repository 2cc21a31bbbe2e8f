//! Light-source parameterization.
//!
//! Every source is normalized to the mean photon number it delivers into
//! *each* of the two output modes. The internal parameters follow from that:
//! the parametric gain is `n + 1`, while the coherent and thermal inputs carry
//! `2n` photons because a balanced splitter halves them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The three correlated-light sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    /// Ideal parametric down-conversion from vacuum (two-mode squeezed vacuum).
    Pdc,
    /// Coherent state on one port of a balanced beam splitter, vacuum on the other.
    CoherentSplit,
    /// Thermal state on one port of a balanced beam splitter, vacuum on the other.
    ThermalSplit,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [SourceKind::Pdc, SourceKind::CoherentSplit, SourceKind::ThermalSplit];

    pub fn short_name(self) -> &'static str {
        match self {
            SourceKind::Pdc => "pdc",
            SourceKind::CoherentSplit => "coherent",
            SourceKind::ThermalSplit => "thermal",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.short_name())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pdc" => Ok(SourceKind::Pdc),
            "coherent" => Ok(SourceKind::CoherentSplit),
            "thermal" => Ok(SourceKind::ThermalSplit),
            other => {
                Err(Error::invalid("source", format!("unknown source `{other}` (expected pdc, coherent or thermal)")))
            }
        }
    }
}

/// Sign of the coupling term in the four-port input-output relations.
///
/// `Standard` is `c = sqrt(T) a - sqrt(1-T) b` for the beam splitter and
/// `c = sqrt(G) a + sqrt(G-1) b^dag` for the parametric amplifier. `Flipped`
/// negates the coupling term in both and exists for negative-control checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FourPortSign {
    #[default]
    Standard,
    Flipped,
}

/// A source together with its mean photon number per output mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    kind: SourceKind,
    n_per_mode: f64,
}

impl SourceSpec {
    pub fn new(kind: SourceKind, n_per_mode: f64) -> Result<Self> {
        check_photon_number("n_per_mode", n_per_mode)?;
        Ok(SourceSpec { kind, n_per_mode })
    }

    pub fn pdc(n_per_mode: f64) -> Result<Self> {
        Self::new(SourceKind::Pdc, n_per_mode)
    }

    pub fn coherent(n_per_mode: f64) -> Result<Self> {
        Self::new(SourceKind::CoherentSplit, n_per_mode)
    }

    pub fn thermal(n_per_mode: f64) -> Result<Self> {
        Self::new(SourceKind::ThermalSplit, n_per_mode)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn n_per_mode(&self) -> f64 {
        self.n_per_mode
    }

    /// Power gain of the parametric amplifier, `n + 1`.
    pub fn gain(&self) -> f64 {
        self.n_per_mode + 1.0
    }

    /// Real, positive coherent input amplitude with `|alpha|^2 = 2n`.
    pub fn coherent_amplitude(&self) -> f64 {
        (2.0 * self.n_per_mode).sqrt()
    }

    /// Mean photon number of the thermal input, `2n`.
    pub fn thermal_input_mean(&self) -> f64 {
        2.0 * self.n_per_mode
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={})", self.kind, self.n_per_mode)
    }
}

pub(crate) fn check_photon_number(name: &'static str, n: f64) -> Result<()> {
    if !n.is_finite() || n < 0.0 {
        return Err(Error::invalid(name, format!("must be finite and >= 0, got {n}")));
    }
    Ok(())
}
