//! Two-mode correlation engine for correlated (ghost) imaging.
//!
//! Three correlated-light sources are compared: ideal parametric
//! down-conversion, coherent light split on a balanced beam splitter, and
//! thermal light split the same way. For each source the crate computes the
//! normalized photon-number and quadrature correlations and the
//! difference-noise floors, through three mutually checking routes:
//!
//! - [`correlators::closed_forms`]: analytic expressions,
//! - [`fock`]: brute-force truncated Fock space,
//! - [`gaussian`]: exact first- and second-moment calculus,
//!
//! plus seeded Monte Carlo estimates in [`sampling`]. The [`imaging`] module
//! runs a pixelated correlated-imaging experiment on top of the samplers.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory; the
//! `ghostcorr` binary wraps [`cli`].

pub mod cli;
pub mod correlators;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod imaging;
pub mod pgm;
pub mod sampling;
pub mod source;
pub mod validate;

pub use correlators::{closed_forms, correlations_via_backend, CorrelationReport, ExactBackend};
pub use error::{Error, Result};
pub use source::{FourPortSign, SourceKind, SourceSpec};

use std::fmt;
use std::str::FromStr;

/// Quadrature phase: in-phase `x = (a + a^dag)/2` or out-of-phase
/// `p = (a - a^dag)/2i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    In,
    Out,
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Quadrature::In => "in",
            Quadrature::Out => "out",
        })
    }
}

impl FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(Quadrature::In),
            "out" => Ok(Quadrature::Out),
            other => Err(Error::invalid("phase", format!("expected in or out, got `{other}`"))),
        }
    }
}
