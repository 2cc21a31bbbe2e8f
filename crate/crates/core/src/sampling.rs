//! Seeded Monte Carlo photon-count and homodyne records, and estimators.
//!
//! Each record is generated in `shards` contiguous pieces, each from its own
//! ChaCha8 substream, and concatenated in shard order. The same
//! [`RngConfig`] and shot count therefore give bit-identical records however
//! the shards are scheduled.
//!
//! Standard errors use batch means over [`BATCHES`] equal consecutive batches.

use std::io::Write;
use std::ops::Range;

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, Normal, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::correlators::{normalized_correlation, Backend, CorrelationReport};
use crate::error::{Error, Result};
use crate::gaussian::gaussian_from_source;
use crate::source::{SourceKind, SourceSpec};
use crate::Quadrature;

pub const BATCHES: usize = 100;

/// Guard on the number of shots in one call.
pub const MAX_SHOTS: usize = 1_000_000_000;

/// Absolute slack added to `k * stderr` comparisons, so estimators that are
/// exact up to rounding (stderr 0) still compare equal.
pub const ROUNDOFF: f64 = 1e-12;

const COUNTS_STREAM: u64 = 1 << 32;
const QUADRATURE_STREAM: u64 = 2 << 32;
pub(crate) const PIXEL_STREAM: u64 = 3 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngConfig {
    pub seed: u64,
    pub shards: usize,
}

impl RngConfig {
    pub fn new(seed: u64, shards: usize) -> Result<Self> {
        if shards == 0 {
            return Err(Error::invalid("shards", "must be positive"));
        }
        Ok(RngConfig { seed, shards })
    }

    /// Generator for `(key, shard)`: the key goes into the ChaCha key next to
    /// the seed, the shard selects the stream.
    pub(crate) fn stream(&self, key: u64, shard: usize) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&self.seed.to_le_bytes());
        bytes[8..16].copy_from_slice(&key.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(shard as u64);
        rng
    }
}

/// Runs `draw` on each shard's slice of `shots` and concatenates in order.
pub(crate) fn run_sharded<T, F>(shots: usize, rng: &RngConfig, key: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let shards = rng.shards.min(shots.max(1));
    let pieces: Vec<Vec<T>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let len = shots * (s + 1) / shards - shots * s / shards;
            let mut r = rng.stream(key, s);
            draw(&mut r, len)
        })
        .collect();
    pieces.into_iter().flatten().collect()
}

fn check_shots(shots: usize) -> Result<()> {
    if shots == 0 {
        return Err(Error::TooFewShots { shots, required: 1 });
    }
    if shots > MAX_SHOTS {
        return Err(Error::BudgetExceeded { requested: shots as u64, limit: MAX_SHOTS as u64 });
    }
    Ok(())
}

/// Paired photon counts of the object (c) and reference (d) arms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRecord {
    counts_c: Vec<u64>,
    counts_d: Vec<u64>,
}

impl CountRecord {
    pub fn new(counts_c: Vec<u64>, counts_d: Vec<u64>) -> Result<Self> {
        if counts_c.len() != counts_d.len() || counts_c.is_empty() {
            return Err(Error::InvalidRecord(format!(
                "arm lengths {} and {} must be equal and non-zero",
                counts_c.len(),
                counts_d.len()
            )));
        }
        Ok(CountRecord { counts_c, counts_d })
    }

    pub fn shots(&self) -> usize {
        self.counts_c.len()
    }

    pub fn counts_c(&self) -> &[u64] {
        &self.counts_c
    }

    pub fn counts_d(&self) -> &[u64] {
        &self.counts_d
    }

    /// CSV with header `shot_index,value_c,value_d`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "shot_index,value_c,value_d")?;
        for (i, (c, d)) in self.counts_c.iter().zip(&self.counts_d).enumerate() {
            writeln!(w, "{i},{c},{d}")?;
        }
        Ok(())
    }
}

/// Paired homodyne outcomes at one quadrature phase.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRecord {
    phase: Quadrature,
    q_c: Vec<f64>,
    q_d: Vec<f64>,
}

impl QuadratureRecord {
    pub fn new(phase: Quadrature, q_c: Vec<f64>, q_d: Vec<f64>) -> Result<Self> {
        if q_c.len() != q_d.len() || q_c.is_empty() {
            return Err(Error::InvalidRecord(format!(
                "arm lengths {} and {} must be equal and non-zero",
                q_c.len(),
                q_d.len()
            )));
        }
        Ok(QuadratureRecord { phase, q_c, q_d })
    }

    pub fn shots(&self) -> usize {
        self.q_c.len()
    }

    pub fn phase(&self) -> Quadrature {
        self.phase
    }

    pub fn q_c(&self) -> &[f64] {
        &self.q_c
    }

    pub fn q_d(&self) -> &[f64] {
        &self.q_d
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "shot_index,value_c,value_d")?;
        for (i, (c, d)) in self.q_c.iter().zip(&self.q_d).enumerate() {
            writeln!(w, "{i},{c:.16e},{d:.16e}")?;
        }
        Ok(())
    }
}

/// Joint photon-count law of one source.
#[derive(Debug, Clone, Copy)]
enum PairLaw {
    Vacuum,
    /// Identical geometric counts in both arms.
    Pdc(Geometric),
    /// Independent Poisson counts.
    Coherent(Poisson<f64>),
    /// Circular Gaussian input amplitude, split in half, Poisson per arm.
    Thermal(Normal<f64>),
}

impl PairLaw {
    fn new(source: &SourceSpec) -> Result<Self> {
        let n = source.n_per_mode();
        if n == 0.0 {
            return Ok(PairLaw::Vacuum);
        }
        let bad = |e: String| Error::invalid("n_per_mode", e);
        Ok(match source.kind() {
            SourceKind::Pdc => PairLaw::Pdc(Geometric::new(1.0 / (n + 1.0)).map_err(|e| bad(e.to_string()))?),
            SourceKind::CoherentSplit => PairLaw::Coherent(Poisson::new(n).map_err(|e| bad(e.to_string()))?),
            // E|A|^2 = 2n over two quadratures of variance n each
            SourceKind::ThermalSplit => PairLaw::Thermal(Normal::new(0.0, n.sqrt()).map_err(|e| bad(e.to_string()))?),
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (u64, u64) {
        match self {
            PairLaw::Vacuum => (0, 0),
            PairLaw::Pdc(g) => {
                let k = g.sample(rng);
                (k, k)
            }
            PairLaw::Coherent(p) => (p.sample(rng) as u64, p.sample(rng) as u64),
            PairLaw::Thermal(normal) => {
                let re = normal.sample(rng);
                let im = normal.sample(rng);
                // |A sqrt(T)|^2 = |A|^2 / 2 in each arm
                let intensity = 0.5 * (re * re + im * im);
                match Poisson::new(intensity) {
                    Ok(p) => (p.sample(rng) as u64, p.sample(rng) as u64),
                    Err(_) => (0, 0),
                }
            }
        }
    }
}

/// Count pairs with each object-arm photon kept with probability
/// `transmittance` (binomial thinning).
pub(crate) fn sample_thinned_counts(
    source: &SourceSpec,
    shots: usize,
    rng: &RngConfig,
    key: u64,
    transmittance: f64,
) -> Result<CountRecord> {
    check_shots(shots)?;
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::invalid("transmittance", format!("must lie in [0, 1], got {transmittance}")));
    }
    let law = PairLaw::new(source)?;
    let pairs = run_sharded(shots, rng, key, |r, len| {
        (0..len)
            .map(|_| {
                let (c, d) = law.draw(r);
                let c = if transmittance < 1.0 && c > 0 {
                    Binomial::new(c, transmittance).map(|b| b.sample(r)).unwrap_or(0)
                } else {
                    c
                };
                (c, d)
            })
            .collect()
    });
    let (counts_c, counts_d) = pairs.into_iter().unzip();
    CountRecord::new(counts_c, counts_d)
}

/// Photon-count pairs for a source.
pub fn sample_counts(source: &SourceSpec, shots: usize, rng: &RngConfig) -> Result<CountRecord> {
    sample_thinned_counts(source, shots, rng, COUNTS_STREAM, 1.0)
}

/// Ideal homodyne pairs: draws from the exact bivariate Gaussian marginal of
/// the chosen quadrature pair.
pub fn sample_quadratures(
    source: &SourceSpec,
    phase: Quadrature,
    shots: usize,
    rng: &RngConfig,
) -> Result<QuadratureRecord> {
    check_shots(shots)?;
    let state = gaussian_from_source(source);
    let (mean, cov) = state.quadrature_marginal(phase);
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Factorization(format!("quadrature covariance {cov} is not positive definite")))?;
    let l = chol.l();
    let key = QUADRATURE_STREAM | if phase == Quadrature::In { 0 } else { 1 };
    let pairs = run_sharded(shots, rng, key, |r, len| {
        (0..len)
            .map(|_| {
                let z = Vector2::new(StandardNormal.sample(r), StandardNormal.sample(r));
                let q = mean + l * z;
                (q[0], q[1])
            })
            .collect()
    });
    let (q_c, q_d) = pairs.into_iter().unzip();
    QuadratureRecord::new(phase, q_c, q_d)
}

/// A point estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Option<f64>,
    pub stderr: f64,
}

impl Estimate {
    /// `(value - truth) / stderr`; infinite when stderr is zero and the value
    /// misses the truth by more than [`ROUNDOFF`].
    pub fn z_score(&self, truth: f64) -> Option<f64> {
        let v = self.value?;
        let gap = v - truth;
        if gap.abs() <= ROUNDOFF {
            return Some(0.0);
        }
        Some(gap / self.stderr)
    }

    /// `|value - truth| <= k_sigma * stderr + ROUNDOFF`.
    pub fn within(&self, truth: f64, k_sigma: f64) -> bool {
        match self.value {
            Some(v) => (v - truth).abs() <= k_sigma * self.stderr + ROUNDOFF,
            None => false,
        }
    }
}

/// Plug-in (1/N) moments of a paired sample.
#[derive(Debug, Clone, Copy)]
struct PairStats {
    mean_a: f64,
    mean_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
    diff_mean: f64,
    diff_var: f64,
}

fn pair_stats(a: &[f64], b: &[f64]) -> PairStats {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let diff_mean = mean_a - mean_b;
    let (mut var_a, mut var_b, mut cov, mut diff_var) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
        let dd = (x - y) - diff_mean;
        diff_var += dd * dd;
    }
    PairStats { mean_a, mean_b, var_a: var_a / n, var_b: var_b / n, cov: cov / n, diff_mean, diff_var: diff_var / n }
}

fn batch_ranges(len: usize) -> impl Iterator<Item = Range<usize>> {
    let size = len / BATCHES;
    (0..BATCHES).map(move |b| b * size..(b + 1) * size)
}

/// Batch-means standard error of a statistic given its per-batch values.
fn batch_stderr(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let vals: Vec<f64> = values.flatten().collect();
    if vals.len() < 2 {
        return f64::NAN;
    }
    let k = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (k - 1.0) / k).sqrt()
}

/// Sample statistics of one paired record, each with a batch-means stderr.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEstimate {
    pub mean_c: Estimate,
    pub mean_d: Estimate,
    pub var_c: Estimate,
    pub var_d: Estimate,
    pub covariance: Estimate,
    pub correlation: Estimate,
    /// Mean of `c - d`.
    pub difference_mean: Estimate,
    /// Variance of `c - d`.
    pub difference_variance: Estimate,
}

fn estimate_pairs(a: &[f64], b: &[f64]) -> Result<PairEstimate> {
    if a.len() < BATCHES {
        return Err(Error::TooFewShots { shots: a.len(), required: BATCHES });
    }
    let full = pair_stats(a, b);
    let batches: Vec<PairStats> = batch_ranges(a.len()).map(|r| pair_stats(&a[r.clone()], &b[r])).collect();
    let est = |f: &dyn Fn(&PairStats) -> Option<f64>| Estimate {
        value: f(&full),
        stderr: batch_stderr(batches.iter().map(f)),
    };
    Ok(PairEstimate {
        mean_c: est(&|s| Some(s.mean_a)),
        mean_d: est(&|s| Some(s.mean_b)),
        var_c: est(&|s| Some(s.var_a)),
        var_d: est(&|s| Some(s.var_b)),
        covariance: est(&|s| Some(s.cov)),
        correlation: est(&|s| normalized_correlation(s.cov, s.var_a, s.var_b)),
        difference_mean: est(&|s| Some(s.diff_mean)),
        difference_variance: est(&|s| Some(s.diff_var)),
    })
}

/// Intensity statistics of a count record (needs at least [`BATCHES`] shots).
pub fn estimate_counts(record: &CountRecord) -> Result<PairEstimate> {
    let a: Vec<f64> = record.counts_c.iter().map(|&k| k as f64).collect();
    let b: Vec<f64> = record.counts_d.iter().map(|&k| k as f64).collect();
    estimate_pairs(&a, &b)
}

/// Quadrature statistics of a homodyne record (needs at least [`BATCHES`] shots).
pub fn estimate_quadratures(record: &QuadratureRecord) -> Result<PairEstimate> {
    estimate_pairs(&record.q_c, &record.q_d)
}

/// Monte Carlo report from a count record and an in-phase homodyne record.
pub fn estimate_report(
    source: &SourceSpec,
    counts: &CountRecord,
    quadratures: &QuadratureRecord,
) -> Result<CorrelationReport> {
    if quadratures.phase != Quadrature::In {
        return Err(Error::InvalidRecord("report needs in-phase quadratures".into()));
    }
    let i = estimate_counts(counts)?;
    let q = estimate_quadratures(quadratures)?;
    Ok(CorrelationReport {
        source: *source,
        backend: Backend::MonteCarlo,
        c_intensity: i.correlation.value,
        c_quadrature: q.correlation.value,
        v_intensity: i.difference_variance.value.unwrap_or(f64::NAN),
        v_quadrature: q.difference_variance.value.unwrap_or(f64::NAN),
        stderr_c_intensity: i.correlation.stderr,
        stderr_c_quadrature: q.correlation.stderr,
        stderr_v_intensity: i.difference_variance.stderr,
        stderr_v_quadrature: q.difference_variance.stderr,
    })
}

/// Samples both records and estimates a report.
pub fn monte_carlo_report(source: &SourceSpec, shots: usize, rng: &RngConfig) -> Result<CorrelationReport> {
    let counts = sample_counts(source, shots, rng)?;
    let quads = sample_quadratures(source, Quadrature::In, shots, rng)?;
    estimate_report(source, &counts, &quads)
}
