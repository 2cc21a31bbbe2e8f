//! Pixelated correlated-imaging experiment.
//!
//! Every pixel is one object/reference mode pair, independent of all other
//! pixels. The object arm passes through a transmittance mask, which thins
//! its photon counts binomially; the reference arm is detected untouched.
//! Two reconstructions are provided:
//!
//! - fluctuation correlation: per-pixel `cov(n_c, n_d)`, proportional to the
//!   transmittance for PDC and thermal light and identically zero for
//!   coherent light, scaled by the calibration pixel `(0, 0)`;
//! - difference signal: per-pixel `mean(n_d - n_c) = n (1 - t)`, whose
//!   per-shot noise is the source's intensity-difference floor.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::correlators::closed_forms;
use crate::error::{Error, Result};
use crate::pgm::{self, Graymap};
use crate::sampling::{estimate_counts, sample_thinned_counts, CountRecord, Estimate, RngConfig, PIXEL_STREAM};
use crate::source::SourceSpec;

pub const MAX_SIDE: usize = 256;
pub const MAX_TOTAL_SAMPLES: u64 = 1_000_000_000;

/// Power transmittance per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Mask {
    /// Values are clamped to `[0, 1]`.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(Error::invalid("mask", format!("size {width}x{height} outside 1..={MAX_SIDE} per side")));
        }
        if values.len() != width * height {
            return Err(Error::invalid("mask", format!("{} values for {width}x{height} pixels", values.len())));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("mask", "NaN transmittance"));
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Mask { width, height, values })
    }

    pub fn from_graymap(map: &Graymap) -> Result<Self> {
        Self::new(map.width, map.height, map.unit_values())
    }

    /// 32x32 vertical bars of width 4, alternating t = 1 and t = 0, starting
    /// transparent at column 0.
    pub fn demo_bars() -> Self {
        let (w, h) = (32, 32);
        let values = (0..h).flat_map(|_| (0..w).map(|x| if (x / 4) % 2 == 0 { 1.0 } else { 0.0 })).collect();
        Mask { width: w, height: h, values }
    }

    /// 32x32 vertical ramp from t = 0.25 (top) to t = 1 (bottom), with the
    /// calibration pixel forced to 1.
    pub fn demo_gradient() -> Self {
        let (w, h) = (32, 32);
        let mut values: Vec<f64> =
            (0..h).flat_map(|y| (0..w).map(move |_| 0.25 + 0.75 * y as f64 / (h - 1) as f64)).collect();
        values[0] = 1.0;
        Mask { width: w, height: h, values }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "demo-bars" => Some(Self::demo_bars()),
            "demo-gradient" => Some(Self::demo_gradient()),
            _ => None,
        }
    }

    /// A built-in mask name or a path to a `P2` graymap.
    pub fn load(spec: &str) -> Result<Self> {
        match Self::builtin(spec) {
            Some(m) => Ok(m),
            None => Self::from_graymap(&pgm::read_p2(Path::new(spec))?),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingScene {
    mask: Mask,
    source: SourceSpec,
    shots_per_pixel: usize,
    rng: RngConfig,
}

impl ImagingScene {
    pub fn new(mask: Mask, source: SourceSpec, shots_per_pixel: usize, rng: RngConfig) -> Result<Self> {
        if shots_per_pixel == 0 {
            return Err(Error::invalid("shots_per_pixel", "must be positive"));
        }
        let requested = shots_per_pixel as u64 * mask.len() as u64;
        if requested > MAX_TOTAL_SAMPLES {
            return Err(Error::BudgetExceeded { requested, limit: MAX_TOTAL_SAMPLES });
        }
        Ok(ImagingScene { mask, source, shots_per_pixel, rng })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }

    pub fn shots_per_pixel(&self) -> usize {
        self.shots_per_pixel
    }

    pub fn rng(&self) -> &RngConfig {
        &self.rng
    }
}

/// One count record per pixel, row-major. Pixel `p` draws from its own
/// substream keyed by `p`.
pub fn simulate_scene(scene: &ImagingScene) -> Result<Vec<CountRecord>> {
    scene
        .mask
        .values
        .par_iter()
        .enumerate()
        .map(|(p, &t)| {
            sample_thinned_counts(&scene.source, scene.shots_per_pixel, &scene.rng, PIXEL_STREAM | p as u64, t)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FluctuationCorrelation,
    DifferenceSignal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Method::FluctuationCorrelation => "fluctuation",
            Method::DifferenceSignal => "difference",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fluctuation" => Ok(Method::FluctuationCorrelation),
            "difference" => Ok(Method::DifferenceSignal),
            other => Err(Error::invalid("method", format!("expected fluctuation or difference, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingResult {
    pub method: Method,
    pub width: usize,
    pub height: usize,
    /// Transmittance estimate per pixel.
    pub reconstruction: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Raw per-pixel statistic the reconstruction is scaled from: the
    /// count covariance, or `mean(n_d - n_c)`.
    pub signal: Vec<f64>,
    pub signal_stderr: Vec<f64>,
    /// Mean of `|signal| / stderr` over the signal region: transmitting
    /// pixels (t > 0) for fluctuation imaging, absorbing pixels (t < 1) for
    /// difference imaging. A reporting convention of this crate.
    pub summary_snr: Option<f64>,
}

impl ImagingResult {
    /// `signal / signal_stderr` per pixel.
    pub fn z_scores(&self) -> Vec<f64> {
        self.signal
            .iter()
            .zip(&self.signal_stderr)
            .map(|(s, e)| Estimate { value: Some(*s), stderr: *e }.z_score(0.0).unwrap_or(f64::NAN))
            .collect()
    }

    /// Pearson correlation of the reconstruction with a mask.
    pub fn pearson_with(&self, mask: &Mask) -> Option<f64> {
        pearson(&self.reconstruction, mask.values())
    }

    /// Reconstruction as a `P2` graymap, clamped to `[0, 1]`.
    pub fn to_graymap(&self) -> Result<Graymap> {
        Graymap::from_unit_values(self.width, self.height, &self.reconstruction, pgm::WRITE_MAXVAL)
    }

    /// CSV `x,y,estimate,stderr` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,estimate,stderr")?;
        for (p, (v, e)) in self.reconstruction.iter().zip(&self.stderr).enumerate() {
            writeln!(w, "{},{},{v:.16e},{e:.16e}", p % self.width, p / self.width)?;
        }
        Ok(())
    }
}

fn check_records(records: &[CountRecord], scene: &ImagingScene) -> Result<()> {
    if records.len() != scene.mask.len() {
        return Err(Error::InvalidRecord(format!("{} records for {} pixels", records.len(), scene.mask.len())));
    }
    if let Some(r) = records.iter().find(|r| r.shots() != scene.shots_per_pixel) {
        return Err(Error::InvalidRecord(format!(
            "record with {} shots, scene has {} per pixel",
            r.shots(),
            scene.shots_per_pixel
        )));
    }
    Ok(())
}

fn summary_snr(signal: &[f64], stderr: &[f64], region: impl Fn(usize) -> bool) -> Option<f64> {
    let ratios: Vec<f64> = (0..signal.len())
        .filter(|&p| region(p) && stderr[p] > 0.0 && stderr[p].is_finite())
        .map(|p| signal[p].abs() / stderr[p])
        .collect();
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

/// Ghost image from per-pixel photon-count covariance, normalized by the
/// calibration pixel `(0, 0)`, which must be fully transmitting. When the
/// calibration covariance is exactly zero the scale falls back to 1.
pub fn reconstruct_fluctuation(records: &[CountRecord], scene: &ImagingScene) -> Result<ImagingResult> {
    check_records(records, scene)?;
    let calib_t = scene.mask.values[0];
    if calib_t != 1.0 {
        return Err(Error::MissingCalibration(calib_t));
    }
    let covs = records.par_iter().map(|r| estimate_counts(r).map(|e| e.covariance)).collect::<Result<Vec<_>>>()?;
    let signal: Vec<f64> = covs.iter().map(|e| e.value.unwrap_or(f64::NAN)).collect();
    let signal_stderr: Vec<f64> = covs.iter().map(|e| e.stderr).collect();
    let scale = if signal[0] == 0.0 { 1.0 } else { signal[0] };
    let reconstruction = signal.iter().map(|s| s / scale).collect();
    let stderr = signal_stderr.iter().map(|e| e / scale.abs()).collect();
    let mask = &scene.mask.values;
    Ok(ImagingResult {
        method: Method::FluctuationCorrelation,
        width: scene.mask.width,
        height: scene.mask.height,
        reconstruction,
        stderr,
        summary_snr: summary_snr(&signal, &signal_stderr, |p| mask[p] > 0.0),
        signal,
        signal_stderr,
    })
}

/// Absorption image from the per-pixel mean count difference
/// `mean(n_d - n_c) = n (1 - t)`, giving `t = 1 - mean / n`.
pub fn reconstruct_difference(records: &[CountRecord], scene: &ImagingScene) -> Result<ImagingResult> {
    check_records(records, scene)?;
    let n = scene.source.n_per_mode();
    if n <= 0.0 {
        return Err(Error::invalid("n_per_mode", "difference imaging needs n > 0"));
    }
    let diffs =
        records.par_iter().map(|r| estimate_counts(r).map(|e| e.difference_mean)).collect::<Result<Vec<_>>>()?;
    // difference_mean is mean(c - d); the absorption signal is mean(d - c)
    let signal: Vec<f64> = diffs.iter().map(|e| -e.value.unwrap_or(f64::NAN)).collect();
    let signal_stderr: Vec<f64> = diffs.iter().map(|e| e.stderr).collect();
    let reconstruction = signal.iter().map(|s| 1.0 - s / n).collect();
    let stderr = signal_stderr.iter().map(|e| e / n).collect();
    let mask = &scene.mask.values;
    Ok(ImagingResult {
        method: Method::DifferenceSignal,
        width: scene.mask.width,
        height: scene.mask.height,
        reconstruction,
        stderr,
        summary_snr: summary_snr(&signal, &signal_stderr, |p| mask[p] < 1.0),
        signal,
        signal_stderr,
    })
}

pub fn reconstruct(records: &[CountRecord], scene: &ImagingScene, method: Method) -> Result<ImagingResult> {
    match method {
        Method::FluctuationCorrelation => reconstruct_fluctuation(records, scene),
        Method::DifferenceSignal => reconstruct_difference(records, scene),
    }
}

/// Theory `(V_I, V_i)` for annotating results.
pub fn predicted_noise_floor(source: &SourceSpec) -> (f64, f64) {
    let r = closed_forms(source);
    (r.v_intensity, r.v_quadrature)
}

/// Per-shot variance of `n_c - n_d` on a fully transparent single pixel.
pub fn blank_scene_noise(source: &SourceSpec, shots: usize, rng: &RngConfig) -> Result<Estimate> {
    let scene = ImagingScene::new(Mask::new(1, 1, vec![1.0])?, *source, shots, *rng)?;
    let records = simulate_scene(&scene)?;
    Ok(estimate_counts(&records[0])?.difference_variance)
}

/// Absorption signal `mean(n_d - n_c)` of one pixel with transmittance `t`.
pub fn absorption_signal(source: &SourceSpec, transmittance: f64, shots: usize, rng: &RngConfig) -> Result<Estimate> {
    let scene = ImagingScene::new(Mask::new(1, 1, vec![transmittance])?, *source, shots, *rng)?;
    let records = simulate_scene(&scene)?;
    let d = estimate_counts(&records[0])?.difference_mean;
    Ok(Estimate { value: d.value.map(|v| -v), stderr: d.stderr })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub shots: usize,
    pub significance: f64,
}

/// First shot budget on `ladder` at which the absorption of a pixel with
/// transmittance `t` is seen at `sigma` standard errors, if any.
pub fn shots_to_detect(
    source: &SourceSpec,
    transmittance: f64,
    sigma: f64,
    ladder: &[usize],
    rng: &RngConfig,
) -> Result<Option<Detection>> {
    for &shots in ladder {
        let est = absorption_signal(source, transmittance, shots, rng)?;
        let z = est.value.unwrap_or(0.0) / est.stderr;
        // stderr 0 with a positive signal is an infinitely significant detection
        let z = if z.is_nan() { 0.0 } else { z };
        if z >= sigma {
            return Ok(Some(Detection { shots, significance: z }));
        }
    }
    Ok(None)
}

/// Pearson correlation over paired finite entries.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> =
        a.iter().zip(b).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(&x, &y)| (x, y)).collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}
