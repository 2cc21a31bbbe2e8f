//! Command-line surface: `figures`, `validate` and `image`.
//!
//! Every file written is accompanied by a flat `key = value` manifest that
//! records the command, the full parameter set and the tool version.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::correlators::{figure_curves, linear_grid, Figure, FigureTable};
use crate::error::{Error, Result};
use crate::imaging::{self, ImagingScene, Mask, Method};
use crate::pgm;
use crate::sampling::RngConfig;
use crate::source::{SourceKind, SourceSpec};
use crate::validate::{self, Profile, FIXTURE_SEED, FIXTURE_SHARDS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "ghostcorr", version, about = "Correlated-light statistics and ghost-imaging simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the analytic curves of one figure as CSV.
    Figures(FiguresArgs),
    /// Run the cross-backend invariant suite.
    Validate(ValidateArgs),
    /// Simulate and reconstruct a masked imaging scene.
    Image(ImageArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    /// 2: C_I, 3: C_i, 4: V_I / 2n, 5: V_i / (1/2).
    #[arg(long)]
    pub figure: u8,
    #[arg(long, default_value_t = 0.0)]
    pub n_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub n_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// `strict` adds the 10^6-shot Monte Carlo checks.
    #[arg(long, default_value = "strict")]
    pub profile: Profile,
}

#[derive(Debug, Clone, Args)]
pub struct ImageArgs {
    /// Built-in mask name (`demo-bars`, `demo-gradient`) or a P2 PGM path.
    #[arg(long, default_value = "demo-bars")]
    pub mask: String,
    #[arg(long, default_value = "pdc")]
    pub source: SourceKind,
    /// Mean photon number per mode.
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    /// Shots per pixel.
    #[arg(long, default_value_t = 10_000)]
    pub shots: usize,
    #[arg(long, default_value = "fluctuation")]
    pub method: Method,
    #[arg(long, default_value_t = FIXTURE_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = FIXTURE_SHARDS)]
    pub shards: usize,
    /// Output prefix; writes `<out>.pgm`, `<out>.csv` and `<out>.manifest`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Reproduction record for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub params: Vec<(String, String)>,
    pub outputs: Vec<PathBuf>,
    pub duration: Duration,
}

impl RunManifest {
    fn new(command: &str, seed: Option<u64>, params: Vec<(String, String)>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            params,
            outputs: Vec::new(),
            duration: Duration::ZERO,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("command = {}\nversion = {}\n", self.command, self.version);
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed = {seed}\n"));
        }
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for (i, p) in self.outputs.iter().enumerate() {
            s.push_str(&format!("output.{i} = {}\n", p.display()));
        }
        s.push_str(&format!("duration_seconds = {:.6}\n", self.duration.as_secs_f64()));
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Parses a manifest back into ordered `(key, value)` pairs.
pub fn parse_manifest(text: &str) -> Vec<(String, String)> {
    text.lines().filter_map(|l| l.split_once(" = ")).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// `n,pdc,coherent,thermal` with 17 significant digits; undefined values
/// are empty fields.
pub fn write_figure_csv<W: Write>(table: &FigureTable, mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,pdc,coherent,thermal")?;
    for r in &table.rows {
        writeln!(w, "{:.16e},{},{},{}", r.n, csv_field(r.pdc), csv_field(r.coherent), csv_field(r.thermal))?;
    }
    Ok(())
}

/// Writes the figure CSV at `args.out` and its manifest at `<out>.manifest`.
pub fn run_figures(args: &FiguresArgs) -> Result<RunManifest> {
    let start = Instant::now();
    let figure = Figure::from_number(args.figure)?;
    let grid = linear_grid(args.n_min, args.n_max, args.points)?;
    let table = figure_curves(figure, &grid)?;
    let mut w = create(&args.out)?;
    write_figure_csv(&table, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&args.out, e))?;
    let mut manifest = RunManifest::new(
        "figures",
        None,
        vec![
            ("figure".into(), args.figure.to_string()),
            ("n_min".into(), format!("{:?}", args.n_min)),
            ("n_max".into(), format!("{:?}", args.n_max)),
            ("points".into(), args.points.to_string()),
        ],
    );
    manifest.outputs.push(args.out.clone());
    manifest.duration = start.elapsed();
    manifest.write(&with_suffix(&args.out, ".manifest"))?;
    Ok(manifest)
}

/// Runs the suite, prints the report, and returns whether every check passed.
pub fn run_validate<W: Write>(args: &ValidateArgs, mut out: W) -> Result<bool> {
    let report = validate::run(args.profile);
    writeln!(out, "{report}").map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    Ok(report.passed())
}

/// Summary of an `image` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageOutcome {
    pub result: imaging::ImagingResult,
    pub pearson: Option<f64>,
    pub manifest: RunManifest,
}

pub fn run_image(args: &ImageArgs) -> Result<ImageOutcome> {
    let start = Instant::now();
    let mask = Mask::load(&args.mask)?;
    let source = SourceSpec::new(args.source, args.n)?;
    let rng = RngConfig::new(args.seed, args.shards)?;
    let scene = ImagingScene::new(mask, source, args.shots, rng)?;
    let records = imaging::simulate_scene(&scene)?;
    let result = imaging::reconstruct(&records, &scene, args.method)?;
    let pearson = result.pearson_with(scene.mask());

    let pgm_path = with_suffix(&args.out, ".pgm");
    let csv_path = with_suffix(&args.out, ".csv");
    let mut w = create(&pgm_path)?;
    pgm::write_p2(&result.to_graymap()?, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&pgm_path, e))?;
    let mut w = create(&csv_path)?;
    result.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&csv_path, e))?;

    let (v_int, v_quad) = imaging::predicted_noise_floor(&source);
    let mut manifest = RunManifest::new(
        "image",
        Some(args.seed),
        vec![
            ("mask".into(), args.mask.clone()),
            ("source".into(), args.source.short_name().into()),
            ("n".into(), format!("{:?}", args.n)),
            ("shots".into(), args.shots.to_string()),
            ("method".into(), args.method.to_string()),
            ("shards".into(), args.shards.to_string()),
            ("theory_v_intensity".into(), format!("{v_int:.16e}")),
            ("theory_v_quadrature".into(), format!("{v_quad:.16e}")),
            ("pearson_vs_mask".into(), csv_field(pearson)),
            ("summary_snr_artifact_definition".into(), csv_field(result.summary_snr)),
        ],
    );
    manifest.outputs.push(pgm_path);
    manifest.outputs.push(csv_path);
    manifest.duration = start.elapsed();
    manifest.write(&with_suffix(&args.out, ".manifest"))?;
    Ok(ImageOutcome { result, pearson, manifest })
}

/// Dispatches a parsed command line. Returns `false` when validation failed.
pub fn run<W: Write>(cli: &Cli, mut out: W) -> Result<bool> {
    let say = |out: &mut W, s: String| writeln!(out, "{s}").map_err(|e| Error::io(Path::new("<stdout>"), e));
    match &cli.command {
        Command::Figures(args) => {
            let m = run_figures(args)?;
            say(&mut out, format!("wrote {}", args.out.display()))?;
            say(&mut out, format!("took {:.3}s", m.duration.as_secs_f64()))?;
            Ok(true)
        }
        Command::Validate(args) => run_validate(args, out),
        Command::Image(args) => {
            let o = run_image(args)?;
            let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
            say(&mut out, format!("method: {}", o.result.method))?;
            say(&mut out, format!("pearson vs mask: {}", fmt(o.pearson)))?;
            say(
                &mut out,
                format!("summary SNR (mean |signal|/stderr over signal region): {}", fmt(o.result.summary_snr)),
            )?;
            for p in &o.manifest.outputs {
                say(&mut out, format!("wrote {}", p.display()))?;
            }
            Ok(true)
        }
    }
}
