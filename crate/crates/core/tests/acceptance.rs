//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use ghostcorr::cli::{run_figures, FiguresArgs};
use ghostcorr::correlators::{closed_forms, correlations_via_backend, ExactBackend};
use ghostcorr::imaging::{
    blank_scene_noise, predicted_noise_floor, reconstruct_difference, reconstruct_fluctuation, shots_to_detect,
    simulate_scene, ImagingScene, Mask,
};
use ghostcorr::sampling::{monte_carlo_report, sample_counts, RngConfig};
use ghostcorr::source::FourPortSign;
use ghostcorr::validate::{
    self, Profile, FIXTURE_SHARDS, FOCK_TAIL, FOCK_TOLERANCE, GAUSSIAN_TOLERANCE, MONTE_CARLO_GRID, MONTE_CARLO_SHOTS,
    SIGMA, STANDARD_GRID,
};
use ghostcorr::{CorrelationReport, SourceKind, SourceSpec};

const FIXTURE_SEEDS: [u64; 3] = [20_240_601, 7, 99];

/// Collects failure messages for one criterion.
#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn rng(seed: u64) -> RngConfig {
    RngConfig::new(seed, FIXTURE_SHARDS).expect("fixture rng")
}

fn spec(kind: SourceKind, n: f64) -> SourceSpec {
    SourceSpec::new(kind, n).expect("valid source")
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::default();
    let (mut worst_g, mut worst_f) = (0.0f64, 0.0f64);
    for kind in SourceKind::ALL {
        for n in STANDARD_GRID {
            let s = spec(kind, n);
            let truth = closed_forms(&s);
            match correlations_via_backend(&s, ExactBackend::Gaussian, FOCK_TAIL) {
                Ok(g) => {
                    let d = g.max_deviation(&truth);
                    worst_g = worst_g.max(d);
                    o.require(d <= GAUSSIAN_TOLERANCE, || format!("gaussian {kind} n={n}: {d:e}"));
                }
                Err(e) => o.failures.push(format!("gaussian {kind} n={n}: {e}")),
            }
            match correlations_via_backend(&s, ExactBackend::Fock, FOCK_TAIL) {
                Ok(f) => {
                    let d = f.max_deviation(&truth);
                    worst_f = worst_f.max(d);
                    o.require(d <= FOCK_TOLERANCE, || format!("fock {kind} n={n}: {d:e}"));
                }
                Err(e) => o.failures.push(format!("fock {kind} n={n}: {e}")),
            }
        }
    }
    o.note(format!("worst gaussian {worst_g:.2e}, worst fock {worst_f:.2e}"));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::default();
    let tol = 1e-12;
    let near = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() <= tol);
    for n in STANDARD_GRID {
        let pdc = spec(SourceKind::Pdc, n);
        let coh = spec(SourceKind::CoherentSplit, n);
        let th = spec(SourceKind::ThermalSplit, n);
        let mut reports: Vec<(&str, CorrelationReport, CorrelationReport, CorrelationReport)> =
            vec![("closed-form", closed_forms(&pdc), closed_forms(&coh), closed_forms(&th))];
        let backend = |s: &SourceSpec, b| correlations_via_backend(s, b, FOCK_TAIL).expect("exact backend");
        reports.push((
            "gaussian",
            backend(&pdc, ExactBackend::Gaussian),
            backend(&coh, ExactBackend::Gaussian),
            backend(&th, ExactBackend::Gaussian),
        ));
        for (name, p, c, t) in &reports {
            let exact = *name == "closed-form";
            let c_ok = if exact { p.c_intensity == Some(1.0) } else { near(p.c_intensity, 1.0) };
            o.require(c_ok, || format!("{name} C_I,pdc n={n}: {:?}", p.c_intensity));
            o.require(p.v_intensity.abs() <= tol, || format!("{name} V_I,pdc n={n}: {:e}", p.v_intensity));
            for (label, r) in [("coh", c), ("th", t)] {
                o.require(near(Some(r.v_quadrature), 0.5), || format!("{name} V_i,{label} n={n}: {}", r.v_quadrature));
                o.require(near(Some(r.v_intensity), 2.0 * n), || {
                    format!("{name} V_I,{label} n={n}: {}", r.v_intensity)
                });
            }
            o.require(near(c.c_intensity, 0.0), || format!("{name} C_I,coh n={n}: {:?}", c.c_intensity));
            o.require(near(c.c_quadrature, 0.0), || format!("{name} C_i,coh n={n}: {:?}", c.c_quadrature));
        }
        // Values fixed by the structure of the state do not depend on the
        // truncation, so the Fock backend must also meet them tightly.
        let fp = backend(&pdc, ExactBackend::Fock);
        let fc = backend(&coh, ExactBackend::Fock);
        o.require(near(fp.c_intensity, 1.0), || format!("fock C_I,pdc n={n}: {:?}", fp.c_intensity));
        o.require(fp.v_intensity.abs() <= tol, || format!("fock V_I,pdc n={n}: {:e}", fp.v_intensity));
        o.require(near(fc.c_intensity, 0.0), || format!("fock C_I,coh n={n}: {:?}", fc.c_intensity));
        o.require(near(fc.c_quadrature, 0.0), || format!("fock C_i,coh n={n}: {:?}", fc.c_quadrature));
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::default();
    let mut worst_z = 0.0f64;
    for seed in FIXTURE_SEEDS {
        for kind in SourceKind::ALL {
            for n in MONTE_CARLO_GRID {
                let s = spec(kind, n);
                let tag = format!("{kind} n={n} seed={seed}");
                let mc = match monte_carlo_report(&s, MONTE_CARLO_SHOTS, &rng(seed)) {
                    Ok(r) => r,
                    Err(e) => {
                        o.failures.push(format!("{tag}: {e}"));
                        continue;
                    }
                };
                let truth = closed_forms(&s);
                let pairs = [
                    ("C_I", mc.c_intensity, mc.stderr_c_intensity, truth.c_intensity),
                    ("C_i", mc.c_quadrature, mc.stderr_c_quadrature, truth.c_quadrature),
                    ("V_I", Some(mc.v_intensity), mc.stderr_v_intensity, Some(truth.v_intensity)),
                    ("V_i", Some(mc.v_quadrature), mc.stderr_v_quadrature, Some(truth.v_quadrature)),
                ];
                for (q, est, se, t) in pairs {
                    let ok = match (est, t) {
                        (Some(e), Some(t)) => {
                            let gap = (e - t).abs();
                            if gap > 1e-12 {
                                worst_z = worst_z.max(gap / se);
                            }
                            gap <= SIGMA * se + 1e-12
                        }
                        _ => false,
                    };
                    o.require(ok, || format!("{q} {tag}: {est:?} vs {t:?} (stderr {se:e})"));
                }
                if kind == SourceKind::Pdc {
                    o.require(mc.v_intensity == 0.0, || format!("PDC difference variance {tag}: {}", mc.v_intensity));
                }
            }
        }
    }
    o.note(format!("worst |z| {worst_z:.2}"));
    o
}

type Row = [Option<f64>; 4];
type Criterion = (&'static str, fn() -> Outcome);

fn figure_rows(dir: &Path, figure: u8) -> Result<Vec<Row>, String> {
    let out = dir.join(format!("fig{figure}.csv"));
    let args = FiguresArgs { figure, n_min: 0.0, n_max: 10.0, points: 200, out: out.clone() };
    run_figures(&args).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    if lines.next() != Some("n,pdc,coherent,thermal") {
        return Err("unexpected header".into());
    }
    lines
        .map(|l| {
            let mut row = [None; 4];
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 4 {
                return Err(format!("bad row {l}"));
            }
            for (slot, f) in row.iter_mut().zip(fields) {
                *slot = if f.is_empty() { None } else { Some(f.parse::<f64>().map_err(|e| e.to_string())?) };
            }
            Ok(row)
        })
        .collect()
}

/// Column `k` over rows with n > 0, which must all be defined.
fn positive_column(rows: &[Row], k: usize) -> Option<Vec<f64>> {
    rows.iter().filter(|r| r[0].is_some_and(|n| n > 0.0)).map(|r| r[k]).collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::default();
    let dir = tempfile::tempdir().expect("temp dir");
    let mut figs = Vec::new();
    for figure in 2..=5 {
        match figure_rows(dir.path(), figure) {
            Ok(rows) => figs.push(rows),
            Err(e) => {
                o.failures.push(format!("figure {figure}: {e}"));
                return o;
            }
        }
    }
    let cols = |rows: &[Row]| -> Option<[Vec<f64>; 3]> {
        Some([positive_column(rows, 1)?, positive_column(rows, 2)?, positive_column(rows, 3)?])
    };
    let Some([p2, c2, t2]) = cols(&figs[0]) else {
        o.failures.push("figure 2 has undefined entries at n > 0".into());
        return o;
    };
    o.require(strictly_increasing(&t2), || "fig 2 thermal not strictly increasing".into());
    o.require(t2.iter().all(|&v| v < 1.0) && t2[t2.len() - 1] > 0.9, || {
        "fig 2 thermal does not approach 1 from below".into()
    });
    o.require(p2.iter().all(|&v| v == 1.0), || "fig 2 PDC not flat at 1".into());
    o.require(c2.iter().all(|&v| v == 0.0), || "fig 2 coherent not flat at 0".into());

    let Some([p3, c3, t3]) = cols(&figs[1]) else {
        o.failures.push("figure 3 has undefined entries at n > 0".into());
        return o;
    };
    for (name, v) in [("PDC", &p3), ("thermal", &t3)] {
        o.require(strictly_increasing(v), || format!("fig 3 {name} not strictly increasing"));
        o.require(v.iter().all(|&x| x < 1.0) && v[v.len() - 1] > 0.95, || format!("fig 3 {name} does not approach 1"));
    }
    o.require(p3.iter().zip(&t3).all(|(p, t)| p >= t), || "fig 3 PDC below thermal".into());
    o.require(c3.iter().all(|&v| v == 0.0), || "fig 3 coherent not 0".into());

    let Some([p4, c4, t4]) = cols(&figs[2]) else {
        o.failures.push("figure 4 has undefined entries at n > 0".into());
        return o;
    };
    o.require(p4.iter().all(|&v| v == 0.0) && c4.iter().all(|&v| v == 1.0) && t4.iter().all(|&v| v == 1.0), || {
        "fig 4 rows are not exactly (0, 1, 1)".into()
    });

    let Some([p5, c5, t5]) = cols(&figs[3]) else {
        o.failures.push("figure 5 has undefined entries at n > 0".into());
        return o;
    };
    o.require(strictly_decreasing(&p5), || "fig 5 PDC not strictly decreasing".into());
    o.require(p5.iter().all(|&v| v > 0.0) && p5[p5.len() - 1] < 0.03, || "fig 5 PDC does not approach 0".into());
    o.require(c5.iter().chain(&t5).all(|&v| v == 1.0), || "fig 5 coherent/thermal not at 1".into());
    o.note(format!("200-point grids, fig 5 PDC falls to {:.4}", p5[p5.len() - 1]));
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::default();
    for kind in SourceKind::ALL {
        let s = spec(kind, 1.0);
        let (v_int, _) = predicted_noise_floor(&s);
        match blank_scene_noise(&s, MONTE_CARLO_SHOTS, &rng(FIXTURE_SEEDS[0])) {
            Ok(e) => o.require(e.within(v_int, SIGMA), || format!("blank {kind}: {e:?} vs {v_int}")),
            Err(e) => o.failures.push(format!("blank {kind}: {e}")),
        }
    }

    let ladder: Vec<usize> = (0..14).map(|k| 1_000 << k).collect();
    let mut shots = Vec::new();
    for seed in FIXTURE_SEEDS {
        let detect = |s: SourceSpec| shots_to_detect(&s, 0.99, SIGMA, &ladder, &rng(seed));
        match (detect(spec(SourceKind::Pdc, 1.0)), detect(spec(SourceKind::CoherentSplit, 1.0))) {
            (Ok(Some(p)), Ok(Some(c))) => {
                o.require(p.shots < c.shots, || format!("seed {seed}: pdc {} vs coherent {}", p.shots, c.shots));
                shots.push((p.shots, c.shots));
            }
            (p, c) => o.failures.push(format!("seed {seed}: detection failed: {p:?} {c:?}")),
        }
    }
    o.note(format!("shots to 5 sigma (pdc, coherent): {shots:?}"));

    let scene =
        ImagingScene::new(Mask::demo_bars(), spec(SourceKind::CoherentSplit, 1.0), 10_000, rng(FIXTURE_SEEDS[0]));
    let result = scene.and_then(|sc| {
        let records = simulate_scene(&sc)?;
        Ok((reconstruct_fluctuation(&records, &sc)?, reconstruct_difference(&records, &sc)?, sc))
    });
    match result {
        Ok((flat, diff, sc)) => {
            let z = flat.z_scores();
            let within = z.iter().filter(|z| z.abs() <= SIGMA).count() as f64 / z.len() as f64;
            let r_flat = flat.pearson_with(sc.mask()).unwrap_or(f64::NAN);
            let r_diff = diff.pearson_with(sc.mask()).unwrap_or(f64::NAN);
            o.require(within >= 0.95, || format!("coherent fluctuation: only {within:.3} of pixels within 5 sigma"));
            // a null Pearson coefficient over 1024 pixels has spread 1/32
            o.require(r_flat.abs() < SIGMA / 32.0, || format!("coherent fluctuation Pearson {r_flat}"));
            o.require(r_diff > 0.9, || format!("coherent difference Pearson {r_diff}"));
            o.note(format!("coherent Pearson: fluctuation {r_flat:.3}, difference {r_diff:.3}"));
        }
        Err(e) => o.failures.push(format!("coherent scene: {e}")),
    }
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::default();
    let report = validate::run(Profile::Fast);
    for c in report.failures() {
        o.failures.push(c.to_string());
    }
    let control = validate::run_with_sign(Profile::Fast, FourPortSign::Flipped);
    let caught: Vec<&str> = control.failures().map(|c| c.name.as_str()).collect();
    o.require(
        caught.iter().any(|n| n.starts_with("gaussian-vs-closed-form pdc"))
            && caught.iter().any(|n| n.starts_with("fock-vs-closed-form pdc")),
        || "negative control was not caught by the closed-form comparison".into(),
    );
    o.require(caught.iter().all(|n| n.contains("pdc")), || "negative control failed a non-PDC check".into());

    let s = spec(SourceKind::ThermalSplit, 1.0);
    let threads = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let serial = threads.install(|| sample_counts(&s, 100_000, &rng(FIXTURE_SEEDS[0])));
    let parallel = sample_counts(&s, 100_000, &rng(FIXTURE_SEEDS[0]));
    o.require(matches!((&serial, &parallel), (Ok(a), Ok(b)) if a == b), || "records depend on thread count".into());

    o.note(format!("{} invariant checks, negative control tripped {} checks", report.checks.len(), caught.len()));
    o
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("1 closed-form reproduction", criterion_1),
        ("2 specific values", criterion_2),
        ("3 Monte Carlo convergence", criterion_3),
        ("4 figure reproduction", criterion_4),
        ("5 imaging noise floor", criterion_5),
        ("6 property suite", criterion_6),
    ];
    let mut all_passed = true;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let passed = outcome.failures.is_empty();
        all_passed &= passed;
        let status = if passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {name} ({secs:.1}s) {}", outcome.notes.join("; "));
        for f in outcome.failures.iter().take(20) {
            println!("    {f}");
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
