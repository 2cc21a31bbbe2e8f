use std::io::Write;

use ghostcorr::imaging::{
    absorption_signal, blank_scene_noise, predicted_noise_floor, reconstruct_difference, reconstruct_fluctuation,
    shots_to_detect, simulate_scene, ImagingResult, ImagingScene, Mask,
};
use ghostcorr::sampling::{estimate_counts, RngConfig};
use ghostcorr::{Error, SourceKind, SourceSpec};

const SEEDS: [u64; 3] = [20_240_601, 7, 99];

fn rng(seed: u64) -> RngConfig {
    RngConfig::new(seed, 8).unwrap()
}

fn scene(kind: SourceKind, shots: usize, seed: u64) -> ImagingScene {
    ImagingScene::new(Mask::demo_bars(), SourceSpec::new(kind, 1.0).unwrap(), shots, rng(seed)).unwrap()
}

fn fraction_within(result: &ImagingResult, k: f64) -> f64 {
    let z = result.z_scores();
    z.iter().filter(|z| z.abs() <= k).count() as f64 / z.len() as f64
}

fn rms_error(result: &ImagingResult, mask: &Mask) -> f64 {
    let sq: f64 = result.reconstruction.iter().zip(mask.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    (sq / mask.len() as f64).sqrt()
}

#[test]
fn transparent_pixel_keeps_source_statistics() {
    for kind in SourceKind::ALL {
        let s = SourceSpec::new(kind, 1.0).unwrap();
        let sc = ImagingScene::new(Mask::new(1, 1, vec![1.0]).unwrap(), s, 400_000, rng(SEEDS[0])).unwrap();
        let e = estimate_counts(&simulate_scene(&sc).unwrap()[0]).unwrap();
        // per-mode count variance: geometric n(n+1), Poisson n, thermal n(n+1)
        let var = if kind == SourceKind::CoherentSplit { 1.0 } else { 2.0 };
        assert!(e.mean_c.within(1.0, 5.0), "{kind}");
        assert!(e.var_c.within(var, 5.0), "{kind}");
        assert!(e.var_c.within(e.var_d.value.unwrap(), 5.0 * 2f64.sqrt()), "{kind}");
    }
}

#[test]
fn opaque_pixel_blocks_object_arm() {
    let s = SourceSpec::pdc(1.0).unwrap();
    let sc = ImagingScene::new(Mask::new(1, 1, vec![0.0]).unwrap(), s, 200_000, rng(SEEDS[0])).unwrap();
    let records = simulate_scene(&sc).unwrap();
    assert!(records[0].counts_c().iter().all(|&k| k == 0));
    let e = estimate_counts(&records[0]).unwrap();
    assert!(e.mean_d.within(1.0, 5.0));
    assert!(e.var_d.within(2.0, 5.0));
}

#[test]
fn partial_transmission_thins_the_mean() {
    let s = SourceSpec::pdc(1.0).unwrap();
    let sc = ImagingScene::new(Mask::new(1, 1, vec![0.7]).unwrap(), s, 100_000, rng(SEEDS[0])).unwrap();
    let e = estimate_counts(&simulate_scene(&sc).unwrap()[0]).unwrap();
    assert!(e.mean_c.within(0.7, 5.0), "{:?}", e.mean_c);
    // thinned geometric covariance t n (n + 1)
    assert!(e.covariance.within(1.4, 5.0), "{:?}", e.covariance);
}

#[test]
fn scenes_are_reproducible() {
    let a = simulate_scene(&scene(SourceKind::ThermalSplit, 500, 3)).unwrap();
    let b = simulate_scene(&scene(SourceKind::ThermalSplit, 500, 3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pdc_fluctuation_image_at_high_shots() {
    let sc = scene(SourceKind::Pdc, 100_000, SEEDS[0]);
    let r = reconstruct_fluctuation(&simulate_scene(&sc).unwrap(), &sc).unwrap();
    assert_eq!(r.reconstruction.len(), sc.mask().len());
    assert_eq!((r.width, r.height), (32, 32));
    assert!(r.pearson_with(sc.mask()).unwrap() > 0.9);
}

#[test]
fn fluctuation_imaging_by_source() {
    let mut rel_noise = Vec::new();
    for kind in SourceKind::ALL {
        let sc = scene(kind, 10_000, SEEDS[1]);
        let r = reconstruct_fluctuation(&simulate_scene(&sc).unwrap(), &sc).unwrap();
        match kind {
            SourceKind::CoherentSplit => {
                assert!(fraction_within(&r, 5.0) >= 0.95);
                // null spread of a Pearson coefficient over 1024 pixels is about 1/32
                assert!(r.pearson_with(sc.mask()).unwrap().abs() < 5.0 / 32.0);
            }
            _ => assert!(r.pearson_with(sc.mask()).unwrap() > 0.9, "{kind}"),
        }
        let mean_stderr = r.stderr.iter().sum::<f64>() / r.stderr.len() as f64;
        rel_noise.push((kind, mean_stderr, r.summary_snr.unwrap()));
    }
    let (_, pdc_noise, pdc_snr) = rel_noise[0];
    let (_, th_noise, th_snr) = rel_noise[2];
    assert!(th_noise > pdc_noise, "{rel_noise:?}");
    assert!(th_snr < pdc_snr, "{rel_noise:?}");
}

#[test]
fn coherent_fluctuation_image_flattens_with_shots() {
    let mut mean_abs = Vec::new();
    for shots in [2_500, 40_000] {
        let sc = scene(SourceKind::CoherentSplit, shots, SEEDS[2]);
        let r = reconstruct_fluctuation(&simulate_scene(&sc).unwrap(), &sc).unwrap();
        assert!(fraction_within(&r, 5.0) >= 0.95);
        mean_abs.push(r.signal.iter().map(|s| s.abs()).sum::<f64>() / r.signal.len() as f64);
    }
    // 16x the shots should shrink the raw covariance noise about 4x
    let ratio = mean_abs[0] / mean_abs[1];
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn blank_scene_difference_noise_matches_floor() {
    for kind in SourceKind::ALL {
        let s = SourceSpec::new(kind, 1.0).unwrap();
        let e = blank_scene_noise(&s, 1_000_000, &rng(SEEDS[0])).unwrap();
        let (v_int, _) = predicted_noise_floor(&s);
        assert!(e.within(v_int, 5.0), "{kind}: {e:?}");
        if kind == SourceKind::Pdc {
            assert_eq!((e.value, e.stderr), (Some(0.0), 0.0));
        }
    }
}

#[test]
fn pdc_sees_one_percent_absorption() {
    let e = absorption_signal(&SourceSpec::pdc(1.0).unwrap(), 0.99, 10_000, &rng(SEEDS[0])).unwrap();
    assert!(e.value.unwrap() / e.stderr > 5.0, "{e:?}");
}

#[test]
fn pdc_needs_fewer_shots_than_coherent() {
    let ladder: Vec<usize> = (0..14).map(|k| 1_000 << k).collect();
    for seed in SEEDS {
        let pdc = shots_to_detect(&SourceSpec::pdc(1.0).unwrap(), 0.99, 5.0, &ladder, &rng(seed)).unwrap().unwrap();
        let coh =
            shots_to_detect(&SourceSpec::coherent(1.0).unwrap(), 0.99, 5.0, &ladder, &rng(seed)).unwrap().unwrap();
        assert!(pdc.shots < coh.shots, "seed {seed}: {} vs {}", pdc.shots, coh.shots);
    }
}

#[test]
fn coherent_difference_image_is_consistent() {
    let mask = Mask::demo_gradient();
    let mut errors = Vec::new();
    for shots in [2_000, 8_000] {
        let sc = ImagingScene::new(mask.clone(), SourceSpec::coherent(1.0).unwrap(), shots, rng(SEEDS[0])).unwrap();
        let r = reconstruct_difference(&simulate_scene(&sc).unwrap(), &sc).unwrap();
        // per-shot var(n_d - n_c) = n (1 + t) for independent Poisson arms
        let predicted: f64 =
            mask.values().iter().map(|t| ((1.0 + t) / shots as f64).sqrt()).sum::<f64>() / mask.len() as f64;
        let observed = r.stderr.iter().sum::<f64>() / r.stderr.len() as f64;
        assert!((observed / predicted - 1.0).abs() < 0.1, "{observed} vs {predicted}");
        errors.push(rms_error(&r, &mask));
    }
    let ratio = errors[0] / errors[1];
    assert!((1.6..2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn coherent_difference_image_recovers_bars() {
    let sc = scene(SourceKind::CoherentSplit, 10_000, SEEDS[0]);
    let r = reconstruct_difference(&simulate_scene(&sc).unwrap(), &sc).unwrap();
    assert!(r.pearson_with(sc.mask()).unwrap() > 0.9);
}

#[test]
fn predicted_floor_examples() {
    for n in [0.5, 1.0, 3.0] {
        let (vi, vq) = predicted_noise_floor(&SourceSpec::pdc(n).unwrap());
        assert_eq!(vi, 0.0);
        assert!((vq - 0.5 * (2.0 * n + 1.0 - 2.0 * (n * (n + 1.0)).sqrt())).abs() < 1e-15);
        for kind in [SourceKind::CoherentSplit, SourceKind::ThermalSplit] {
            assert_eq!(predicted_noise_floor(&SourceSpec::new(kind, n).unwrap()), (2.0 * n, 0.5));
        }
    }
}

#[test]
fn missing_calibration_pixel_is_an_error() {
    let mask = Mask::new(2, 2, vec![0.5, 1.0, 1.0, 1.0]).unwrap();
    let sc = ImagingScene::new(mask, SourceSpec::pdc(1.0).unwrap(), 200, rng(1)).unwrap();
    let records = simulate_scene(&sc).unwrap();
    assert!(matches!(reconstruct_fluctuation(&records, &sc), Err(Error::MissingCalibration(t)) if t == 0.5));
    assert!(reconstruct_difference(&records, &sc).is_ok());
}

#[test]
fn masks_load_from_pgm_files() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "P2\n# test\n3 1\n4\n4 2 0\n").unwrap();
    let m = Mask::load(f.path().to_str().unwrap()).unwrap();
    assert_eq!(m.values(), &[1.0, 0.5, 0.0]);
    assert!(Mask::load("/nonexistent/mask.pgm").is_err());
    assert_eq!(Mask::load("demo-bars").unwrap(), Mask::demo_bars());
}

#[test]
fn results_serialize() {
    let sc = scene(SourceKind::Pdc, 200, 1);
    let r = reconstruct_difference(&simulate_scene(&sc).unwrap(), &sc).unwrap();
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 32 * 32);
    assert!(text.starts_with("x,y,estimate,stderr\n0,0,"));
    let g = r.to_graymap().unwrap();
    assert_eq!((g.width, g.height, g.samples.len()), (32, 32, 1024));
}
