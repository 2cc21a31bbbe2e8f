//! Images the bar mask with each source using both reconstructions and
//! renders the results as ASCII art.

use ghostcorr::imaging::{reconstruct, simulate_scene, ImagingScene, Mask, Method};
use ghostcorr::sampling::RngConfig;
use ghostcorr::{SourceKind, SourceSpec};

fn main() -> ghostcorr::Result<()> {
    let rng = RngConfig::new(1, 8)?;
    let mask = Mask::demo_bars();
    for kind in SourceKind::ALL {
        let scene = ImagingScene::new(mask.clone(), SourceSpec::new(kind, 1.0)?, 5_000, rng)?;
        let records = simulate_scene(&scene)?;
        for method in [Method::FluctuationCorrelation, Method::DifferenceSignal] {
            let r = reconstruct(&records, &scene, method)?;
            let pearson = r.pearson_with(&mask).map_or("undefined".into(), |p| format!("{p:.3}"));
            println!("{kind}, {method}: pearson {pearson}");
            // first 8 rows are enough to see the bars
            for row in r.reconstruction.chunks(r.width).take(8) {
                let line: String = row
                    .iter()
                    .map(|&t| match t {
                        t if t > 0.75 => '#',
                        t if t > 0.25 => '+',
                        _ => '.',
                    })
                    .collect();
                println!("  {line}");
            }
        }
    }
    Ok(())
}
