//! Blank-scene difference noise against theory, and the shot budget needed
//! to see a 1% absorption with PDC versus coherent light.

use ghostcorr::imaging::{blank_scene_noise, predicted_noise_floor, shots_to_detect};
use ghostcorr::sampling::RngConfig;
use ghostcorr::{SourceKind, SourceSpec};

fn main() -> ghostcorr::Result<()> {
    let rng = RngConfig::new(20_240_601, 8)?;
    for kind in SourceKind::ALL {
        let source = SourceSpec::new(kind, 1.0)?;
        let (v_int, _) = predicted_noise_floor(&source);
        let e = blank_scene_noise(&source, 1_000_000, &rng)?;
        println!(
            "{kind:>8}: per-shot var(n_c - n_d) = {:.5} +- {:.5}, theory {v_int}",
            e.value.unwrap_or(f64::NAN),
            e.stderr
        );
    }
    let ladder: Vec<usize> = (0..14).map(|k| 1_000 << k).collect();
    for kind in [SourceKind::Pdc, SourceKind::CoherentSplit] {
        let hit = shots_to_detect(&SourceSpec::new(kind, 1.0)?, 0.99, 5.0, &ladder, &rng)?;
        match hit {
            Some(d) => println!("{kind:>8}: t = 0.99 seen at {:.1} sigma after {} shots", d.significance, d.shots),
            None => println!("{kind:>8}: not detected within {} shots", ladder[ladder.len() - 1]),
        }
    }
    Ok(())
}
