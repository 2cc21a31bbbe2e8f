//! Seeded sampling: estimates every report quantity with batch-means
//! standard errors and shows the z-score against the closed form.

use ghostcorr::sampling::{monte_carlo_report, RngConfig};
use ghostcorr::{closed_forms, SourceKind, SourceSpec};

fn main() -> ghostcorr::Result<()> {
    let rng = RngConfig::new(7, 8)?;
    for kind in SourceKind::ALL {
        let source = SourceSpec::new(kind, 1.0)?;
        let mc = monte_carlo_report(&source, 200_000, &rng)?;
        let truth = closed_forms(&source);
        let line = |name: &str, est: Option<f64>, se: f64, t: Option<f64>| {
            let z = match (est, t) {
                (Some(e), Some(t)) if se > 0.0 => format!("{:+.2}", (e - t) / se),
                _ => "-".into(),
            };
            println!("  {name:<4} estimate {:>10} stderr {se:.2e} theory {:>10} z {z}", fmt(est), fmt(t));
        };
        println!("{kind}");
        line("C_I", mc.c_intensity, mc.stderr_c_intensity, truth.c_intensity);
        line("C_i", mc.c_quadrature, mc.stderr_c_quadrature, truth.c_quadrature);
        line("V_I", Some(mc.v_intensity), mc.stderr_v_intensity, Some(truth.v_intensity));
        line("V_i", Some(mc.v_quadrature), mc.stderr_v_quadrature, Some(truth.v_quadrature));
    }
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.5}"))
}
