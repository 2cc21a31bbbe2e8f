//! Prints the four analytic figure families on a coarse grid.

use ghostcorr::correlators::{figure_curves, linear_grid, Figure};

fn main() -> ghostcorr::Result<()> {
    let grid = linear_grid(0.0, 5.0, 6)?;
    for number in 2..=5 {
        let table = figure_curves(Figure::from_number(number)?, &grid)?;
        println!("figure {number}");
        println!("{:>6} {:>10} {:>10} {:>10}", "n", "pdc", "coherent", "thermal");
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        for r in &table.rows {
            println!("{:>6.2} {:>10} {:>10} {:>10}", r.n, cell(r.pdc), cell(r.coherent), cell(r.thermal));
        }
        println!();
    }
    Ok(())
}
