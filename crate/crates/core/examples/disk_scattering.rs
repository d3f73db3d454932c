//! Solve the transmission problem for a dielectric disk and compare the
//! scattered field with the separation-of-variables series.

use std::f64::consts::PI;

use nanorod::geometry::build_disk;
use nanorod::transmission_solver::mie::Mie;
use nanorod::transmission_solver::{solve, ScatterConfig};
use nanorod::{Complex64, Point};

fn main() -> nanorod::Result<()> {
    let eps = Complex64::new(4.0, 0.0);
    let omega = 0.3;
    let disk = build_disk(1.0, 512)?;
    let config = ScatterConfig::new(eps, omega, Point::new(1.0, 0.0))?;
    let sol = solve(&disk, &config)?;
    let series = Mie::new(eps, omega, 0.0, 30);
    println!("residual {:.2e}, condition {:.2e}", sol.residual, sol.condition);
    println!("{:>8} {:>24} {:>10}", "angle", "u^s", "rel. err");
    for m in 0..8 {
        let angle = 2.0 * PI * m as f64 / 8.0;
        let x = Point::new(angle.cos(), angle.sin()) * 2.0;
        let u = sol.field(&x)?.scattered;
        let exact = series.scattered(&x);
        println!("{angle:8.4} {:>24} {:10.2e}", format!("{u:.6e}"), (u - exact).norm() / exact.norm());
    }
    Ok(())
}
