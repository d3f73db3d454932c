//! The flat-side operator and the leading-order scattered field of a thin rod,
//! compared with the full solver as the rod thins and the frequency drops.

use nanorod::asymptotics::{moment_check, ADelta, AsymptoticField, Convention};
use nanorod::geometry::build_nanorod;
use nanorod::transmission_solver::{solve, ScatterConfig};
use nanorod::{Complex64, Point};

fn main() -> nanorod::Result<()> {
    let ops =
        [0.1, 0.05, 0.025].map(|d| ADelta::build(1.0, d, 1024)).into_iter().collect::<nanorod::Result<Vec<_>>>()?;
    for op in &ops {
        let applied = op.apply(&vec![1.0; op.len()]);
        let err = (0..op.len()).map(|i| (applied[i] - op.closed_form_one(op.nodes[i])).abs()).fold(0.0, f64::max);
        println!("delta {:5}: A[1] vs closed form {err:.2e}", op.delta);
    }
    for order in 0..=2 {
        let m = moment_check(&ops, order, 1.0 / 3.0)?;
        println!("moment n = {order}: errors [{}], slope {:.3}", sci(&m.errors), m.slope);
    }

    let eps = Complex64::new(4.0, 0.0);
    let target = Point::new(0.0, 0.5);
    for (omega, delta) in [(1e-2, 0.1), (5e-3, 0.05), (2.5e-3, 0.025)] {
        let rod = build_nanorod(1.0, delta, 1024)?;
        let config = ScatterConfig::new(eps, omega, Point::new(0.0, 1.0))?;
        let full = solve(&rod, &config)?.field(&target)?.scattered;
        let asym = AsymptoticField::new(&config, 1.0, delta, 1024, Convention::Rederived)?.scattered(&target)?;
        println!("omega {omega:.1e}, delta {delta:5}: relative error {:.3e}", (full - asym).norm() / full.norm());
    }
    Ok(())
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}
