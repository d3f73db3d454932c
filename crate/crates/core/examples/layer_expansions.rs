//! Small-wavenumber behaviour: the Hankel expansion and the single layer and
//! adjoint NP operators of a rod against their truncated expansions.

use nanorod::geometry::build_nanorod;
use nanorod::layer_potentials::layer_expansion_check;
use nanorod::quadrature::log_log_slope;
use nanorod::special_functions::{hankel1, hankel_smallk};
use nanorod::Complex64;

fn main() -> nanorod::Result<()> {
    let ks = [10f64.powf(-1.5), 10f64.powf(-2.0), 10f64.powf(-2.5)];
    let hankel: Vec<f64> = ks
        .iter()
        .map(|&k| Ok((hankel1(0, k)? - hankel_smallk(Complex64::new(k, 0.0), 1.0)).norm()))
        .collect::<nanorod::Result<_>>()?;
    println!("H0 truncation at r = 1: [{}], slope {:.3}", sci(&hankel), log_log_slope(&ks, &hankel));

    let rod = build_nanorod(1.0, 0.05, 512)?;
    let e = layer_expansion_check(&rod, &ks)?;
    println!("single layer residuals [{}], slope {:.3}", sci(&e.single_layer), e.single_slope);
    println!("adjoint NP residuals   [{}], slope {:.3}", sci(&e.adjoint), e.adjoint_slope);
    Ok(())
}

fn sci(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}
