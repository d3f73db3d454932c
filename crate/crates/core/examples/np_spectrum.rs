//! Neumann–Poincaré eigenvalues of rods of decreasing thickness, with the mode
//! an axial plane wave couples to.

use nanorod::geometry::build_nanorod;
use nanorod::np_spectral::NpSpectrum;
use nanorod::resonance::{coupling_check, select_mode};

fn main() -> nanorod::Result<()> {
    for delta in [0.1, 0.05, 0.025] {
        let rod = build_nanorod(1.0, delta, 512)?;
        let spec = NpSpectrum::compute(&rod)?;
        let j = select_mode(&rod, &spec)?;
        let leading: Vec<String> = spec.values[1..6].iter().map(|v| format!("{v:.5}")).collect();
        println!("delta {delta:5}: lambda_1..5 = [{}]", leading.join(", "));
        println!(
            "              coupled mode {j}: lambda = {:.6}, a = {:.4e}, coupling = {:.4e}, parity {:?}",
            spec.values[j],
            spec.norms[j],
            coupling_check(&rod, &spec, j)?,
            spec.parity[j]
        );
        println!("              Calderon residual {:.2e}", spec.calderon_residual(&rod));
    }
    Ok(())
}
