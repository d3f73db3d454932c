//! Matched plasmonic resonance on a rod: the exterior gradient norm against the
//! loss parameter, on a short coarse sweep.

use nanorod::resonance::{log_space, resonance_sweep, SweepPlan, SweepPoint};

fn main() -> nanorod::Result<()> {
    let plan = SweepPlan {
        resolution: 512,
        points: log_space(-2.25, -1.5, 5)
            .into_iter()
            .map(|r| SweepPoint { omega: 1e-2, delta: 0.05, rho: -r })
            .collect(),
        ..SweepPlan::rho_scan()
    };
    let result = resonance_sweep(&plan)?;
    println!("{:>10} {:>12} {:>12} {:>8}", "rho", "||grad u||", "||psi_c||", "guard");
    for r in &result.records {
        println!("{:10.3e} {:12.5e} {:12.5e} {:8.3}", r.rho, r.volume_norm, r.boundary_norm, r.guard);
    }
    for fit in &result.fits {
        println!(
            "slope in {}: {:.3} [{:.3}, {:.3}] over {} points",
            fit.variable, fit.slope, fit.ci_low, fit.ci_high, fit.points
        );
    }
    Ok(())
}
