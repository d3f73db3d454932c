use nanorod::geometry::{build_disk, build_ellipse, build_nanorod};
use nanorod::np_spectral::NpSpectrum;

#[test]
fn ellipse_spectrum_at_high_resolution() {
    let bd = build_ellipse(2.0, 1.0, 1024).unwrap();
    let spec = NpSpectrum::compute(&bd).unwrap();
    for m in 1..=6 {
        let target = 0.5 * (1.0f64 / 3.0).powi(m);
        for sign in [1.0, -1.0] {
            let err = spec.values[1..].iter().map(|v| (v - sign * target).abs()).fold(f64::MAX, f64::min);
            assert!(err < 1e-6, "n={m} sign={sign}: {err}");
        }
    }
}

#[test]
fn calderon_identity_on_disk_and_stadium() {
    for bd in [build_disk(1.0, 512).unwrap(), build_nanorod(1.0, 0.05, 1024).unwrap()] {
        let spec = NpSpectrum::compute(&bd).unwrap();
        let r = spec.calderon_residual(&bd);
        assert!(r < 1e-6, "{r}");
    }
}

#[test]
fn stadium_gap_closes_as_the_rod_thins() {
    let gap = |delta: f64| {
        let bd = build_nanorod(1.0, delta, 512).unwrap();
        let spec = NpSpectrum::compute(&bd).unwrap();
        0.5 - spec.values[1]
    };
    let (g1, g2) = (gap(0.05), gap(0.025));
    assert!(g2 < g1, "{g1} {g2}");
}

#[test]
fn jump_relation_on_disk_and_stadium() {
    use nanorod::layer_potentials::{jump_residual, jump_sample_nodes};
    use num_complex::Complex64;
    let h = 1e-4;
    for bd in [build_disk(1.0, 512).unwrap(), build_nanorod(1.0, 0.05, 512).unwrap()] {
        let phi: Vec<Complex64> =
            bd.points.iter().map(|p| Complex64::new((3.0 * p.x).sin() + p.y * p.y, p.x)).collect();
        let nodes = jump_sample_nodes(&bd, h, 7);
        assert!(nodes.len() > 60);
        let r = jump_residual(&bd, &phi, &nodes, h).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}
