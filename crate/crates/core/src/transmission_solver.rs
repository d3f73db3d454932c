//! The transmission problem for a plane wave hitting a homogeneous inclusion.
//!
//! The interior field is `S^{kc}[phi]`, the scattered field is `S^omega[psi]`,
//! and the pair solves
//!
//! ```text
//! S^{kc} phi - S^omega psi                          = u^i
//! eps^{-1} (-1/2 + K*^{kc}) phi - (1/2 + K*^omega) psi = d_nu u^i
//! ```

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::{Boundary, PANEL_ORDER};
use crate::layer_potentials::{adjoint_np, apply, evaluate_potential, single_layer, CMatrix};
use crate::linalg::{ComplexLu, ILL_CONDITIONED};
use crate::np_spectral::NpSpectrum;
use crate::quadrature::gauss_legendre;
use crate::resonance::Material;
use crate::{Error, Point, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug)]
pub struct ScatterConfig {
    pub material: Material,
    /// Unit propagation direction of the incident plane wave.
    pub direction: Point,
}

impl ScatterConfig {
    pub fn new(eps: Complex64, omega: f64, direction: Point) -> Result<Self> {
        if (direction.norm_squared() - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("incident direction {direction:?} is not a unit vector")));
        }
        Ok(Self { material: Material::new(eps, omega)?, direction })
    }

    pub fn omega(&self) -> f64 {
        self.material.omega
    }

    pub fn eps(&self) -> Complex64 {
        self.material.eps
    }

    /// Whether `omega * diameter < 1`, the regime where the asymptotic formulas apply.
    pub fn quasi_static(&self, bd: &Boundary) -> bool {
        self.omega() * bd.diameter() < 1.0
    }

    /// `u^i(x) = exp(i omega d.x)`.
    pub fn incident(&self, x: &Point) -> Complex64 {
        (I * self.omega() * self.direction.dot(x)).exp()
    }

    pub fn incident_gradient(&self, x: &Point) -> [Complex64; 2] {
        let u = self.incident(x) * I * self.omega();
        [u * self.direction.x, u * self.direction.y]
    }

    pub fn incident_trace(&self, bd: &Boundary) -> (Vec<Complex64>, Vec<Complex64>) {
        let values: Vec<Complex64> = bd.points.iter().map(|x| self.incident(x)).collect();
        let normal =
            values.iter().zip(&bd.normals).map(|(u, n)| u * I * self.omega() * self.direction.dot(n)).collect();
        (values, normal)
    }
}

/// The four boundary operators of the transmission system.
pub struct ScatterOperators {
    pub s_interior: CMatrix,
    pub s_exterior: CMatrix,
    pub kstar_interior: CMatrix,
    pub kstar_exterior: CMatrix,
}

impl ScatterOperators {
    pub fn assemble(bd: &Boundary, config: &ScatterConfig) -> Result<Self> {
        let kc = config.material.kc;
        let omega = Complex64::new(config.omega(), 0.0);
        Ok(Self {
            s_interior: single_layer(bd, kc)?,
            s_exterior: single_layer(bd, omega)?,
            kstar_interior: adjoint_np(bd, kc)?,
            kstar_exterior: adjoint_np(bd, omega)?,
        })
    }
}

pub struct ScatterSolution<'a> {
    pub bd: &'a Boundary,
    pub config: ScatterConfig,
    pub phi: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    /// Relative residual of the block system.
    pub residual: f64,
    pub condition: f64,
}

pub fn solve<'a>(bd: &'a Boundary, config: &ScatterConfig) -> Result<ScatterSolution<'a>> {
    let ops = ScatterOperators::assemble(bd, config)?;
    solve_with(bd, config, &ops)
}

pub fn solve_with<'a>(bd: &'a Boundary, config: &ScatterConfig, ops: &ScatterOperators) -> Result<ScatterSolution<'a>> {
    let n = bd.len();
    let inv_eps = 1.0 / config.eps();
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&ops.s_interior);
    block.view_mut((0, n), (n, n)).copy_from(&(-&ops.s_exterior));
    block.view_mut((n, 0), (n, n)).copy_from(&(&ops.kstar_interior * inv_eps));
    block.view_mut((n, n), (n, n)).copy_from(&(-&ops.kstar_exterior));
    for i in 0..n {
        block[(n + i, i)] -= 0.5 * inv_eps;
        block[(n + i, n + i)] -= 0.5;
    }
    let (ui, dui) = config.incident_trace(bd);
    let rhs: Vec<Complex64> = ui.iter().chain(&dui).copied().collect();
    let lu = ComplexLu::new(block.clone())?;
    let condition = lu.condition_estimate();
    let m = config.material;
    if condition > ILL_CONDITIONED {
        return Err(Error::Singular(format!(
            "transmission system ill-conditioned (estimate {condition:.2e}) at eps = {}, omega = {}",
            m.eps, m.omega
        )));
    }
    let x = lu.solve(&rhs)?;
    let r = apply(&block, &x);
    let residual = norm(&r.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&rhs);
    Ok(ScatterSolution { bd, config: *config, phi: x[..n].to_vec(), psi: x[n..].to_vec(), residual, condition })
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The reduced operator `A(omega)` acting on `psi` alone, and its right-hand side `f`.
pub fn reduced_operator(
    bd: &Boundary,
    config: &ScatterConfig,
    ops: &ScatterOperators,
) -> Result<(CMatrix, Vec<Complex64>)> {
    let n = bd.len();
    let inv_eps = 1.0 / config.eps();
    let lu = ComplexLu::new(ops.s_interior.clone())?;
    let mut half_minus = -&ops.kstar_interior;
    let mut a = ops.kstar_exterior.clone();
    for i in 0..n {
        half_minus[(i, i)] += 0.5;
        a[(i, i)] += 0.5;
    }
    let sc_inv_s = lu.solve_matrix(&ops.s_exterior)?;
    a += (&half_minus * sc_inv_s) * inv_eps;
    let (ui, dui) = config.incident_trace(bd);
    let sc_inv_u = lu.solve(&ui)?;
    let corr = apply(&half_minus, &sc_inv_u);
    let f = dui.iter().zip(&corr).map(|(d, c)| -d - inv_eps * c).collect();
    Ok((a, f))
}

/// Static limit `A_0 = (1 + 1/eps)/2 + (1 - 1/eps) K*^0`.
pub fn static_operator(kstar0: &DMatrix<f64>, eps: Complex64) -> CMatrix {
    let inv = 1.0 / eps;
    let n = kstar0.nrows();
    CMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 0.5 * (1.0 + inv) } else { ZERO };
        diag + (1.0 - inv) * kstar0[(i, j)]
    })
}

/// Field values at one target.
#[derive(Clone, Copy, Debug)]
pub struct FieldSample {
    pub total: Complex64,
    pub scattered: Complex64,
    /// Gradient of the scattered field outside, of the total field inside.
    pub gradient: [Complex64; 2],
    pub inside: bool,
}

impl ScatterSolution<'_> {
    pub fn field(&self, x: &Point) -> Result<FieldSample> {
        if self.bd.contains(x) {
            let (u, g) = evaluate_potential(self.bd, self.config.material.kc, &self.phi, x)?;
            return Ok(FieldSample { total: u, scattered: u - self.config.incident(x), gradient: g, inside: true });
        }
        let omega = Complex64::new(self.config.omega(), 0.0);
        let (us, g) = evaluate_potential(self.bd, omega, &self.psi, x)?;
        Ok(FieldSample { total: us + self.config.incident(x), scattered: us, gradient: g, inside: false })
    }

    /// Far-field amplitude in direction `angle`, with
    /// `u^s(x) ~ exp(i omega r) r^{-1/2} amplitude`.
    pub fn far_field(&self, angle: f64) -> Complex64 {
        let omega = self.config.omega();
        let dir = Point::new(angle.cos(), angle.sin());
        let scale = -0.25 * I * (2.0 / (PI * omega)).sqrt() * Complex64::from_polar(1.0, -PI / 4.0);
        let sum: Complex64 = (0..self.bd.len())
            .map(|j| (-I * omega * dir.dot(&self.bd.points[j])).exp() * self.psi[j] * self.bd.weights[j])
            .sum();
        scale * sum
    }

    /// `r^{1/2} |d_r u^s - i omega u^s|` at distance `r` in direction `angle`.
    pub fn radiation_defect(&self, r: f64, angle: f64) -> Result<f64> {
        let dir = Point::new(angle.cos(), angle.sin());
        let s = self.field(&(dir * r))?;
        let radial = s.gradient[0] * dir.x + s.gradient[1] * dir.y;
        Ok(r.sqrt() * (radial - I * self.config.omega() * s.scattered).norm())
    }

    /// `||psi_c||_{H*}` for the mean-zero part of the exterior density.
    pub fn boundary_norm(&self, spec: &NpSpectrum) -> f64 {
        spec.hstar_norm_mean_zero(self.bd, &self.psi)
    }
}

/// Quadrature controls for the exterior energy integral.
#[derive(Clone, Copy, Debug)]
pub struct VolumeGrid {
    /// Excluded collar width in units of the local node spacing (the largest
    /// over a patch and its two neighbours).
    pub collar_factor: f64,
    /// Gauss points per boundary patch along the curve.
    pub tangential_order: usize,
    /// Panels in `log t` across the offset direction, eight Gauss points each.
    pub normal_panels: usize,
}

impl Default for VolumeGrid {
    fn default() -> Self {
        Self { collar_factor: 5.0, tangential_order: 16, normal_panels: 4 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VolumeNorm {
    /// `||grad u^s||` over `B_R` minus the inclusion and the collar.
    pub value: f64,
    /// Relative difference to a second, coarser rule.
    pub error_estimate: f64,
    /// Estimated energy beyond `R` assuming quasi-static `r^{-4}` decay of `|grad u^s|^2`.
    pub tail: f64,
    /// Widest collar used.
    pub collar: f64,
}

/// Largest error estimate accepted by [`gradient_norm`].
pub const VOLUME_TOLERANCE: f64 = 0.05;

/// Exterior gradient energy on `B_R`, integrated in offset coordinates
/// `x = y(s) + t nu(s)`, which cover the exterior of a convex inclusion once.
pub fn gradient_norm(sol: &ScatterSolution<'_>, radius: f64, grid: &VolumeGrid) -> Result<VolumeNorm> {
    let bd = sol.bd;
    if radius <= bd.diameter() {
        return Err(Error::Invalid(format!("truncation radius {radius} must exceed the diameter {}", bd.diameter())));
    }
    let collars = collar_widths(bd, grid.collar_factor);
    let fine = energy(sol, radius, &collars, grid.tangential_order, grid.normal_panels)?;
    let coarse = energy(sol, radius, &collars, (grid.tangential_order * 3 / 4).max(4), grid.normal_panels.max(2) - 1)?;
    let error_estimate = if fine > 0.0 { (fine - coarse).abs() / fine } else { 0.0 };
    if error_estimate > VOLUME_TOLERANCE {
        return Err(Error::Invalid(format!(
            "volume quadrature error estimate {:.1}% exceeds {:.0}%; refine the grid",
            100.0 * error_estimate,
            100.0 * VOLUME_TOLERANCE
        )));
    }
    let samples = 64;
    let mut flux = 0.0;
    for m in 0..samples {
        let a = 2.0 * PI * m as f64 / samples as f64;
        let s = sol.field(&(Point::new(a.cos(), a.sin()) * radius))?;
        flux += (s.gradient[0].norm_sqr() + s.gradient[1].norm_sqr()) * radius * 2.0 * PI / samples as f64;
    }
    let collar = collars.iter().copied().fold(0.0, f64::max);
    Ok(VolumeNorm { value: fine.sqrt(), error_estimate, tail: 0.5 * flux * radius, collar })
}

/// Collar width per boundary patch.
pub fn collar_widths(bd: &Boundary, factor: f64) -> Vec<f64> {
    let m = bd.patch_count();
    let spacing: Vec<f64> = (0..m).map(|p| bd.patch_length(p) / PANEL_ORDER as f64).collect();
    (0..m).map(|p| factor * spacing[(p + m - 1) % m].max(spacing[p]).max(spacing[(p + 1) % m])).collect()
}

fn energy(sol: &ScatterSolution<'_>, radius: f64, collars: &[f64], order: usize, panels: usize) -> Result<f64> {
    let bd = sol.bd;
    let (gs, ws) = gauss_legendre(order);
    let (gt, wt) = gauss_legendre(8);
    let mut jobs = Vec::new();
    for p in 0..bd.patch_count() {
        let (t0, t1) = bd.patch_bounds(p);
        for (u, wu) in gs.iter().zip(&ws) {
            let param = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * u;
            jobs.push((p, param, wu * 0.5 * (t1 - t0)));
        }
    }
    let parts: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(p, param, w)| {
            let (site, speed) = bd.patch_site(p, param);
            let y = site.point;
            let nu = site.normal;
            let yn = y.dot(&nu);
            let outer = -yn + (yn * yn - y.norm_squared() + radius * radius).sqrt();
            let (l0, l1) = (collars[p].ln(), outer.ln());
            let h = (l1 - l0) / panels as f64;
            let mut total = 0.0;
            for q in 0..panels {
                for (v, wv) in gt.iter().zip(&wt) {
                    let lt = l0 + h * (q as f64 + 0.5 * (v + 1.0));
                    let t = lt.exp();
                    let g = sol.field(&(y + nu * t))?.gradient;
                    let dens = g[0].norm_sqr() + g[1].norm_sqr();
                    total += dens * (1.0 + site.curvature * t) * t * wv * 0.5 * h;
                }
            }
            Ok(total * speed * w)
        })
        .collect();
    parts.into_iter().sum()
}

pub mod mie {
    //! Separation-of-variables solution for the unit disk centred at the origin, used as an
    //! independent reference for the boundary-integral solver.

    use super::*;

    /// `J_n(z)` by its power series, adequate for `|z| < 5` and `n <= 40`.
    pub fn bessel_j(n: usize, z: Complex64) -> Complex64 {
        let half = z * 0.5;
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..=n {
            term *= half / k as f64;
        }
        let mut sum = term;
        let q = -half * half;
        for m in 1..200 {
            term *= q / (m as f64 * (m + n) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    }

    /// `Y_n(x)` by upward recurrence from `Y_0`, `Y_1`.
    pub fn bessel_y(n: usize, x: f64) -> f64 {
        let y0 = crate::special_functions::bessel_y0(x).unwrap();
        let y1 = crate::special_functions::bessel_y1(x).unwrap();
        if n == 0 {
            return y0;
        }
        let (mut a, mut b) = (y0, y1);
        for m in 1..n {
            let c = 2.0 * m as f64 / x * b - a;
            a = b;
            b = c;
        }
        b
    }

    pub fn hankel(n: usize, x: f64) -> Complex64 {
        bessel_j(n, Complex64::new(x, 0.0)) + I * bessel_y(n, x)
    }

    /// Derivative from `Z_n' = (Z_{n-1} - Z_{n+1}) / 2`, with `Z_{-1} = -Z_1`.
    pub fn derivative(f: impl Fn(usize) -> Complex64, n: usize) -> Complex64 {
        let prev = if n == 0 { -f(1) } else { f(n - 1) };
        0.5 * (prev - f(n + 1))
    }

    pub struct Mie {
        pub omega: f64,
        /// `b_n` for `n = -modes..=modes`, index `n + modes`.
        pub coefficients: Vec<Complex64>,
        pub modes: usize,
    }

    impl Mie {
        /// Unit disk, incidence along angle `incidence`.
        pub fn new(eps: Complex64, omega: f64, incidence: f64, modes: usize) -> Self {
            let kc = omega * eps.sqrt();
            let mut coefficients = Vec::new();
            for n in -(modes as i64)..=(modes as i64) {
                let m = n.unsigned_abs() as usize;
                // J_{-n} = (-1)^n J_n, same for H; the factor cancels between both sides.
                let jc = bessel_j(m, kc);
                let djc = derivative(|k| bessel_j(k, kc), m) * kc;
                let jw = bessel_j(m, Complex64::new(omega, 0.0));
                let djw = derivative(|k| bessel_j(k, Complex64::new(omega, 0.0)), m) * omega;
                let h = hankel(m, omega);
                let dh = derivative(|k| hankel(k, omega), m) * omega;
                let inc = I.powi(n as i32) * Complex64::from_polar(1.0, -(n as f64) * incidence);
                // a jc = inc jw + b h ;  a djc / eps = inc djw + b dh
                let b = inc * (djw * jc - jw * djc / eps) / (h * djc / eps - dh * jc);
                coefficients.push(b);
            }
            Self { omega, coefficients, modes }
        }

        pub fn scattered(&self, x: &Point) -> Complex64 {
            let r = x.norm();
            let theta = x.y.atan2(x.x);
            let mut sum = ZERO;
            for (idx, b) in self.coefficients.iter().enumerate() {
                let n = idx as i64 - self.modes as i64;
                let m = n.unsigned_abs() as usize;
                let sign = if n < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
                sum += b * hankel(m, self.omega * r) * sign * Complex64::from_polar(1.0, n as f64 * theta);
            }
            sum
        }

        /// `int_{r0}^{r1} int_0^{2 pi} |grad u^s|^2 r dtheta dr`.
        pub fn energy(&self, r0: f64, r1: f64) -> f64 {
            let (g, w) = gauss_legendre(24);
            let panels = 16;
            let (l0, l1) = (r0.ln(), r1.ln());
            let h = (l1 - l0) / panels as f64;
            let mut total = 0.0;
            for q in 0..panels {
                for (u, wu) in g.iter().zip(&w) {
                    let r = (l0 + h * (q as f64 + 0.5 * (u + 1.0))).exp();
                    let z = self.omega * r;
                    let mut ring = 0.0;
                    for (idx, b) in self.coefficients.iter().enumerate() {
                        let n = idx as i64 - self.modes as i64;
                        let m = n.unsigned_abs() as usize;
                        let hn = hankel(m, z);
                        let dh = derivative(|k| hankel(k, z), m) * self.omega;
                        ring += b.norm_sqr() * (dh.norm_sqr() + (n * n) as f64 / (r * r) * hn.norm_sqr());
                    }
                    total += 2.0 * PI * ring * r * r * wu * 0.5 * h;
                }
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::mie::Mie;
    use super::*;
    use crate::geometry::{build_disk, build_nanorod};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn no_contrast_means_no_scattering() {
        let bd = build_nanorod(1.0, 0.1, 1024).unwrap();
        let cfg = ScatterConfig::new(c(1.0), 0.2, Point::new(0.6, 0.8)).unwrap();
        let sol = solve(&bd, &cfg).unwrap();
        // The density itself is only small in L^2: the node next to a cap/flat
        // junction carries an O(h) error from the curvature jump.
        let l2 = |v: &[Complex64]| crate::linalg::l2_norm(&bd, v);
        assert!(l2(&sol.psi) < 1e-5 * l2(&sol.phi), "{}", l2(&sol.psi));
        let s = sol.field(&Point::new(1.0, 1.0)).unwrap();
        assert!(s.scattered.norm() < 1e-8, "{}", s.scattered.norm());
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn disk_matches_the_mode_series() {
        let bd = build_disk(1.0, 256).unwrap();
        let cfg = ScatterConfig::new(c(4.0), 0.5, Point::new(1.0, 0.0)).unwrap();
        let sol = solve(&bd, &cfg).unwrap();
        let mie = Mie::new(c(4.0), 0.5, 0.0, 20);
        for m in 0..16 {
            let a = 2.0 * PI * m as f64 / 16.0 + 0.1;
            let x = Point::new(a.cos(), a.sin()) * 2.0;
            let num = sol.field(&x).unwrap().scattered;
            let exact = mie.scattered(&x);
            assert!((num - exact).norm() < 1e-6 * exact.norm(), "{num} {exact}");
        }
    }

    #[test]
    fn reduced_and_block_paths_agree() {
        let bd = build_disk(1.0, 128).unwrap();
        let cfg = ScatterConfig::new(c(4.0), 0.3, Point::new(0.0, 1.0)).unwrap();
        let ops = ScatterOperators::assemble(&bd, &cfg).unwrap();
        let sol = solve_with(&bd, &cfg, &ops).unwrap();
        let (a, f) = reduced_operator(&bd, &cfg, &ops).unwrap();
        let psi = ComplexLu::new(a).unwrap().solve(&f).unwrap();
        let diff: f64 = psi.iter().zip(&sol.psi).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-6 * norm(&sol.psi));
    }

    #[test]
    fn static_operator_without_contrast_is_identity() {
        let k = DMatrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64);
        let a = static_operator(&k, c(1.0));
        assert!((a - CMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn volume_norm_matches_series_energy() {
        let bd = build_disk(1.0, 256).unwrap();
        let cfg = ScatterConfig::new(c(4.0), 0.3, Point::new(1.0, 0.0)).unwrap();
        let sol = solve(&bd, &cfg).unwrap();
        let vol = gradient_norm(&sol, 10.0, &VolumeGrid::default()).unwrap();
        let mie = Mie::new(c(4.0), 0.3, 0.0, 20);
        let exact = mie.energy(1.0 + vol.collar, 10.0).sqrt();
        assert!((vol.value - exact).abs() < 0.02 * exact, "{} {exact}", vol.value);
    }
}
