//! Single-layer, Neumann–Poincaré and small-wavenumber correction operators,
//! discretized by Nyström quadrature, and their potentials off the boundary.
//!
//! Matrices act on nodal density values: `(M phi)_i` approximates the
//! operator applied to `phi` at node `i`, with the quadrature weights already
//! folded into `M`. Rows and columns follow the node order of the
//! [`Boundary`].
//!
//! Periodic curves use Kress's product rule for the logarithmic part of each
//! kernel. Paneled curves integrate every panel that is close to the target
//! with a geometrically graded Gauss rule centred on the closest panel point,
//! interpolating the density with the panel's Lagrange basis.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::{Boundary, Layout, Site, PANEL_ORDER};
use crate::quadrature::{barycentric_weights, gl16, lagrange_basis, log_log_slope};
use crate::special_functions::{bessel_j_pair, c_k, check_wavenumber, fundamental, radial_derivative, tau_k};
use crate::{Error, Point, Result};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Panels closer to the target than this many panel lengths get the graded rule.
pub const NEAR_PANEL_FACTOR: f64 = 1.0;

/// Minimum target distance for plain potential evaluation, in local node spacings.
pub const FAR_FACTOR: f64 = 3.0;

/// A boundary kernel `k(x, y)` split as `a(x, y) ln|x - y| + smooth`.
pub trait Kernel: Sync {
    /// Kernel value given the offset `d = x - y`, which callers may compute
    /// more accurately than by subtracting the two points.
    fn eval_offset(&self, x: &Site, y: &Site, d: &Point) -> Complex64;
    fn eval(&self, x: &Site, y: &Site) -> Complex64 {
        self.eval_offset(x, y, &(x.point - y.point))
    }
    /// The coefficient `a(x, y)` of `ln|x - y|`.
    fn log_coefficient(&self, _x: &Site, _y: &Site) -> Complex64 {
        ZERO
    }
    /// `a(x, x)`.
    fn log_diagonal(&self, _x: &Site) -> Complex64 {
        ZERO
    }
    /// `lim_{y -> x} k(x, y) - a(x, y) ln|x - y|` along the curve.
    fn diagonal(&self, x: &Site) -> Complex64;
}

/// `G_k(x - y)`.
pub struct SingleLayer {
    pub k: Complex64,
}

impl Kernel for SingleLayer {
    fn eval_offset(&self, _x: &Site, _y: &Site, d: &Point) -> Complex64 {
        fundamental(self.k, d)
    }
    fn log_coefficient(&self, x: &Site, y: &Site) -> Complex64 {
        if self.k == ZERO {
            return Complex64::new(1.0 / (2.0 * PI), 0.0);
        }
        bessel_j_pair(self.k * (x.point - y.point).norm()).0 / (2.0 * PI)
    }
    fn log_diagonal(&self, _x: &Site) -> Complex64 {
        Complex64::new(1.0 / (2.0 * PI), 0.0)
    }
    fn diagonal(&self, _x: &Site) -> Complex64 {
        if self.k == ZERO {
            ZERO
        } else {
            -0.25 * I * c_k(self.k)
        }
    }
}

/// `d/d nu_x G_k(x - y)`, the kernel of the adjoint Neumann–Poincaré operator.
pub struct AdjointDoubleLayer {
    pub k: Complex64,
}

impl Kernel for AdjointDoubleLayer {
    fn eval_offset(&self, x: &Site, _y: &Site, d: &Point) -> Complex64 {
        let r = d.norm();
        radial_derivative(self.k, r) * (d.dot(&x.normal) / r)
    }
    fn log_coefficient(&self, x: &Site, y: &Site) -> Complex64 {
        if self.k == ZERO {
            return ZERO;
        }
        let d = x.point - y.point;
        let r = d.norm();
        -self.k / (2.0 * PI) * bessel_j_pair(self.k * r).1 * (d.dot(&x.normal) / r)
    }
    fn diagonal(&self, x: &Site) -> Complex64 {
        Complex64::new(x.curvature / (4.0 * PI), 0.0)
    }
}

/// `d/d nu_y G_k(x - y)`, the kernel of the Neumann–Poincaré operator.
pub struct DoubleLayer {
    pub k: Complex64,
}

impl Kernel for DoubleLayer {
    fn eval_offset(&self, _x: &Site, y: &Site, d: &Point) -> Complex64 {
        let r = d.norm();
        radial_derivative(self.k, r) * (-d.dot(&y.normal) / r)
    }
    fn log_coefficient(&self, x: &Site, y: &Site) -> Complex64 {
        if self.k == ZERO {
            return ZERO;
        }
        let d = y.point - x.point;
        let r = d.norm();
        -self.k / (2.0 * PI) * bessel_j_pair(self.k * r).1 * (d.dot(&y.normal) / r)
    }
    fn diagonal(&self, x: &Site) -> Complex64 {
        Complex64::new(x.curvature / (4.0 * PI), 0.0)
    }
}

/// `-(1/8 pi) |x - y|^2`, the `k^2 ln k` coefficient of the single layer.
pub struct SingleLayerLogCorrection;

impl Kernel for SingleLayerLogCorrection {
    fn eval_offset(&self, _x: &Site, _y: &Site, d: &Point) -> Complex64 {
        Complex64::new(-d.norm_squared() / (8.0 * PI), 0.0)
    }
    fn diagonal(&self, _x: &Site) -> Complex64 {
        ZERO
    }
}

/// `-(1/8 pi)(tau + ln|x - y|)|x - y|^2`, the `k^2` coefficient of the single layer.
pub struct SingleLayerQuadraticCorrection {
    pub tau: Complex64,
}

impl Kernel for SingleLayerQuadraticCorrection {
    fn eval_offset(&self, _x: &Site, _y: &Site, d: &Point) -> Complex64 {
        let r2 = d.norm_squared();
        -(self.tau + 0.5 * r2.ln()) * r2 / (8.0 * PI)
    }
    fn log_coefficient(&self, x: &Site, y: &Site) -> Complex64 {
        Complex64::new(-(x.point - y.point).norm_squared() / (8.0 * PI), 0.0)
    }
    fn diagonal(&self, _x: &Site) -> Complex64 {
        ZERO
    }
}

/// `-(1/8 pi) d/d nu_x |x - y|^2`, the `k^2 ln k` coefficient of the adjoint NP operator.
pub struct AdjointLogCorrection;

impl Kernel for AdjointLogCorrection {
    fn eval_offset(&self, x: &Site, _y: &Site, d: &Point) -> Complex64 {
        Complex64::new(-d.dot(&x.normal) / (4.0 * PI), 0.0)
    }
    fn diagonal(&self, _x: &Site) -> Complex64 {
        ZERO
    }
}

/// Nyström matrix of a boundary kernel.
pub fn assemble(bd: &Boundary, kernel: &dyn Kernel) -> CMatrix {
    match &bd.layout {
        Layout::Periodic => assemble_periodic(bd, kernel),
        Layout::Panels(_) => assemble_panels(bd, kernel),
    }
}

pub fn single_layer(bd: &Boundary, k: Complex64) -> Result<CMatrix> {
    check_wavenumber(k, bd.diameter())?;
    Ok(assemble(bd, &SingleLayer { k }))
}

pub fn adjoint_np(bd: &Boundary, k: Complex64) -> Result<CMatrix> {
    check_wavenumber(k, bd.diameter())?;
    Ok(assemble(bd, &AdjointDoubleLayer { k }))
}

/// Static Neumann–Poincaré operator (the double layer on the boundary).
pub fn np_static(bd: &Boundary) -> CMatrix {
    assemble(bd, &DoubleLayer { k: ZERO })
}

/// Kress weights `R_d`, `d = i - j mod n`, for `int ln(4 sin^2((t - s)/2)) f(s) ds`.
fn kress_weights(n: usize) -> Vec<f64> {
    let m = n / 2;
    (0..n)
        .map(|d| {
            let t = 2.0 * PI * d as f64 / n as f64;
            let s: f64 = (1..m).map(|k| (k as f64 * t).cos() / k as f64).sum();
            -2.0 * PI / m as f64 * s - PI / (m * m) as f64 * (m as f64 * t).cos()
        })
        .collect()
}

fn assemble_periodic(bd: &Boundary, kernel: &dyn Kernel) -> CMatrix {
    let n = bd.len();
    let r = kress_weights(n);
    let h = 2.0 * PI / n as f64;
    let speed: Vec<f64> = bd.weights.iter().map(|w| w / h).collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = bd.site(i);
            (0..n)
                .map(|j| {
                    let d = (i + n - j) % n;
                    if i == j {
                        let a = kernel.log_diagonal(&x);
                        let smooth = kernel.diagonal(&x) + a * speed[i].ln();
                        (r[0] * 0.5 * a + h * smooth) * speed[i]
                    } else {
                        let y = bd.site(j);
                        let a = kernel.log_coefficient(&x, &y);
                        let half = 0.5 * (bd.params[i] - bd.params[j]);
                        let log4sin2 = (4.0 * half.sin().powi(2)).ln();
                        let smooth = kernel.eval(&x, &y) - 0.5 * a * log4sin2;
                        (r[d] * 0.5 * a + h * smooth) * speed[j]
                    }
                })
                .collect()
        })
        .collect();
    CMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Ratio of successive graded intervals towards the singular point.
const GRADING: f64 = 0.25;

/// Graded Gauss rule on `[lo, hi]` clustered at `star`, resolving features
/// down to the parameter scale `scale`. Returns `(parameter, weight)` pairs.
fn graded_rule(star: f64, lo: f64, hi: f64, scale: f64) -> Vec<(f64, f64)> {
    let (gx, gw) = gl16();
    let mut out = Vec::new();
    // Below this the remaining piece is dropped: it only matters for targets
    // sitting on the curve, where it contributes O(floor ln floor).
    let tiny = 1e-13 * (hi - lo);
    let floor = scale.max(tiny);
    for (dir, len) in [(-1.0, star - lo), (1.0, hi - star)] {
        if len <= tiny {
            continue;
        }
        let mut outer = len;
        let mut push = |a: f64, b: f64| {
            for (u, w) in gx.iter().zip(gw) {
                let s = a + (b - a) * 0.5 * (u + 1.0);
                out.push((star + dir * s, w * 0.5 * (b - a)));
            }
        };
        while outer * GRADING > floor {
            let inner = outer * GRADING;
            push(inner, outer);
            outer = inner;
        }
        if scale > tiny {
            push(0.0, outer);
        }
    }
    out
}

fn panel_bary() -> &'static Vec<f64> {
    static W: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    W.get_or_init(|| barycentric_weights(&gl16().0))
}

/// Weights `w_j` with `sum_j w_j phi_j ~ int_panel k(x, y) phi(y) dsigma(y)`
/// for a target `x` close to panel `p`. When the target is node `node` of the
/// boundary, offsets to points of the same part are taken from the segment
/// parametrization.
fn near_panel_weights(
    bd: &Boundary,
    p: usize,
    x: &Site,
    node: Option<usize>,
    kernel: &dyn Kernel,
) -> [Complex64; PANEL_ORDER] {
    let panels = bd.panels().expect("paneled boundary");
    let panel = &panels[p];
    // How to form x - y accurately when x is a node on the same part.
    enum Anchor {
        SamePanel(f64),
        SamePart(f64),
        Free,
    }
    let anchor = match node {
        Some(i) if bd.panel_of[i] == p => Anchor::SamePanel(bd.params[i]),
        Some(i) if panels[bd.panel_of[i]].part == panel.part => {
            Anchor::SamePart(panels[bd.panel_of[i]].fraction(bd.params[i]))
        }
        _ => Anchor::Free,
    };
    let (star, dist) = match anchor {
        Anchor::SamePanel(u) => (u, 0.0),
        _ => panel.closest(&x.point),
    };
    let speed = panel.speed();
    let rule = graded_rule(star, -1.0, 1.0, dist / speed);
    let (gx, _) = gl16();
    let bary = panel_bary();
    let mut basis = [0.0; PANEL_ORDER];
    let mut out = [ZERO; PANEL_ORDER];
    for (u, w) in rule {
        let y = panel.site(u);
        let d = match anchor {
            Anchor::SamePanel(ux) => panel.chord(ux, u),
            Anchor::SamePart(sx) => {
                let sy = panel.fraction(u);
                panel.segment.chord(0.5 * (sx + sy), sx - sy)
            }
            Anchor::Free => x.point - y.point,
        };
        if d == Point::zeros() {
            continue;
        }
        let kv = kernel.eval_offset(x, &y, &d) * (w * speed);
        lagrange_basis(gx, bary, u, &mut basis);
        for j in 0..PANEL_ORDER {
            out[j] += kv * basis[j];
        }
    }
    out
}

fn assemble_panels(bd: &Boundary, kernel: &dyn Kernel) -> CMatrix {
    let n = bd.len();
    let panels = bd.panels().expect("paneled boundary");
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = bd.site(i);
            let mut row = vec![ZERO; n];
            for (p, panel) in panels.iter().enumerate() {
                let (_, dist) = panel.closest(&x.point);
                let range = panel.first..panel.first + PANEL_ORDER;
                if p == bd.panel_of[i] || dist < NEAR_PANEL_FACTOR * panel.length() {
                    let w = near_panel_weights(bd, p, &x, Some(i), kernel);
                    row[range].copy_from_slice(&w);
                } else {
                    for j in range {
                        row[j] = kernel.eval(&x, &bd.site(j)) * bd.weights[j];
                    }
                }
            }
            row
        })
        .collect();
    CMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Value and gradient of `S^k[phi]` at `x`, by plain quadrature. Targets
/// within [`FAR_FACTOR`] local node spacings of the boundary are rejected.
pub fn evaluate_potential(
    bd: &Boundary,
    k: Complex64,
    density: &[Complex64],
    x: &Point,
) -> Result<(Complex64, [Complex64; 2])> {
    bd.check_far(x, FAR_FACTOR)?;
    let mut value = ZERO;
    let mut grad = [ZERO; 2];
    for j in 0..bd.len() {
        let d = x - bd.points[j];
        let r = d.norm();
        let q = density[j] * bd.weights[j];
        value += fundamental(k, &d) * q;
        let g = radial_derivative(k, r) * q / r;
        grad[0] += g * d.x;
        grad[1] += g * d.y;
    }
    Ok((value, grad))
}

/// `S^k[phi](x)` for any `x`, including points very close to the boundary:
/// near patches are integrated with the graded rule and the interpolated
/// density. Slower than [`evaluate_potential`].
pub fn evaluate_near(bd: &Boundary, kernel: &dyn Kernel, density: &[Complex64], x: &Site) -> Complex64 {
    let mut total = ZERO;
    match &bd.layout {
        Layout::Panels(panels) => {
            for (p, panel) in panels.iter().enumerate() {
                let (_, dist) = panel.closest(&x.point);
                let range = panel.first..panel.first + PANEL_ORDER;
                if dist < NEAR_PANEL_FACTOR * panel.length() {
                    let w = near_panel_weights(bd, p, x, None, kernel);
                    total += w.iter().zip(&density[range]).map(|(a, b)| a * b).sum::<Complex64>();
                } else {
                    for j in range {
                        total += kernel.eval(x, &bd.site(j)) * bd.weights[j] * density[j];
                    }
                }
            }
        }
        Layout::Periodic => {
            for p in 0..bd.patch_count() {
                let (t0, t1) = bd.patch_bounds(p);
                let (star, dist) = bd.patch_closest(p, &x.point);
                let len = bd.patch_length(p);
                let scale = if dist < NEAR_PANEL_FACTOR * len { dist / len * (t1 - t0) } else { t1 - t0 };
                for (t, w) in graded_rule(star, t0, t1, scale) {
                    let (y, speed) = bd.patch_site(p, t);
                    total += kernel.eval(x, &y) * bd.patch_density(p, t, density) * (w * speed);
                }
            }
        }
    }
    total
}

/// A site away from the boundary, for kernels that only use the target position.
pub fn free_site(point: Point) -> Site {
    Site { point, normal: Point::zeros(), curvature: 0.0 }
}

/// Apply a matrix to a density vector.
pub fn apply(m: &CMatrix, phi: &[Complex64]) -> Vec<Complex64> {
    let v = nalgebra::DVector::from_column_slice(phi);
    (m * v).iter().copied().collect()
}

/// Fourth-order one-sided difference of `S^0[phi]` along `±nu` at node `i`,
/// approximating the exterior (`side = 1`) or interior (`side = -1`) normal
/// derivative. The boundary value comes from the Nyström matrix `s0`.
pub fn normal_derivative_fd(bd: &Boundary, s0: &CMatrix, phi: &[Complex64], i: usize, side: f64, h: f64) -> Complex64 {
    let x = bd.points[i];
    let nu = bd.normals[i];
    let on: Complex64 = (0..bd.len()).map(|j| s0[(i, j)] * phi[j]).sum();
    let kernel = SingleLayer { k: ZERO };
    let u = |t: f64| evaluate_near(bd, &kernel, phi, &free_site(x + nu * (side * t)));
    let (u1, u2, u3, u4) = (u(h), u(2.0 * h), u(3.0 * h), u(4.0 * h));
    side * (on * (-25.0) + u1 * 48.0 - u2 * 36.0 + u3 * 16.0 - u4 * 3.0) / (12.0 * h)
}

/// Largest jump-relation residual `|d_nu S[phi]|_± - (±1/2 + K*)[phi]|` over
/// the sampled nodes, relative to `max |phi|`.
pub fn jump_residual(bd: &Boundary, phi: &[Complex64], nodes: &[usize], h: f64) -> Result<f64> {
    let s0 = single_layer(bd, ZERO)?;
    let kstar = adjoint_np(bd, ZERO)?;
    let kphi = apply(&kstar, phi);
    let scale = phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for &i in nodes {
        for side in [1.0, -1.0] {
            let fd = normal_derivative_fd(bd, &s0, phi, i, side, h);
            let exact = kphi[i] + 0.5 * side * phi[i];
            worst = worst.max((fd - exact).norm() / scale);
        }
    }
    Ok(worst)
}

/// Every `stride`-th node whose finite-difference stencil of offset `h` stays
/// clear of the curvature jumps at part junctions.
pub fn jump_sample_nodes(bd: &Boundary, h: f64, stride: usize) -> Vec<usize> {
    (0..bd.len()).step_by(stride.max(1)).filter(|&i| bd.junction_distance(i) >= 20.0 * h).collect()
}

/// Relative Calderón residual `||K S~ - S~ K*|| / ||S~||` in the weighted
/// Hilbert–Schmidt norm, for a given substitute single layer `s_tilde`.
pub fn calderon_residual(bd: &Boundary, s_tilde: &CMatrix) -> Result<f64> {
    let kstar = adjoint_np(bd, ZERO)?;
    let k = np_static(bd);
    let lhs = &k * s_tilde - s_tilde * &kstar;
    Ok(weighted_hs_norm(bd, &lhs) / weighted_hs_norm(bd, s_tilde))
}

/// Residuals of the small-wavenumber expansions of `S^k` and `K*^k`.
#[derive(Clone, Debug)]
pub struct LayerExpansion {
    pub wavenumbers: Vec<f64>,
    /// `||S^k - S^0 + (i/4) c_k 1 w^T - k^2 ln k S_1 - k^2 S_2||`, per unit length.
    pub single_layer: Vec<f64>,
    /// `||K*^k - K*^0 - k^2 ln k K_1||`, per unit length.
    pub adjoint: Vec<f64>,
    pub single_slope: f64,
    pub adjoint_slope: f64,
}

/// Compare the Nyström layer operators at real wavenumbers `ks` with their
/// truncated expansions, in the weighted Hilbert–Schmidt norm.
pub fn layer_expansion_check(bd: &Boundary, ks: &[f64]) -> Result<LayerExpansion> {
    let s0 = single_layer(bd, ZERO)?;
    let k0 = adjoint_np(bd, ZERO)?;
    let s1 = assemble(bd, &SingleLayerLogCorrection);
    let s2 = assemble(bd, &SingleLayerQuadraticCorrection { tau: tau_k() });
    let k1 = assemble(bd, &AdjointLogCorrection);
    let total: f64 = bd.weights.iter().sum();
    let (mut single, mut adjoint) = (Vec::new(), Vec::new());
    for &k in ks {
        let kc = Complex64::new(k, 0.0);
        let log_term = kc * kc * kc.ln();
        let mut approx = &s0 + &s1 * log_term + &s2 * (kc * kc);
        let shift = -0.25 * I * c_k(kc);
        for j in 0..bd.len() {
            for i in 0..bd.len() {
                approx[(i, j)] += shift * bd.weights[j];
            }
        }
        single.push(weighted_hs_norm(bd, &(single_layer(bd, kc)? - approx)) / total);
        adjoint.push(weighted_hs_norm(bd, &(adjoint_np(bd, kc)? - &k0 - &k1 * log_term)) / total);
    }
    Ok(LayerExpansion {
        single_slope: log_log_slope(ks, &single),
        adjoint_slope: log_log_slope(ks, &adjoint),
        wavenumbers: ks.to_vec(),
        single_layer: single,
        adjoint,
    })
}

/// Hilbert–Schmidt norm of the operator represented by `m` on `L^2` of the boundary.
pub fn weighted_hs_norm(bd: &Boundary, m: &CMatrix) -> f64 {
    let n = bd.len();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += m[(i, j)].norm_sqr() * bd.weights[i] / bd.weights[j];
        }
    }
    s.sqrt()
}

/// Check that a density has one value per node.
pub fn check_density(bd: &Boundary, phi: &[Complex64]) -> Result<()> {
    if phi.len() != bd.len() {
        return Err(Error::Invalid(format!("density has {} values for {} nodes", phi.len(), bd.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk, build_disk_panels, build_nanorod};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn ones(n: usize) -> Vec<Complex64> {
        vec![c(1.0); n]
    }

    fn max_err(a: &[Complex64], f: impl Fn(usize) -> f64) -> f64 {
        a.iter().enumerate().map(|(i, v)| (v - c(f(i))).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn disk_closed_forms_periodic_and_paneled() {
        for bd in [build_disk(1.0, 128).unwrap(), build_disk_panels(1.0, 12).unwrap()] {
            let n = bd.len();
            let s0 = single_layer(&bd, ZERO).unwrap();
            let k0 = adjoint_np(&bd, ZERO).unwrap();
            assert!(max_err(&apply(&s0, &ones(n)), |_| 0.0) < 1e-11);
            assert!(max_err(&apply(&k0, &ones(n)), |_| 0.5) < 1e-12);
            for m in 1..4 {
                let cosm: Vec<Complex64> = bd.points.iter().map(|p| c((m as f64 * p.y.atan2(p.x)).cos())).collect();
                let sv = apply(&s0, &cosm);
                assert!(max_err(&sv, |i| -cosm[i].re / (2.0 * m as f64)) < 1e-11, "S0 cos {m}");
                assert!(max_err(&apply(&k0, &cosm), |_| 0.0) < 1e-11);
            }
            let s1 = assemble(&bd, &SingleLayerLogCorrection);
            let kb = assemble(&bd, &AdjointLogCorrection);
            assert!(max_err(&apply(&s1, &ones(n)), |_| -0.5) < 1e-12);
            assert!(max_err(&apply(&kb, &ones(n)), |_| -0.5) < 1e-12);
        }
    }

    #[test]
    fn radius_two_single_layer() {
        let bd = build_disk(2.0, 128).unwrap();
        let s0 = single_layer(&bd, ZERO).unwrap();
        assert!(max_err(&apply(&s0, &ones(bd.len())), |_| 2.0 * 2f64.ln()) < 1e-11);
    }

    #[test]
    fn exterior_potential_of_unit_density() {
        let bd = build_disk(1.0, 128).unwrap();
        let phi = vec![c(1.0 / (2.0 * PI)); bd.len()];
        let (v, g) = evaluate_potential(&bd, ZERO, &phi, &Point::new(0.0, 2.0)).unwrap();
        assert!((v - c(2f64.ln() / (2.0 * PI) * 1.0)).norm() < 1e-12);
        assert!((g[1] - c(1.0 / (2.0 * PI * 2.0))).norm() < 1e-12 && g[0].norm() < 1e-12);
        assert!(evaluate_potential(&bd, ZERO, &phi, &Point::new(1.0001, 0.0)).is_err());
    }

    #[test]
    fn single_layer_is_symmetric_in_the_weighted_pairing() {
        let bd = build_nanorod(1.0, 0.1, 256).unwrap();
        let s = single_layer(&bd, c(0.3)).unwrap();
        let f: Vec<Complex64> = bd.points.iter().map(|p| c((2.0 * p.x).cos() + p.y)).collect();
        let g: Vec<Complex64> = bd.points.iter().map(|p| c(p.x * p.x - (5.0 * p.y).sin())).collect();
        let pair = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).zip(&bd.weights).map(|((x, y), w)| x * y * w).sum()
        };
        let lhs = pair(&f, &apply(&s, &g));
        let rhs = pair(&apply(&s, &f), &g);
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm(), "{lhs} {rhs}");
    }

    #[test]
    fn rod_gauss_identities() {
        // K*[phi0-free] checks: K[1] = 1/2 and int K*[phi] = 1/2 int phi.
        let bd = build_nanorod(1.0, 0.05, 512).unwrap();
        let k = np_static(&bd);
        assert!(max_err(&apply(&k, &ones(bd.len())), |_| 0.5) < 1e-10);
        let kstar = adjoint_np(&bd, ZERO).unwrap();
        let phi: Vec<Complex64> = bd.points.iter().map(|p| c((3.0 * p.x).sin() + p.y)).collect();
        let lhs: Complex64 = apply(&kstar, &phi).iter().zip(&bd.weights).map(|(v, w)| v * w).sum();
        let rhs: Complex64 = phi.iter().zip(&bd.weights).map(|(v, w)| v * w * 0.5).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn layer_expansion_decays() {
        let bd = build_disk(1.0, 128).unwrap();
        let ks = [10f64.powf(-1.5), 10f64.powf(-2.0), 10f64.powf(-2.5)];
        let e = layer_expansion_check(&bd, &ks).unwrap();
        assert!(e.single_slope >= 3.7, "{:?}", e.single_layer);
        assert!(e.adjoint_slope >= 1.8, "{:?}", e.adjoint);
    }
}
