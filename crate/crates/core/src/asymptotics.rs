//! Quasi-static and thin-rod asymptotics.
//!
//! Three groups of tools live here:
//!
//! * the one-dimensional operator `A_delta` coupling the two flat sides of the
//!   rod, with kernel `(1/pi) delta / ((x - y)^2 + 4 delta^2)` on `[-L/2, L/2]`;
//! * the leading-order scattered field and boundary density of a thin rod;
//! * numerical checks of the small-frequency expansions of `(S^k)^{-1}`, of
//!   the right-hand side `f` and of the reduced operator `A(omega)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{Boundary, Part, PANEL_ORDER};
use crate::layer_potentials::{
    adjoint_np, assemble, single_layer, AdjointLogCorrection, CMatrix, SingleLayerLogCorrection,
};
use crate::linalg::{l2_norm, operator_norm, to_complex, ComplexLu, ILL_CONDITIONED};
use crate::np_spectral::Stilde;
use crate::quadrature::{fit_slope, gl16};
use crate::special_functions::c_k;
use crate::transmission_solver::{reduced_operator, static_operator, ScatterConfig, ScatterOperators};
use crate::{Error, Point, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Smallest accepted 1D grid.
pub const MIN_GRID: usize = 64;

/// Default 1D grid size for `A_delta`.
pub const DEFAULT_GRID: usize = 1024;

/// Default half-width of the end regions around `P` and `Q`, in units of `delta`.
pub const DEFAULT_END_REGION: f64 = 2.0;

/// `A_delta` discretized by composite 16-point Gauss–Legendre panels.
#[derive(Clone, Debug)]
pub struct ADelta {
    pub length: f64,
    pub delta: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `matrix[(i, j)] = kernel(x_i - y_j) w_j`.
    pub matrix: DMatrix<f64>,
}

impl ADelta {
    /// Build on at least `n` nodes (rounded up to whole panels).
    pub fn build(length: f64, delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5 * length) {
            return Err(Error::Geometry(format!("need 0 < delta < L/2, got delta = {delta}, L = {length}")));
        }
        if n < MIN_GRID {
            return Err(Error::Invalid(format!("1D grid size {n} is below {MIN_GRID}")));
        }
        let panels = n.div_ceil(PANEL_ORDER);
        let spacing = length / (panels * PANEL_ORDER) as f64;
        if spacing > 0.5 * delta {
            return Err(Error::Invalid(format!(
                "grid spacing {spacing:.3e} exceeds delta/2 = {:.3e}; the kernel peak is under-resolved",
                0.5 * delta
            )));
        }
        let (gx, gw) = gl16();
        let h = length / panels as f64;
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let a = -0.5 * length + p as f64 * h;
            for (x, w) in gx.iter().zip(gw) {
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        let m = nodes.len();
        let mut op = Self { length, delta, nodes, weights, matrix: DMatrix::zeros(0, 0) };
        op.matrix = DMatrix::from_fn(m, m, |i, j| op.kernel(op.nodes[i] - op.nodes[j]) * op.weights[j]);
        Ok(op)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kernel(&self, t: f64) -> f64 {
        self.delta / (PI * (t * t + 4.0 * self.delta * self.delta))
    }

    /// Exact `A_delta[1](x)`.
    pub fn closed_form_one(&self, x: f64) -> f64 {
        let h = 0.5 * self.length;
        let b = 2.0 * self.delta;
        (((h - x) / b).atan() + ((h + x) / b).atan()) / (2.0 * PI)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.matrix[(i, j)] * v[j]).sum()).collect()
    }

    /// `A_delta[f](x)` at an arbitrary point.
    pub fn apply_at(&self, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, w)| self.kernel(x - y) * w * f(y)).sum()
    }

    /// Eigenvalues of the discretized operator, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let s: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let sym =
            DMatrix::from_fn(self.len(), self.len(), |i, j| s[i] * self.kernel(self.nodes[i] - self.nodes[j]) * s[j]);
        let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// `(lambda I + A_delta)^{-1}[1]` on the grid.
    pub fn solve_flat_density(&self, lambda: Complex64) -> Result<Vec<Complex64>> {
        // The spectrum lies in [0, max row sum]; only look closer when -lambda is near that interval.
        let top = self.matrix.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
        let target = -lambda;
        let gap = if target.re < 0.0 {
            target.norm()
        } else if target.re > top {
            (target - top).norm()
        } else {
            target.im.abs()
        };
        if gap <= 1e-6 {
            let spectrum = self.spectrum();
            let nearest = spectrum
                .iter()
                .copied()
                .min_by(|a, b| (target - a).norm().total_cmp(&(target - b).norm()))
                .unwrap_or(0.0);
            if (target - nearest).norm() <= 1e-10 {
                return Err(Error::Singular(format!(
                    "lambda = {lambda} is within 1e-10 of the spectral point -{nearest:.12} of -A_delta"
                )));
            }
        }
        let n = self.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
            diag + self.matrix[(i, j)]
        });
        ComplexLu::new(m)?.solve(&vec![Complex64::new(1.0, 0.0); n])
    }

    /// Grid value nearest to `x`.
    pub fn sample(&self, values: &[Complex64], x: f64) -> Complex64 {
        let i = self.nodes.partition_point(|&y| y < x);
        let pick = match i {
            0 => 0,
            i if i == self.len() => i - 1,
            i if (self.nodes[i] - x).abs() < (x - self.nodes[i - 1]).abs() => i,
            i => i - 1,
        };
        values[pick]
    }
}

/// Interior moment errors `max |A_delta[y^n](x) - x^n / 2|` over
/// `|x| <= L/2 - delta^exponent`, for a ladder of `delta`.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub order: u32,
    pub exponent: f64,
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln delta`, with its standard error.
    pub slope: f64,
    pub slope_error: f64,
}

pub fn moment_error(op: &ADelta, order: u32, exponent: f64) -> Result<f64> {
    if order > 6 {
        return Err(Error::Invalid(format!("moment order {order} exceeds 6")));
    }
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::Invalid(format!("exponent {exponent} must lie in (0, 1)")));
    }
    let half = 0.5 * op.length - op.delta.powf(exponent);
    if half <= 0.0 {
        return Err(Error::Invalid(format!(
            "delta^{exponent} = {:.3} leaves no interior window on L = {}",
            op.delta.powf(exponent),
            op.length
        )));
    }
    let moment = |y: f64| y.powi(order as i32);
    let probes = op.nodes.iter().copied().filter(|x| x.abs() <= half).chain([-half, half]);
    Ok(probes.map(|x| (op.apply_at(x, moment) - 0.5 * moment(x)).abs()).fold(0.0, f64::max))
}

pub fn moment_check(ops: &[ADelta], order: u32, exponent: f64) -> Result<MomentReport> {
    let errors = ops.iter().map(|op| moment_error(op, order, exponent)).collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = ops.iter().map(|op| op.delta).collect();
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, slope_error) = fit_slope(&lx, &ly);
    Ok(MomentReport { order, exponent, deltas, errors, slope, slope_error })
}

/// Which form of the leading scattered-field formula to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Flat term `+omega delta (i / 2 pi) d2 ...` and end term with the
    /// log-ratio `ln(|x - P|^2 / |x - Q|^2)`.
    AsPrinted,
    /// Flat term `-omega delta (i / pi) d2 ...` and the opposite end-term sign,
    /// obtained by integrating the leading densities against `G_0`.
    Rederived,
}

/// Leading-order scattered field of a thin rod.
#[derive(Clone, Debug)]
pub struct AsymptoticField {
    pub config: ScatterConfig,
    pub lambda: Complex64,
    pub grid: ADelta,
    /// `(lambda I + A_delta)^{-1}[1]` on the grid.
    pub flat_density: Vec<Complex64>,
    pub convention: Convention,
}

impl AsymptoticField {
    pub fn new(
        config: &ScatterConfig,
        length: f64,
        delta: f64,
        grid_size: usize,
        convention: Convention,
    ) -> Result<Self> {
        let lambda = config.material.lambda()?;
        if (lambda - 0.5).norm() < 1e-14 {
            return Err(Error::Singular("lambda(eps) = 1/2: the end term has a pole (lossless plasmon limit)".into()));
        }
        let grid = ADelta::build(length, delta, grid_size)?;
        let flat_density = grid.solve_flat_density(lambda)?;
        Ok(Self { config: *config, lambda, grid, flat_density, convention })
    }

    fn scale(&self) -> Complex64 {
        I * self.config.omega() * self.grid.delta / (2.0 * PI)
    }

    /// Contribution of the flat sides, driven by `d2`.
    pub fn flat_term(&self, x: &Point) -> Complex64 {
        let integral: Complex64 = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .zip(&self.flat_density)
            .map(|((&y, w), g)| g * (w * x.y / ((x.x - y).powi(2) + x.y * x.y)))
            .sum();
        let factor = match self.convention {
            Convention::AsPrinted => 1.0,
            Convention::Rederived => -2.0,
        };
        self.scale() * factor * self.config.direction.y * integral
    }

    /// Contribution of the caps, driven by `d1`; carries the `(lambda - 1/2)^{-1}` pole.
    pub fn end_term(&self, x: &Point) -> Complex64 {
        let h = 0.5 * self.grid.length;
        let ratio = ((x.x + h).powi(2) + x.y * x.y).ln() - ((x.x - h).powi(2) + x.y * x.y).ln();
        let sign = match self.convention {
            Convention::AsPrinted => 1.0,
            Convention::Rederived => -1.0,
        };
        self.scale() * sign * self.config.direction.x * ratio / (self.lambda - 0.5)
    }

    /// Both terms; `x` must keep a distance of at least `delta` from the rod.
    pub fn scattered(&self, x: &Point) -> Result<Complex64> {
        let (l, delta) = (self.grid.length, self.grid.delta);
        let spine = Point::new(x.x.clamp(-0.5 * l, 0.5 * l), 0.0);
        let gap = (x - spine).norm() - delta;
        if gap < delta {
            return Err(Error::NearBoundary { distance: gap, limit: delta });
        }
        Ok(self.flat_term(x) + self.end_term(x))
    }
}

/// Normalization of the restricted cap kernels `<x - y, nu_x> / |x - y|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapKernel {
    /// With the `1/(2 pi)` factor of `K*`.
    Normalized,
    /// Without it.
    Bare,
}

#[derive(Clone, Copy, Debug)]
pub struct DensityOptions {
    pub grid_size: usize,
    /// End regions are `|z_x -+ L/2| <= end_region * delta` on the flats, plus the caps.
    pub end_region: f64,
    pub cap_kernel: CapKernel,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { grid_size: DEFAULT_GRID, end_region: DEFAULT_END_REGION, cap_kernel: CapKernel::Normalized }
    }
}

/// Leading-order exterior density `psi` on the nodes of a rod boundary.
#[derive(Clone, Debug)]
pub struct DensityAsymptotics {
    pub values: Vec<Complex64>,
    /// Whether each node lies in a cap or an end region.
    pub near_end: Vec<bool>,
}

pub fn density_asymptotics(
    bd: &Boundary,
    config: &ScatterConfig,
    options: &DensityOptions,
) -> Result<DensityAsymptotics> {
    let (length, delta) = bd.rod().ok_or_else(|| Error::Geometry("density asymptotics need a rod".into()))?;
    if !config.quasi_static(bd) {
        return Err(Error::Domain(format!("omega * diameter = {:.3} is not below 1", config.omega() * bd.diameter())));
    }
    let lambda = config.material.lambda()?;
    let omega = config.omega();
    let d = config.direction;
    let grid = ADelta::build(length, delta, options.grid_size)?;
    let g = grid.solve_flat_density(lambda)?;

    let reach = 0.5 * length - options.end_region * delta;
    let near_end: Vec<bool> = (0..bd.len())
        .map(|i| match bd.parts[i] {
            Part::LowerFlat | Part::UpperFlat => bd.points[i].x.abs() >= reach,
            _ => true,
        })
        .collect();

    let mut values = vec![Complex64::new(0.0, 0.0); bd.len()];
    for i in 0..bd.len() {
        let sign = match bd.parts[i] {
            Part::LowerFlat => -1.0,
            Part::UpperFlat => 1.0,
            _ => continue,
        };
        if !near_end[i] {
            values[i] = I * omega * d.y * sign * grid.sample(&g, bd.points[i].x);
        }
    }

    let kstar = adjoint_np(bd, Complex64::new(0.0, 0.0))?;
    let factor = match options.cap_kernel {
        CapKernel::Normalized => 1.0,
        CapKernel::Bare => 2.0 * PI,
    };
    for left in [true, false] {
        let region: Vec<usize> = (0..bd.len()).filter(|&i| near_end[i] && (bd.points[i].x < 0.0) == left).collect();
        let m = region.len();
        let resolvent = CMatrix::from_fn(m, m, |a, b| {
            let diag = if a == b { lambda } else { Complex64::new(0.0, 0.0) };
            diag - kstar[(region[a], region[b])] * factor
        });
        let lu = ComplexLu::new(resolvent)?;
        let condition = lu.condition_estimate();
        if condition > ILL_CONDITIONED {
            return Err(Error::Singular(format!(
                "cap resolvent at lambda = {lambda} is singular (condition estimate {condition:.2e})"
            )));
        }
        let rhs: Vec<Complex64> = region.iter().map(|&i| I * omega * d.dot(&bd.normals[i])).collect();
        for (&i, v) in region.iter().zip(lu.solve(&rhs)?) {
            values[i] = v;
        }
    }
    Ok(DensityAsymptotics { values, near_end })
}

/// Relative `L^2` mismatch of two densities on the flat nodes away from the ends.
pub fn flat_mismatch(bd: &Boundary, asymptotic: &DensityAsymptotics, psi: &[Complex64]) -> f64 {
    let mask = |v: &[Complex64]| -> Vec<Complex64> {
        v.iter().zip(&asymptotic.near_end).map(|(z, &near)| if near { Complex64::new(0.0, 0.0) } else { *z }).collect()
    };
    let diff: Vec<Complex64> = psi.iter().zip(&asymptotic.values).map(|(a, b)| a - b).collect();
    l2_norm(bd, &mask(&diff)) / l2_norm(bd, &mask(psi))
}

/// The two pieces of the small-`k` inverse of the single layer:
/// `L = P S~^{-1}`, with `P` the projection onto mean-zero densities along
/// the equilibrium density, and the rank-one part `U_k`.
pub struct InverseParts {
    pub projected: CMatrix,
    /// `S^0[phi_0]`, constant along the boundary.
    pub s0: f64,
    phi0: Vec<f64>,
    /// Row vector `w^T S~^{-1}`.
    row: Vec<f64>,
}

impl InverseParts {
    pub fn new(bd: &Boundary, stilde: &Stilde) -> Self {
        let n = bd.len();
        let inv = stilde.inverse();
        let row: Vec<f64> = (0..n).map(|j| (0..n).map(|i| bd.weights[i] * inv[(i, j)]).sum()).collect();
        let projected = CMatrix::from_fn(n, n, |i, j| Complex64::new(inv[(i, j)] - stilde.phi0[i] * row[j], 0.0));
        let s_phi0 = &stilde.s0 * nalgebra::DVector::from_column_slice(&stilde.phi0);
        let s0 = s_phi0.iter().sum::<f64>() / n as f64;
        Self { projected, s0, phi0: stilde.phi0.clone(), row }
    }

    /// `U_k = phi_0 (int S~^{-1}[.]) / (S^0[phi_0] - (i/4) c_k)`.
    pub fn rank_one(&self, k: Complex64) -> CMatrix {
        let denom = self.s0 - 0.25 * I * c_k(k);
        let n = self.phi0.len();
        CMatrix::from_fn(n, n, |i, j| self.phi0[i] * self.row[j] / denom)
    }
}

#[derive(Clone, Debug)]
pub struct InverseExpansion {
    pub wavenumbers: Vec<f64>,
    /// `||(S^k)^{-1} - [L + U_k - k^2 ln k L S_1 L]||` on `L^2`.
    pub residuals: Vec<f64>,
    /// `||U_k|| |ln k|`, bounded if `U_k = O(1 / ln k)`.
    pub rank_one_log: Vec<f64>,
    pub slope: f64,
}

pub fn inverse_expansion_check(bd: &Boundary, stilde: &Stilde, wavenumbers: &[f64]) -> Result<InverseExpansion> {
    let parts = InverseParts::new(bd, stilde);
    let s1 = assemble(bd, &SingleLayerLogCorrection);
    let sandwich = &parts.projected * &s1 * &parts.projected;
    let mut residuals = Vec::new();
    let mut rank_one_log = Vec::new();
    for &k in wavenumbers {
        let kc = Complex64::new(k, 0.0);
        let exact = ComplexLu::new(single_layer(bd, kc)?)?.solve_matrix(&CMatrix::identity(bd.len(), bd.len()))?;
        let u = parts.rank_one(kc);
        let approx = &parts.projected + &u - &sandwich * (kc * kc * kc.ln());
        residuals.push(operator_norm(bd, &(exact - approx)));
        rank_one_log.push(operator_norm(bd, &u) * k.ln().abs());
    }
    let slope = crate::quadrature::log_log_slope(wavenumbers, &residuals);
    Ok(InverseExpansion { wavenumbers: wavenumbers.to_vec(), residuals, rank_one_log, slope })
}

#[derive(Clone, Debug)]
pub struct RhsExpansion {
    pub omegas: Vec<f64>,
    /// `||f + i omega (1 - 1/eps) d.nu|| / (omega ||d.nu||)`.
    pub residuals: Vec<f64>,
    pub slope: f64,
}

pub fn rhs_expansion_check(bd: &Boundary, config: &ScatterConfig, omegas: &[f64]) -> Result<RhsExpansion> {
    let mut residuals = Vec::new();
    for &omega in omegas {
        let cfg = ScatterConfig::new(config.eps(), omega, config.direction)?;
        let ops = ScatterOperators::assemble(bd, &cfg)?;
        let (_, f) = reduced_operator(bd, &cfg, &ops)?;
        let dnu: Vec<Complex64> = bd.normals.iter().map(|n| Complex64::new(cfg.direction.dot(n), 0.0)).collect();
        let lead = -I * omega * (1.0 - 1.0 / cfg.eps());
        let diff: Vec<Complex64> = f.iter().zip(&dnu).map(|(a, b)| a - lead * b).collect();
        residuals.push(l2_norm(bd, &diff) / (omega * l2_norm(bd, &dnu)));
    }
    let slope = crate::quadrature::log_log_slope(omegas, &residuals);
    Ok(RhsExpansion { omegas: omegas.to_vec(), residuals, slope })
}

/// Form of the `omega^2 ln omega` coefficient of `A(omega)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correction {
    /// `eps^{-1}(1/2 - K*) S~^{-1} S_1 (I - eps P) + K_1 (I - eps P)`.
    AsPrinted,
    /// `(eps^{-1} - 1)(1/2 - K*) S~^{-1} S_1`. The `K_1` parts of `K*^omega`
    /// and `K*^{kc}` cancel because `kc^2 = eps omega^2`, and the rank-one
    /// part of `(S^{kc})^{-1}` composed with `S^omega` is of order one, so the
    /// projection drops out.
    Rederived,
}

/// The `omega^2 ln omega` coefficient of the reduced operator.
pub fn operator_correction(bd: &Boundary, stilde: &Stilde, eps: Complex64, form: Correction) -> CMatrix {
    let n = bd.len();
    let s1 = assemble(bd, &SingleLayerLogCorrection);
    let mut half_minus = -to_complex(&stilde.kstar);
    for i in 0..n {
        half_minus[(i, i)] += 0.5;
    }
    let core = half_minus * to_complex(&stilde.inverse()) * s1;
    match form {
        Correction::Rederived => core * (1.0 / eps - 1.0),
        Correction::AsPrinted => {
            // I - eps P = (1 - eps) I + eps phi_0 w^T
            let mut mix = CMatrix::from_fn(n, n, |i, j| eps * stilde.phi0[i] * bd.weights[j]);
            for i in 0..n {
                mix[(i, i)] += 1.0 - eps;
            }
            (core + assemble(bd, &AdjointLogCorrection) * eps) * &mix / eps
        }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorExpansion {
    pub omegas: Vec<f64>,
    /// `||A(omega) - A_0 - omega^2 ln omega A_1|| / (omega^2 |ln omega|)` per form.
    pub printed: Vec<f64>,
    pub rederived: Vec<f64>,
}

pub fn operator_expansion_check(
    bd: &Boundary,
    stilde: &Stilde,
    config: &ScatterConfig,
    omegas: &[f64],
) -> Result<OperatorExpansion> {
    let eps = config.eps();
    let a0 = static_operator(&stilde.kstar, eps);
    let printed_a1 = operator_correction(bd, stilde, eps, Correction::AsPrinted);
    let rederived_a1 = operator_correction(bd, stilde, eps, Correction::Rederived);
    let mut printed = Vec::new();
    let mut rederived = Vec::new();
    for &omega in omegas {
        let cfg = ScatterConfig::new(eps, omega, config.direction)?;
        let ops = ScatterOperators::assemble(bd, &cfg)?;
        let (a, _) = reduced_operator(bd, &cfg, &ops)?;
        let scale = Complex64::new(omega * omega * omega.ln(), 0.0);
        let rest = &a - &a0;
        printed.push(operator_norm(bd, &(&rest - &printed_a1 * scale)) / scale.norm());
        rederived.push(operator_norm(bd, &(&rest - &rederived_a1 * scale)) / scale.norm());
    }
    Ok(OperatorExpansion { omegas: omegas.to_vec(), printed, rederived })
}

#[derive(Clone, Debug)]
pub struct ExpansionReport {
    pub inverse: InverseExpansion,
    pub rhs: RhsExpansion,
    pub operator: OperatorExpansion,
}

/// All three expansion diagnostics on one boundary.
pub fn expansion_checks(bd: &Boundary, config: &ScatterConfig, frequencies: &[f64]) -> Result<ExpansionReport> {
    let stilde = Stilde::build(bd)?;
    Ok(ExpansionReport {
        inverse: inverse_expansion_check(bd, &stilde, frequencies)?,
        rhs: rhs_expansion_check(bd, config, frequencies)?,
        operator: operator_expansion_check(bd, &stilde, config, frequencies)?,
    })
}
