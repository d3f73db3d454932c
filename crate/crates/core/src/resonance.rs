//! Material parametrization, plasmonic resonance conditions and blowup sweeps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::geometry::{build_nanorod, Boundary, Part};
use crate::layer_potentials::{apply, check_density};
use crate::linalg::l2_norm;
use crate::np_spectral::NpSpectrum;
use crate::quadrature::fit_slope;
use crate::transmission_solver::{gradient_norm, solve, static_operator, ScatterConfig, VolumeGrid};
use crate::{Error, Point, Result};

/// A homogeneous inclusion material at a given frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub eps: Complex64,
    /// `Re(1/eps)`.
    pub theta: f64,
    /// `Im(1/eps)`; negative for a lossy material.
    pub rho: f64,
    /// `omega sqrt(eps)` on the branch with nonnegative imaginary part.
    pub kc: Complex64,
    pub omega: f64,
}

impl Material {
    pub fn new(eps: Complex64, omega: f64) -> Result<Self> {
        if eps.norm() == 0.0 {
            return Err(Error::Invalid("permittivity must be nonzero".into()));
        }
        if eps.im < 0.0 {
            return Err(Error::Invalid(format!("permittivity {eps} has negative imaginary part")));
        }
        if !(omega > 0.0) {
            return Err(Error::Invalid(format!("frequency must be positive, got {omega}")));
        }
        // Adding +0 turns a signed-zero imaginary part into +0 so the root lands on the upper branch.
        let eps = Complex64::new(eps.re, eps.im + 0.0);
        let inv = 1.0 / eps;
        Ok(Self { eps, theta: inv.re, rho: inv.im, kc: omega * eps.sqrt(), omega })
    }

    /// `lambda(eps) = (1 + eps) / (2 (1 - eps))`.
    pub fn lambda(&self) -> Result<Complex64> {
        if self.eps == Complex64::new(1.0, 0.0) {
            return Err(Error::Invalid("lambda(eps) is undefined for eps = 1".into()));
        }
        Ok(0.5 * (1.0 + self.eps) / (1.0 - self.eps))
    }
}

/// `tau_j = (theta + 1)/2 - (theta - 1) lambda_j + i rho (1/2 - lambda_j)`, the
/// eigenvalue of the static operator `A_0` on the mode with NP eigenvalue `lambda_j`.
pub fn tau_j(material: &Material, lambda_j: f64) -> Complex64 {
    let (theta, rho) = (material.theta, material.rho);
    Complex64::new(0.5 * (theta + 1.0) - (theta - 1.0) * lambda_j, rho * (0.5 - lambda_j))
}

/// Permittivity that places the static resonance of the mode with eigenvalue
/// `lambda_target` at loss `rho`: `theta = (lambda + 1/2 - rho)/(lambda - 1/2)`,
/// `eps = 1/(theta + i rho)`.
pub fn resonant_permittivity(lambda_target: f64, rho: f64) -> Result<Complex64> {
    if !(lambda_target > -0.5 && lambda_target < 0.5) {
        return Err(Error::Invalid(format!(
            "target eigenvalue {lambda_target} must lie in (-1/2, 1/2); 1/2 is the epsilon-near-zero limit"
        )));
    }
    if rho > 0.0 {
        return Err(Error::Invalid(format!("loss parameter rho = {rho} must not be positive")));
    }
    let theta = (lambda_target + 0.5 - rho) / (lambda_target - 0.5);
    Ok(1.0 / Complex64::new(theta, rho))
}

/// Exact-resonance threshold for `|tau_j|`.
pub const TAU_FLOOR: f64 = 1e-14;

/// Solution of `A_0 psi_0 = f` by eigen-expansion.
#[derive(Clone, Debug)]
pub struct StaticSolution {
    pub psi: Vec<Complex64>,
    pub taus: Vec<Complex64>,
    /// `||A_0 psi_0 - f|| / ||f||` in `L^2`.
    pub residual: f64,
}

pub fn static_solution(
    bd: &Boundary,
    f: &[Complex64],
    spec: &NpSpectrum,
    material: &Material,
) -> Result<StaticSolution> {
    check_density(bd, f)?;
    let taus: Vec<Complex64> = spec.values.iter().map(|&l| tau_j(material, l)).collect();
    if let Some((j, t)) = taus.iter().enumerate().find(|(_, t)| t.norm() < TAU_FLOOR) {
        return Err(Error::Singular(format!(
            "exact resonance: |tau_{j}| = {:.1e} for eps = {}",
            t.norm(),
            material.eps
        )));
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); bd.len()];
    for (j, tau) in taus.iter().enumerate() {
        let c = spec.coefficient(j, f) / tau;
        for (p, v) in psi.iter_mut().zip(spec.vectors.column(j).iter()) {
            *p += c * *v;
        }
    }
    let a0 = static_operator(&spec.stilde.kstar, material.eps);
    let r: Vec<Complex64> = apply(&a0, &psi).iter().zip(f).map(|(a, b)| a - b).collect();
    let residual = l2_norm(bd, &r) / l2_norm(bd, f);
    Ok(StaticSolution { psi, taus, residual })
}

/// Leading right-hand side `f = -i omega (1 - 1/eps) d.nu`.
pub fn leading_rhs(bd: &Boundary, config: &ScatterConfig) -> Vec<Complex64> {
    let scale = Complex64::new(0.0, -config.omega()) * (1.0 - 1.0 / config.eps());
    bd.normals.iter().map(|n| scale * config.direction.dot(n)).collect()
}

/// `max_j |tau_j|^{-1}` over mean-zero modes, and the bound
/// `1 / (|rho| min_j (1/2 - lambda_j))`.
pub fn inverse_tau_bound(spec: &NpSpectrum, material: &Material) -> (f64, f64) {
    let modes = &spec.values[1..];
    let worst = modes.iter().map(|&l| 1.0 / tau_j(material, l).norm()).fold(0.0, f64::max);
    let gap = modes.iter().map(|&l| 0.5 - l).fold(f64::INFINITY, f64::min);
    (worst, 1.0 / (material.rho.abs() * gap))
}

/// `int ln[((x1 + L/2)^2 + delta^2) / ((x1 - L/2)^2 + delta^2)] phi_bar(x1) dx1`,
/// with `phi_bar` the average of the mode's traces on the two flats.
pub fn coupling_check(bd: &Boundary, spec: &NpSpectrum, mode: usize) -> Result<f64> {
    let (length, delta) = bd.rod().ok_or_else(|| Error::Geometry("the coupling integral needs a rod".into()))?;
    if mode == 0 || mode >= spec.len() {
        return Err(Error::Invalid(format!("mode {mode} is not a mean-zero mode")));
    }
    let mirror = bd.mirror_map(1);
    let h = 0.5 * length;
    let v = spec.vectors.column(mode);
    Ok((0..bd.len())
        .filter(|&i| bd.parts[i] == Part::LowerFlat)
        .map(|i| {
            let x = bd.points[i].x;
            let ratio = (((x + h).powi(2) + delta * delta) / ((x - h).powi(2) + delta * delta)).ln();
            ratio * 0.5 * (v[i] + v[mirror[i]]) * bd.weights[i]
        })
        .sum())
}

/// Couplings below this fraction of `int |ln ratio| |phi_bar|` count as zero.
pub const COUPLING_FLOOR: f64 = 1e-6;

/// The mean-zero mode with eigenvalue closest to 1/2 whose coupling is nonzero.
pub fn select_mode(bd: &Boundary, spec: &NpSpectrum) -> Result<usize> {
    let (length, delta) = bd.rod().ok_or_else(|| Error::Geometry("mode selection needs a rod".into()))?;
    let h = 0.5 * length;
    let mirror = bd.mirror_map(1);
    for j in 1..spec.len() {
        let v = spec.vectors.column(j);
        let scale: f64 = (0..bd.len())
            .filter(|&i| bd.parts[i] == Part::LowerFlat)
            .map(|i| {
                let x = bd.points[i].x;
                let ratio = (((x + h).powi(2) + delta * delta) / ((x - h).powi(2) + delta * delta)).ln();
                (ratio * 0.5 * (v[i] + v[mirror[i]])).abs() * bd.weights[i]
            })
            .sum();
        if coupling_check(bd, spec, j)?.abs() > COUPLING_FLOOR * scale {
            return Ok(j);
        }
    }
    Err(Error::Invalid("no mode couples to an axial plane wave".into()))
}

/// Default regime constant in `omega^2 |ln omega| / |rho| <= c1`.
pub const DEFAULT_C1: f64 = 0.1;

/// How the permittivity of each sweep point is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Match the static resonance of a mode; `None` picks it with [`select_mode`].
    Matched { mode: Option<usize> },
    /// Keep `Re(1/eps) = theta` fixed while sweeping `rho`.
    FixedTheta { theta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub delta: f64,
    /// Negative loss parameter `Im(1/eps)`.
    pub rho: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPlan {
    pub name: String,
    pub length: f64,
    pub resolution: usize,
    pub direction: [f64; 2],
    pub target: Target,
    pub points: Vec<SweepPoint>,
    pub c1: f64,
    /// Truncation radius of the volume norm.
    pub radius: f64,
    pub collar_factor: f64,
}

/// `count` values from `10^lo` to `10^hi`, log-spaced.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..count).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64)).collect()
}

impl SweepPlan {
    /// Matched resonance at `omega = 1e-2`, `delta = 0.05`, axial incidence,
    /// thirteen losses from `1e-3` to `10^-1.5`.
    pub fn rho_scan() -> Self {
        Self {
            name: "rho-scan".into(),
            length: 1.0,
            resolution: 1024,
            direction: [1.0, 0.0],
            target: Target::Matched { mode: None },
            points: log_space(-3.0, -1.5, 13)
                .into_iter()
                .map(|r| SweepPoint { omega: 1e-2, delta: 0.05, rho: -r })
                .collect(),
            c1: DEFAULT_C1,
            radius: 10.0,
            collar_factor: 5.0,
        }
    }

    /// Non-resonant control with `Re(1/eps) = 1/4` over two decades of loss.
    pub fn control() -> Self {
        Self {
            name: "control".into(),
            target: Target::FixedTheta { theta: 0.25 },
            points: log_space(-3.0, -1.0, 5)
                .into_iter()
                .map(|r| SweepPoint { omega: 1e-2, delta: 0.05, rho: -r })
                .collect(),
            ..Self::rho_scan()
        }
    }

    /// Joint limit `|rho| = omega^{3/2}`, `delta = omega^{1/3} / 4`.
    pub fn joint_limit() -> Self {
        Self {
            name: "joint-limit".into(),
            points: [2e-2, 1e-2, 5e-3, 2.5e-3]
                .iter()
                .map(|&w: &f64| SweepPoint { omega: w, delta: 0.25 * w.cbrt(), rho: -w.powf(1.5) })
                .collect(),
            ..Self::rho_scan()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "rho-scan" => Ok(Self::rho_scan()),
            "control" => Ok(Self::control()),
            "joint-limit" => Ok(Self::joint_limit()),
            other => Err(Error::Invalid(format!("unknown sweep preset '{other}' (rho-scan, control, joint-limit)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub omega: f64,
    pub delta: f64,
    pub rho: f64,
    pub theta: f64,
    pub eps_re: f64,
    pub eps_im: f64,
    /// Matched mode and its eigenvalue; `None` for fixed-theta points.
    pub mode: Option<usize>,
    pub lambda_mode: Option<f64>,
    /// Volume gradient norm outside the collar, inside `B_R`.
    pub volume_norm: f64,
    pub volume_error: f64,
    /// `||psi_c||_{H*}`.
    pub boundary_norm: f64,
    /// `<f, phi_j*>_{H*}` for the leading right-hand side.
    pub pairing_re: f64,
    pub pairing_im: f64,
    pub condition: f64,
    /// `omega^2 |ln omega| / |rho|`.
    pub guard: f64,
    pub guard_ok: bool,
    /// `omega delta / |rho|`.
    pub amplification: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `rho`, `omega` or `delta`.
    pub variable: String,
    pub slope: f64,
    pub std_error: f64,
    /// 95% interval from the Student t quantile.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub records: Vec<SweepRecord>,
    pub fits: Vec<SlopeFit>,
}

pub fn resonance_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    let direction = Point::new(plan.direction[0], plan.direction[1]);
    let grid = VolumeGrid { collar_factor: plan.collar_factor, ..VolumeGrid::default() };
    let mut records = Vec::with_capacity(plan.points.len());
    let mut current: Option<(f64, Boundary, NpSpectrum, usize)> = None;
    for point in &plan.points {
        if current.as_ref().map(|c| c.0) != Some(point.delta) {
            let bd = build_nanorod(plan.length, point.delta, plan.resolution)?;
            let spec = NpSpectrum::compute(&bd)?;
            let mode = match plan.target {
                Target::Matched { mode: Some(j) } => j,
                _ => select_mode(&bd, &spec)?,
            };
            current = Some((point.delta, bd, spec, mode));
        }
        let (_, bd, spec, mode) = current.as_ref().expect("set above");
        let (eps, matched) = match plan.target {
            Target::Matched { .. } => (resonant_permittivity(spec.values[*mode], point.rho)?, true),
            Target::FixedTheta { theta } => (1.0 / Complex64::new(theta, point.rho), false),
        };
        let config = ScatterConfig::new(eps, point.omega, direction)?;
        let sol = solve(bd, &config)?;
        let volume = gradient_norm(&sol, plan.radius, &grid)?;
        let f = leading_rhs(bd, &config);
        let pairing = spec.pairing(*mode, &f);
        let guard = point.omega.powi(2) * point.omega.ln().abs() / point.rho.abs();
        records.push(SweepRecord {
            omega: point.omega,
            delta: point.delta,
            rho: point.rho,
            theta: config.material.theta,
            eps_re: eps.re,
            eps_im: eps.im,
            mode: matched.then_some(*mode),
            lambda_mode: matched.then_some(spec.values[*mode]),
            volume_norm: volume.value,
            volume_error: volume.error_estimate,
            boundary_norm: sol.boundary_norm(spec),
            pairing_re: pairing.re,
            pairing_im: pairing.im,
            condition: sol.condition,
            guard,
            guard_ok: guard <= plan.c1,
            amplification: point.omega * point.delta / point.rho.abs(),
        });
    }
    let fits = fit_slopes(&records);
    Ok(SweepResult { plan: plan.clone(), records, fits })
}

/// Log-log fits of the volume norm against each swept variable, over records
/// that share the other two variables and satisfy the regime guard. Series of
/// five or more points lose their first and last point.
pub fn fit_slopes(records: &[SweepRecord]) -> Vec<SlopeFit> {
    let mut fits = Vec::new();
    type Key = fn(&SweepRecord) -> f64;
    let keys: [(&str, Key); 3] = [("rho", |r| r.rho.abs()), ("omega", |r| r.omega), ("delta", |r| r.delta)];
    for (v, (name, key)) in keys.iter().enumerate() {
        let others: Vec<_> = keys.iter().enumerate().filter(|(u, _)| *u != v).map(|(_, k)| k.1).collect();
        let mut groups: Vec<(f64, f64, Vec<&SweepRecord>)> = Vec::new();
        for r in records.iter().filter(|r| r.guard_ok) {
            let tag = (others[0](r), others[1](r));
            match groups.iter_mut().find(|g| g.0 == tag.0 && g.1 == tag.1) {
                Some(g) => g.2.push(r),
                None => groups.push((tag.0, tag.1, vec![r])),
            }
        }
        for (_, _, mut group) in groups {
            group.sort_by(|a, b| key(a).total_cmp(&key(b)));
            group.dedup_by(|a, b| key(a) == key(b));
            if group.len() >= 5 {
                group = group[1..group.len() - 1].to_vec();
            }
            if group.len() < 3 {
                continue;
            }
            let x: Vec<f64> = group.iter().map(|r| key(r).ln()).collect();
            let y: Vec<f64> = group.iter().map(|r| r.volume_norm.ln()).collect();
            let (slope, std_error) = fit_slope(&x, &y);
            let t = StudentsT::new(0.0, 1.0, (group.len() - 2) as f64).expect("positive dof").inverse_cdf(0.975);
            fits.push(SlopeFit {
                variable: name.to_string(),
                slope,
                std_error,
                ci_low: slope - t * std_error,
                ci_high: slope + t * std_error,
                points: group.len(),
            });
        }
    }
    fits
}

/// Static resonance amplification at one loss value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Amplification {
    pub rho: f64,
    /// `||psi_{0,c}||_{H*}` for the static solution with the leading right-hand side.
    pub static_norm: f64,
    /// `a_j^{-1/2} |<f, phi_j>|`.
    pub projected_forcing: f64,
    /// `static_norm |rho| / projected_forcing`.
    pub ratio: f64,
}

/// Solve `A_0 psi_0 = f` at the permittivity matched to `mode` and compare the
/// mean-zero part of `psi_0` with the forcing of that mode.
pub fn static_amplification(
    bd: &Boundary,
    spec: &NpSpectrum,
    mode: usize,
    omega: f64,
    direction: Point,
    rho: f64,
) -> Result<Amplification> {
    let eps = resonant_permittivity(spec.values[mode], rho)?;
    let config = ScatterConfig::new(eps, omega, direction)?;
    let f = leading_rhs(bd, &config);
    let sol = static_solution(bd, &f, spec, &config.material)?;
    let static_norm = spec.hstar_norm_mean_zero(bd, &sol.psi);
    let projected_forcing = spec.pairing(mode, &f).norm() / spec.norms[mode].sqrt();
    Ok(Amplification { rho, static_norm, projected_forcing, ratio: static_norm * rho.abs() / projected_forcing })
}
