//! Spectral decomposition of the static Neumann–Poincaré operator.
//!
//! `K*` is self-adjoint for the pairing `<u, v> = -(u, S~[v])`, where `S~`
//! agrees with `S^0` on mean-zero densities and sends the equilibrium density
//! `phi_0` to the constant 1. The pairing is only positive on mean-zero
//! densities, so the eigen-solve runs there and `phi_0` is appended by hand
//! with its (negative) norm.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, LU};
use num_complex::Complex64;

use crate::geometry::Boundary;
use crate::layer_potentials::{adjoint_np, np_static, single_layer};
use crate::linalg::real_part;
use crate::{Error, Result};

/// Pairs of mean-zero eigenvalues closer than this are reported as near-degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Static operators and the substitute single layer on one boundary.
pub struct Stilde {
    pub matrix: DMatrix<f64>,
    /// Equilibrium density, normalized to unit integral.
    pub phi0: Vec<f64>,
    pub s0: DMatrix<f64>,
    pub kstar: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Stilde {
    pub fn build(bd: &Boundary) -> Result<Self> {
        let s0 = real_part(&single_layer(bd, Complex64::new(0.0, 0.0))?);
        let kstar = real_part(&adjoint_np(bd, Complex64::new(0.0, 0.0))?);
        Self::from_operators(bd, s0, kstar)
    }

    pub fn from_operators(bd: &Boundary, s0: DMatrix<f64>, kstar: DMatrix<f64>) -> Result<Self> {
        let n = bd.len();
        let w = DVector::from_column_slice(&bd.weights);
        // (K* - 1/2) phi0 + c 1 = 0 with int phi0 = 1; c vanishes for the exact operator.
        let mut bordered = DMatrix::<f64>::zeros(n + 1, n + 1);
        bordered.view_mut((0, 0), (n, n)).copy_from(&kstar);
        for i in 0..n {
            bordered[(i, i)] -= 0.5;
            bordered[(i, n)] = 1.0;
            bordered[(n, i)] = w[i];
        }
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let sol = bordered
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Geometry("equilibrium density system is singular".into()))?;
        let phi0 = sol.rows(0, n).into_owned();
        let residual = (&kstar * &phi0 - &phi0 * 0.5).amax() / phi0.amax();
        if residual > 1e-4 {
            return Err(Error::Geometry(format!(
                "no eigenvalue of K* within 1e-4 of 1/2 (residual {residual:.2e}); refine the boundary"
            )));
        }
        // S~ = S^0 (I - phi0 w^T) + 1 w^T
        let s_phi0 = &s0 * &phi0;
        let mut matrix = s0.clone();
        for j in 0..n {
            for i in 0..n {
                matrix[(i, j)] += (1.0 - s_phi0[i]) * w[j];
            }
        }
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::Singular("substitute single layer is singular".into()));
        }
        Ok(Self { matrix, phi0: phi0.iter().copied().collect(), s0, kstar, lu })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n).map(|i| (0..n).map(|j| v[j] * self.matrix[(i, j)]).sum()).collect()
    }

    /// `S~^{-1} v`.
    pub fn solve(&self, v: &[Complex64]) -> Vec<Complex64> {
        let re = self.lu.solve(&DVector::from_iterator(v.len(), v.iter().map(|z| z.re))).expect("invertible");
        let im = self.lu.solve(&DVector::from_iterator(v.len(), v.iter().map(|z| z.im))).expect("invertible");
        re.iter().zip(im.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.lu.try_inverse().expect("invertible")
    }
}

/// `<u, v>_{H*} = -sum_i w_i conj(u_i) (S~ v)_i`.
pub fn hstar_inner(bd: &Boundary, stilde: &Stilde, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    if u.len() != bd.len() || v.len() != bd.len() || stilde.phi0.len() != bd.len() {
        return Err(Error::Invalid("densities live on different grids".into()));
    }
    let sv = stilde.apply(v);
    Ok(-u.iter().zip(&sv).zip(&bd.weights).map(|((a, b), w)| a.conj() * b * *w).sum::<Complex64>())
}

/// Behaviour of a mode under the two coordinate reflections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Even,
    Odd,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parity {
    /// Under `x1 -> -x1`.
    pub x1: Symmetry,
    /// Under `x2 -> -x2`.
    pub x2: Symmetry,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: Symmetry| match v {
            Symmetry::Even => "even",
            Symmetry::Odd => "odd",
            Symmetry::Mixed => "mixed",
        };
        write!(f, "{}/{}", s(self.x1), s(self.x2))
    }
}

pub struct NpSpectrum {
    /// `values[0] = 1/2`, then mean-zero eigenvalues in decreasing order.
    pub values: Vec<f64>,
    /// Eigenfunctions as columns, normalized in the discrete `L^2` norm.
    pub vectors: DMatrix<f64>,
    /// `a_j = <phi_j, phi_j>_{H*}`; `norms[0]` is negative.
    pub norms: Vec<f64>,
    pub parity: Vec<Parity>,
    /// Rows `-(W S~ phi_j)^T`, so that `<phi_j, psi> = duals.row(j) psi`.
    pub duals: DMatrix<f64>,
    /// Index pairs of mean-zero modes closer than [`DEGENERACY_GAP`].
    pub near_degenerate: Vec<(usize, usize)>,
    pub stilde: Stilde,
}

impl NpSpectrum {
    pub fn compute(bd: &Boundary) -> Result<Self> {
        Self::from_stilde(bd, Stilde::build(bd)?)
    }

    pub fn from_stilde(bd: &Boundary, stilde: Stilde) -> Result<Self> {
        let n = bd.len();
        let w = DVector::from_column_slice(&bd.weights);
        // Symmetric weight of the pairing: B = -W S~, symmetrized.
        let mut weight = DMatrix::from_fn(n, n, |i, j| -w[i] * stilde.matrix[(i, j)]);
        weight = (&weight + weight.transpose()) * 0.5;

        let basis = mean_zero_basis(&w);
        let b_sub = basis.transpose() * &weight * &basis;
        let k_sub = basis.transpose() * &stilde.kstar * &basis;
        let a_sub = &b_sub * &k_sub;
        let a_sub = (&a_sub + a_sub.transpose()) * 0.5;
        let chol = Cholesky::new(b_sub).ok_or_else(|| {
            Error::Geometry("-S~ is not positive definite on mean-zero densities; refine the boundary".into())
        })?;
        let l = chol.l();
        let half = l.solve_lower_triangular(&a_sub).expect("nonsingular factor");
        let sym = l.solve_lower_triangular(&half.transpose()).expect("nonsingular factor");
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();

        let mut order: Vec<usize> = (0..n - 1).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let lt = l.transpose();
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        let phi0 = DVector::from_column_slice(&stilde.phi0);
        vectors.set_column(0, &(&phi0 / l2(&phi0, &w)));
        values.push(0.5);
        for (c, &k) in order.iter().enumerate() {
            let y = lt.solve_upper_triangular(&eig.eigenvectors.column(k).into_owned()).expect("nonsingular factor");
            let mut v = &basis * y;
            v /= l2(&v, &w);
            // Fix the sign so the largest entry is positive.
            if v[v.iamax()] < 0.0 {
                v = -v;
            }
            vectors.set_column(c + 1, &v);
            values.push(eig.eigenvalues[k]);
        }

        let s_vec = &stilde.matrix * &vectors;
        let duals = DMatrix::from_fn(n, n, |j, i| -w[i] * s_vec[(i, j)]);
        let norms: Vec<f64> = (0..n).map(|j| duals.row(j).dot(&vectors.column(j).transpose())).collect();

        let mirrors = [bd.mirror_map(0), bd.mirror_map(1)];
        let parity = (0..n)
            .map(|j| {
                let v = vectors.column(j);
                let sym = |m: &[usize]| {
                    let s: f64 = (0..n).map(|i| w[i] * v[i] * v[m[i]]).sum::<f64>();
                    if s > 0.99 {
                        Symmetry::Even
                    } else if s < -0.99 {
                        Symmetry::Odd
                    } else {
                        Symmetry::Mixed
                    }
                };
                Parity { x1: sym(&mirrors[0]), x2: sym(&mirrors[1]) }
            })
            .collect();
        let near_degenerate =
            (1..n - 1).filter(|&j| values[j] - values[j + 1] < DEGENERACY_GAP).map(|j| (j, j + 1)).collect();
        Ok(Self { values, vectors, norms, parity, duals, near_degenerate, stilde })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mode(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j).iter().map(|v| Complex64::new(*v, 0.0)).collect()
    }

    /// `<phi_j, psi>_{H*}`.
    pub fn pairing(&self, j: usize, psi: &[Complex64]) -> Complex64 {
        self.duals.row(j).iter().zip(psi).map(|(d, p)| p * *d).sum()
    }

    /// Expansion coefficient `a_j^{-1} <phi_j, psi>`.
    pub fn coefficient(&self, j: usize, psi: &[Complex64]) -> Complex64 {
        self.pairing(j, psi) / self.norms[j]
    }

    /// `a_0 = <phi_0, phi_0>_{H*}` for the unit-integral equilibrium density.
    pub fn equilibrium_norm(&self) -> f64 {
        self.norms[0] * (self.stilde.phi0[0] / self.vectors[(0, 0)]).powi(2)
    }

    /// Split `psi = psi_c + c0 phi_0` with `psi_c` mean-zero and `phi_0` the
    /// unit-integral equilibrium density.
    pub fn decompose(&self, psi: &[Complex64]) -> (Vec<Complex64>, Complex64) {
        let c0 = self.coefficient(0, psi);
        let psi_c = psi.iter().zip(self.vectors.column(0).iter()).map(|(p, f)| p - c0 * *f).collect();
        (psi_c, c0 * self.vectors[(0, 0)] / self.stilde.phi0[0])
    }

    /// `sum_{j < modes} lambda_j c_j phi_j`, the truncated eigen-expansion of `K*[psi]`.
    pub fn reconstruct_kstar(&self, psi: &[Complex64], modes: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for j in 0..modes.min(self.len()) {
            let c = self.coefficient(j, psi) * self.values[j];
            for (o, v) in out.iter_mut().zip(self.vectors.column(j).iter()) {
                *o += c * *v;
            }
        }
        out
    }

    /// `||psi_c||_{H*}` for the mean-zero part of `psi`.
    pub fn hstar_norm_mean_zero(&self, bd: &Boundary, psi: &[Complex64]) -> f64 {
        let (psi_c, _) = self.decompose(psi);
        hstar_inner(bd, &self.stilde, &psi_c, &psi_c).map(|v| v.re.max(0.0).sqrt()).unwrap_or(f64::NAN)
    }

    /// Relative Calderón residual `||K S~ - S~ K*|| / ||S~||`.
    pub fn calderon_residual(&self, bd: &Boundary) -> f64 {
        let k = real_part(&np_static(bd));
        let lhs = &k * &self.stilde.matrix - &self.stilde.matrix * &self.stilde.kstar;
        weighted_hs(bd, &lhs) / weighted_hs(bd, &self.stilde.matrix)
    }
}

fn l2(v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    v.iter().zip(w.iter()).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
}

fn weighted_hs(bd: &Boundary, m: &DMatrix<f64>) -> f64 {
    let n = bd.len();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += m[(i, j)].powi(2) * bd.weights[i] / bd.weights[j];
        }
    }
    s.sqrt()
}

/// Orthonormal basis of `{v : w^T v = 0}` from a Householder reflection.
fn mean_zero_basis(w: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    let mut u = w / w.norm();
    u[0] += 1.0;
    let scale = 2.0 / u.norm_squared();
    DMatrix::from_fn(n, n - 1, |i, j| (if i == j + 1 { 1.0 } else { 0.0 }) - scale * u[i] * u[j + 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk, build_ellipse, build_nanorod};
    use std::f64::consts::PI;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn disk_equilibrium_density_and_stilde() {
        let bd = build_disk(1.0, 128).unwrap();
        let st = Stilde::build(&bd).unwrap();
        for v in &st.phi0 {
            assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-12);
        }
        let phi0: Vec<Complex64> = st.phi0.iter().map(|v| c(*v)).collect();
        assert!(st.apply(&phi0).iter().all(|v| (v - c(1.0)).norm() < 1e-10));
        let cos: Vec<Complex64> = bd.params.iter().map(|t| c(t.cos())).collect();
        let out = st.apply(&cos);
        for (o, v) in out.iter().zip(&cos) {
            assert!((o + v * 0.5).norm() < 1e-12);
        }
        let a0 = hstar_inner(&bd, &st, &phi0, &phi0).unwrap();
        assert!((a0 - c(-1.0)).norm() < 1e-10);
        let ac = hstar_inner(&bd, &st, &cos, &cos).unwrap();
        assert!((ac - c(PI / 2.0)).norm() < 1e-10);
    }

    #[test]
    fn disk_spectrum_is_flat() {
        let bd = build_disk(1.0, 256).unwrap();
        let spec = NpSpectrum::compute(&bd).unwrap();
        assert_eq!(spec.values[0], 0.5);
        assert!(spec.values[1..].iter().all(|v| v.abs() < 1e-10));
        assert!(spec.norms[1..].iter().all(|a| *a > 0.0));
        assert!((spec.norms[0] + 2.0 * PI).abs() < 1e-10);
        assert!((spec.equilibrium_norm() + 1.0).abs() < 1e-10);
        assert!(spec.calderon_residual(&bd) < 1e-12);
    }

    #[test]
    fn ellipse_eigenvalues_follow_the_geometric_law() {
        let bd = build_ellipse(2.0, 1.0, 256).unwrap();
        let spec = NpSpectrum::compute(&bd).unwrap();
        // Each +-1/2 (1/3)^n appears twice: once for each sign.
        for m in 1..=4 {
            let target = 0.5 * (1.0f64 / 3.0).powi(m);
            let pos = spec.values[1..].iter().map(|v| (v - target).abs()).fold(f64::MAX, f64::min);
            let neg = spec.values[1..].iter().map(|v| (v + target).abs()).fold(f64::MAX, f64::min);
            assert!(pos < 1e-10 && neg < 1e-10, "{m}: {pos} {neg}");
        }
        assert!((spec.values[1] - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn modes_are_orthogonal_and_mean_zero() {
        let bd = build_nanorod(1.0, 0.1, 256).unwrap();
        let spec = NpSpectrum::compute(&bd).unwrap();
        for i in 1..12 {
            let vi = spec.mode(i);
            let mean: f64 = vi.iter().zip(&bd.weights).map(|(v, w)| v.re * w).sum();
            assert!(mean.abs() < 1e-10);
            assert!(spec.values[i] > -0.5 && spec.values[i] < 0.5);
            for j in 1..12 {
                let p = hstar_inner(&bd, &spec.stilde, &vi, &spec.mode(j)).unwrap();
                if i != j {
                    assert!(p.norm() < 1e-6 * (spec.norms[i] * spec.norms[j]).sqrt(), "{i} {j} {p}");
                }
            }
        }
        let p = &spec.parity[1];
        assert!(p.x1 != Symmetry::Mixed && p.x2 != Symmetry::Mixed);
    }

    #[test]
    fn decomposition_identities() {
        let bd = build_nanorod(1.0, 0.1, 256).unwrap();
        let spec = NpSpectrum::compute(&bd).unwrap();
        let phi0: Vec<Complex64> = spec.stilde.phi0.iter().map(|v| c(*v)).collect();
        let (pc, c0) = spec.decompose(&phi0);
        assert!(pc.iter().all(|v| v.norm() < 1e-10));
        assert!((c0 - c(1.0)).norm() < 1e-10);
        let sum: Vec<Complex64> = phi0.iter().zip(spec.mode(1)).map(|(a, b)| a + b).collect();
        let (pc, _) = spec.decompose(&sum);
        let err = pc.iter().zip(spec.mode(1)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6 * spec.vectors.column(1).amax());
        let mean_zero = spec.mode(3);
        assert!(spec.coefficient(0, &mean_zero).norm() < 1e-8);
    }

    #[test]
    fn eigen_expansion_reconstructs_kstar() {
        let bd = build_disk(1.0, 128).unwrap();
        let spec = NpSpectrum::compute(&bd).unwrap();
        let psi: Vec<Complex64> = bd.params.iter().map(|t| c((2.0 * t).cos() + 0.3 + t.sin().powi(3))).collect();
        let direct: Vec<Complex64> =
            (0..bd.len()).map(|i| (0..bd.len()).map(|j| psi[j] * spec.stilde.kstar[(i, j)]).sum()).collect();
        let rec = spec.reconstruct_kstar(&psi, bd.len() / 2);
        let err = direct.iter().zip(&rec).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-4);
    }
}
