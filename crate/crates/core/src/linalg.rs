//! Dense complex solves with a condition estimate, and weighted norms on the boundary.

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;

use crate::geometry::Boundary;
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Condition estimates above this are flagged as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

pub struct ComplexLu {
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    norm1: f64,
    n: usize,
}

impl ComplexLu {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        let norm1 = (0..n).map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular("zero pivot in LU factorization".into()));
        }
        Ok(Self { lu, norm1, n })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let v = DVector::from_column_slice(b);
        let x = self.lu.solve(&v).ok_or_else(|| Error::Singular("LU solve failed".into()))?;
        Ok(x.iter().copied().collect())
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> Result<CMatrix> {
        self.lu.solve(b).ok_or_else(|| Error::Singular("LU solve failed".into()))
    }

    /// Lower estimate of the 1-norm condition number from a few steps of
    /// inverse iteration started at a fixed pseudo-random vector.
    pub fn condition_estimate(&self) -> f64 {
        let mut x: Vec<Complex64> = (0..self.n)
            .map(|i| {
                let t = ((i as f64 + 1.0) * 0.618_033_988_749_895).fract();
                Complex64::new(2.0 * t - 1.0, 0.0)
            })
            .collect();
        let mut growth: f64 = 0.0;
        for _ in 0..4 {
            let nx: f64 = x.iter().map(|v| v.norm()).sum();
            let Ok(y) = self.solve(&x) else { return f64::INFINITY };
            let ny: f64 = y.iter().map(|v| v.norm()).sum();
            growth = growth.max(ny / nx);
            x = y.iter().map(|v| v / ny).collect();
        }
        self.norm1 * growth
    }
}

/// `sqrt(sum_i w_i |v_i|^2)`.
pub fn l2_norm(bd: &Boundary, v: &[Complex64]) -> f64 {
    v.iter().zip(&bd.weights).map(|(a, w)| w * a.norm_sqr()).sum::<f64>().sqrt()
}

/// `sum_i w_i v_i`.
pub fn integrate(bd: &Boundary, v: &[Complex64]) -> Complex64 {
    v.iter().zip(&bd.weights).map(|(a, w)| a * *w).sum()
}

/// Operator 2-norm on `L^2` of the boundary of the map represented by `m`.
pub fn operator_norm(bd: &Boundary, m: &CMatrix) -> f64 {
    let n = bd.len();
    let s: Vec<f64> = bd.weights.iter().map(|w| w.sqrt()).collect();
    let scaled = CMatrix::from_fn(n, n, |i, j| m[(i, j)] * (s[i] / s[j]));
    scaled.singular_values().max()
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|v| v.re)
}
