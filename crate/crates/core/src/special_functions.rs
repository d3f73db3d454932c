//! Bessel and Hankel functions of orders zero and one, the Helmholtz
//! fundamental solution and its small-wavenumber expansion.
//!
//! Arguments with modulus up to [`SERIES_LIMIT`] use the ascending power
//! series (complex arguments included). Larger real arguments use the Hankel
//! asymptotic expansion truncated at its smallest term. Both branches are
//! accurate to about `1e-11` absolute at the crossover.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};

use num_complex::Complex64;

use crate::{Error, Point, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover between the power series and the asymptotic expansion.
pub const SERIES_LIMIT: f64 = 12.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(J0, J1, Y0, Y1)` at a complex argument by the ascending series.
/// The principal branch of the logarithm is used, so `Y` is analytic off the
/// negative real axis.
pub fn bessel_series(z: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let q = -z * z * 0.25;
    let half = z * 0.5;
    // term_m = q^m / (m!)^2 for J0 and q^m / (m! (m+1)!) for J1.
    let mut t0 = c(1.0);
    let mut t1 = c(1.0);
    let mut j0 = c(1.0);
    let mut j1 = c(1.0);
    let mut y0_tail = c(0.0); // sum_{m>=1} H_m q^m/(m!)^2
    let mut y1_tail = c(0.0); // sum_{m>=0} (H_m + H_{m+1}) q^m/(m!(m+1)!)
    y1_tail += t1 * 1.0;
    let mut harmonic = 0.0;
    for m in 1..200 {
        let mf = m as f64;
        t0 *= q / (mf * mf);
        t1 *= q / (mf * (mf + 1.0));
        harmonic += 1.0 / mf;
        j0 += t0;
        j1 += t1;
        y0_tail += t0 * harmonic;
        y1_tail += t1 * (2.0 * harmonic + 1.0 / (mf + 1.0));
        let scale = j0.norm() + j1.norm() + 1e-300;
        if t0.norm() * (harmonic + 1.0) < 1e-17 * scale && t1.norm() * (harmonic + 1.0) < 1e-17 * scale && m > 2 {
            break;
        }
    }
    let j1 = j1 * half;
    let log_term = (half).ln() + EULER_GAMMA;
    let y0 = (log_term * j0 - y0_tail) * (2.0 / PI);
    // Y1 = -2/(pi z) + (2/pi) ln(z/2) J1 - (z/2)/pi * sum (psi(m+1)+psi(m+2)) q^m/(m!(m+1)!)
    // with psi(m+1) + psi(m+2) = -2 gamma + H_m + H_{m+1}.
    let y1 = -2.0 / (PI * z) + half.ln() * j1 * (2.0 / PI) - half / PI * (y1_tail - c(2.0 * EULER_GAMMA) * (j1 / half));
    (j0, j1, y0, y1)
}

/// Hankel asymptotic expansion of `H^(1)_order(z)` for `|z|` large, `Im z >= 0`.
fn hankel_asymptotic(order: u32, z: Complex64) -> Complex64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = c(1.0);
    let mut sum = c(1.0);
    let mut last = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * I * ((mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0)) / z;
        if next.norm() >= last || next.norm() < 1e-18 {
            if next.norm() < last {
                sum += next;
            }
            break;
        }
        last = next.norm();
        term = next;
        sum += term;
    }
    let phase = z - (order as f64 * FRAC_PI_2 + FRAC_PI_4);
    (c(2.0) / (PI * z)).sqrt() * (I * phase).exp() * sum
}

/// Asymptotic `(J, Y)` of a real argument; `J = Re H`, `Y = Im H`.
fn real_asymptotic(order: u32, x: f64) -> (f64, f64) {
    let h = hankel_asymptotic(order, c(x));
    (h.re, h.im)
}

fn real_pair(x: f64) -> (f64, f64, f64, f64) {
    if x <= SERIES_LIMIT {
        let (j0, j1, y0, y1) = bessel_series(c(x));
        (j0.re, j1.re, y0.re, y1.re)
    } else {
        let (j0, y0) = real_asymptotic(0, x);
        let (j1, y1) = real_asymptotic(1, x);
        (j0, j1, y0, y1)
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    if x < 0.0 {
        return bessel_j0(-x);
    }
    if x == 0.0 {
        return 1.0;
    }
    real_pair(x).0
}

pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    real_pair(x).1
}

pub fn bessel_y0(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("Y0 needs a positive argument, got {x}")));
    }
    Ok(real_pair(x).2)
}

pub fn bessel_y1(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("Y1 needs a positive argument, got {x}")));
    }
    Ok(real_pair(x).3)
}

/// `H^(1)_order(x)` for real `x > 0` and order 0 or 1.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    if order > 1 {
        return Err(Error::Domain(format!("Hankel order {order} not supported")));
    }
    if x <= 0.0 {
        return Err(Error::Domain(format!("Hankel function needs x > 0, got {x}")));
    }
    Ok(hankel_pair(c(x))[order as usize])
}

/// `[H^(1)_0(z), H^(1)_1(z)]` for `z` in the closed upper half plane, `z != 0`.
pub fn hankel_pair(z: Complex64) -> [Complex64; 2] {
    if z.norm() <= SERIES_LIMIT {
        let (j0, j1, y0, y1) = bessel_series(z);
        [j0 + I * y0, j1 + I * y1]
    } else {
        [hankel_asymptotic(0, z), hankel_asymptotic(1, z)]
    }
}

/// `(J0(z), J1(z))`; complex arguments must lie in the series domain.
pub fn bessel_j_pair(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() <= SERIES_LIMIT {
        let (j0, j1, _, _) = bessel_series(z);
        (j0, j1)
    } else {
        let [h0, h1] = hankel_pair(z);
        (c(h0.re), c(h1.re))
    }
}

/// The constant `c_k = 1 + i (2/pi)(ln(k/2) + gamma)` of the small-argument expansion.
pub fn c_k(k: Complex64) -> Complex64 {
    c(1.0) + I * (2.0 / PI) * ((k * 0.5).ln() + EULER_GAMMA)
}

/// The wavenumber-independent constant of the `k^2 r^2` term,
/// `gamma - 1 - ln 2 - i pi/2`.
pub fn tau_k() -> Complex64 {
    Complex64::new(EULER_GAMMA - 1.0 - LN_2, -FRAC_PI_2)
}

/// Four-term small-`k` expansion of `H^(1)_0(k r)`.
pub fn hankel_smallk(k: Complex64, r: f64) -> Complex64 {
    let k2 = k * k;
    c_k(k) + I * (2.0 / PI) * r.ln()
        - I / (2.0 * PI) * k2 * k.ln() * r * r
        - I / (2.0 * PI) * k2 * r * r * (r.ln() + tau_k())
}

/// Fundamental solution `G_k(x) = -(i/4) H^(1)_0(k|x|)`, or `ln|x| / (2 pi)` for `k = 0`.
pub fn fundamental(k: Complex64, x: &Point) -> Complex64 {
    let r = x.norm();
    if k == c(0.0) {
        return c(r.ln() / (2.0 * PI));
    }
    -0.25 * I * hankel_pair(k * r)[0]
}

/// Gradient of the fundamental solution, `(i/4) k H^(1)_1(k|x|) x/|x|` or `x / (2 pi |x|^2)`.
pub fn fundamental_gradient(k: Complex64, x: &Point) -> [Complex64; 2] {
    let r = x.norm();
    let radial = radial_derivative(k, r);
    [radial * (x.x / r), radial * (x.y / r)]
}

/// `d/dr G_k(r)`.
pub fn radial_derivative(k: Complex64, r: f64) -> Complex64 {
    if k == c(0.0) {
        return c(1.0 / (2.0 * PI * r));
    }
    0.25 * I * k * hankel_pair(k * r)[1]
}

/// Check that a complex wavenumber stays inside the validated series domain
/// for a boundary of the given diameter.
pub fn check_wavenumber(k: Complex64, diameter: f64) -> Result<()> {
    if k.im < 0.0 {
        return Err(Error::Domain(format!("wavenumber {k} must have Im k >= 0")));
    }
    if k.im != 0.0 && k.norm() * diameter >= 1.0 {
        return Err(Error::Domain(format!(
            "complex wavenumber {k} with |k| * diameter = {:.3} >= 1 is outside the series domain",
            k.norm() * diameter
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent oracles: the integral representations
    // J0(x) = (1/pi) int_0^pi cos(x sin t) dt, J1(x) = (1/pi) int_0^pi cos(t - x sin t) dt,
    // summed with the trapezoid rule, which is spectrally accurate for these
    // periodic integrands.
    fn j_oracle(order: u32, x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.0;
        for k in 0..=n {
            let t = k as f64 * h;
            let f = (order as f64 * t - x * t.sin()).cos();
            s += if k == 0 || k == n { 0.5 * f } else { f };
        }
        s * h / PI
    }

    // Y0 by its log series, summed in a different order with compensated summation.
    fn y0_series_oracle(x: f64) -> f64 {
        let mut j0 = 0.0;
        let mut tail = 0.0;
        let mut comp = 0.0;
        let mut h = 0.0;
        let mut m = 0;
        loop {
            let mut fact = 1.0;
            for i in 1..=m {
                fact *= i as f64;
            }
            let t = (-x * x / 4.0f64).powi(m) / (fact * fact);
            j0 += t;
            if m >= 1 {
                h += 1.0 / m as f64;
                let y = t * h - comp;
                let s = tail + y;
                comp = (s - tail) - y;
                tail = s;
            }
            m += 1;
            if m > 60 {
                break;
            }
        }
        (2.0 / PI) * (((x / 2.0).ln() + EULER_GAMMA) * j0 - tail)
    }

    #[test]
    fn y0_and_hankel_reference_values() {
        let y = bessel_y0(0.1).unwrap();
        assert!((y - (-1.534_238_651_4)).abs() < 1e-10);
        assert!((y - y0_series_oracle(0.1)).abs() < 1e-14);
        let h = hankel1(0, 0.1).unwrap();
        assert!((h - Complex64::new(0.997_501_562_1, -1.534_238_651_4)).norm() < 1e-10);
    }

    #[test]
    fn j_matches_integral_oracle() {
        for &x in &[0.01, 0.5, 1.0, 3.7, 8.0, 11.9, 12.1, 15.0, 25.0, 40.0, 50.0] {
            assert!((bessel_j0(x) - j_oracle(0, x)).abs() < 1e-10, "J0({x})");
            assert!((bessel_j1(x) - j_oracle(1, x)).abs() < 1e-10, "J1({x})");
        }
    }

    #[test]
    fn y_rejects_nonpositive() {
        assert!(bessel_y0(0.0).is_err());
        assert!(bessel_y1(-1.0).is_err());
        assert!(hankel1(0, 0.0).is_err());
    }

    #[test]
    fn branches_agree_at_crossover() {
        for k in 0..=40 {
            let x = 10.0 + 0.1 * k as f64;
            let (a0, a1, b0, b1) = bessel_series(c(x));
            let (j0, y0) = real_asymptotic(0, x);
            let (j1, y1) = real_asymptotic(1, x);
            for (s, a) in [(a0.re, j0), (a1.re, j1), (b0.re, y0), (b1.re, y1)] {
                assert!((s - a).abs() < 1e-10, "x = {x}: {s} vs {a}");
            }
        }
    }

    #[test]
    fn fundamental_solution_reference() {
        let g = fundamental(c(0.1), &Point::new(1.0, 0.0));
        assert!((g - Complex64::new(-0.383_559_7, -0.249_375_4)).norm() < 1e-7);
        // Oracle value of 1 + i(2/pi)(ln 0.05 + gamma) from extended precision.
        let ck = c_k(c(0.1));
        assert!((ck - Complex64::new(1.0, -1.539_675_492_867_5)).norm() < 1e-12);
        assert!((hankel1(0, 0.01).unwrap() - c_k(c(0.01))).norm() < 1e-3);
    }

    #[test]
    fn hankel_truncation_slope_is_four() {
        let ks = [10f64.powf(-1.5), 10f64.powf(-2.0), 10f64.powf(-2.5)];
        let res: Vec<f64> = ks.iter().map(|&k| (hankel1(0, k).unwrap() - hankel_smallk(c(k), 1.0)).norm()).collect();
        let slope = crate::quadrature::log_log_slope(&ks, &res);
        assert!(slope >= 3.7, "slope {slope}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = c(0.7);
        let x = Point::new(0.6, -0.9);
        let g = fundamental_gradient(k, &x);
        let mut errs = vec![];
        let hs = [1e-2, 5e-3, 2.5e-3];
        for &h in &hs {
            let dx =
                (fundamental(k, &(x + Point::new(h, 0.0))) - fundamental(k, &(x - Point::new(h, 0.0)))) / (2.0 * h);
            let dy =
                (fundamental(k, &(x + Point::new(0.0, h))) - fundamental(k, &(x - Point::new(0.0, h)))) / (2.0 * h);
            errs.push(((dx - g[0]).norm_sqr() + (dy - g[1]).norm_sqr()).sqrt());
        }
        let slope = crate::quadrature::log_log_slope(&hs, &errs);
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn complex_series_is_consistent_with_real() {
        let (j0, _, y0, _) = bessel_series(Complex64::new(0.3, 1e-12));
        assert!((j0.re - bessel_j0(0.3)).abs() < 1e-12);
        assert!((y0.re - bessel_y0(0.3).unwrap()).abs() < 1e-10);
        assert!(check_wavenumber(Complex64::new(0.3, 0.1), 2.0).is_ok());
        assert!(check_wavenumber(Complex64::new(0.6, 0.1), 2.0).is_err());
        assert!(check_wavenumber(c(5.0), 2.0).is_ok());
    }

    proptest! {
        #[test]
        fn wronskian(x in 1e-3..50.0f64) {
            let w = bessel_j1(x) * bessel_y0(x).unwrap() - bessel_j0(x) * bessel_y1(x).unwrap();
            let exact = 2.0 / (PI * x);
            prop_assert!((w - exact).abs() < 1e-10 * exact.max(1.0), "x={} w={} exact={}", x, w, exact);
        }

        #[test]
        fn hankel_parts_are_bessel(x in 0.05..50.0f64) {
            let h = hankel1(1, x).unwrap();
            prop_assert!((h.re - bessel_j1(x)).abs() < 1e-14);
            prop_assert!((h.im - bessel_y1(x).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn derivative_identity(x in 0.2..30.0f64) {
            // J0' = -J1, checked by central differences.
            let h = 1e-4;
            let d = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            prop_assert!((d + bessel_j1(x)).abs() < 1e-7);
        }
    }
}
