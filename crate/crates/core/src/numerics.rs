//! Finite differences and composite Simpson quadrature on small fixed-size values.

use std::ops::{Add, Mul, Sub};

/// Anything we differentiate or integrate: scalars, `[f64; N]`, `Vector4`.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Linear for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Wrapper so arrays get vector-space operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arr<const N: usize>(pub [f64; N]);

impl<const N: usize> Add for Arr<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for i in 0..N {
            self.0[i] += o.0[i];
        }
        self
    }
}

impl<const N: usize> Sub for Arr<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for i in 0..N {
            self.0[i] -= o.0[i];
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Arr<N> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for v in self.0.iter_mut() {
            *v *= s;
        }
        self
    }
}

/// Fourth-order central first derivative at 0 of `g(t)`.
pub fn fd1_lin<T: Linear>(g: impl Fn(f64) -> T, h: f64) -> T {
    let (m2, m1, p1, p2) = (g(-2.0 * h), g(-h), g(h), g(2.0 * h));
    (m2 - p2 + (p1 - m1) * 8.0) * (1.0 / (12.0 * h))
}

/// Fourth-order central first derivative of an array-valued function.
pub fn fd1<const N: usize>(g: impl Fn(f64) -> [f64; N], h: f64) -> [f64; N] {
    fd1_lin(|t| Arr(g(t)), h).0
}

/// Fourth-order central first derivative of a scalar function.
pub fn fd1_scalar(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    fd1_lin(g, h)
}

/// Fourth-order central second derivative at 0 of `g(t)`.
pub fn fd2_scalar(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    let (m2, m1, c, p1, p2) = (g(-2.0 * h), g(-h), g(0.0), g(h), g(2.0 * h));
    (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h)
}

/// Composite Simpson rule for `∫_0^len g(t) dt` with `m` (even, ≥ 2) substeps.
pub fn simpson<T: Linear>(g: impl Fn(f64) -> T, len: f64, m: usize) -> T {
    assert!(m >= 2 && m % 2 == 0, "Simpson needs an even number of substeps ≥ 2");
    let h = len / m as f64;
    let mut acc = g(0.0) + g(len);
    for l in 1..m {
        let w = if l % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc + g(l as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sine of the angle between two vectors (0 when parallel or antiparallel).
pub fn sin_angle(a: &crate::lattice::V4, b: &crate::lattice::V4) -> f64 {
    // Norm of the part of â orthogonal to b̂; unlike √(1 − cos²) this keeps
    // full relative accuracy for nearly parallel vectors.
    let ua = a / a.norm();
    let ub = b / b.norm();
    (ua - ub * ua.dot(&ub)).norm().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd1_is_exact_on_quartics() {
        let d = fd1_scalar(|t| (1.0 + t).powi(4), 0.1);
        assert!((d - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fd2_is_exact_on_quintics() {
        let d = fd2_scalar(|t| (1.0 + t).powi(5), 0.1);
        assert!((d - 20.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|t: f64| t * t * t, 2.0, 2);
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0];
        let ys = [1.0, 0.25, 0.0625];
        assert!((loglog_slope(&xs, &ys) + 2.0).abs() < 1e-12);
    }
}
