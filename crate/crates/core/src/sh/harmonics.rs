//! Complex orthonormal spherical harmonics (Condon–Shortley phase) and
//! steering vectors in the `(0,0), (1,-1), (1,0), (1,1), ...` channel order.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use super::SphericalAngle;
use crate::error::{Error, Result};

/// Flat channel index of `(n, m)`: `n² + n + m`.
#[inline]
pub fn sh_index(n: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= n);
    ((n * n + n) as i64 + m) as usize
}

/// Number of channels for a given order, `(N+1)²`.
#[inline]
pub fn sh_channels(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// SH order of the channel at flat index `idx`.
#[inline]
pub fn sh_order_of(idx: usize) -> usize {
    (idx as f64).sqrt() as usize
}

/// Fully normalized associated Legendre values `P̄_n^m(cos θ)` for
/// `0 ≤ m ≤ n ≤ order`, stored at `n(n+1)/2 + m`. Includes the Condon–Shortley
/// phase and the `1/√(4π)` factor so that `Y_n^m = P̄_n^m e^{imφ}`.
fn normalized_legendre(order: usize, theta: f64) -> Vec<f64> {
    let (s, x) = theta.sin_cos();
    let tri = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut p = vec![0.0; tri(order, order) + 1];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=order {
        if m > 0 {
            let mf = m as f64;
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        p[tri(m, m)] = pmm;
        if m < order {
            p[tri(m + 1, m)] = x * (2.0 * m as f64 + 3.0).sqrt() * pmm;
        }
        for n in (m + 2)..=order {
            let nf = n as f64;
            let mf = m as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let n1 = nf - 1.0;
            let a_prev = ((4.0 * n1 * n1 - 1.0) / (n1 * n1 - mf * mf)).sqrt();
            p[tri(n, m)] = a * (x * p[tri(n - 1, m)] - p[tri(n - 2, m)] / a_prev);
        }
    }
    p
}

/// `Y_n^m(θ, φ)`.
pub fn sph_harmonic(n: usize, m: i64, dir: &SphericalAngle) -> Result<Complex64> {
    if m.unsigned_abs() as usize > n {
        return Err(Error::Domain(format!("|m| = {} exceeds n = {n}", m.abs())));
    }
    let p = normalized_legendre(n, dir.theta);
    let ma = m.unsigned_abs() as usize;
    let pos = Complex64::from_polar(p[n * (n + 1) / 2 + ma], ma as f64 * dir.phi);
    Ok(if m >= 0 {
        pos
    } else if ma.is_multiple_of(2) {
        pos.conj()
    } else {
        -pos.conj()
    })
}

/// SH-basis evaluation of a direction, `y(dir)`, up to a given order.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub order: usize,
    pub coeffs: DVector<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, n: usize, m: i64) -> Complex64 {
        self.coeffs[sh_index(n, m)]
    }
}

pub fn steering_vector(dir: &SphericalAngle, order: usize) -> SteeringVector {
    let p = normalized_legendre(order, dir.theta);
    let mut coeffs = DVector::zeros(sh_channels(order));
    for n in 0..=order {
        for ma in 0..=n {
            let v = Complex64::from_polar(p[n * (n + 1) / 2 + ma], ma as f64 * dir.phi);
            coeffs[sh_index(n, ma as i64)] = v;
            if ma > 0 {
                let sign = if ma % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[sh_index(n, -(ma as i64))] = v.conj() * sign;
            }
        }
    }
    SteeringVector { order, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh::grid::make_quadrature_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dirs(count: usize, seed: u64) -> Vec<SphericalAngle> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                SphericalAngle::new(z.acos(), rng.random_range(0.0..2.0 * PI)).unwrap()
            })
            .collect()
    }

    #[test]
    fn index_layout() {
        assert_eq!(sh_index(0, 0), 0);
        assert_eq!(sh_index(1, -1), 1);
        assert_eq!(sh_index(1, 1), 3);
        assert_eq!(sh_index(3, 3), 15);
        for idx in 0..36 {
            let n = sh_order_of(idx);
            assert!(n * n <= idx && idx < (n + 1) * (n + 1));
        }
    }

    #[test]
    fn low_order_values() {
        let d = SphericalAngle::new(0.7, 2.1).unwrap();
        let y00 = sph_harmonic(0, 0, &d).unwrap();
        assert!((y00.re - 0.282_094_791_773_878_14).abs() < 1e-15);
        let north = SphericalAngle::new(0.0, 0.0).unwrap();
        let y10 = sph_harmonic(1, 0, &north).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((y10.re - 0.488_602_5).abs() < 1e-7);
        // Y_1^1 = -sqrt(3/8pi) sin θ e^{iφ}
        let y11 = sph_harmonic(1, 1, &d).unwrap();
        let expect = -(3.0 / (8.0 * PI)).sqrt() * 0.7f64.sin() * Complex64::from_polar(1.0, 2.1);
        assert!((y11 - expect).norm() < 1e-15);
        // Y_2^0 = sqrt(5/16pi)(3cos²θ - 1)
        let y20 = sph_harmonic(2, 0, &d).unwrap();
        let c = 0.7f64.cos();
        assert!((y20.re - (5.0 / (16.0 * PI)).sqrt() * (3.0 * c * c - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_degree_beyond_order() {
        let d = SphericalAngle::new(1.0, 1.0).unwrap();
        assert!(sph_harmonic(2, 3, &d).is_err());
        assert!(sph_harmonic(2, -3, &d).is_err());
    }

    #[test]
    fn conjugation_symmetry() {
        for d in random_dirs(100, 7) {
            for n in 0..=4usize {
                for m in 0..=(n as i64) {
                    let pos = sph_harmonic(n, m, &d).unwrap();
                    let neg = sph_harmonic(n, -m, &d).unwrap();
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((neg - pos.conj() * sign).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn steering_vector_matches_pointwise() {
        for d in random_dirs(10, 3) {
            let y = steering_vector(&d, 4);
            assert_eq!(y.len(), 25);
            for n in 0..=4usize {
                for m in -(n as i64)..=(n as i64) {
                    assert!((y.get(n, m) - sph_harmonic(n, m, &d).unwrap()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn steering_vector_sizes() {
        let d = SphericalAngle::new(0.4, 0.2).unwrap();
        let y0 = steering_vector(&d, 0);
        assert_eq!(y0.len(), 1);
        assert!((y0.coeffs[0].re - 0.282_094_8).abs() < 1e-7);
        assert_eq!(steering_vector(&d, 3).len(), 16);
    }

    #[test]
    fn addition_theorem_norm() {
        for d in random_dirs(20, 11) {
            for order in 0..=6 {
                let y = steering_vector(&d, order);
                let expect: f64 = (0..=order).map(|n| (2 * n + 1) as f64).sum::<f64>() / (4.0 * PI);
                assert!((y.coeffs.norm_squared() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormality_under_quadrature() {
        let order = 4;
        let grid = make_quadrature_grid(2 * order).unwrap();
        let weights = grid.weights.as_ref().unwrap();
        let dim = sh_channels(order);
        let mut gram = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for (p, w) in grid.points.iter().zip(weights) {
            let y = steering_vector(p, order);
            for i in 0..dim {
                for j in 0..dim {
                    gram[(i, j)] += y.coeffs[i] * y.coeffs[j].conj() * *w;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        assert!(worst < 1e-10, "orthonormality error {worst}");
    }
}
