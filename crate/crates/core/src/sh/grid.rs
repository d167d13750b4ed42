use std::f64::consts::PI;

use super::special::legendre_unchecked;
use super::SphericalAngle;
use crate::error::{Error, Result};

/// Sample points on the sphere, optionally with quadrature weights.
///
/// Equiangular grids also record their `(n_theta, n_phi)` layout, with point
/// `i * n_phi + j` at elevation row `i` and azimuth column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub points: Vec<SphericalAngle>,
    pub weights: Option<Vec<f64>>,
    pub layout: Option<(usize, usize)>,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Equiangular grid with cell-centred elevations `(i + ½)Δθ` and azimuths
/// `jΔφ`. Neither pole is sampled, so no point is duplicated.
///
/// A resolution that does not divide 180° is rounded to the nearest step that
/// does.
pub fn make_grid(resolution_deg: f64) -> Result<SphereGrid> {
    if !(resolution_deg > 0.0) || !resolution_deg.is_finite() {
        return Err(Error::Domain(format!(
            "grid resolution must be positive, got {resolution_deg}"
        )));
    }
    let n_theta = ((180.0 / resolution_deg).round() as usize).max(1);
    let n_phi = 2 * n_theta;
    let step = PI / n_theta as f64;
    let mut points = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * step;
        for j in 0..n_phi {
            points.push(SphericalAngle {
                theta,
                phi: j as f64 * step,
            });
        }
    }
    Ok(SphereGrid {
        points,
        weights: None,
        layout: Some((n_theta, n_phi)),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let p = legendre_unchecked(k, x);
            let pm1 = legendre_unchecked(k - 1, x);
            let dp = k as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let p = legendre_unchecked(k, x);
        let pm1 = legendre_unchecked(k - 1, x);
        let dp = k as f64 * (x * p - pm1) / (x * x - 1.0);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Gauss–Legendre × uniform-azimuth product grid that integrates exactly any
/// band-limited function of total SH order up to `order` (e.g. `Y_n^m Y_{n'}^{m'}*`
/// with `n + n' ≤ order`). Weights sum to 4π.
pub fn make_quadrature_grid(order: usize) -> Result<SphereGrid> {
    let k = order / 2 + 1;
    let n_phi = order + 1;
    let (nodes, gl_weights) = gauss_legendre(k);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut points = Vec::with_capacity(k * n_phi);
    let mut weights = Vec::with_capacity(k * n_phi);
    for (x, w) in nodes.iter().zip(&gl_weights) {
        for j in 0..n_phi {
            points.push(SphericalAngle {
                theta: x.clamp(-1.0, 1.0).acos(),
                phi: j as f64 * dphi,
            });
            weights.push(w * dphi);
        }
    }
    Ok(SphereGrid {
        points,
        weights: Some(weights),
        layout: Some((k, n_phi)),
    })
}
