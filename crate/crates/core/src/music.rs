//! Subspace decomposition and MUSIC direction-of-arrival estimation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sh::{sh_channels, steering_vector, SphereGrid, SphericalAngle};
use crate::smoothing::CrossSpectrum;

/// Largest tolerated `‖S - Sᴴ‖_F / ‖S‖_F` on eigendecomposition input.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Eigenvalues below `λ₁` times this are treated as numerically zero when
/// looking for the largest log-gap.
pub const EIGEN_NUMERIC_FLOOR: f64 = 1e-14;
pub const DEFAULT_MIN_SEPARATION_DEG: f64 = 5.0;
/// Upper bound on pseudo-spectrum values (exact-zero denominators).
pub const DEFAULT_SPECTRUM_CAP: f64 = 1e300;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `k` pairs with `values[k]`.
    pub vectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let psi = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|v| Complex64::new(*v, 0.0)),
        ));
        &self.vectors * psi * self.vectors.adjoint()
    }

    /// Eigenvalues in dB relative to the largest; zeros map to `-inf`.
    pub fn values_db(&self) -> Vec<f64> {
        let top = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().map(|v| 10.0 * (v / top).log10()).collect()
    }

    /// Count of eigenvalues with `λ_k / λ₁ > threshold`.
    pub fn dominant_count(&self, threshold: f64) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.values.iter().filter(|v| **v / top > threshold).count()
    }
}

/// Eigendecomposition of a Hermitian matrix, values descending. Slightly
/// negative values (above `-1e-10 · trace`) are clipped to zero.
pub fn hermitian_eig(s: &CrossSpectrum) -> Result<EigenDecomposition> {
    hermitian_eig_matrix(&s.mat)
}

pub fn hermitian_eig_matrix(m: &DMatrix<Complex64>) -> Result<EigenDecomposition> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "eigendecomposition of {:?} matrix",
            m.shape()
        )));
    }
    let norm = m.norm();
    let asym = if norm > 0.0 {
        (m - m.adjoint()).norm() / norm
    } else {
        0.0
    };
    if !(asym <= HERMITIAN_TOLERANCE) {
        return Err(Error::NotHermitian(asym));
    }
    let sym = (m + m.adjoint()).unscale(2.0);
    let trace = sym.trace().re.abs();
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let values = order
        .iter()
        .map(|i| {
            let v = eig.eigenvalues[*i];
            if v < 0.0 && v >= -1e-10 * trace {
                0.0
            } else {
                v
            }
        })
        .collect();
    let mut vectors = DMatrix::zeros(m.nrows(), m.ncols());
    for (dst, src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(*src));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Noise subspace: eigenvectors `L+1 … dim`.
pub fn split_subspaces(eig: &EigenDecomposition, signals: usize) -> Result<DMatrix<Complex64>> {
    let dim = eig.dim();
    if signals == 0 || signals >= dim {
        return Err(Error::NoNoiseSubspace { signals, dim });
    }
    Ok(eig.vectors.columns(signals, dim - signals).into_owned())
}

/// Signal subspace: eigenvectors `1 … L`.
pub fn signal_subspace(eig: &EigenDecomposition, signals: usize) -> Result<DMatrix<Complex64>> {
    if signals == 0 || signals > eig.dim() {
        return Err(Error::Domain(format!("{signals} signals in dimension {}", eig.dim())));
    }
    Ok(eig.vectors.columns(0, signals).into_owned())
}

/// Position of the largest `log λ_k - log λ_{k+1}` gap, as a count (`k`);
/// ties go to the smaller count. Values are floored at
/// `EIGEN_NUMERIC_FLOOR · λ₁` first.
pub fn estimate_signal_count(eig: &EigenDecomposition) -> Result<usize> {
    if eig.dim() < 2 {
        return Err(Error::Dimension("signal count needs at least two eigenvalues".into()));
    }
    let top = eig.values[0];
    if !(top > 0.0) {
        return Err(Error::Domain("largest eigenvalue is not positive".into()));
    }
    let floor = top * EIGEN_NUMERIC_FLOOR;
    let logs: Vec<f64> = eig.values.iter().map(|v| v.max(floor).log10()).collect();
    let mut best = (1usize, f64::NEG_INFINITY);
    for k in 0..logs.len() - 1 {
        let gap = logs[k] - logs[k + 1];
        if gap > best.1 {
            best = (k + 1, gap);
        }
    }
    Ok(best.0)
}

/// Gridded MUSIC pseudo-spectrum, linear scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicSpectrum {
    pub grid: SphereGrid,
    pub values: Vec<f64>,
}

impl MusicSpectrum {
    pub fn peak_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    /// CSV `theta_deg,phi_deg,value_db`, dB relative to the peak.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["theta_deg", "phi_deg", "value_db"]).map_err(io)?;
        let peak = self.peak_value();
        for (p, v) in self.grid.points.iter().zip(&self.values) {
            w.write_record(&[
                format!("{:.6}", p.theta_deg()),
                format!("{:.6}", p.phi_deg()),
                format!("{:.6}", 10.0 * (v / peak).log10()),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `‖U_nᴴ yᴴ(θ)‖²` at a direction, with `yᴴ(θ)` taken as a column.
pub fn music_denominator(noise: &DMatrix<Complex64>, dir: &SphericalAngle, order: usize) -> f64 {
    let v = steering_vector(dir, order).coeffs.map(|c| c.conj());
    (noise.adjoint() * v).norm_squared()
}

/// `P(θ) = 1 / ‖U_nᴴ yᴴ(θ)‖²` on every grid point, capped at `cap`.
pub fn music_spectrum(noise: &DMatrix<Complex64>, grid: &SphereGrid, order: usize, cap: f64) -> Result<MusicSpectrum> {
    if noise.nrows() != sh_channels(order) {
        return Err(Error::Dimension(format!(
            "noise subspace has {} rows, order {order} needs {}",
            noise.nrows(),
            sh_channels(order)
        )));
    }
    if noise.ncols() == 0 {
        return Err(Error::Empty("noise subspace"));
    }
    let values = grid
        .points
        .iter()
        .map(|p| {
            let den = music_denominator(noise, p, order);
            if den * cap <= 1.0 {
                cap
            } else {
                1.0 / den
            }
        })
        .collect();
    Ok(MusicSpectrum {
        grid: grid.clone(),
        values,
    })
}

/// Extracted peaks, in descending spectrum value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DoaEstimate {
    pub directions: Vec<SphericalAngle>,
    pub peak_values: Vec<f64>,
}

/// Local maxima over 8 neighbours in `(θ, φ)` index space (φ wraps), greedily
/// kept in descending value while at least `min_separation_deg` from every
/// kept peak. Fails with the partial result when fewer than `count` survive.
pub fn find_peaks(spec: &MusicSpectrum, count: usize, min_separation_deg: f64) -> Result<DoaEstimate> {
    let (n_theta, n_phi) = spec
        .grid
        .layout
        .ok_or_else(|| Error::Domain("peak search needs a regular θ-φ grid".into()))?;
    let at = |i: usize, j: usize| spec.values[i * n_phi + j];
    let mut candidates = Vec::new();
    for i in 0..n_theta {
        for j in 0..n_phi {
            let v = at(i, j);
            let mut is_max = true;
            'nb: for di in [-1i64, 0, 1] {
                let ii = i as i64 + di;
                if ii < 0 || ii >= n_theta as i64 {
                    continue;
                }
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(n_phi as i64) as usize;
                    if at(ii as usize, jj) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push(i * n_phi + j);
            }
        }
    }
    candidates.sort_by(|a, b| spec.values[*b].total_cmp(&spec.values[*a]).then(a.cmp(b)));
    let mut est = DoaEstimate::default();
    for idx in candidates {
        if est.directions.len() == count {
            break;
        }
        let p = spec.grid.points[idx];
        if est
            .directions
            .iter()
            .all(|q| great_circle_error(q, &p) >= min_separation_deg)
        {
            est.directions.push(p);
            est.peak_values.push(spec.values[idx]);
        }
    }
    if est.directions.len() < count {
        return Err(Error::PeakDeficit {
            found: est.directions.len(),
            requested: count,
            partial: est,
        });
    }
    Ok(est)
}

/// Angle between two directions in degrees, `[0, 180]`.
pub fn great_circle_error(a: &SphericalAngle, b: &SphericalAngle) -> f64 {
    let u = a.to_unit();
    let v = b.to_unit();
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    cn.atan2(dot).to_degrees()
}

/// Assignment of estimates to ground-truth directions minimizing the summed
/// great-circle error. Returns, per truth direction, the matched estimate
/// index and error (`None` where estimates ran out).
pub fn match_to_truth(estimates: &[SphericalAngle], truth: &[SphericalAngle]) -> Vec<Option<(usize, f64)>> {
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| estimates.iter().map(|e| great_circle_error(t, e)).collect())
        .collect();
    let mut best: (f64, Vec<Option<usize>>) = (f64::INFINITY, vec![None; truth.len()]);
    let mut used = vec![false; estimates.len()];
    let mut current = vec![None; truth.len()];
    if truth.len() <= 8 && estimates.len() <= 10 {
        assign(0, 0.0, &cost, &mut used, &mut current, &mut best);
    } else {
        // greedy on globally smallest pairs
        let mut pairs: Vec<(usize, usize)> = (0..truth.len())
            .flat_map(|t| (0..estimates.len()).map(move |e| (t, e)))
            .collect();
        pairs.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
        for (t, e) in pairs {
            if best.1[t].is_none() && !used[e] {
                best.1[t] = Some(e);
                used[e] = true;
            }
        }
    }
    best.1
        .iter()
        .enumerate()
        .map(|(t, e)| e.map(|e| (e, cost[t][e])))
        .collect()
}

fn assign(
    t: usize,
    acc: f64,
    cost: &[Vec<f64>],
    used: &mut [bool],
    current: &mut [Option<usize>],
    best: &mut (f64, Vec<Option<usize>>),
) {
    if acc >= best.0 {
        return;
    }
    if t == cost.len() {
        *best = (acc, current.to_vec());
        return;
    }
    let free = used.iter().filter(|u| !**u).count();
    if free == 0 {
        // nothing left to match; unmatched truths cost 180
        let rest = (cost.len() - t) as f64 * 180.0;
        if acc + rest < best.0 {
            current[t..].iter_mut().for_each(|c| *c = None);
            *best = (acc + rest, current.to_vec());
        }
        return;
    }
    for e in 0..used.len() {
        if !used[e] {
            used[e] = true;
            current[t] = Some(e);
            assign(t + 1, acc + cost[t][e], cost, used, current, best);
            used[e] = false;
        }
    }
    current[t] = None;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaReportEntry {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub peak_value: f64,
    /// Index into the ground-truth list this estimate was matched to.
    pub truth_index: Option<usize>,
    pub error_deg: Option<f64>,
}

/// Per-estimate report with errors against matched ground truth.
pub fn doa_report(est: &DoaEstimate, truth: &[SphericalAngle]) -> Vec<DoaReportEntry> {
    let matches = match_to_truth(&est.directions, truth);
    est.directions
        .iter()
        .zip(&est.peak_values)
        .enumerate()
        .map(|(i, (d, v))| {
            let hit = matches
                .iter()
                .enumerate()
                .find_map(|(t, m)| m.filter(|(e, _)| *e == i).map(|(_, err)| (t, err)));
            DoaReportEntry {
                theta_deg: d.theta_deg(),
                phi_deg: d.phi_deg(),
                peak_value: *v,
                truth_index: hit.map(|h| h.0),
                error_deg: hit.map(|h| h.1),
            }
        })
        .collect()
}
