//! Cyclic-structure estimators for time series: per-subspace angular
//! momentum and the 3-d rotation axis.
//!
//! The angular momentum over a subspace (m, n) is the transition-averaged
//! 2-d cross product (x(t) - O) x (x(t+1) - x(t)), i.e. twice the mean
//! signed area of the triangles swept around the origin O. The rotation
//! axis applies the same discrete sum to the 3-d series obtained by
//! dropping x4 and ordering the remaining coordinates (x1, x3, x2).

use nalgebra::Vector4;
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::eigencycle::SUBSPACE_PAIRS;
use crate::error::{Error, Result};

/// All six angular momenta of one series, in canonical pair order.
#[derive(Debug, Clone, Serialize)]
pub struct AngularMomentumSet {
    pub values: [f64; 6],
    /// The reference point O the momenta were measured around.
    pub origin: [f64; 4],
    pub n_samples: usize,
}

/// Rotation-axis components in (x1, x3, x2) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisVector(pub [f64; 3]);

impl AxisVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cosine similarity with another axis; errors on zero-length input.
    pub fn cosine(&self, other: &AxisVector) -> Result<f64> {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return Err(Error::DegenerateInput("cosine of a zero axis vector".into()));
        }
        let dot: f64 = self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum();
        Ok(dot / denom)
    }
}

fn check_series(series: &Trajectory) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "angular momentum needs at least 2 samples, got {}",
            series.len()
        )));
    }
    Ok(())
}

/// Mean angular momentum of the series in the (x_m, x_n) subspace around
/// `origin`. Strategy indices are 1-based, m < n.
pub fn angular_momentum(
    series: &Trajectory,
    origin: &Vector4<f64>,
    m: usize,
    n: usize,
) -> Result<f64> {
    if !(1..=4).contains(&m) || !(1..=4).contains(&n) || m >= n {
        return Err(Error::InvalidParameter(format!(
            "subspace indices must satisfy 1 <= m < n <= 4, got ({m}, {n})"
        )));
    }
    check_series(series)?;
    Ok(momentum_unchecked(&series.samples, origin, m - 1, n - 1))
}

fn momentum_unchecked(samples: &[Vector4<f64>], origin: &Vector4<f64>, m: usize, n: usize) -> f64 {
    let mut acc = 0.0;
    for w in samples.windows(2) {
        let pm = w[0][m] - origin[m];
        let pn = w[0][n] - origin[n];
        let dm = w[1][m] - w[0][m];
        let dn = w[1][n] - w[0][n];
        acc += pm * dn - pn * dm;
    }
    acc / (samples.len() - 1) as f64
}

/// All six subspace momenta measured with the same origin.
pub fn angular_momentum_set(series: &Trajectory, origin: &Vector4<f64>) -> Result<AngularMomentumSet> {
    check_series(series)?;
    let mut values = [0.0; 6];
    for (k, &(m, n)) in SUBSPACE_PAIRS.iter().enumerate() {
        values[k] = momentum_unchecked(&series.samples, origin, m, n);
    }
    Ok(AngularMomentumSet {
        values,
        origin: [origin[0], origin[1], origin[2], origin[3]],
        n_samples: series.len(),
    })
}

/// Mean 3-d angular momentum after dropping x4 and reordering coordinates to
/// (x1, x3, x2). Each component equals the pairwise angular momentum of one
/// coordinate pair: (-L23, -L12, L13).
pub fn rotation_axis(series: &Trajectory, origin: &Vector4<f64>) -> Result<AxisVector> {
    check_series(series)?;
    // reordered axes: x = x1, y = x3, z = x2
    const X: usize = 0;
    const Y: usize = 2;
    const Z: usize = 1;
    let mut acc = [0.0; 3];
    for w in series.samples.windows(2) {
        let p = [w[0][X] - origin[X], w[0][Y] - origin[Y], w[0][Z] - origin[Z]];
        let d = [w[1][X] - w[0][X], w[1][Y] - w[0][Y], w[1][Z] - w[0][Z]];
        acc[0] += p[1] * d[2] - p[2] * d[1];
        acc[1] += p[2] * d[0] - p[0] * d[2];
        acc[2] += p[0] * d[1] - p[1] * d[0];
    }
    let denom = (series.len() - 1) as f64;
    Ok(AxisVector([acc[0] / denom, acc[1] / denom, acc[2] / denom]))
}

/// Default perturbation scale for theory-side orbit measurements.
pub const LINEARIZATION_SCALE: f64 = 1e-5;

/// Axis direction of a rotating mode, measured on a linearized orbit at
/// perturbation [`LINEARIZATION_SCALE`] over three rotation periods. The
/// sign then reflects the actual sense of rotation rather than an arbitrary
/// conjugate choice.
pub fn linearized_axis(s: &crate::spectral::Spectrum) -> Result<(AxisVector, usize)> {
    let orbit = linearized_mode_orbit(s, LINEARIZATION_SCALE, 3.0, 1000)?;
    let axis = rotation_axis(&orbit, &Vector4::zeros())?;
    Ok((axis, orbit.len()))
}

/// Tangent-space orbit of the principal mode: `periods` rotation periods
/// sampled `per_period` times each, starting on the real part of the
/// eigenvector at the given amplitude.
pub fn linearized_mode_orbit(
    s: &crate::spectral::Spectrum,
    amplitude: f64,
    periods: f64,
    per_period: usize,
) -> Result<Trajectory> {
    let mode = crate::spectral::principal_complex_mode(s)?;
    let re: Vector4<f64> = mode.vector.map(|c| c.re);
    let norm = re.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("rotating mode has a zero real part".into()));
    }
    let offset = re / norm * amplitude;
    let period = 2.0 * std::f64::consts::PI / mode.value.im;
    let dt = period / per_period as f64;
    let n = (periods * per_period as f64).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    crate::spectral::linearized_trajectory(s, &offset, &grid)
}
