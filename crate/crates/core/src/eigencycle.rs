//! Eigencycle sets: the six signed rotation amplitudes carried by a complex
//! eigenvector, their parameter-independent identities, the parameter sweep,
//! and the per-subspace ellipse geometry.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::spectral::{self, EigenPair};

/// The six 2-d subspaces of the 4-strategy state space, 0-based, in the
/// canonical order (1,2),(1,3),(1,4),(2,3),(2,4),(3,4).
pub const SUBSPACE_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Column labels matching [`SUBSPACE_PAIRS`], used in file headers.
pub const SUBSPACE_LABELS: [&str; 6] = ["12", "13", "14", "23", "24", "34"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    Raw,
    Unit,
}

/// The six signed eigencycle values of one eigenvector (or the matching
/// angular-momentum measurement of one series).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigencycleSet {
    pub values: [f64; 6],
    pub normalization: Normalization,
}

impl EigencycleSet {
    /// Euclidean-normalized copy; errors on the all-zero set.
    pub fn unit_normalized(&self) -> Result<EigencycleSet> {
        let norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateInput(
                "cannot normalize an all-zero eigencycle set".into(),
            ));
        }
        let mut values = self.values;
        for v in &mut values {
            *v /= norm;
        }
        Ok(EigencycleSet { values, normalization: Normalization::Unit })
    }
}

/// Signed rotation amplitude of one component pair:
/// pi * |eta_m| * |eta_n| * sin(arg eta_m - arg eta_n), evaluated in the
/// algebraically identical form pi * Im(eta_m * conj(eta_n)).
pub fn eigencycle_pair(eta_m: Complex64, eta_n: Complex64) -> f64 {
    std::f64::consts::PI * (eta_m * eta_n.conj()).im
}

/// The same quantity through amplitudes and phase angles; kept as the
/// cross-check oracle for [`eigencycle_pair`].
pub fn eigencycle_pair_trig(eta_m: Complex64, eta_n: Complex64) -> f64 {
    std::f64::consts::PI * eta_m.norm() * eta_n.norm() * (eta_m.arg() - eta_n.arg()).sin()
}

/// All six eigencycle values of an eigenvector, in canonical pair order.
pub fn eigencycle_set(v: &Vector4<Complex64>) -> EigencycleSet {
    let mut values = [0.0; 6];
    for (k, &(m, n)) in SUBSPACE_PAIRS.iter().enumerate() {
        values[k] = eigencycle_pair(v[m], v[n]);
    }
    EigencycleSet { values, normalization: Normalization::Raw }
}

/// Residuals of the three parameter-independent identities of the cyclic
/// family's rotating mode: (sigma24, sigma14 + sigma34, sigma12 - sigma23).
/// All three vanish for theory sets.
pub fn invariant_identities(e: &EigencycleSet) -> [f64; 3] {
    let [s12, _s13, s14, s23, s24, s34] = e.values;
    [s24, s14 + s34, s12 - s23]
}

/// Unit-normalized eigencycle set of the rotating mode for each parameter.
pub fn sweep_a(a_values: &[f64]) -> Result<Vec<(f64, EigencycleSet)>> {
    a_values
        .iter()
        .map(|&a| {
            let g = GameSpec::new(a)?;
            let j = spectral::analytic_jacobian_replicator(&g)?;
            let s = spectral::eigen_decompose_tagged(&j, spectral::SpectrumSource::Analytic)?;
            let mode = spectral::principal_complex_mode(&s)?;
            Ok((a, eigencycle_set(&mode.vector).unit_normalized()?))
        })
        .collect()
}

/// Closed parametric curve traced by one subspace projection of the
/// eigen mode, plus its orientation and enclosed signed area.
#[derive(Debug, Clone, Serialize)]
pub struct SubspaceEllipse {
    /// 0-based component pair (m, n).
    pub pair: (usize, usize),
    /// Vertices of (Re(e^{i theta} eta_m), Re(e^{i theta} eta_n)) over one turn.
    pub vertices: Vec<[f64; 2]>,
    /// +1 counter-clockwise, -1 clockwise, 0 degenerate.
    pub orientation: i8,
    /// The eigencycle value; equals the enclosed signed area of the curve.
    pub sigma: f64,
}

/// Per-subspace ellipse descriptors of a rotating eigen mode. A cycle whose
/// area is negligible against the largest one counts as degenerate.
pub fn lissajous_geometry(mode: &EigenPair, n_vertices: usize) -> Vec<SubspaceEllipse> {
    let v = &mode.vector;
    let set = eigencycle_set(v);
    let scale = set.values.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    SUBSPACE_PAIRS
        .iter()
        .zip(set.values)
        .map(|(&(m, n), sigma)| {
            let vertices = (0..n_vertices)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n_vertices as f64;
                    let rot = Complex64::from_polar(1.0, theta);
                    [(rot * v[m]).re, (rot * v[n]).re]
                })
                .collect();
            let orientation = if sigma.abs() <= 1e-10 * scale {
                0
            } else if sigma > 0.0 {
                1
            } else {
                -1
            };
            SubspaceEllipse { pair: (m, n), vertices, orientation, sigma }
        })
        .collect()
}

/// Shoelace signed area of a closed polygon.
pub fn shoelace_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}
