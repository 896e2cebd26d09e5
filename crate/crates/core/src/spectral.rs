//! Jacobian construction and complex eigen analysis of the rest-point
//! linearization, plus eigen-mode trajectory reconstruction.
//!
//! Eigenvalues come from a Schur reduction of the 4x4 real matrix; the
//! matching eigenvectors are extracted as nullspaces of the shifted matrix
//! with full-pivot complex elimination, so repeated (semisimple) eigenvalues
//! get a full basis. Correctness is pinned by the residual bound
//! [`EIGEN_RESIDUAL_TOL`] rather than by the method.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{self, DynamicsModel, SampleSpace, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::game::{GameSpec, MatrixFamily, SimplexState};

/// Max allowed infinity norm of J*v - lambda*v per eigenpair.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Relative tolerance for clustering numerically equal eigenvalues.
const CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumSource {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit eigenvector with the largest-modulus component rotated to the
    /// positive real axis, which makes the decomposition reproducible.
    pub vector: Vector4<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// All four eigenpairs, ordered by descending imaginary part, then
    /// descending real part.
    pub pairs: Vec<EigenPair>,
    pub source: SpectrumSource,
    pub jacobian: Matrix4<f64>,
}

/// Closed-form Jacobian of the replicator field at the interior equilibrium
/// of the cyclic family.
pub fn analytic_jacobian_replicator(g: &GameSpec) -> Result<Matrix4<f64>> {
    let a = match g.family() {
        MatrixFamily::CyclicA { a } => a,
        MatrixFamily::General => {
            return Err(Error::UnsupportedGame(
                "analytic Jacobian applies only to the cyclic one-parameter family".into(),
            ))
        }
    };
    let c = a / ((3.0 * a + 1.0) * (3.0 * a + 1.0));
    Ok(Matrix4::new(
        -2.0 * a, -2.0 * a, -a - 1.0, 2.0 * a * a,
        a + 1.0, -2.0 * a, -a - 1.0, -a * (a + 1.0),
        -2.0 * a, a + 1.0, -a - 1.0, -a * (a + 1.0),
        -2.0, -2.0, 2.0, -a - 1.0,
    ) * c)
}

/// Central-difference Jacobian of a model's field at one of its rest points.
pub fn numeric_jacobian(
    model: DynamicsModel,
    g: &GameSpec,
    at: &SimplexState,
) -> Result<Matrix4<f64>> {
    const FIXED_POINT_RESIDUAL: f64 = 1e-8;
    const H: f64 = 1e-6;

    let f0 = dynamics::vector_field(model, g, at)?;
    if f0.amax() >= FIXED_POINT_RESIDUAL {
        return Err(Error::InvalidState(format!(
            "numeric Jacobian requires a rest point; field residual is {:.3e}",
            f0.amax()
        )));
    }
    let x0 = at.as_vector();
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let mut xp = *x0;
        let mut xm = *x0;
        xp[col] += H;
        xm[col] -= H;
        let fp = dynamics::field_raw(model, g, &xp)?;
        let fm = dynamics::field_raw(model, g, &xm)?;
        for row in 0..4 {
            j[(row, col)] = (fp[row] - fm[row]) / (2.0 * H);
        }
    }
    Ok(j)
}

/// Full complex eigen decomposition of a real 4x4 matrix.
pub fn eigen_decompose(j: &Matrix4<f64>) -> Result<Spectrum> {
    eigen_decompose_tagged(j, SpectrumSource::Numeric)
}

pub fn eigen_decompose_tagged(j: &Matrix4<f64>, source: SpectrumSource) -> Result<Spectrum> {
    if j.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = j.amax().max(1e-300);
    let values = j.complex_eigenvalues();
    let mut values: Vec<Complex64> = values.iter().cloned().collect();
    // deterministic order: descending Im, then descending Re
    values.sort_by(|x, y| {
        y.im.partial_cmp(&x.im).unwrap().then(y.re.partial_cmp(&x.re).unwrap())
    });

    // cluster numerically equal eigenvalues so semisimple repeats get their
    // whole eigenspace at once
    let jc = j.map(|v| Complex64::new(v, 0.0));
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(4);
    let mut i = 0;
    while i < values.len() {
        let mut k = i + 1;
        while k < values.len() && (values[k] - values[i]).norm() <= CLUSTER_TOL * scale {
            k += 1;
        }
        let cluster = &values[i..k];
        let lambda = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        let shifted = jc - Matrix4::identity().map(|v: Complex64| v * lambda);
        let basis = nullspace(&shifted, 1e-8 * scale);
        if basis.len() < cluster.len() {
            return Err(Error::EigenFailure(format!(
                "eigenvalue {lambda} has multiplicity {} but nullspace dimension {}; \
                 matrix is defective within tolerance",
                cluster.len(),
                basis.len()
            )));
        }
        for (offset, &value) in cluster.iter().enumerate() {
            pairs.push(EigenPair { value, vector: canonical_phase(basis[offset]) });
        }
        i = k;
    }

    let spectrum = Spectrum { pairs, source, jacobian: *j };
    for p in &spectrum.pairs {
        let r = residual(j, p);
        if r > EIGEN_RESIDUAL_TOL {
            return Err(Error::EigenFailure(format!(
                "residual {r:.3e} exceeds {EIGEN_RESIDUAL_TOL:.0e} for eigenvalue {}",
                p.value
            )));
        }
    }
    Ok(spectrum)
}

/// Infinity norm of J*v - lambda*v.
pub fn residual(j: &Matrix4<f64>, pair: &EigenPair) -> f64 {
    let jc = j.map(|v| Complex64::new(v, 0.0));
    let r = jc * pair.vector - pair.vector * pair.value;
    r.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Orthonormal nullspace basis of a complex 4x4 matrix via full-pivot
/// Gaussian elimination. `tol` separates true pivots from roundoff.
fn nullspace(m: &Matrix4<Complex64>, tol: f64) -> Vec<Vector4<Complex64>> {
    let mut a = *m;
    let mut col_perm = [0usize, 1, 2, 3];
    let mut rank = 0;

    for step in 0..4 {
        // full pivot search over the trailing submatrix
        let (mut pr, mut pc, mut best) = (step, step, 0.0);
        for r in step..4 {
            for c in step..4 {
                let mag = a[(r, c)].norm();
                if mag > best {
                    best = mag;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best <= tol {
            break;
        }
        a.swap_rows(step, pr);
        a.swap_columns(step, pc);
        col_perm.swap(step, pc);
        for r in (step + 1)..4 {
            let factor = a[(r, step)] / a[(step, step)];
            a[(r, step)] = Complex64::new(0.0, 0.0);
            for c in (step + 1)..4 {
                let sub = factor * a[(step, c)];
                a[(r, c)] -= sub;
            }
        }
        rank += 1;
    }

    // back-substitute one basis vector per free column
    let mut basis = Vec::with_capacity(4 - rank);
    for free in rank..4 {
        let mut y = [Complex64::new(0.0, 0.0); 4];
        y[free] = Complex64::new(1.0, 0.0);
        for row in (0..rank).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in (row + 1)..4 {
                acc += a[(row, c)] * y[c];
            }
            y[row] = -acc / a[(row, row)];
        }
        let mut v = Vector4::from_element(Complex64::new(0.0, 0.0));
        for (permuted, &original) in col_perm.iter().enumerate() {
            v[original] = y[permuted];
        }
        // orthogonalize against earlier basis vectors (repeated eigenvalues)
        for b in &basis {
            let proj = complex_dot(b, &v);
            v -= b * proj;
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            basis.push(v / Complex64::new(norm, 0.0));
        }
    }
    basis
}

fn complex_dot(a: &Vector4<Complex64>, b: &Vector4<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Rotates a unit vector so its largest-modulus component is real positive.
fn canonical_phase(mut v: Vector4<Complex64>) -> Vector4<Complex64> {
    let mut k = 0;
    for i in 1..4 {
        if v[i].norm() > v[k].norm() {
            k = i;
        }
    }
    let mag = v[k].norm();
    if mag > 0.0 {
        let phase = v[k].conj() / mag;
        v *= phase;
    }
    v
}

/// Rest point and spectrum of a model in one step: the analytic Jacobian for
/// the replicator on the cyclic family, central differences otherwise.
pub fn model_spectrum(
    model: DynamicsModel,
    g: &GameSpec,
    guess: &SimplexState,
) -> Result<(SimplexState, Spectrum)> {
    let rest = dynamics::fixed_point(model, g, guess)?;
    let spectrum = match (model, g.family()) {
        (DynamicsModel::Replicator, MatrixFamily::CyclicA { .. }) => {
            eigen_decompose_tagged(&analytic_jacobian_replicator(g)?, SpectrumSource::Analytic)?
        }
        _ => eigen_decompose_tagged(&numeric_jacobian(model, g, &rest)?, SpectrumSource::Numeric)?,
    };
    Ok((rest, spectrum))
}

/// The conjugate-pair member with positive imaginary eigenvalue part; ties
/// broken toward the largest imaginary magnitude.
pub fn principal_complex_mode(s: &Spectrum) -> Result<&EigenPair> {
    s.pairs
        .iter()
        .filter(|p| p.value.im > 0.0)
        .max_by(|x, y| x.value.im.abs().partial_cmp(&y.value.im.abs()).unwrap())
        .ok_or_else(|| {
            Error::NoCyclicMode("spectrum has no eigenvalue with positive imaginary part".into())
        })
}

/// Evolves a tangent-space offset under the linearized dynamics by expanding
/// it in the eigenbasis: x(t) = Re sum_i c_i exp(lambda_i t) v_i.
///
/// `t_grid` must be uniformly spaced with at least two points; the offset
/// must sum to zero (the simplex tangent condition).
pub fn linearized_trajectory(
    s: &Spectrum,
    x0_offset: &Vector4<f64>,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let scale = x0_offset.amax().max(1e-300);
    if x0_offset.sum().abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::InvalidState(format!(
            "offset {x0_offset:?} does not sum to zero; it leaves the simplex tangent space"
        )));
    }
    if t_grid.len() < 2 {
        return Err(Error::DegenerateInput("need at least two grid times".into()));
    }
    let dt = t_grid[1] - t_grid[0];
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter("time grid must be increasing".into()));
    }
    for w in t_grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidParameter("time grid must be uniformly spaced".into()));
        }
    }

    // expand the offset in the eigenbasis: solve V c = x0
    let mut v = Matrix4::from_element(Complex64::new(0.0, 0.0));
    for (col, p) in s.pairs.iter().enumerate() {
        v.set_column(col, &p.vector);
    }
    let rhs = x0_offset.map(|r| Complex64::new(r, 0.0));
    let coeffs = solve_complex(&v, &rhs).ok_or_else(|| {
        Error::EigenFailure("eigenvector matrix is singular; cannot expand offset".into())
    })?;

    let samples: Vec<Vector4<f64>> = t_grid
        .iter()
        .map(|&t| {
            let mut acc = Vector4::from_element(Complex64::new(0.0, 0.0));
            for (i, p) in s.pairs.iter().enumerate() {
                acc += p.vector * (coeffs[i] * (p.value * t).exp());
            }
            acc.map(|c| c.re)
        })
        .collect();

    Trajectory::new(
        samples,
        dt,
        t_grid[0],
        TrajectoryMeta {
            source: "linearized".into(),
            a: None,
            model: None,
            noise: None,
            seed: None,
            drift_renormalizations: 0,
            space: SampleSpace::Tangent,
        },
    )
}

/// Partial-pivot complex solve of a 4x4 system; returns None when singular.
fn solve_complex(m: &Matrix4<Complex64>, rhs: &Vector4<Complex64>) -> Option<Vector4<Complex64>> {
    let mut a = *m;
    let mut b = *rhs;
    for step in 0..4 {
        let mut pr = step;
        for r in (step + 1)..4 {
            if a[(r, step)].norm() > a[(pr, step)].norm() {
                pr = r;
            }
        }
        if a[(pr, step)].norm() < 1e-300 {
            return None;
        }
        a.swap_rows(step, pr);
        b.swap_rows(step, pr);
        for r in (step + 1)..4 {
            let factor = a[(r, step)] / a[(step, step)];
            for c in step..4 {
                let sub = factor * a[(step, c)];
                a[(r, c)] -= sub;
            }
            let sub = factor * b[step];
            b[r] -= sub;
        }
    }
    for row in (0..4).rev() {
        let mut acc = b[row];
        for c in (row + 1)..4 {
            acc -= a[(row, c)] * b[c];
        }
        b[row] = acc / a[(row, row)];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn game(a: f64) -> GameSpec {
        GameSpec::new(a).unwrap()
    }

    #[test]
    fn analytic_jacobian_elements() {
        let j = analytic_jacobian_replicator(&game(0.25)).unwrap();
        assert_abs_diff_eq!(j[(0, 0)], -0.25 * 0.5 / (1.75 * 1.75), epsilon = 1e-15);
        assert_abs_diff_eq!(j[(0, 0)], -0.0408163265306122, epsilon = 1e-15);

        let j = analytic_jacobian_replicator(&game(4.0)).unwrap();
        assert_abs_diff_eq!(j[(0, 3)], 128.0 / 169.0, epsilon = 1e-15);
    }

    #[test]
    fn analytic_jacobian_rejects_general_matrix() {
        let g = GameSpec::from_matrix(nalgebra::Matrix4::identity()).unwrap();
        assert!(analytic_jacobian_replicator(&g).is_err());
    }

    #[test]
    fn numeric_jacobian_matches_analytic() {
        for a in [0.1, 0.25, 0.7, 1.0, 2.0, 4.0, 9.0] {
            let g = game(a);
            let at = g.nash_equilibrium().unwrap();
            let jn = numeric_jacobian(DynamicsModel::Replicator, &g, &at).unwrap();
            let ja = analytic_jacobian_replicator(&g).unwrap();
            let err = (jn - ja).amax();
            assert!(err < 1e-6, "a={a}: max entry error {err:.3e}");
        }
    }

    #[test]
    fn numeric_jacobian_requires_rest_point() {
        let g = game(4.0);
        let s = SimplexState::new([0.5, 0.3, 0.1, 0.1]).unwrap();
        assert!(numeric_jacobian(DynamicsModel::Replicator, &g, &s).is_err());
    }

    #[test]
    fn vertex_jacobian_reflects_invasion_payoffs() {
        // a pure-strategy population is a rest point; each extinct strategy's
        // growth rate is its payoff against the resident
        let g = game(4.0);
        let vertex = SimplexState::vertex(0);
        let j = numeric_jacobian(DynamicsModel::Replicator, &g, &vertex).unwrap();
        assert_abs_diff_eq!(j[(1, 1)], 1.0, epsilon = 1e-6); // strategy 2 invades
        assert_abs_diff_eq!(j[(2, 2)], 0.0, epsilon = 1e-6); // neutral
        assert_abs_diff_eq!(j[(3, 3)], 0.0, epsilon = 1e-6);
        // extinct strategies only grow through themselves
        for row in 1..4 {
            for col in 0..4 {
                if col != row {
                    assert_abs_diff_eq!(j[(row, col)], 0.0, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_of_cyclic_family() {
        // spectrum is (-a/(3a+1)) * {i, -i, 1, 1}
        for a in [0.25, 4.0] {
            let w = a / (3.0 * a + 1.0);
            let s = eigen_decompose(&analytic_jacobian_replicator(&game(a)).unwrap()).unwrap();
            let got: Vec<Complex64> = s.pairs.iter().map(|p| p.value).collect();
            let want = [
                Complex64::new(0.0, w),
                Complex64::new(-w, 0.0),
                Complex64::new(-w, 0.0),
                Complex64::new(0.0, -w),
            ];
            for (g_, w_) in got.iter().zip(want.iter()) {
                assert!((g_ - w_).norm() < 1e-9, "a={a}: {got:?}");
            }
        }
    }

    #[test]
    fn eigenvalue_formula_across_log_spaced_parameters() {
        for k in 0..20 {
            let a = 10f64.powf(-1.0 + 2.0 * k as f64 / 19.0);
            let w = a / (3.0 * a + 1.0);
            let s = eigen_decompose(&analytic_jacobian_replicator(&game(a)).unwrap()).unwrap();
            assert!((s.pairs[0].value - Complex64::new(0.0, w)).norm() < 1e-9);
            assert!((s.pairs[1].value - Complex64::new(-w, 0.0)).norm() < 1e-9);
            assert!((s.pairs[2].value - Complex64::new(-w, 0.0)).norm() < 1e-9);
            assert!((s.pairs[3].value - Complex64::new(0.0, -w)).norm() < 1e-9);
        }
    }

    #[test]
    fn residuals_and_normalization() {
        for a in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let j = analytic_jacobian_replicator(&game(a)).unwrap();
            let s = eigen_decompose(&j).unwrap();
            assert_eq!(s.pairs.len(), 4);
            for p in &s.pairs {
                assert!(residual(&j, p) < EIGEN_RESIDUAL_TOL);
                let norm: f64 = p.vector.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
                // phase convention: largest-modulus component real positive
                let mut k = 0;
                for i in 1..4 {
                    if p.vector[i].norm() > p.vector[k].norm() {
                        k = i;
                    }
                }
                assert!(p.vector[k].im.abs() < 1e-12);
                assert!(p.vector[k].re > 0.0);
            }
        }
    }

    #[test]
    fn conjugation_closure() {
        let j = analytic_jacobian_replicator(&game(4.0)).unwrap();
        let s = eigen_decompose(&j).unwrap();
        let plus = &s.pairs[0];
        let minus = &s.pairs[3];
        assert!((plus.value.conj() - minus.value).norm() < 1e-12);
        // conjugate of one eigenvector equals the other up to phase; compare
        // after re-canonicalizing
        let re_phased = canonical_phase(plus.vector.map(|c| c.conj()));
        for i in 0..4 {
            assert!((re_phased[i] - minus.vector[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn identity_matrix_case() {
        let s = eigen_decompose(&Matrix4::identity()).unwrap();
        for p in &s.pairs {
            assert!((p.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(residual(&Matrix4::identity(), p) < 1e-12);
        }
        assert!(principal_complex_mode(&s).is_err());
    }

    #[test]
    fn principal_mode_selection() {
        let s = eigen_decompose(&analytic_jacobian_replicator(&game(4.0)).unwrap()).unwrap();
        let m = principal_complex_mode(&s).unwrap();
        assert!(m.value.im > 0.0);
        assert_abs_diff_eq!(m.value.im, 4.0 / 13.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.value.re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn principal_mode_antisymmetric_components_at_unit_parameter() {
        // at a=1 the rotating eigenvector satisfies eta_1 = -eta_3
        let s = eigen_decompose(&analytic_jacobian_replicator(&game(1.0)).unwrap()).unwrap();
        let v = principal_complex_mode(&s).unwrap().vector;
        assert!((v[0] + v[2]).norm() < 1e-10, "{v:?}");
    }

    #[test]
    fn linearized_trajectory_zero_offset() {
        let s = eigen_decompose(&analytic_jacobian_replicator(&game(4.0)).unwrap()).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let t = linearized_trajectory(&s, &Vector4::zeros(), &grid).unwrap();
        for x in &t.samples {
            assert!(x.amax() < 1e-14);
        }
        assert_eq!(t.meta.space, SampleSpace::Tangent);
    }

    #[test]
    fn linearized_trajectory_rejects_non_tangent_offset() {
        let s = eigen_decompose(&analytic_jacobian_replicator(&game(4.0)).unwrap()).unwrap();
        let grid = [0.0, 0.1];
        assert!(linearized_trajectory(&s, &Vector4::new(1.0, 0.0, 0.0, 0.0), &grid).is_err());
    }

    #[test]
    fn real_mode_decays_without_rotation() {
        // the repeated real eigenvalue carries a 2-d eigenspace; only its
        // zero-sum combinations lie in the simplex tangent space
        let a = 4.0;
        let s = eigen_decompose(&analytic_jacobian_replicator(&game(a)).unwrap()).unwrap();
        let p: Vector4<f64> = s.pairs[1].vector.map(|c| c.re);
        let q: Vector4<f64> = s.pairs[2].vector.map(|c| c.re);
        assert!(s.pairs[1].value.im.abs() < 1e-12);
        assert!(s.pairs[2].value.im.abs() < 1e-12);
        let dir = (p * q.sum() - q * p.sum()) * 1e-3;
        assert!(dir.sum().abs() < 1e-15);

        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let t = linearized_trajectory(&s, &dir, &grid).unwrap();
        let rate = a / (3.0 * a + 1.0);
        for (i, x) in t.samples.iter().enumerate() {
            let expect = dir * (-rate * grid[i]).exp();
            for c in 0..4 {
                assert_abs_diff_eq!(x[c], expect[c], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn linearized_oscillation_period() {
        // an offset along the rotating mode returns to itself after one period
        let a = 4.0;
        let s = eigen_decompose(&analytic_jacobian_replicator(&game(a)).unwrap()).unwrap();
        let v = principal_complex_mode(&s).unwrap().vector;
        let offset: Vector4<f64> = v.map(|c| c.re) * 1e-3;
        let period = 2.0 * std::f64::consts::PI * (3.0 * a + 1.0) / a;
        let grid = [0.0, period];
        let t = linearized_trajectory(&s, &offset, &grid).unwrap();
        for c in 0..4 {
            assert_abs_diff_eq!(t.samples[1][c], offset[c], epsilon = 1e-12);
        }
    }

    #[test]
    fn linearized_matches_nonlinear_integration_at_small_scale() {
        let a = 4.0;
        let g = game(a);
        let xs = g.nash_equilibrium().unwrap();
        let s = eigen_decompose(&analytic_jacobian_replicator(&g).unwrap()).unwrap();
        let v = principal_complex_mode(&s).unwrap().vector;
        let re: Vector4<f64> = v.map(|c| c.re);
        let offset = re / re.norm() * 1e-5;

        let period = 2.0 * std::f64::consts::PI * (3.0 * a + 1.0) / a;
        let dt = 0.01;
        let steps = (period / dt).ceil() as usize;
        let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        let lin = linearized_trajectory(&s, &offset, &grid).unwrap();

        let s0 = SimplexState::project(xs.as_vector() + offset).unwrap();
        let full = dynamics::integrate(DynamicsModel::Replicator, &g, &s0, dt, steps).unwrap();

        let mut max_dev = 0.0f64;
        for (lx, fx) in lin.samples.iter().zip(full.samples.iter()) {
            let dev = ((fx - xs.as_vector()) - lx).amax();
            max_dev = max_dev.max(dev);
        }
        assert!(max_dev < 1e-7, "max deviation {max_dev:.3e}");
    }
}
