//! Mean-field dynamics models as vector fields, plus trajectory integration.
//!
//! Three model families cover the five labelled variants used throughout:
//! replicator, adjusted (mean-payoff-scaled) replicator, and logit with a
//! configurable noise level.

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, SimplexState};

/// How the logit noise parameter enters the exponent.
///
/// `Temperature` uses exp(U / noise) so large noise washes out payoff
/// differences; `Gain` uses exp(noise * U) so large noise sharpens them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogitConvention {
    #[default]
    Temperature,
    Gain,
}

/// A mean-field dynamics model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DynamicsModel {
    /// dx_i = x_i (U_i - mean U)
    Replicator,
    /// dx_i = x_i (U_i - mean U) / mean U
    MsReplicator,
    /// dx_i = softmax(U)_i - x_i
    Logit { noise: f64, convention: LogitConvention },
}

impl DynamicsModel {
    pub fn logit(noise: f64) -> Result<Self> {
        Self::logit_with(noise, LogitConvention::Temperature)
    }

    pub fn logit_with(noise: f64, convention: LogitConvention) -> Result<Self> {
        if !noise.is_finite() || noise <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "logit noise must be a positive finite real, got {noise}"
            )));
        }
        Ok(DynamicsModel::Logit { noise, convention })
    }
}

impl std::fmt::Display for DynamicsModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DynamicsModel::Replicator => write!(f, "replicator"),
            DynamicsModel::MsReplicator => write!(f, "ms-replicator"),
            DynamicsModel::Logit { noise, convention: LogitConvention::Temperature } => {
                write!(f, "logit[{noise}]")
            }
            DynamicsModel::Logit { noise, convention: LogitConvention::Gain } => {
                write!(f, "logit-gain[{noise}]")
            }
        }
    }
}

/// Whether trajectory samples are simplex points or zero-sum offsets from a
/// reference point (linearized trajectories live in the tangent space).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SampleSpace {
    #[default]
    Simplex,
    Tangent,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    /// Provenance label, e.g. "ode:replicator", "abm:pairwise-difference".
    pub source: String,
    pub a: Option<f64>,
    pub model: Option<String>,
    pub noise: Option<f64>,
    pub seed: Option<u64>,
    /// How many integration steps needed renormalization onto the simplex.
    pub drift_renormalizations: u64,
    pub space: SampleSpace,
}

/// A uniformly sampled time series of 4-component states.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Vector4<f64>>,
    pub dt: f64,
    pub t0: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(samples: Vec<Vector4<f64>>, dt: f64, t0: f64, meta: TrajectoryMeta) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateInput(format!(
                "trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Trajectory { samples, dt, t0, meta })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.t0 + self.dt * index as f64
    }
}

/// Evaluates the model's velocity at a simplex state.
pub fn vector_field(model: DynamicsModel, g: &GameSpec, s: &SimplexState) -> Result<Vector4<f64>> {
    field_raw(model, g, s.as_vector())
}

/// Field evaluation on raw coordinates. All three models extend smoothly off
/// the simplex, which is what the finite-difference Jacobian relies on.
pub(crate) fn field_raw(
    model: DynamicsModel,
    g: &GameSpec,
    x: &Vector4<f64>,
) -> Result<Vector4<f64>> {
    let u = g.payoff_matrix() * x;
    match model {
        DynamicsModel::Replicator => {
            let mean = x.dot(&u);
            Ok(x.component_mul(&u.add_scalar(-mean)))
        }
        DynamicsModel::MsReplicator => {
            let mean = x.dot(&u);
            if mean.abs() < 1e-12 {
                return Err(Error::SingularState(format!(
                    "mean payoff is {mean:.3e} at {x:?}; adjusted replicator is undefined"
                )));
            }
            Ok(x.component_mul(&u.add_scalar(-mean)) / mean)
        }
        DynamicsModel::Logit { noise, convention } => {
            if !noise.is_finite() || noise <= 0.0 {
                return Err(Error::InvalidParameter(format!("logit noise must be > 0, got {noise}")));
            }
            Ok(softmax_response(&u, noise, convention) - x)
        }
    }
}

/// Softmax of the payoff vector with the exponent shifted by its maximum so
/// extreme noise settings cannot overflow.
pub(crate) fn softmax_response(
    u: &Vector4<f64>,
    noise: f64,
    convention: LogitConvention,
) -> Vector4<f64> {
    let z = match convention {
        LogitConvention::Temperature => u / noise,
        LogitConvention::Gain => u * noise,
    };
    let shift = z.max();
    let w = z.map(|v| (v - shift).exp());
    let total = w.sum();
    w / total
}

/// Integrates the model with the classical fixed-step 4th-order scheme.
///
/// Samples are renormalized onto the simplex only when drift exceeds the
/// simplex tolerances; the number of such events is recorded in the metadata.
pub fn integrate(
    model: DynamicsModel,
    g: &GameSpec,
    s0: &SimplexState,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidParameter("step count must be positive".into()));
    }
    if !dt.is_finite() || dt <= 0.0 || !(dt * steps as f64).is_finite() {
        return Err(Error::InvalidParameter(format!("bad time step {dt} for {steps} steps")));
    }

    let mut samples = Vec::with_capacity(steps + 1);
    let mut drift = 0u64;
    let mut x = *s0.as_vector();
    samples.push(x);

    for step in 0..steps {
        let k1 = field_raw(model, g, &x)?;
        let k2 = field_raw(model, g, &(x + k1 * (dt / 2.0)))?;
        let k3 = field_raw(model, g, &(x + k2 * (dt / 2.0)))?;
        let k4 = field_raw(model, g, &(x + k3 * dt))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::IntegrationBlowup { step, detail: format!("state {x:?}") });
        }
        let sum = x.sum();
        if (sum - 1.0).abs() > SimplexState::SUM_TOL || x.min() < -SimplexState::NEG_TOL {
            x = *SimplexState::project(x)?.as_vector();
            drift += 1;
        }
        samples.push(x);
    }

    let (a, noise) = model_tags(model, g);
    Trajectory::new(
        samples,
        dt,
        0.0,
        TrajectoryMeta {
            source: format!("ode:{model}"),
            a,
            model: Some(model.to_string()),
            noise,
            seed: None,
            drift_renormalizations: drift,
            space: SampleSpace::Simplex,
        },
    )
}

fn model_tags(model: DynamicsModel, g: &GameSpec) -> (Option<f64>, Option<f64>) {
    let noise = match model {
        DynamicsModel::Logit { noise, .. } => Some(noise),
        _ => None,
    };
    (g.a(), noise)
}

/// Residual threshold for an accepted fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 10_000;

/// Finds a rest point of the model near `guess` by damped Newton iteration
/// in simplex coordinates. The logit map is solved by continuation from a
/// gentle noise level down to the requested one, which keeps the sharp
/// low-noise exponentials inside Newton's convergence basin.
pub fn fixed_point(model: DynamicsModel, g: &GameSpec, guess: &SimplexState) -> Result<SimplexState> {
    let mut budget = FIXED_POINT_MAX_ITER;
    match model {
        DynamicsModel::Logit { noise, convention } if matches!(convention, LogitConvention::Temperature) && noise < 1.0 => {
            let mut x = *guess.as_vector();
            let mut eta = 1.0;
            loop {
                let stage = DynamicsModel::Logit { noise: eta, convention };
                x = newton_refine(stage, g, x, &mut budget)?;
                if eta <= noise {
                    break;
                }
                eta = (eta * 0.5).max(noise);
            }
            SimplexState::project(x)
        }
        _ => {
            let x = newton_refine(model, g, *guess.as_vector(), &mut budget)?;
            SimplexState::project(x)
        }
    }
}

/// Damped Newton on the first three coordinates with x4 eliminated by the
/// simplex constraint. Finite-difference Jacobian; step halving on residual
/// increase.
fn newton_refine(
    model: DynamicsModel,
    g: &GameSpec,
    start: Vector4<f64>,
    budget: &mut usize,
) -> Result<Vector4<f64>> {
    const H: f64 = 1e-7;
    let embed = |v: &Vector3<f64>| Vector4::new(v[0], v[1], v[2], 1.0 - v[0] - v[1] - v[2]);
    let mut v = Vector3::new(start[0], start[1], start[2]);
    let mut residual = f64::INFINITY;

    while *budget > 0 {
        *budget -= 1;
        let x = embed(&v);
        let f = field_raw(model, g, &x)?;
        residual = f.amax();
        if residual < FIXED_POINT_TOL {
            return Ok(x);
        }

        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let mut vp = v;
            let mut vm = v;
            vp[j] += H;
            vm[j] -= H;
            let fp = field_raw(model, g, &embed(&vp))?;
            let fm = field_raw(model, g, &embed(&vm))?;
            for i in 0..3 {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * H);
            }
        }
        let rhs = Vector3::new(f[0], f[1], f[2]);
        let step = jac
            .lu()
            .solve(&-rhs)
            .ok_or_else(|| Error::EigenFailure("singular Jacobian in fixed-point solve".into()))?;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = v + step * scale;
            let fc = field_raw(model, g, &embed(&cand))?;
            if fc.amax() < residual {
                v = cand;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // flat line search: fall back to a tiny damped move
            v += step * 1e-3;
        }
    }
    Err(Error::NoConvergence { iterations: FIXED_POINT_MAX_ITER, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn game(a: f64) -> GameSpec {
        GameSpec::new(a).unwrap()
    }

    #[test]
    fn replicator_fixed_point_is_stationary() {
        for a in [0.25, 1.0, 4.0] {
            let g = game(a);
            let x = g.nash_equilibrium().unwrap();
            let f = vector_field(DynamicsModel::Replicator, &g, &x).unwrap();
            assert!(f.amax() < 1e-15, "a={a}: field {f:?}");
        }
    }

    #[test]
    fn replicator_hand_value() {
        let g = game(4.0);
        let s = SimplexState::new([0.5, 0.5, 0.0, 0.0]).unwrap();
        let f = vector_field(DynamicsModel::Replicator, &g, &s).unwrap();
        assert_abs_diff_eq!(f[0], -0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 0.125, epsilon = 1e-15);
        assert_eq!(f[2], 0.0);
        assert_eq!(f[3], 0.0);
    }

    #[test]
    fn fields_sum_to_zero_on_simplex() {
        let g = game(4.0);
        let models = [
            DynamicsModel::Replicator,
            DynamicsModel::MsReplicator,
            DynamicsModel::logit(0.05).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let s = crate::testutil::random_state(&mut rng);
            for m in models {
                let f = vector_field(m, &g, &s).unwrap();
                assert!(f.sum().abs() < 1e-12, "{m}: sum {}", f.sum());
            }
        }
    }

    #[test]
    fn replicator_leaves_faces_invariant() {
        let g = game(0.25);
        let s = SimplexState::new([0.0, 0.3, 0.3, 0.4]).unwrap();
        let f = vector_field(DynamicsModel::Replicator, &g, &s).unwrap();
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn ms_replicator_rejects_zero_mean_payoff() {
        let g = game(4.0);
        // at a pure state the population earns nothing against itself
        let s = SimplexState::vertex(0);
        assert!(matches!(
            vector_field(DynamicsModel::MsReplicator, &g, &s),
            Err(Error::SingularState(_))
        ));
    }

    #[test]
    fn logit_overflow_guard() {
        // gain convention with a huge gain would overflow a naive exponent
        let g = game(4.0);
        let m = DynamicsModel::logit_with(1e6, LogitConvention::Gain).unwrap();
        let f = vector_field(m, &g, &SimplexState::uniform()).unwrap();
        assert!(f.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn integrate_rejects_zero_steps() {
        let g = game(4.0);
        let x = g.nash_equilibrium().unwrap();
        assert!(integrate(DynamicsModel::Replicator, &g, &x, 0.01, 0).is_err());
    }

    #[test]
    fn fixed_point_is_invariant_under_integration() {
        let g = game(4.0);
        let x = g.nash_equilibrium().unwrap();
        let t = integrate(DynamicsModel::Replicator, &g, &x, 0.01, 1).unwrap();
        let end = t.samples[1];
        for i in 0..4 {
            assert_abs_diff_eq!(end[i], x[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn neutral_orbit_stays_bounded() {
        let g = game(4.0);
        let xs = g.nash_equilibrium().unwrap();
        let eps = 1e-3;
        let s0 = SimplexState::project(
            xs.as_vector() + Vector4::new(eps, -eps, 0.0, 0.0),
        )
        .unwrap();
        let dev0 = (s0.as_vector() - xs.as_vector()).norm();
        let t = integrate(DynamicsModel::Replicator, &g, &s0, 0.01, 100_000).unwrap();
        let max_dev = t
            .samples
            .iter()
            .map(|s| (s - xs.as_vector()).norm())
            .fold(0.0, f64::max);
        assert!(max_dev < 10.0 * dev0, "max deviation {max_dev} vs initial {dev0}");
    }

    #[test]
    fn neutral_center_conserves_eigenplane_radius() {
        // at linearization scale the rotating-mode amplitude varies by well
        // under 1% over one rotation period 2*pi*(3a+1)/a
        use num_complex::Complex64;

        let a = 4.0;
        let g = game(a);
        let xs = g.nash_equilibrium().unwrap();
        let spectrum =
            crate::spectral::eigen_decompose(&crate::spectral::analytic_jacobian_replicator(&g).unwrap())
                .unwrap();
        let mode = crate::spectral::principal_complex_mode(&spectrum).unwrap();
        let re: Vector4<f64> = mode.vector.map(|c| c.re);
        let dir = re / re.norm();
        let scale = 1e-4;
        let s0 = SimplexState::project(xs.as_vector() + dir * scale).unwrap();
        let period = 2.0 * std::f64::consts::PI * (3.0 * a + 1.0) / a;
        let steps = (period / 0.001).ceil() as usize;
        let t = integrate(DynamicsModel::Replicator, &g, &s0, 0.001, steps).unwrap();

        // the conserved amplitude is the modulus of the coefficient on the
        // rotating eigenvector when the offset is expanded in the eigenbasis
        let mut basis = nalgebra::Matrix4::from_element(Complex64::new(0.0, 0.0));
        for (col, p) in spectrum.pairs.iter().enumerate() {
            basis.set_column(col, &p.vector);
        }
        let lu = basis.lu();
        let radius = |x: &Vector4<f64>| {
            let d = (x - xs.as_vector()).map(|r| Complex64::new(r, 0.0));
            let coeffs = lu.solve(&d).expect("eigenbasis is invertible");
            coeffs[0].norm()
        };
        let r0 = radius(&t.samples[0]);
        let (mut rmin, mut rmax) = (f64::MAX, f64::MIN);
        for s in &t.samples {
            let r = radius(s);
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
        assert!((rmax - rmin) / r0 < 0.01, "amplitude varied {rmin}..{rmax} from {r0}");
    }

    #[test]
    fn logit_fixed_points() {
        for a in [0.25, 4.0] {
            let g = game(a);
            let xs = g.nash_equilibrium().unwrap();

            // low noise: close to the interior equilibrium
            let m = DynamicsModel::logit(0.001).unwrap();
            let p = fixed_point(m, &g, &xs).unwrap();
            let f = vector_field(m, &g, &p).unwrap();
            assert!(f.amax() < FIXED_POINT_TOL);
            let dist = (p.as_vector() - xs.as_vector()).norm();
            assert!(dist < 0.05, "a={a}: logit(0.001) fixed point {dist} from equilibrium");

            // high noise: close to uniform mixing
            let m = DynamicsModel::logit(300.0).unwrap();
            let p = fixed_point(m, &g, &xs).unwrap();
            let dist = (p.as_vector() - SimplexState::uniform().as_vector()).norm();
            assert!(dist < 1e-2, "a={a}: logit(300) fixed point {dist} from uniform");
        }
    }

    #[test]
    fn replicator_fixed_point_from_nearby_guess() {
        let g = game(0.25);
        let xs = g.nash_equilibrium().unwrap();
        let guess =
            SimplexState::project(xs.as_vector() + Vector4::new(0.02, -0.01, -0.005, -0.005))
                .unwrap();
        let p = fixed_point(DynamicsModel::Replicator, &g, &guess).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(p[i], xs[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn high_noise_logit_converges_to_uniform_region() {
        let g = game(4.0);
        let m = DynamicsModel::logit(300.0).unwrap();
        let s0 = SimplexState::new([0.7, 0.1, 0.1, 0.1]).unwrap();
        let t = integrate(m, &g, &s0, 0.01, 5_000).unwrap();
        let end = t.samples.last().unwrap();
        let dist = (end - SimplexState::uniform().as_vector()).norm();
        assert!(dist < 1e-2, "end state {end:?}");
    }

    #[test]
    fn trajectory_records_drift_counter() {
        let g = game(4.0);
        let x = g.nash_equilibrium().unwrap();
        let t = integrate(DynamicsModel::Replicator, &g, &x, 0.01, 100).unwrap();
        // at the fixed point there is nothing to renormalize
        assert_eq!(t.meta.drift_renormalizations, 0);
        assert_eq!(t.len(), 101);
        assert_eq!(t.meta.space, SampleSpace::Simplex);
    }
}
