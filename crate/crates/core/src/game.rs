//! The four-strategy cyclic game, its equilibrium and payoff evaluation.
//!
//! The game family is a 4x4 payoff matrix with a single free parameter `a`:
//! strategy i+1 earns 1 against strategy i, and strategy 1 earns `a` against
//! strategy 4. Every other module builds on the types defined here.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};

/// Number of strategies; the state space is the 3-simplex in R^4.
pub const N_STRATEGIES: usize = 4;

/// How a payoff matrix was constructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFamily {
    /// The one-parameter cyclic family: ones on the subdiagonal, `a` in the
    /// top-right corner, zeros elsewhere.
    CyclicA { a: f64 },
    /// An arbitrary user-supplied matrix; no closed-form equilibrium.
    General,
}

/// A one-population symmetric game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    payoff_matrix: Matrix4<f64>,
    family: MatrixFamily,
}

impl GameSpec {
    /// Builds the cyclic-family game for parameter `a > 0`.
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "payoff parameter a must be a positive finite real, got {a}"
            )));
        }
        let mut m = Matrix4::zeros();
        m[(0, 3)] = a;
        m[(1, 0)] = 1.0;
        m[(2, 1)] = 1.0;
        m[(3, 2)] = 1.0;
        Ok(GameSpec { payoff_matrix: m, family: MatrixFamily::CyclicA { a } })
    }

    /// Wraps an arbitrary finite 4x4 payoff matrix. If the matrix happens to
    /// match the cyclic family it is recognized as such, so the closed-form
    /// equilibrium stays available.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("payoff matrix has non-finite entries".into()));
        }
        let family = Self::detect_family(&m);
        Ok(GameSpec { payoff_matrix: m, family })
    }

    fn detect_family(m: &Matrix4<f64>) -> MatrixFamily {
        let a = m[(0, 3)];
        if a <= 0.0 {
            return MatrixFamily::General;
        }
        let reference = match GameSpec::new(a) {
            Ok(g) => g.payoff_matrix,
            Err(_) => return MatrixFamily::General,
        };
        if *m == reference {
            MatrixFamily::CyclicA { a }
        } else {
            MatrixFamily::General
        }
    }

    pub fn payoff_matrix(&self) -> &Matrix4<f64> {
        &self.payoff_matrix
    }

    pub fn family(&self) -> MatrixFamily {
        self.family
    }

    /// The cyclic-family parameter, if this game belongs to the family.
    pub fn a(&self) -> Option<f64> {
        match self.family {
            MatrixFamily::CyclicA { a } => Some(a),
            MatrixFamily::General => None,
        }
    }

    /// The unique interior Nash equilibrium (a, a, a, 1)/(3a+1).
    ///
    /// Only defined for the cyclic family; general matrices are rejected.
    pub fn nash_equilibrium(&self) -> Result<SimplexState> {
        match self.family {
            MatrixFamily::CyclicA { a } => {
                let z = 3.0 * a + 1.0;
                SimplexState::new([a / z, a / z, a / z, 1.0 / z])
            }
            MatrixFamily::General => Err(Error::UnsupportedGame(
                "closed-form equilibrium applies only to the cyclic one-parameter family".into(),
            )),
        }
    }

    /// Per-strategy expected payoffs U_i = sum_j A_ij x_j.
    pub fn payoffs(&self, s: &SimplexState) -> Vector4<f64> {
        self.payoff_matrix * s.as_vector()
    }

    /// Population mean payoff sum_i x_i U_i.
    pub fn mean_payoff(&self, s: &SimplexState) -> f64 {
        s.as_vector().dot(&self.payoffs(s))
    }

    /// Spread between the largest and smallest matrix entry; the pairwise
    /// switch probabilities in the agent simulator are normalized by this.
    pub fn payoff_spread(&self) -> f64 {
        let max = self.payoff_matrix.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.payoff_matrix.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }
}

/// A point of the strategy simplex: nonnegative frequencies summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexState(Vector4<f64>);

impl SimplexState {
    /// Allowed deviation of the component sum from 1.
    pub const SUM_TOL: f64 = 1e-10;
    /// Allowed negativity per component (integration roundoff).
    pub const NEG_TOL: f64 = 1e-12;

    pub fn new(x: [f64; 4]) -> Result<Self> {
        let v = Vector4::from(x);
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite component in {x:?}")));
        }
        if v.iter().any(|&c| c < -Self::NEG_TOL) {
            return Err(Error::InvalidState(format!("negative component in {x:?}")));
        }
        let sum = v.sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidState(format!("components of {x:?} sum to {sum}, not 1")));
        }
        Ok(SimplexState(v))
    }

    pub fn uniform() -> Self {
        SimplexState(Vector4::repeat(0.25))
    }

    /// The pure state concentrated on strategy `i` (0-based).
    pub fn vertex(i: usize) -> Self {
        let mut v = Vector4::zeros();
        v[i] = 1.0;
        SimplexState(v)
    }

    /// Clamps negatives to zero and rescales so the components sum to one.
    /// Used to undo small integration drift; not a general projection.
    pub fn project(mut v: Vector4<f64>) -> Result<Self> {
        for c in v.iter_mut() {
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        let sum = v.sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::InvalidState(format!("cannot renormalize {v:?}")));
        }
        Ok(SimplexState(v / sum))
    }

    pub fn as_vector(&self) -> &Vector4<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }
}

impl std::ops::Index<usize> for SimplexState {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
