//! Helpers shared by the unit tests of several modules.

use nalgebra::Vector4;
use rand::Rng;

use crate::game::SimplexState;

/// A random interior simplex state via exponential spacings.
pub(crate) fn random_state(rng: &mut impl Rng) -> SimplexState {
    let raw = Vector4::from_fn(|_, _| -f64::ln(rng.random_range(1e-12..1.0)));
    SimplexState::project(raw).unwrap()
}
