//! Cyclic dynamic structure of a parameterized four-strategy population game.
//!
//! The library is organized around one pipeline: define a game ([`game`]),
//! derive or simulate its dynamics ([`dynamics`], [`abm`]), extract the
//! rotational eigen mode ([`spectral`], [`eigencycle`]), measure the same
//! structure from time series ([`measurement`]), and test theory against
//! measurement ([`stats`]). File formats shared with external tooling live
//! in [`io`].

pub mod abm;
pub mod dynamics;
#[cfg(test)]
pub(crate) mod testutil;
pub mod eigencycle;
pub mod error;
pub mod game;
pub mod io;
pub mod measurement;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use game::{GameSpec, SimplexState};
