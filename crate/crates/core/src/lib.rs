//! Semi-implicit particle-in-cell simulator for the Vlasov–Poisson system in a
//! strong external magnetic field `B = b(x⊥) e_z / ε`.
//!
//! Layers, bottom-up: [`geometry`] (cross-section and grid classification),
//! [`poisson`] (embedded-boundary field solve), [`pic`] (particle/grid
//! transfer), [`pusher`] (time integrators), [`diagnostics`], [`sim`] (run
//! orchestration) and [`verify`] (convergence studies).

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod pic;
pub mod poisson;
pub mod pusher;
pub mod sim;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
pub use vec3::Vec3;

/// Version string written into run metadata.
pub fn version_string() -> String {
    format!("magpic-v{}", env!("CARGO_PKG_VERSION"))
}
