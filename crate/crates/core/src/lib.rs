//! Well-posedness of boundary control systems in spectral form.
//!
//! A system is given by a diagonal generator, control and observation
//! sequences and a feedthrough matrix. The crate simulates the associated
//! Lax-Phillips semigroup, computes admissibility constants and the
//! input-output symbol, checks Laplace transforms of trajectories against
//! resolvent formulas, and assembles the results into a certificate.

pub mod admissibility;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod heat;
pub mod laplace;
pub mod laxphillips;
pub mod signals;
pub mod spectral;
pub mod system;

pub use certificate::{certify, Certificate, CertifyConfig, Verdict};
pub use error::{Error, Result};
pub use heat::{build_heat_system, heat_certificate, HeatConfig};
pub use laxphillips::{step_extended_state, ExtendedState, StateEnvelope};
pub use signals::Signal;
pub use spectral::{DiagonalGenerator, SpectralVector, StabilityBound};
pub use system::{build_system, SpectralSystem, SystemSpec};
