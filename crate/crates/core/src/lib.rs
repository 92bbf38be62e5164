//! Simulation of a driven, dissipative three-level atom in the Δ (cyclic)
//! configuration.
//!
//! All three transitions are driven coherently, so the probe response
//! depends on the closed-loop phase `Φ = φ12 + φ23 - φ13`. Depending on `Φ`
//! the probe line shows transparency (EIT), gain without inversion (LWI) or
//! a transparency window flanked by absorption and gain (EITA).
//!
//! Modules:
//! - [`numerics`]: small dense complex linear algebra
//! - [`atom`]: drives, decoherence and the rotating-frame Hamiltonian
//! - [`lindblad`]: Liouvillian, steady states and time evolution
//! - [`spectroscopy`]: probe spectra, peak analysis, Kramers-Kronig checks
//! - [`fluxonium`]: fluxonium levels and charge matrix elements
//! - [`inout`]: reflected field and homodyne readout
//! - [`verify`]: reference parameter sets and invariant self-checks

pub mod atom;
pub mod error;
pub mod fluxonium;
pub mod inout;
pub mod lindblad;
pub mod numerics;
pub mod spectroscopy;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::C64;
