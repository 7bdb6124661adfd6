//! Effective-model simulator for valley-dependent topological photonic
//! circuits on a gapped honeycomb lattice.
//!
//! The crate is split along the physics pipeline:
//!
//! * [`lattice`] — the two-band Bloch model, band paths, Dirac expansion,
//!   and calibration of the model gap to a physical wavelength window.
//! * [`topology`] — Berry curvature on the Brillouin-zone torus, valley
//!   Chern numbers, phase-vortex chirality, valley-moment signs.
//! * [`ribbon`] — domain-wall supercells, edge dispersions, localization
//!   and group velocities.
//! * [`device`] / [`transport`] — finite devices (straight / Z / Ω walls
//!   and the harpoon-shaped beam splitter), wavepacket propagation with
//!   absorbing ports, splitting matrices.
//! * [`optics`] — two-photon Fock evolution through beam-splitter
//!   networks with spectral distinguishability.
//! * [`hom`] — Hong-Ou-Mandel delay scans and Poisson count synthesis.
//! * [`fit`] — weighted Gaussian dip/peak fitting (visibility, coherence
//!   length).
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature simply switches the dependencies to their std builds.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod device;
pub mod fit;
pub mod hom;
pub mod lattice;
pub mod optics;
pub mod ribbon;
pub mod topology;
pub mod transport;

/// Speed of light in nm·THz (equivalently µm/ps ×10³; 1 THz·nm = 10⁻³ µm/ps).
pub const C_NM_THZ: f64 = 299_792.458;

/// Speed of light in mm/ps, used to convert delay times to path lengths.
pub const C_MM_PER_PS: f64 = 0.299_792_458;
