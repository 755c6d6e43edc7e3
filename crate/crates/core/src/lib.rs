//! Steady-state phonon statistics of a laser-driven two-level emitter (a
//! semiconductor quantum dot) coupled to the single mode of an acoustic
//! nanocavity.
//!
//! The physical model is posed in the frame dressed by the laser drive. The
//! cavity observables of interest — the mean phonon number ⟨n⟩ and the
//! equal-time second-order correlation g²(0) — are obtained from a closed set
//! of six coupled families of Fock-diagonal projections of the density
//! operator. [`hierarchy`] assembles that system as a sparse generator and
//! solves its steady state directly; [`oracle`] independently builds the full
//! Lindblad superoperator on the joint emitter⊗Fock space and extracts its
//! kernel, so the two routes can be compared variable by variable.
//!
//! Two treatments of the emitter–cavity interaction are supported: a secular
//! one, and one that additionally keeps the leading contribution of the fast
//! rotating terms (a frequency pull `delta_bar` plus an excitation-dependent
//! dispersive shift `beta`). See [`model::Mode`].
//!
//! All inputs are scaled by the emitter's spontaneous emission rate γ, which
//! is 1 internally.

pub mod hierarchy;
mod linalg;
pub mod model;
pub mod oracle;

pub use num_complex::Complex64;
