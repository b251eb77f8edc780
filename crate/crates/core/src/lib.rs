//! Explicit presentations of universal deformation rings in the Borel case.
//!
//! The library computes, for a residually Borel (upper-triangular) mod-p
//! representation described by a profinite group presentation, an explicit
//! presentation `Z_p[[Y_1..Y_d']] / I` of the universal deformation ring:
//!
//! * [`padic`] — exact arithmetic in `Z/p^N` as a fixed-precision model of `Z_p`;
//! * [`freegroup`] — freely reduced words and group-ring elements over `Z/p^N`;
//! * [`series`] — truncated noncommutative (Magnus) and commutative power series;
//! * [`fox`] — free differential calculus and the projected relation matrix;
//! * [`presentation`] — input model: characters, image shapes, the presentation
//!   DSL, and builders for the bundled arithmetic families;
//! * [`deform`] — the deformation-ring pipeline producing the ideal `I`;
//! * [`verify`] — an independent 2x2-matrix evaluator that re-checks the output.
//!
//! All computations are carried out modulo `p^N` and in total degree `<= D`;
//! every emitted series is annotated with both truncation parameters.

pub mod deform;
pub mod fox;
pub mod freegroup;
pub mod padic;
pub mod presentation;
pub mod series;
pub mod verify;
