//! Quantum Birkhoff normal forms and semiclassical trace expansions.
//!
//! * [`series`]: truncated power series over exact or floating coefficients.
//! * [`hypcalc`]: derivatives of `∏ (1/2)csch(kμ_j/2)` and the lattice-sum oracle.
//! * [`qbnf`]: the normal-form data model and the forward trace engine.
//! * [`recover`]: inversion of trace data back to the normal form.
//! * [`classical`]: eigenvalue classification and Birkhoff normalization of Taylor maps.
//! * [`oscillatory`]: pairings of oscillatory orbit expansions with test-function jets.

pub mod classical;
pub mod hypcalc;
pub mod linalg;
pub mod oscillatory;
pub mod qbnf;
pub mod recover;
pub mod schema;
pub mod series;
