//! Finite-scale models of a parity-torsor theory over `[I]^k`: construction,
//! axiom checking, solutions, isomorphisms and coset invariants.

pub mod gf2;
pub mod invar;
pub mod isomap;
pub mod model;
pub mod solve;
pub mod sweep;
pub mod universe;
