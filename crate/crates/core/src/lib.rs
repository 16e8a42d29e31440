//! Self-similar groups and their spectra.
//!
//! The pipeline goes from a finite self-similar generating set (a Mealy
//! automaton given by its wreath recursion) to:
//!
//! * the action on the rooted tree `X^*` and on eventually periodic boundary
//!   rays ([`automaton`], [`ray`], [`nucleus`]),
//! * level-`n` Schreier graphs, coverings and orbital balls ([`schreier`]),
//! * representation matrices via the matrix wreath recursion, multi-parameter
//!   pencils, determinants and Schur complements ([`matrix`], [`pencil`]),
//! * eigenvalue clustering, counting (KNS) measures and closed-form spectra
//!   ([`spectra`], [`oracle`]),
//! * backward orbits of quadratic polynomials and semi-conjugacy checks
//!   ([`dynamics`]),
//! * Dirichlet forms and their traces on the limit spaces of the Basilica and
//!   Hanoi Towers groups ([`dirichlet`]).
//!
//! Group words act on the left: the word `g h` sends `u` to `g(h(u))`, so the
//! rightmost letter is applied first. Schreier graph edges run from `v` to
//! `s(v)`.

pub mod automaton;
pub mod catalog;
pub mod dirichlet;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod matrix;
pub mod nucleus;
pub mod oracle;
pub mod pencil;
pub mod ray;
pub mod schreier;
pub mod spectra;
pub mod suite;

pub use automaton::{Alphabet, Automaton, GroupWord, TreeWord};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use ray::Ray;
pub use spectra::{Cluster, KnsMeasure, SpectrumReport};
