//! Discrete potential theory on rooted dyadic trees `T` and multi-trees `T^d`.
//!
//! Vertices are dyadic boxes ([`lattice`]); measures are finite sets of atoms
//! ([`measure`]). Potentials `V^ν = 𝕀𝕀*ν`, energies and partial energies are
//! computed either on a materialised [`poset::RelevantPoset`] or through the
//! join kernel `#ancestors(join(a, b))`. Capacities and equilibrium measures
//! come from [`capacity`], and [`constructions`] builds the bi-tree
//! counterexample measures and rectangle families.

pub mod capacity;
pub mod constructions;
pub mod dense;
pub mod error;
pub mod lattice;
pub mod measure;
pub mod poset;
pub mod solver;
pub mod sum;

pub use error::{Error, Result};
pub use lattice::{BoxSet, DyadicBox, DyadicInterval};
pub use measure::AtomicMeasure;
pub use poset::RelevantPoset;
